#pragma once

#include <stdexcept>
#include <string>

namespace nmlcomp {

// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input JSON or constructor arguments violate the documented schema
// (wrong shapes, masses not summing to one, non-positive base weights, ...).
struct MalformedSpec : Error {
    using Error::Error;
};

// A mathematical precondition of an operation does not hold on this input
// (loss range exceeds 1/2 without rescaling, Lipschitz check fails, ...).
struct AssumptionViolated : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

// Exact enumeration of the n-fold sample space would exceed the configured cap.
struct EnumerationCapExceeded : Error {
    using Error::Error;
};

// Blocks do not form a partition of the predictor index set, or a block prior
// puts zero mass on a block that carries posterior mass.
struct BadPartition : Error {
    using Error::Error;
};

// An operation that requires log-loss structure was given a problem whose
// losses are not normalized negative log densities.
struct NotLogLoss : Error {
    using Error::Error;
};

struct EmptyGrid : Error {
    using Error::Error;
};

// A posterior puts mass where its reference prior has none.
struct AbsoluteContinuityViolated : Error {
    using Error::Error;
};

// Every predictor carrying posterior weight has zero prior mass.
struct DegeneratePrior : Error {
    using Error::Error;
};

// A cell handed to a moment bound is wider than the sigma it was promised.
struct DiameterViolated : Error {
    using Error::Error;
};

// An operation that needs a finite normalized Shtarkov value got a diverging one.
struct InfiniteShtarkov : Error {
    using Error::Error;
};

}  // namespace nmlcomp
