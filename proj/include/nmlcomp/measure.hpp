#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nmlcomp/problem.hpp"

namespace nmlcomp {

struct McConfig {
    std::uint64_t trials = 20000;
    std::uint64_t seed = 1;
    std::uint64_t stream_id = 0;
};

struct EvalConfig {
    std::uint64_t exact_cap = 10'000'000;  // largest |Z|^n enumerated exactly
    McConfig mc{};
    bool force_mc = false;  // skip enumeration even when it would fit the cap
};

// |Z|^n if it fits below cap, otherwise throws EnumerationCapExceeded.
std::uint64_t checked_power(std::uint64_t base, int exp, std::uint64_t cap);
bool enumeration_fits(std::uint64_t base, int exp, std::uint64_t cap);

// Odometer over outcome tuples of length n, last coordinate fastest.  The
// tuple of all zeros is the initial state; advance() steps to the next tuple
// and reports false after the last one.
class SampleEnumerator {
public:
    SampleEnumerator(std::size_t num_outcomes, int n, std::uint64_t cap = 10'000'000);

    std::uint64_t count() const { return count_; }
    std::span<const std::size_t> sample() const { return sample_; }
    bool advance();
    void reset();

    // log prod_i masses[z_i] for the current tuple; -inf off support.
    double log_mass(std::span<const double> log_masses) const;

private:
    std::size_t z_;
    int n_;
    std::uint64_t count_;
    std::vector<std::size_t> sample_;
    bool done_ = false;
};

using SampleFn = std::function<double(std::span<const std::size_t>)>;

// Sum over tuples of prod_i masses[z_i] * g(tuple), signed log-sum-exp in
// fixed chunks so the merge order is deterministic.
double exact_expectation(std::span<const double> masses, int n, const SampleFn& g,
                         std::uint64_t cap = 10'000'000);
double exact_expectation(const LearningProblem& prob, const SampleFn& g,
                         std::uint64_t cap = 10'000'000);

// log E[e^{log_g}] for a nonnegative integrand supplied in log domain.
double exact_log_expectation(std::span<const double> masses, int n, const SampleFn& log_g,
                             std::uint64_t cap = 10'000'000);
double exact_log_expectation(const LearningProblem& prob, const SampleFn& log_g,
                             std::uint64_t cap = 10'000'000);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;
};

// Seeded i.i.d. sampling of outcome tuples; bitwise reproducible for a fixed
// (seed, stream_id) pair regardless of other streams.
McEstimate mc_expectation(std::span<const double> masses, int n, const SampleFn& g, McConfig cfg);
McEstimate mc_expectation(const LearningProblem& prob, const SampleFn& g, McConfig cfg);

// Draws one n-tuple per call; used by experiments that manage their own loop.
std::vector<std::size_t> draw_sample(std::span<const double> cdf, int n, class CounterRng& rng);

}  // namespace nmlcomp
