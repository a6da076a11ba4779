#pragma once

// Hand-sized problems shared across the test binaries.  Every quantity
// asserted against these fixtures was computed independently with
// tools/brute_reference.py at 50 digits and frozen into the tests.

#include <cmath>
#include <vector>

#include "nmlcomp/problem.hpp"

namespace fixtures {

inline nmlcomp::LearningProblem two_outcome_three(double eta = 0.5, int n = 2) {
    nmlcomp::OutcomeSpace space;
    space.labels = {"a", "b"};
    space.nu = {1.0, 1.0};
    nmlcomp::PredictorClass cls;
    cls.loss = {{0.0, 0.5}, {0.5, 0.0}, {0.25, 0.25}};
    auto p = nmlcomp::FiniteDistribution::normalized({0.75, 0.25});
    return nmlcomp::build_problem(space, p, cls, eta, n);
}

inline nmlcomp::LearningProblem three_outcome_two(double eta = 1.0, int n = 2) {
    nmlcomp::OutcomeSpace space;
    space.labels = {"a", "b", "c"};
    space.nu = {1.0, 1.0, 1.0};
    nmlcomp::PredictorClass cls;
    cls.loss = {{0.1, 0.2, 0.3}, {0.3, 0.1, 0.2}};
    auto p = nmlcomp::FiniteDistribution::normalized({0.5, 0.3, 0.2});
    return nmlcomp::build_problem(space, p, cls, eta, n);
}

inline nmlcomp::LearningProblem skewed_two(double eta = 1.0, int n = 2) {
    nmlcomp::OutcomeSpace space;
    space.labels = {"a", "b"};
    space.nu = {1.0, 1.0};
    nmlcomp::PredictorClass cls;
    cls.loss = {{0.1, 0.3}, {0.4, 0.05}};
    auto p = nmlcomp::FiniteDistribution::normalized({0.6, 0.4});
    return nmlcomp::build_problem(space, p, cls, eta, n);
}

// Losses are exact negative log masses of two Bernoulli-style densities and
// the generating distribution equals the first one.
inline nmlcomp::LearningProblem bernoulli_log_loss(int n = 2) {
    nmlcomp::OutcomeSpace space;
    space.labels = {"a", "b"};
    space.nu = {1.0, 1.0};
    nmlcomp::PredictorClass cls;
    cls.loss = {{-std::log(0.7), -std::log(0.3)}, {-std::log(0.6), -std::log(0.4)}};
    auto p = nmlcomp::FiniteDistribution::normalized({0.7, 0.3});
    return nmlcomp::build_problem(space, p, cls, 1.0, n, /*log_loss=*/true);
}

// Both non-optimal predictors have excess loss 1/2 on exactly one outcome,
// so the squared-vs-first-moment ratio is 1/2 at every predictor.
inline nmlcomp::LearningProblem one_sided_pair(double eta = 0.5, int n = 2) {
    nmlcomp::OutcomeSpace space;
    space.labels = {"a", "b"};
    space.nu = {1.0, 1.0};
    nmlcomp::PredictorClass cls;
    cls.loss = {{0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}};
    auto p = nmlcomp::FiniteDistribution::normalized({0.5, 0.5});
    return nmlcomp::build_problem(space, p, cls, eta, n);
}

inline nmlcomp::LearningProblem cover_four(double eta = 0.5, int n = 2) {
    nmlcomp::OutcomeSpace space;
    space.labels = {"a", "b", "c"};
    space.nu = {1.0, 1.0, 1.0};
    nmlcomp::PredictorClass cls;
    cls.loss = {{0.0, 0.0, 0.0}, {0.5, 0.0, 0.0}, {0.0, 0.5, 0.0}, {0.4, 0.4, 0.4}};
    auto p = nmlcomp::FiniteDistribution::normalized({0.5, 0.25, 0.25});
    return nmlcomp::build_problem(space, p, cls, eta, n);
}

inline nmlcomp::LearningProblem nested_three(double eta = 1.0, int n = 2) {
    nmlcomp::OutcomeSpace space;
    space.labels = {"a", "b"};
    space.nu = {1.0, 1.0};
    nmlcomp::PredictorClass cls;
    cls.loss = {{0.1, 0.2}, {0.05, 0.3}, {0.3, 0.05}};
    auto p = nmlcomp::FiniteDistribution::normalized({0.6, 0.4});
    return nmlcomp::build_problem(space, p, cls, eta, n);
}

}  // namespace fixtures
