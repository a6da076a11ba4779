#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmlcomp/measure.hpp"
#include "nmlcomp/problem.hpp"

namespace nmlcomp {

// A learning rule: either a deterministic map from samples to predictor
// indices or a randomized map to posteriors over the class.  Estimators hold
// a reference to the problem they were built from and must not outlive it.
struct Estimator {
    enum class Kind { deterministic, randomized };

    Kind kind = Kind::deterministic;
    std::string name;
    std::function<std::size_t(std::span<const std::size_t>)> pick;
    std::function<std::vector<double>(std::span<const std::size_t>)> posterior_fn;

    // Set for generalized Bayes so downstream identities can recognize it.
    std::optional<double> bayes_eta;
    std::vector<double> bayes_prior;

    bool deterministic() const { return kind == Kind::deterministic; }

    std::size_t map(std::span<const std::size_t> sample) const;

    // Posterior masses over predictors; one-hot for deterministic rules.
    std::vector<double> posterior(std::span<const std::size_t> sample) const;
};

struct Partition {
    std::vector<std::vector<std::size_t>> blocks;
    std::vector<std::size_t> block_of;  // [predictor]

    std::size_t num_blocks() const { return blocks.size(); }
};

Partition make_partition(std::vector<std::vector<std::size_t>> blocks, std::size_t num_predictors);
Partition parse_partition(const nlohmann::json& doc, std::size_t num_predictors);

Estimator erm(const LearningProblem& prob);
Estimator dirac(const LearningProblem& prob, std::size_t f);
Estimator penalized_erm(const LearningProblem& prob, std::vector<double> gamma,
                        std::optional<double> eta = {});
Estimator generalized_bayes(const LearningProblem& prob, FiniteDistribution prior,
                            std::optional<double> eta = {});

// Two-part code: pick the block minimizing in-block empirical loss plus the
// block's description length and complexity budget, then the ERM inside it.
Estimator two_part_mdl(const LearningProblem& prob, const Partition& part, FiniteDistribution pi_K,
                       std::vector<double> comp_bounds, std::optional<double> eta = {});

struct InfoComplexity {
    double value = 0.0;            // expected excess loss + KL/eta
    double expected_excess = 0.0;  // posterior-expected cumulative excess loss
    double kl = 0.0;               // KL(posterior || prior)
    std::optional<double> extended_stochastic;  // present for generalized Bayes
};

InfoComplexity information_complexity(const LearningProblem& prob, const FiniteDistribution& prior,
                                      const Estimator& est, std::span<const std::size_t> sample,
                                      std::optional<double> eta = {});

// Held-out selection over an eta grid: T replicates, each drawing 2n
// outcomes (first half train, second half validate); returns the grid point
// with the lowest total posterior-expected validation loss, ties toward the
// smaller eta.  Fully determined by cfg.seed / cfg.stream_id.
double eta_grid_select(const LearningProblem& prob,
                       const std::function<Estimator(double)>& family,
                       std::span<const double> grid, McConfig cfg);

}  // namespace nmlcomp
