#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "nmlcomp/esi.hpp"
#include "nmlcomp/estimators.hpp"
#include "nmlcomp/problem.hpp"
#include "nmlcomp/shtarkov.hpp"

namespace nmlcomp {

enum class Family { random_finite, threshold_grid, nested_blocks };

// Seeded problem generator.  Every family is deterministic given the seed
// and produces tables that pass the construction checks unmodified.
struct GeneratorSpec {
    Family family = Family::random_finite;
    std::uint64_t seed = 1;
    double eta = 0.5;
    int n = 3;

    // random_finite: uniform loss tables on [0, 1/2].  With log_loss_correct
    // the losses are instead negative logs of a drawn density family, the
    // generating distribution is a member of that family, and eta is forced
    // to 1 so the tilted densities coincide with the model densities.
    std::size_t num_outcomes = 3;
    std::size_t num_predictors = 3;
    bool log_loss_correct = false;

    // threshold_grid: classifiers 1{x >= t_j} on grid_points equispaced
    // x values, j = 0..grid_points, under 0/1 loss scaled by 1/2.  margin h
    // sets P(Y = best label | X) = (1 + h)/2; h = 0 is pure label noise.
    std::size_t grid_points = 8;
    double margin = 0.0;

    // nested_blocks: consecutive predictor blocks of the given sizes, the
    // first block drawn with lower losses than the rest.
    std::vector<std::size_t> block_sizes{1, 3};
};

LearningProblem generate(const GeneratorSpec& spec);

// Consecutive index ranges matching block_sizes.
Partition nested_partition(const GeneratorSpec& spec);

// argmin_f of -log q_f(z^n) + gamma[f]: maximum likelihood in the tilted
// family, with an optional penalty.  Empty gamma means all zeros.
Estimator luckiness_ml(const LearningProblem& prob, std::vector<double> gamma = {});

enum class RateEstimator { erm, dirac_fstar, gen_bayes };

// Maps a sample size to the gamma at which the excess-risk bound is
// evaluated; a default-constructed rule uses n^{-1/(2-beta)}.
using GammaRule = std::function<double(std::size_t)>;

struct RatePoint {
    std::size_t n = 0;
    double mean_excess = 0.0;
    double std_error = 0.0;  // zero under exact enumeration
    std::uint64_t trials = 0;
    std::optional<double> eta_used;  // gen_bayes only: v(gamma_n)/2
    std::optional<double> bound;     // mean of 3 comp_full/n + 4 gamma_n, enumerable cases
};

struct RateReport {
    std::vector<RatePoint> points;
    double beta = 0.0;         // largest grid beta whose Bernstein constant stays bounded
    double bernstein_b = 0.0;  // that constant at the largest n
    double slope = 0.0;        // least-squares fit of log mean excess on log n
    double target = 0.0;       // -1/(2 - beta)
    double pass_margin = 0.15;
    bool degenerate = false;   // fewer than four positive risks, no fit possible
    bool pass = false;
    nlohmann::json details;

    nlohmann::json to_json() const;
};

// Mean excess risk of the estimator at each n (exact when |Z|^n fits the
// cap, Monte Carlo over data draws otherwise) plus the log-log slope fit.
// threshold_grid with margin 0 substitutes the critical margin n^{-1/2} at
// each n.  Points are computed concurrently; seeding is per point.
RateReport rate_experiment(const GeneratorSpec& spec, RateEstimator kind,
                           std::span<const std::size_t> ns, const GammaRule& gamma_rule = {},
                           const McConfig& mc = {}, std::uint64_t exact_cap = 10'000'000);

void rate_csv(std::ostream& os, const RateReport& report, std::string_view estimator);

struct EqualizerReport {
    double constant = 0.0;         // the common selection-relative regret
    double log_shtarkov = 0.0;     // recomputed through the P-expectation
    double plug_in_spread = 0.0;   // regret against the rule's own pick
    double hindsight_spread = 0.0; // regret against the best penalized pick
    std::uint64_t samples = 0;
    bool pass = false;           // plug-in spread tiny and constant = log S
    bool hindsight_pass = false; // hindsight spread tiny (penalized-ML rules)
    nlohmann::json details;

    nlohmann::json to_json() const;
};

// Enumerates every positive-probability sample and computes the regret of
// the normalized strategy r_w two ways: against -log q at the estimator's
// own selection (constant for every deterministic rule) and against
// min_f(-log q_f(z^n) + gamma[f]) (constant when the rule minimizes the
// penalized likelihood).  Nonzero gamma requires log-loss tables at eta = 1.
EqualizerReport equalizer_experiment(const LearningProblem& prob, const Estimator& est,
                                     const Luckiness& w, std::span<const double> gamma = {},
                                     std::uint64_t exact_cap = 10'000'000);

struct ModelSelectPoint {
    std::size_t n = 0;
    double two_part_excess = 0.0;
    double erm_full_excess = 0.0;
    double erm_kstar_excess = 0.0;
    double overhead = 0.0;        // -log pi_K(kstar)/eta, sample-sum scale
    double bound_slack_min = 0.0; // min over samples of bound rhs - comp-full
    bool bound_pass = false;
    bool tracks_pass = false;     // two-part within overhead/n of block ERM
};

struct ModelSelectReport {
    std::vector<ModelSelectPoint> points;
    std::size_t kstar = 0;
    bool pass = false;
    nlohmann::json details;

    nlohmann::json to_json() const;
};

// Runs the two-part selector against full-class ERM and ERM restricted to
// the best block, on exhaustive enumeration, and verifies per sample that
// comp-full under the block-composite luckiness stays below the best
// block's description length plus complexity budget.  Ties for the best
// block go to the largest prior mass, then the lowest index.
ModelSelectReport model_select_experiment(const GeneratorSpec& spec,
                                          const FiniteDistribution& pi_K,
                                          const std::function<double(std::size_t)>& eta_rule,
                                          std::span<const std::size_t> ns,
                                          std::uint64_t exact_cap = 10'000'000);

void model_select_csv(std::ostream& os, const ModelSelectReport& report);

}  // namespace nmlcomp
