#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmlcomp/entropify.hpp"
#include "nmlcomp/estimators.hpp"
#include "nmlcomp/measure.hpp"
#include "nmlcomp/report.hpp"

namespace nmlcomp {

// Nonnegative weight w(z^n, f) attached to the Shtarkov integral.  The
// catalog covers the four forms used downstream: plain constants, the
// prior-to-posterior ratio of a randomized estimator, exp(-penalty) of a
// penalized point estimator, and the block-composite construction.
class Luckiness {
public:
    enum class Kind { constant, prior_ratio, penalty, composite };

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }

    // log w(sample, f).  -inf encodes zero luckiness; +inf only occurs for
    // ratio forms at predictors carrying no posterior mass, which every
    // consumer weights by zero.
    double log_eval(std::span<const std::size_t> sample, std::size_t f) const {
        return eval_(sample, f);
    }

    // True when the f argument is ignored (constant and penalty forms).
    bool sample_only() const { return sample_only_; }

    static Luckiness constant(double value = 1.0);
    static Luckiness prior_ratio(FiniteDistribution prior, Estimator est);
    static Luckiness penalty(std::vector<double> gamma, Estimator est);
    static Luckiness composite(Partition part, FiniteDistribution pi_K,
                               std::vector<Luckiness> block_w, Estimator est);

private:
    Kind kind_ = Kind::constant;
    bool sample_only_ = true;
    std::string name_;
    std::function<double(std::span<const std::size_t>, std::size_t)> eval_;
};

struct ComplexityReport {
    std::string variant;  // simple | max | luckiness | generalized
    std::string method;   // exact | monte-carlo
    double log_shtarkov = 0.0;
    double comp = 0.0;  // (E_P E_posterior[-log w] + log S) / eta
    std::optional<double> comp_full;
    std::optional<double> std_error;  // of the linear-domain Shtarkov estimate
    bool infinite = false;
    std::uint64_t states = 0;  // enumerated tuples or MC trials
    std::optional<std::vector<std::uint32_t>> maximizer;  // per-rank argmax (max variant)

    nlohmann::json to_json() const;
};

// S(F, fhat) for a point estimator; exact enumeration when it fits the cap,
// otherwise seeded Monte Carlo with a standard error.
ComplexityReport shtarkov_simple(const EntropifiedModel& model, const Estimator& est,
                                 const EvalConfig& cfg = {});

// S(F, fhat, w) for sample-only luckiness.
ComplexityReport shtarkov_luckiness(const EntropifiedModel& model, const Estimator& est,
                                    const Luckiness& w, const EvalConfig& cfg = {});

// S(F, posterior, w) for arbitrary randomized estimators and luckiness.
ComplexityReport shtarkov_generalized(const EntropifiedModel& model, const Estimator& est,
                                      const Luckiness& w, const EvalConfig& cfg = {});

// Maximal complexity (1/eta) log of the integral of sup_f q_f; enumeration
// only, since the inner sup defeats naive Monte Carlo.  An optional subset
// restricts the sup to part of the class.
ComplexityReport comp_max(const EntropifiedModel& model,
                          std::optional<std::span<const std::size_t>> subset = {},
                          std::uint64_t exact_cap = 10'000'000);

// Per-sample complexities.  The plain forms compute the Shtarkov integral
// internally; the *_at forms take a precomputed log S so sweeps over samples
// pay for the integral once.  Zero luckiness on the sample yields +inf.
double comp_luckiness(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                      std::span<const std::size_t> sample, const EvalConfig& cfg = {});
double comp_generalized(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                        std::span<const std::size_t> sample, const EvalConfig& cfg = {});
double comp_full(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                 std::span<const std::size_t> sample, const EvalConfig& cfg = {});
double comp_generalized_at(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                           std::span<const std::size_t> sample, double log_shtarkov);
double comp_full_at(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                    std::span<const std::size_t> sample, double log_shtarkov);

// Normalized maximum-likelihood masses over all |Z|^n samples, indexed by
// enumeration rank (last coordinate fastest).  Throws InfiniteShtarkov when
// the normalizer diverges.
FiniteDistribution nml_density(const EntropifiedModel& model, const Estimator& est,
                               const Luckiness& w, std::uint64_t exact_cap = 10'000'000);

std::vector<std::size_t> decode_rank(std::uint64_t rank, std::size_t num_outcomes, int n);

// comp(F, fhat) <= log |K| / eta + max_k comp(F_k), all terms exact.
VerificationResult partition_bound_check(const EntropifiedModel& model, const Partition& part,
                                         const Estimator& est, std::uint64_t exact_cap = 10'000'000);

// Posterior conditioned on one block (uniform on the block where the block
// carries no posterior mass), embedded over the full class.
Estimator conditional_on_block(const Estimator& est, const Partition& part, std::size_t k,
                               std::size_t num_predictors);

// Builds the composite luckiness from the block data and verifies, per
// enumerated sample with positive probability, the decomposition of the
// generalized complexity into block-selection KL plus expected block
// complexity.  Details carry the slack of the provable prior-mixture form
// log S <= log sum_k pi_K(k) S_k alongside the displayed per-sample form.
VerificationResult composite_decomposition_check(const EntropifiedModel& model,
                                                 const Partition& part,
                                                 const FiniteDistribution& pi_K,
                                                 const std::vector<Luckiness>& block_w,
                                                 const Estimator& est,
                                                 std::uint64_t exact_cap = 10'000'000);

namespace detail {

// -E_{f~posterior}[eta R_f(z^n) + n log c1(f) - log w(z^n, f)], the exponent
// whose P-expectation of exp is the generalized Shtarkov integral.  Returns
// -inf when a positive-posterior predictor has zero luckiness (the sample
// contributes nothing) and +inf when the inner expectation diverges down.
double neg_inner_exponent(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                          std::span<const std::size_t> sample);

// E_{f~posterior}[-log w(z^n, f)]; +inf on zero luckiness.
double expected_neg_log_w(const Estimator& est, const Luckiness& w,
                          std::span<const std::size_t> sample);

// E_{f~posterior}[sum_i excess loss of f].
double expected_excess_sum(const LearningProblem& prob, const Estimator& est,
                           std::span<const std::size_t> sample);

}  // namespace detail

}  // namespace nmlcomp
