#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nmlcomp/entropify.hpp"
#include "nmlcomp/measure.hpp"
#include "nmlcomp/report.hpp"

namespace nmlcomp {

enum class MetricKind { l2_p, l2_pn, l2_q, l1_q };
enum class MetricOver { predictors, loss_class };

// A pseudometric on the predictor class: root-mean-square (or mean-absolute)
// difference of either the predictor representations (feature rows when
// supervised, loss rows otherwise) or the loss-difference class anchored at
// f0, under P, an empirical measure, or the entropified Q_{f0}.
struct Metric {
    MetricKind kind = MetricKind::l2_p;
    MetricOver over = MetricOver::predictors;
    std::size_t f0 = 0;               // reference for l2_q / l1_q and loss_class
    std::vector<std::size_t> sample;  // support of the empirical measure for l2_pn
};

double pseudodistance(const EntropifiedModel& model, const Metric& metric, std::size_t a,
                      std::size_t b);

struct CoverResult {
    double epsilon = 0.0;
    std::vector<std::size_t> centers;
    std::vector<std::size_t> cell_of;  // per predictor, index into centers
    std::optional<std::size_t> exact_size;

    std::vector<std::vector<std::size_t>> cells() const;
};

// Greedy farthest-point cover.  The traversal order does not depend on
// epsilon, so the returned size is nonincreasing in epsilon by construction.
// For classes of at most 15 predictors the exact minimum cover size is
// computed exhaustively and reported alongside.
CoverResult covering_number(const EntropifiedModel& model, const Metric& metric, double epsilon);

// E over sign vectors of sup_{f in cell} |(1/n) sum_i eps_i h_f(sample_i)|
// with h_f = loss(f0) - loss(f); exact over all 2^n sign vectors for
// n <= 20, Monte Carlo beyond that.
McEstimate empirical_rademacher(const EntropifiedModel& model, std::size_t f0,
                                std::span<const std::size_t> cell,
                                std::span<const std::size_t> sample, const McConfig& mc = {});

enum class SampleMeasure { p, q_f0 };

// Outer expectation of the empirical Rademacher complexity over samples of
// length n drawn from P or from Q_{f0}.
McEstimate rademacher(const EntropifiedModel& model, std::size_t f0,
                      std::span<const std::size_t> cell, SampleMeasure measure,
                      const EvalConfig& cfg = {});

// sup over the cell of (centered empirical excess of f0 against f):
// sum_i (loss_f0 - loss_f)(z_i) - n * E_{Q_f0}[loss_f0 - loss_f].
double t_n_value(const EntropifiedModel& model, std::size_t f0, std::span<const std::size_t> cell,
                 std::span<const std::size_t> sample);

// E_{Z^n ~ Q_f0}[T_n], exact by enumeration or Monte Carlo under Q_f0.
McEstimate h_local(const EntropifiedModel& model, std::size_t f0,
                   std::span<const std::size_t> cell, const EvalConfig& cfg = {});

// comp of the cell bounded by the log moment of T_n under Q_f0.
VerificationResult verify_opper_haussler(const EntropifiedModel& model, std::size_t f0,
                                         std::span<const std::size_t> cell,
                                         std::uint64_t exact_cap = 10'000'000);

// Bernstein-style moment bound: log E[e^{eta T_n}] <= 3 eta E[T_n] + n eta^2 sigma^2
// for cells whose L2(P) diameter stays within sigma / (e L); requires eta <= 1.
VerificationResult verify_talagrand_moment(const EntropifiedModel& model, std::size_t f0,
                                           std::span<const std::size_t> cell, double sigma,
                                           std::uint64_t exact_cap = 10'000'000);

// h_local <= 2 n E_{Q_f0}[empirical Rademacher of the cell].
VerificationResult symmetrization_check(const EntropifiedModel& model, std::size_t f0,
                                        std::span<const std::size_t> cell,
                                        std::uint64_t exact_cap = 10'000'000);

// L2(Q_f0) loss distance <= e L * L2(P) predictor distance, exhaustively
// over ordered pairs and anchors; requires eta <= 1.
VerificationResult sigma_lemma_check(const EntropifiedModel& model);

struct OhtReport {
    CoverResult cover;
    VerificationResult local_form;       // log N/eta + max_k(3 h_k + eta n sigma_k^2)
    VerificationResult rademacher_form;  // log N/eta + max_k(6 n R_k + eta n sigma_k^2)
    nlohmann::json cells;                // per-cell diagnostics
};

// Full chain at radius epsilon: greedy epsilon/2 cover, per-cell local
// complexities, and both complexity bounds against the maximal comp.
OhtReport verify_oht(const EntropifiedModel& model, double epsilon,
                     std::uint64_t exact_cap = 10'000'000);

// Population covering number at epsilon bounded by the best empirical
// covering number at epsilon/2 over candidate point sets: all singletons,
// one full-support multiset, and seeded random multisets.  A shortfall is
// inconclusive (budget), never a refutation.
VerificationResult extended_haussler_check(const EntropifiedModel& model, double epsilon,
                                           std::size_t sample_budget, std::uint64_t seed = 1);

}  // namespace nmlcomp
