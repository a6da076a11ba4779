#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "nmlcomp/entropify.hpp"
#include "nmlcomp/measure.hpp"
#include "nmlcomp/report.hpp"
#include "nmlcomp/shtarkov.hpp"

namespace nmlcomp {

// Exponential stochastic inequality lhs <= rhs at rate eta: the claim that
// E[exp(eta (lhs - rhs))] <= 1, with the strict variant claiming equality.
struct EsiStatement {
    std::function<double(std::span<const std::size_t>)> lhs;
    std::function<double(std::span<const std::size_t>)> rhs;
    double eta = 1.0;
    bool strict_equality = false;
};

struct EsiMoment {
    double value = 0.0;
    std::string method;  // exact | monte-carlo
    std::optional<double> std_error;
};

// E_{Z^n~P}[exp(eta (lhs - rhs))]; exact when the sample space fits the cap,
// seeded Monte Carlo otherwise.  Samples where the exponent is -inf
// contribute zero.
EsiMoment esi_moment(const LearningProblem& prob, const EsiStatement& stmt,
                     const EvalConfig& cfg = {});

// Certifies the exact-moment identity linking posterior-expected annealed
// excess risk to comp_full / n at rate n * eta, by exhaustive enumeration.
VerificationResult theorem1_identity(const LearningProblem& prob, const Estimator& est,
                                     const Luckiness& w, std::uint64_t exact_cap = 10'000'000);

// From a certified moment <= 1: (i) mean(lhs) <= mean(rhs), and (ii) the
// tail bound P(lhs > rhs + K/eta) <= exp(-K) for K in {1, 2, 3}.
VerificationResult esi_implications_check(const LearningProblem& prob, const EsiStatement& stmt,
                                          std::uint64_t exact_cap = 10'000'000);

struct BernsteinFit {
    double beta = 0.0;
    double B = 0.0;
    bool unsatisfiable = false;          // some non-optimal predictor has zero
    std::optional<std::size_t> offender; // excess risk but positive second moment
};

// Smallest B with E[R_f^2] <= B * E[R_f]^beta across the class, single
// outcome measure; the risk minimizer is excluded (0/0).
BernsteinFit fit_bernstein(const LearningProblem& prob, double beta);

// v(gamma) = min(eta0 * gamma^alpha, cap), nondecreasing in gamma.
struct VFunction {
    double eta0 = 1.0;
    double alpha = 0.0;
    double cap = 1.0;

    double operator()(double gamma) const;
    static VFunction from_bernstein(const BernsteinFit& fit);
};

std::vector<double> default_gamma_grid();

// E[exp(-v(gamma) R_f(Z))] <= exp(v(gamma) gamma) for every predictor and
// every grid gamma, reported in log domain as the worst slack.
VerificationResult v_central_check(const LearningProblem& prob, const VFunction& v,
                                   std::span<const double> gamma_grid);

// Annealed-to-actual bridge for one predictor: E[R_f] bounded by
// C_eta * annealed_eta(R_f) + ((C_eta - 1)/eta) v(gamma) gamma with
// C_eta = 2 + 2 eta, tested at eta = v(gamma)/2 and v(gamma)/4.
VerificationResult kl_renyi_check(const LearningProblem& prob, std::size_t f, double gamma,
                                  const VFunction& v);

struct RiskBoundReport {
    double gamma = 0.0;
    double eta_used = 0.0;  // v(gamma)/2, the rate inside comp_full
    double esi_rate = 0.0;  // v(gamma) * n / 6
    VerificationResult esi;
    std::function<double(std::span<const std::size_t>)> lhs;  // posterior-expected true excess risk
    std::function<double(std::span<const std::size_t>)> rhs;  // 3 comp_full/n + 4 gamma
};

// Builds the excess-risk bound statement and certifies its moment <= 1.
RiskBoundReport risk_bound_eval(const LearningProblem& prob, const Estimator& est,
                                const Luckiness& w, double gamma, const VFunction& v,
                                const EvalConfig& cfg = {});

}  // namespace nmlcomp
