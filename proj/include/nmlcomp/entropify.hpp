#pragma once

#include <optional>
#include <span>
#include <vector>

#include "nmlcomp/problem.hpp"

namespace nmlcomp {

// Tilts the generating distribution by each predictor's excess loss:
// Q_f(z) proportional to P(z) * exp(-eta * (loss_f(z) - loss_fstar(z))).
// Per-predictor normalizers are cached at construction; every accessor has
// an *_at variant taking an override eta that computes from scratch, so
// rate sweeps do not need to rebuild the table.
class EntropifiedModel {
public:
    explicit EntropifiedModel(const LearningProblem& prob, std::optional<double> eta = {});

    const LearningProblem& problem() const { return *prob_; }
    double eta() const { return eta_; }

    // log of the single-outcome normalizer c1(f) = E_P[exp(-eta R_f)].
    double log_c1(std::size_t f) const;
    // log of the n-fold normalizer C(f) = c1(f)^n.
    double log_normalizer(std::size_t f) const;

    // log probability mass of one outcome under Q_f (-inf off support).
    double log_q(std::size_t f, std::size_t z) const;
    double log_q_sample(std::size_t f, std::span<const std::size_t> sample) const;
    FiniteDistribution q_distribution(std::size_t f) const;

    // Annealed expected excess loss -(1/eta) log c1(f); tends to the plain
    // expectation as eta -> 0 and is never larger than it.
    double annealed_excess(std::size_t f) const;

    // max over the support of dQ_f/dP.
    double density_ratio_bound(std::size_t f) const;

    double log_c1_at(std::size_t f, double eta) const;
    double log_q_sample_at(std::size_t f, std::span<const std::size_t> sample, double eta) const;
    double annealed_excess_at(std::size_t f, double eta) const;

private:
    const LearningProblem* prob_;
    double eta_;
    std::vector<double> log_c1_;
    std::vector<std::vector<double>> log_q_;  // [predictor][outcome]
};

// -(1/eta) log sum_i masses[i] * exp(-eta values[i]).
double annealed_expectation(std::span<const double> values, std::span<const double> masses,
                            double eta);

}  // namespace nmlcomp
