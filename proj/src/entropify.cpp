#include "nmlcomp/entropify.hpp"

#include <cmath>

#include "nmlcomp/logsum.hpp"

namespace nmlcomp {

namespace {

double log_c1_for(const LearningProblem& prob, std::size_t f, double eta) {
    double acc = kNegInf;
    for (std::size_t z = 0; z < prob.num_outcomes(); ++z) {
        if (prob.log_p[z] == kNegInf) continue;
        acc = log_add(acc, prob.log_p[z] - eta * prob.excess_at(f, z));
    }
    return acc;
}

}  // namespace

EntropifiedModel::EntropifiedModel(const LearningProblem& prob, std::optional<double> eta)
    : prob_(&prob), eta_(eta.value_or(prob.eta)) {
    if (!(eta_ > 0.0) || !std::isfinite(eta_))
        throw MalformedSpec("entropification rate must be finite and positive");
    const std::size_t F = prob.num_predictors();
    const std::size_t Z = prob.num_outcomes();
    log_c1_.resize(F);
    log_q_.assign(F, std::vector<double>(Z, kNegInf));
    for (std::size_t f = 0; f < F; ++f) {
        log_c1_[f] = log_c1_for(prob, f, eta_);
        for (std::size_t z = 0; z < Z; ++z) {
            if (prob.log_p[z] == kNegInf) continue;
            log_q_[f][z] = prob.log_p[z] - eta_ * prob.excess_at(f, z) - log_c1_[f];
        }
    }
}

double EntropifiedModel::log_c1(std::size_t f) const {
    prob_->check_predictor(f);
    return log_c1_[f];
}

double EntropifiedModel::log_normalizer(std::size_t f) const {
    return static_cast<double>(prob_->n) * log_c1(f);
}

double EntropifiedModel::log_q(std::size_t f, std::size_t z) const {
    prob_->check_predictor(f);
    if (z >= prob_->num_outcomes()) throw IndexOutOfRange("outcome index out of range");
    return log_q_[f][z];
}

double EntropifiedModel::log_q_sample(std::size_t f, std::span<const std::size_t> sample) const {
    prob_->check_predictor(f);
    double s = 0.0;
    for (std::size_t z : sample) {
        double lq = log_q_[f].at(z);
        if (lq == kNegInf) return kNegInf;
        s += lq;
    }
    return s;
}

FiniteDistribution EntropifiedModel::q_distribution(std::size_t f) const {
    prob_->check_predictor(f);
    std::vector<double> masses(prob_->num_outcomes(), 0.0);
    for (std::size_t z = 0; z < masses.size(); ++z)
        if (log_q_[f][z] != kNegInf) masses[z] = std::exp(log_q_[f][z]);
    return FiniteDistribution::normalized(std::move(masses), 1e-10);
}

double EntropifiedModel::annealed_excess(std::size_t f) const { return -log_c1(f) / eta_; }

double EntropifiedModel::density_ratio_bound(std::size_t f) const {
    prob_->check_predictor(f);
    double best = kNegInf;
    for (std::size_t z = 0; z < prob_->num_outcomes(); ++z) {
        if (prob_->log_p[z] == kNegInf) continue;
        best = std::max(best, log_q_[f][z] - prob_->log_p[z]);
    }
    return std::exp(best);
}

double EntropifiedModel::log_c1_at(std::size_t f, double eta) const {
    prob_->check_predictor(f);
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw MalformedSpec("entropification rate must be finite and positive");
    return log_c1_for(*prob_, f, eta);
}

double EntropifiedModel::log_q_sample_at(std::size_t f, std::span<const std::size_t> sample,
                                         double eta) const {
    double lc = log_c1_at(f, eta);
    double s = 0.0;
    for (std::size_t z : sample) {
        if (prob_->log_p[z] == kNegInf) return kNegInf;
        s += prob_->log_p[z] - eta * prob_->excess_at(f, z) - lc;
    }
    return s;
}

double EntropifiedModel::annealed_excess_at(std::size_t f, double eta) const {
    return -log_c1_at(f, eta) / eta;
}

double annealed_expectation(std::span<const double> values, std::span<const double> masses,
                            double eta) {
    if (values.size() != masses.size() || values.empty())
        throw MalformedSpec("annealed expectation needs matching nonempty arrays");
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw MalformedSpec("annealing rate must be finite and positive");
    double acc = kNegInf;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (masses[i] <= 0.0) continue;
        acc = log_add(acc, std::log(masses[i]) - eta * values[i]);
    }
    return -acc / eta;
}

}  // namespace nmlcomp
