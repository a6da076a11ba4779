#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nmlcomp/errors.hpp"

namespace nmlcomp {

enum class Parameterization { direct, supervised };

// Probability masses over a finite index set, normalized exactly at build.
struct FiniteDistribution {
    std::vector<double> masses;

    static FiniteDistribution normalized(std::vector<double> raw, double tol = 1e-12);
    static FiniteDistribution uniform(std::size_t k);

    std::size_t size() const { return masses.size(); }
    double mass(std::size_t i) const { return masses.at(i); }
};

struct OutcomeSpace {
    std::vector<std::string> labels;
    std::vector<double> nu;  // positive base-measure weight per outcome
    bool supervised = false;
    std::vector<std::string> x_part;  // per-outcome x label when supervised
    std::vector<std::string> y_part;

    std::size_t size() const { return labels.size(); }
};

struct PredictorClass {
    std::vector<std::vector<double>> loss;     // [predictor][outcome]
    std::vector<std::vector<double>> feature;  // [predictor][outcome], supervised only
    Parameterization param = Parameterization::direct;
    double lipschitz = 1.0;

    std::size_t size() const { return loss.size(); }
};

struct BuildOptions {
    bool allow_unscaled = false;  // rescale losses into the admissible range instead of erroring
    double mass_tol = 1e-12;
};

// A finite learning problem: outcome space with base weights, generating
// distribution, loss table, learning rate eta and sample size n.  Risks,
// the canonical risk minimizer (lowest index on ties) and the excess-loss
// table are computed once at construction.
struct LearningProblem {
    OutcomeSpace space;
    FiniteDistribution p;
    PredictorClass cls;
    double eta = 1.0;
    int n = 1;
    bool log_loss = false;   // losses are -log of nu-densities, each integrating to 1
    double loss_scale = 1.0; // factor applied when allow_unscaled rescaled the table

    std::size_t fstar = 0;
    std::vector<double> risk;                 // [predictor]
    std::vector<std::vector<double>> excess;  // [predictor][outcome]
    std::vector<double> log_p;                // [outcome], -inf allowed off support

    std::size_t num_outcomes() const { return space.size(); }
    std::size_t num_predictors() const { return cls.size(); }

    double loss_at(std::size_t f, std::size_t z) const { return cls.loss[f][z]; }
    double excess_at(std::size_t f, std::size_t z) const { return excess[f][z]; }
    double excess_risk(std::size_t f) const { return risk[f] - risk[fstar]; }

    double loss_sum(std::size_t f, std::span<const std::size_t> sample) const;
    double excess_sum(std::size_t f, std::span<const std::size_t> sample) const;
    double log_pmass(std::span<const std::size_t> sample) const;

    void check_predictor(std::size_t f) const;
};

LearningProblem build_problem(OutcomeSpace space, FiniteDistribution p, PredictorClass cls,
                              double eta, int n, bool log_loss = false, BuildOptions opts = {});

LearningProblem parse_problem(const nlohmann::json& doc, BuildOptions opts = {});
LearningProblem load_problem(const std::string& path, BuildOptions opts = {});
nlohmann::json problem_to_json(const LearningProblem& prob);

// Expected loss of predictor f under the generating distribution.
double predictor_risk(const LearningProblem& prob, std::size_t f);

// Sum over the sample of (loss of f minus loss of the risk minimizer).
double excess_loss(const LearningProblem& prob, std::size_t f, std::span<const std::size_t> sample);

}  // namespace nmlcomp
