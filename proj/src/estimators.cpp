#include "nmlcomp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "nmlcomp/logsum.hpp"
#include "nmlcomp/rng.hpp"

namespace nmlcomp {

std::size_t Estimator::map(std::span<const std::size_t> sample) const {
    if (kind != Kind::deterministic)
        throw AssumptionViolated("estimator '" + name + "' is randomized, not a point map");
    return pick(sample);
}

std::vector<double> Estimator::posterior(std::span<const std::size_t> sample) const {
    if (kind == Kind::randomized) return posterior_fn(sample);
    std::vector<double> one_hot;
    std::size_t f = pick(sample);
    // Size is unknown here for a bare pick; deterministic factories always
    // install posterior_fn too, so this path is a fallback.
    if (posterior_fn) return posterior_fn(sample);
    one_hot.assign(f + 1, 0.0);
    one_hot[f] = 1.0;
    return one_hot;
}

namespace {

std::function<std::vector<double>(std::span<const std::size_t>)> one_hot_fn(
    const std::function<std::size_t(std::span<const std::size_t>)>& pick, std::size_t F) {
    return [pick, F](std::span<const std::size_t> sample) {
        std::vector<double> post(F, 0.0);
        post[pick(sample)] = 1.0;
        return post;
    };
}

Estimator make_deterministic(const LearningProblem& prob, std::string name,
                             std::function<std::size_t(std::span<const std::size_t>)> pick) {
    Estimator est;
    est.kind = Estimator::Kind::deterministic;
    est.name = std::move(name);
    est.pick = std::move(pick);
    est.posterior_fn = one_hot_fn(est.pick, prob.num_predictors());
    return est;
}

}  // namespace

Partition make_partition(std::vector<std::vector<std::size_t>> blocks, std::size_t num_predictors) {
    if (blocks.empty()) throw BadPartition("partition needs at least one block");
    Partition part;
    part.block_of.assign(num_predictors, num_predictors);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (blocks[k].empty()) throw BadPartition("partition blocks must be nonempty");
        for (std::size_t f : blocks[k]) {
            if (f >= num_predictors) throw BadPartition("partition refers to an unknown predictor");
            if (part.block_of[f] != num_predictors)
                throw BadPartition("partition blocks overlap");
            part.block_of[f] = k;
        }
    }
    for (std::size_t f = 0; f < num_predictors; ++f)
        if (part.block_of[f] == num_predictors) {
            std::ostringstream os;
            os << "predictor " << f << " is not covered by any block";
            throw BadPartition(os.str());
        }
    part.blocks = std::move(blocks);
    return part;
}

Partition parse_partition(const nlohmann::json& doc, std::size_t num_predictors) {
    if (!doc.is_object() || !doc.contains("blocks"))
        throw MalformedSpec("partition document needs a 'blocks' array");
    std::vector<std::vector<std::size_t>> blocks;
    for (const auto& b : doc.at("blocks")) {
        if (!b.is_array()) throw MalformedSpec("each block must be an array of predictor indices");
        std::vector<std::size_t> block;
        for (const auto& v : b) {
            if (!v.is_number_integer() || v.get<long long>() < 0)
                throw MalformedSpec("block entries must be nonnegative integers");
            block.push_back(v.get<std::size_t>());
        }
        blocks.push_back(std::move(block));
    }
    return make_partition(std::move(blocks), num_predictors);
}

Estimator erm(const LearningProblem& prob) {
    const LearningProblem* pp = &prob;
    return make_deterministic(prob, "erm", [pp](std::span<const std::size_t> sample) {
        std::size_t best = 0;
        double best_loss = pp->loss_sum(0, sample);
        for (std::size_t f = 1; f < pp->num_predictors(); ++f) {
            double l = pp->loss_sum(f, sample);
            if (l < best_loss) {
                best_loss = l;
                best = f;
            }
        }
        return best;
    });
}

Estimator dirac(const LearningProblem& prob, std::size_t f) {
    prob.check_predictor(f);
    std::ostringstream name;
    name << "dirac:" << f;
    return make_deterministic(prob, name.str(),
                              [f](std::span<const std::size_t>) { return f; });
}

Estimator penalized_erm(const LearningProblem& prob, std::vector<double> gamma,
                        std::optional<double> eta) {
    if (gamma.size() != prob.num_predictors())
        throw MalformedSpec("penalty needs one value per predictor");
    for (double g : gamma)
        if (!std::isfinite(g)) throw MalformedSpec("penalty values must be finite");
    double rate = eta.value_or(prob.eta);
    if (!(rate > 0.0)) throw MalformedSpec("eta must be positive");
    const LearningProblem* pp = &prob;
    auto gp = std::make_shared<std::vector<double>>(std::move(gamma));
    return make_deterministic(prob, "penalized-erm",
                              [pp, gp, rate](std::span<const std::size_t> sample) {
                                  std::size_t best = 0;
                                  double best_score = pp->loss_sum(0, sample) + (*gp)[0] / rate;
                                  for (std::size_t f = 1; f < pp->num_predictors(); ++f) {
                                      double s = pp->loss_sum(f, sample) + (*gp)[f] / rate;
                                      if (s < best_score) {
                                          best_score = s;
                                          best = f;
                                      }
                                  }
                                  return best;
                              });
}

Estimator generalized_bayes(const LearningProblem& prob, FiniteDistribution prior,
                            std::optional<double> eta) {
    if (prior.size() != prob.num_predictors())
        throw MalformedSpec("prior needs one mass per predictor");
    double rate = eta.value_or(prob.eta);
    if (!(rate > 0.0)) throw MalformedSpec("eta must be positive");
    bool any_support = std::any_of(prior.masses.begin(), prior.masses.end(),
                                   [](double m) { return m > 0.0; });
    if (!any_support) throw DegeneratePrior("prior has empty support");

    const LearningProblem* pp = &prob;
    auto prior_ptr = std::make_shared<FiniteDistribution>(prior);
    Estimator est;
    est.kind = Estimator::Kind::randomized;
    est.name = "generalized-bayes";
    est.bayes_eta = rate;
    est.bayes_prior = prior.masses;
    est.posterior_fn = [pp, prior_ptr, rate](std::span<const std::size_t> sample) {
        const std::size_t F = pp->num_predictors();
        std::vector<double> lp(F, kNegInf);
        double lse = kNegInf;
        for (std::size_t f = 0; f < F; ++f) {
            if (prior_ptr->masses[f] <= 0.0) continue;
            lp[f] = std::log(prior_ptr->masses[f]) - rate * pp->loss_sum(f, sample);
            lse = log_add(lse, lp[f]);
        }
        std::vector<double> post(F, 0.0);
        for (std::size_t f = 0; f < F; ++f)
            if (lp[f] != kNegInf) post[f] = std::exp(lp[f] - lse);
        return post;
    };
    return est;
}

Estimator two_part_mdl(const LearningProblem& prob, const Partition& part, FiniteDistribution pi_K,
                       std::vector<double> comp_bounds, std::optional<double> eta) {
    if (part.block_of.size() != prob.num_predictors())
        throw BadPartition("partition does not match the predictor class");
    if (pi_K.size() != part.num_blocks())
        throw MalformedSpec("block prior needs one mass per block");
    if (comp_bounds.size() != part.num_blocks())
        throw MalformedSpec("comp bounds need one value per block");
    double rate = eta.value_or(prob.eta);
    if (!(rate > 0.0)) throw MalformedSpec("eta must be positive");
    bool any_support = std::any_of(pi_K.masses.begin(), pi_K.masses.end(),
                                   [](double m) { return m > 0.0; });
    if (!any_support) throw DegeneratePrior("block prior has empty support");

    const LearningProblem* pp = &prob;
    auto blocks = std::make_shared<std::vector<std::vector<std::size_t>>>(part.blocks);
    auto prior = std::make_shared<std::vector<double>>(pi_K.masses);
    auto bounds = std::make_shared<std::vector<double>>(std::move(comp_bounds));
    return make_deterministic(
        prob, "two-part-mdl", [pp, blocks, prior, bounds, rate](std::span<const std::size_t> sample) {
            std::size_t best_f = 0;
            double best_score = kPosInf;
            bool found = false;
            for (std::size_t k = 0; k < blocks->size(); ++k) {
                if ((*prior)[k] <= 0.0) continue;
                const auto& block = (*blocks)[k];
                std::size_t fhat = block[0];
                double loss = pp->loss_sum(fhat, sample);
                for (std::size_t i = 1; i < block.size(); ++i) {
                    double l = pp->loss_sum(block[i], sample);
                    if (l < loss) {
                        loss = l;
                        fhat = block[i];
                    }
                }
                double score = loss - std::log((*prior)[k]) / rate + (*bounds)[k];
                if (!found || score < best_score) {
                    found = true;
                    best_score = score;
                    best_f = fhat;
                }
            }
            return best_f;
        });
}

InfoComplexity information_complexity(const LearningProblem& prob, const FiniteDistribution& prior,
                                      const Estimator& est, std::span<const std::size_t> sample,
                                      std::optional<double> eta) {
    if (prior.size() != prob.num_predictors())
        throw MalformedSpec("prior needs one mass per predictor");
    double rate = eta.value_or(prob.eta);
    std::vector<double> post = est.posterior(sample);

    InfoComplexity out;
    for (std::size_t f = 0; f < post.size(); ++f) {
        if (post[f] <= 0.0) continue;
        if (prior.masses[f] <= 0.0) {
            std::ostringstream os;
            os << "posterior mass " << post[f] << " on predictor " << f << " outside prior support";
            throw AbsoluteContinuityViolated(os.str());
        }
        out.expected_excess += post[f] * prob.excess_sum(f, sample);
        out.kl += post[f] * std::log(post[f] / prior.masses[f]);
    }
    if (out.kl < 0.0 && out.kl > -1e-13) out.kl = 0.0;
    out.value = out.expected_excess + out.kl / rate;

    bool is_matching_bayes = est.bayes_eta.has_value() &&
                             std::fabs(*est.bayes_eta - rate) < 1e-15 &&
                             est.bayes_prior == prior.masses;
    if (is_matching_bayes) {
        double acc = kNegInf;
        for (std::size_t f = 0; f < prior.size(); ++f) {
            if (prior.masses[f] <= 0.0) continue;
            acc = log_add(acc, std::log(prior.masses[f]) - rate * prob.excess_sum(f, sample));
        }
        out.extended_stochastic = -acc / rate;
        if (std::fabs(*out.extended_stochastic - out.value) > 1e-10) {
            std::ostringstream os;
            os << "information complexity " << out.value
               << " disagrees with extended stochastic complexity " << *out.extended_stochastic;
            throw AssumptionViolated(os.str());
        }
    }
    return out;
}

double eta_grid_select(const LearningProblem& prob,
                       const std::function<Estimator(double)>& family,
                       std::span<const double> grid, McConfig cfg) {
    if (grid.empty()) throw EmptyGrid("eta grid is empty");
    std::vector<Estimator> ests;
    ests.reserve(grid.size());
    for (double e : grid) {
        if (!(e > 0.0) || !std::isfinite(e)) throw MalformedSpec("grid etas must be positive");
        ests.push_back(family(e));
    }

    CounterRng rng(cfg.seed, cfg.stream_id);
    std::vector<double> cdf = cumulative(prob.p.masses);
    const std::size_t n = static_cast<std::size_t>(prob.n);
    std::vector<double> score(grid.size(), 0.0);
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
        std::vector<std::size_t> both(2 * n);
        for (auto& z : both) z = rng.next_categorical(cdf);
        std::span<const std::size_t> train(both.data(), n);
        std::span<const std::size_t> validate(both.data() + n, n);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::vector<double> post = ests[i].posterior(train);
            double loss = 0.0;
            for (std::size_t f = 0; f < post.size(); ++f)
                if (post[f] > 0.0) loss += post[f] * prob.loss_sum(f, validate);
            score[i] += loss;
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (score[i] < score[best]) best = i;
    return grid[best];
}

}  // namespace nmlcomp
