#include "nmlcomp/shtarkov.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "nmlcomp/logsum.hpp"

namespace nmlcomp {

Luckiness Luckiness::constant(double value) {
    if (!(value >= 0.0) || !std::isfinite(value))
        throw MalformedSpec("constant luckiness must be finite and nonnegative");
    Luckiness w;
    w.kind_ = Kind::constant;
    w.sample_only_ = true;
    w.name_ = "const";
    double lv = value > 0.0 ? std::log(value) : kNegInf;
    w.eval_ = [lv](std::span<const std::size_t>, std::size_t) { return lv; };
    return w;
}

Luckiness Luckiness::prior_ratio(FiniteDistribution prior, Estimator est) {
    Luckiness w;
    w.kind_ = Kind::prior_ratio;
    w.sample_only_ = false;
    w.name_ = "prior-ratio";
    auto prior_ptr = std::make_shared<FiniteDistribution>(std::move(prior));
    auto est_ptr = std::make_shared<Estimator>(std::move(est));
    w.eval_ = [prior_ptr, est_ptr](std::span<const std::size_t> sample, std::size_t f) {
        std::vector<double> post = est_ptr->posterior(sample);
        if (f >= post.size() || f >= prior_ptr->size())
            throw IndexOutOfRange("luckiness predictor index out of range");
        double pr = prior_ptr->masses[f];
        double po = post[f];
        if (po <= 0.0) return kPosInf;  // never reached with positive weight
        if (pr <= 0.0) return kNegInf;
        return std::log(pr) - std::log(po);
    };
    return w;
}

Luckiness Luckiness::penalty(std::vector<double> gamma, Estimator est) {
    for (double g : gamma)
        if (!std::isfinite(g)) throw MalformedSpec("penalty values must be finite");
    if (!est.deterministic())
        throw AssumptionViolated("penalty luckiness needs a deterministic estimator reference");
    Luckiness w;
    w.kind_ = Kind::penalty;
    w.sample_only_ = true;
    w.name_ = "penalty";
    auto gp = std::make_shared<std::vector<double>>(std::move(gamma));
    auto est_ptr = std::make_shared<Estimator>(std::move(est));
    w.eval_ = [gp, est_ptr](std::span<const std::size_t> sample, std::size_t) {
        std::size_t fhat = est_ptr->map(sample);
        if (fhat >= gp->size()) throw IndexOutOfRange("penalty table too short");
        return -(*gp)[fhat];
    };
    return w;
}

Luckiness Luckiness::composite(Partition part, FiniteDistribution pi_K,
                               std::vector<Luckiness> block_w, Estimator est) {
    if (pi_K.size() != part.num_blocks())
        throw MalformedSpec("block prior needs one mass per block");
    if (block_w.size() != part.num_blocks())
        throw MalformedSpec("composite luckiness needs one sub-luckiness per block");
    Luckiness w;
    w.kind_ = Kind::composite;
    w.sample_only_ = false;
    w.name_ = "composite";
    auto part_ptr = std::make_shared<Partition>(std::move(part));
    auto prior_ptr = std::make_shared<FiniteDistribution>(std::move(pi_K));
    auto sub_ptr = std::make_shared<std::vector<Luckiness>>(std::move(block_w));
    auto est_ptr = std::make_shared<Estimator>(std::move(est));
    w.eval_ = [part_ptr, prior_ptr, sub_ptr, est_ptr](std::span<const std::size_t> sample,
                                                      std::size_t f) {
        if (f >= part_ptr->block_of.size())
            throw IndexOutOfRange("luckiness predictor index out of range");
        std::size_t k = part_ptr->block_of[f];
        std::vector<double> post = est_ptr->posterior(sample);
        double mass_k = 0.0;
        for (std::size_t g : part_ptr->blocks[k]) mass_k += post[g];
        double lw = (*sub_ptr)[k].log_eval(sample, f);
        if (mass_k <= 0.0) return kPosInf;  // zero-posterior block, weight is never used
        double pk = prior_ptr->masses[k];
        if (pk <= 0.0) return kNegInf;
        return lw + std::log(pk) - std::log(mass_k);
    };
    return w;
}

namespace detail {

double neg_inner_exponent(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                          std::span<const std::size_t> sample) {
    const LearningProblem& prob = model.problem();
    std::vector<double> post = est.posterior(sample);
    double inner = 0.0;
    double eta = model.eta();
    double n = static_cast<double>(prob.n);
    for (std::size_t f = 0; f < post.size(); ++f) {
        if (post[f] <= 0.0) continue;
        double lw = w.log_eval(sample, f);
        if (lw == kNegInf) return kNegInf;  // zero luckiness kills the sample
        double term = eta * prob.excess_sum(f, sample) + n * model.log_c1(f) - lw;
        if (term == kNegInf) return kPosInf;  // diverging weight
        inner += post[f] * term;
    }
    return -inner;
}

double expected_neg_log_w(const Estimator& est, const Luckiness& w,
                          std::span<const std::size_t> sample) {
    std::vector<double> post = est.posterior(sample);
    double acc = 0.0;
    for (std::size_t f = 0; f < post.size(); ++f) {
        if (post[f] <= 0.0) continue;
        double lw = w.log_eval(sample, f);
        if (lw == kNegInf) return kPosInf;
        acc += post[f] * (-lw);
    }
    return acc;
}

double expected_excess_sum(const LearningProblem& prob, const Estimator& est,
                           std::span<const std::size_t> sample) {
    std::vector<double> post = est.posterior(sample);
    double acc = 0.0;
    for (std::size_t f = 0; f < post.size(); ++f)
        if (post[f] > 0.0) acc += post[f] * prob.excess_sum(f, sample);
    return acc;
}

}  // namespace detail

namespace {

struct ExactS {
    double log_S = kNegInf;
    std::uint64_t states = 0;
};

ExactS exact_generalized(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                         std::uint64_t cap) {
    const LearningProblem& prob = model.problem();
    ExactS out;
    out.states = checked_power(prob.num_outcomes(), prob.n, cap);
    out.log_S = exact_log_expectation(
        prob.p.masses, prob.n,
        [&](std::span<const std::size_t> sample) {
            return detail::neg_inner_exponent(model, est, w, sample);
        },
        cap);
    return out;
}

// P-expectation of the posterior weight cost E_{f}[-log w]; the cheap case
// of a constant weight needs no enumeration.
double mean_neg_log_w_exact(const EntropifiedModel& model, const Estimator& est,
                            const Luckiness& w, std::uint64_t cap) {
    if (w.kind() == Luckiness::Kind::constant) return -w.log_eval({}, 0);
    const LearningProblem& prob = model.problem();
    return exact_expectation(
        prob.p.masses, prob.n,
        [&](std::span<const std::size_t> sample) {
            return detail::expected_neg_log_w(est, w, sample);
        },
        cap);
}

ComplexityReport report_from_exact(const EntropifiedModel& model, const Estimator& est,
                                   const Luckiness& w, const ExactS& s, std::uint64_t cap,
                                   std::string variant) {
    ComplexityReport rep;
    rep.variant = std::move(variant);
    rep.method = "exact";
    rep.log_shtarkov = s.log_S;
    rep.states = s.states;
    rep.infinite = s.log_S == kPosInf;
    rep.comp = (mean_neg_log_w_exact(model, est, w, cap) + s.log_S) / model.eta();
    return rep;
}

ComplexityReport mc_generalized(const EntropifiedModel& model, const Estimator& est,
                                const Luckiness& w, const McConfig& mc, std::string variant) {
    const LearningProblem& prob = model.problem();
    McEstimate est_S = mc_expectation(
        prob.p.masses, prob.n,
        [&](std::span<const std::size_t> sample) {
            double e = detail::neg_inner_exponent(model, est, w, sample);
            if (e == kNegInf) return 0.0;
            return std::exp(e);
        },
        mc);
    double neg_log_w = 0.0;
    if (w.kind() == Luckiness::Kind::constant) {
        neg_log_w = -w.log_eval({}, 0);
    } else {
        neg_log_w = mc_expectation(
                        prob.p.masses, prob.n,
                        [&](std::span<const std::size_t> sample) {
                            return detail::expected_neg_log_w(est, w, sample);
                        },
                        mc)
                        .mean;
    }
    ComplexityReport rep;
    rep.variant = std::move(variant);
    rep.method = "monte-carlo";
    rep.states = est_S.trials;
    rep.infinite = !std::isfinite(est_S.mean);
    rep.log_shtarkov = est_S.mean > 0.0 ? std::log(est_S.mean) : kNegInf;
    rep.comp = (neg_log_w + rep.log_shtarkov) / model.eta();
    rep.std_error = est_S.std_error;
    return rep;
}

ComplexityReport shtarkov_any(const EntropifiedModel& model, const Estimator& est,
                              const Luckiness& w, const EvalConfig& cfg, std::string variant) {
    const LearningProblem& prob = model.problem();
    if (!cfg.force_mc && enumeration_fits(prob.num_outcomes(), prob.n, cfg.exact_cap))
        return report_from_exact(model, est, w, exact_generalized(model, est, w, cfg.exact_cap),
                                 cfg.exact_cap, std::move(variant));
    return mc_generalized(model, est, w, cfg.mc, std::move(variant));
}

}  // namespace

nlohmann::json ComplexityReport::to_json() const {
    nlohmann::json j{{"variant", variant},       {"method", method},
                     {"log_shtarkov", log_shtarkov}, {"comp", comp},
                     {"infinite", infinite},     {"states", states}};
    if (comp_full) j["comp_full"] = *comp_full;
    if (std_error) j["std_error"] = *std_error;
    if (maximizer) {
        j["maximizer"] = *maximizer;
    }
    return j;
}

ComplexityReport shtarkov_simple(const EntropifiedModel& model, const Estimator& est,
                                 const EvalConfig& cfg) {
    if (!est.deterministic())
        throw AssumptionViolated("simple Shtarkov integral needs a deterministic estimator");
    return shtarkov_any(model, est, Luckiness::constant(1.0), cfg, "simple");
}

ComplexityReport shtarkov_luckiness(const EntropifiedModel& model, const Estimator& est,
                                    const Luckiness& w, const EvalConfig& cfg) {
    if (!est.deterministic())
        throw AssumptionViolated("luckiness Shtarkov integral needs a deterministic estimator");
    return shtarkov_any(model, est, w, cfg, "luckiness");
}

ComplexityReport shtarkov_generalized(const EntropifiedModel& model, const Estimator& est,
                                      const Luckiness& w, const EvalConfig& cfg) {
    return shtarkov_any(model, est, w, cfg, "generalized");
}

ComplexityReport comp_max(const EntropifiedModel& model,
                          std::optional<std::span<const std::size_t>> subset,
                          std::uint64_t exact_cap) {
    const LearningProblem& prob = model.problem();
    std::vector<std::size_t> all;
    if (!subset) {
        all.resize(prob.num_predictors());
        for (std::size_t f = 0; f < all.size(); ++f) all[f] = f;
    }
    std::span<const std::size_t> preds = subset ? *subset : std::span<const std::size_t>(all);
    if (preds.empty()) throw MalformedSpec("maximal complexity needs a nonempty predictor set");
    for (std::size_t f : preds) prob.check_predictor(f);

    SampleEnumerator en(prob.num_outcomes(), prob.n, exact_cap);
    std::vector<std::uint32_t> argmax;
    argmax.reserve(en.count());
    double acc = kNegInf;
    bool more = true;
    while (more) {
        double best = kNegInf;
        std::size_t best_f = preds[0];
        for (std::size_t f : preds) {
            double lq = model.log_q_sample(f, en.sample());
            if (lq > best) {
                best = lq;
                best_f = f;
            }
        }
        argmax.push_back(static_cast<std::uint32_t>(best_f));
        acc = log_add(acc, best);
        more = en.advance();
    }
    ComplexityReport rep;
    rep.variant = "max";
    rep.method = "exact";
    rep.log_shtarkov = acc;
    rep.comp = acc / model.eta();
    rep.states = en.count();
    rep.maximizer = std::move(argmax);
    return rep;
}

double comp_generalized_at(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                           std::span<const std::size_t> sample, double log_shtarkov) {
    double neg_log_w = detail::expected_neg_log_w(est, w, sample);
    if (neg_log_w == kPosInf) return kPosInf;
    return (neg_log_w + log_shtarkov) / model.eta();
}

double comp_full_at(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                    std::span<const std::size_t> sample, double log_shtarkov) {
    double c = comp_generalized_at(model, est, w, sample, log_shtarkov);
    if (c == kPosInf) return kPosInf;
    return c + detail::expected_excess_sum(model.problem(), est, sample);
}

double comp_generalized(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                        std::span<const std::size_t> sample, const EvalConfig& cfg) {
    ComplexityReport rep = shtarkov_generalized(model, est, w, cfg);
    return comp_generalized_at(model, est, w, sample, rep.log_shtarkov);
}

double comp_luckiness(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                      std::span<const std::size_t> sample, const EvalConfig& cfg) {
    if (!est.deterministic())
        throw AssumptionViolated("luckiness complexity needs a deterministic estimator");
    return comp_generalized(model, est, w, sample, cfg);
}

double comp_full(const EntropifiedModel& model, const Estimator& est, const Luckiness& w,
                 std::span<const std::size_t> sample, const EvalConfig& cfg) {
    ComplexityReport rep = shtarkov_generalized(model, est, w, cfg);
    return comp_full_at(model, est, w, sample, rep.log_shtarkov);
}

std::vector<std::size_t> decode_rank(std::uint64_t rank, std::size_t num_outcomes, int n) {
    std::vector<std::size_t> sample(static_cast<std::size_t>(n), 0);
    for (int i = n - 1; i >= 0; --i) {
        sample[static_cast<std::size_t>(i)] = static_cast<std::size_t>(rank % num_outcomes);
        rank /= num_outcomes;
    }
    return sample;
}

FiniteDistribution nml_density(const EntropifiedModel& model, const Estimator& est,
                               const Luckiness& w, std::uint64_t exact_cap) {
    if (!est.deterministic())
        throw AssumptionViolated("the NML density is defined for deterministic estimators");
    const LearningProblem& prob = model.problem();
    SampleEnumerator en(prob.num_outcomes(), prob.n, exact_cap);
    std::vector<double> log_mass;
    log_mass.reserve(en.count());
    double log_S = kNegInf;
    bool more = true;
    while (more) {
        std::size_t fhat = est.map(en.sample());
        double lw = w.log_eval(en.sample(), fhat);
        double lm = model.log_q_sample(fhat, en.sample());
        double term = (lw == kNegInf || lm == kNegInf) ? kNegInf : lm + lw;
        log_mass.push_back(term);
        log_S = log_add(log_S, term);
        more = en.advance();
    }
    if (log_S == kPosInf) throw InfiniteShtarkov("Shtarkov integral diverges");
    if (log_S == kNegInf)
        throw InfiniteShtarkov("Shtarkov integral vanishes; no normalized density exists");
    std::vector<double> masses(log_mass.size(), 0.0);
    for (std::size_t i = 0; i < masses.size(); ++i)
        if (log_mass[i] != kNegInf) masses[i] = std::exp(log_mass[i] - log_S);
    return FiniteDistribution::normalized(std::move(masses), 1e-10);
}

VerificationResult partition_bound_check(const EntropifiedModel& model, const Partition& part,
                                         const Estimator& est, std::uint64_t exact_cap) {
    const LearningProblem& prob = model.problem();
    if (part.block_of.size() != prob.num_predictors())
        throw BadPartition("partition does not match the predictor class");
    if (!est.deterministic())
        throw AssumptionViolated("partition bound check needs a deterministic estimator");

    ExactS s = exact_generalized(model, est, Luckiness::constant(1.0), exact_cap);
    double lhs = s.log_S / model.eta();
    double worst_block = kNegInf;
    nlohmann::json block_comps = nlohmann::json::array();
    for (const auto& block : part.blocks) {
        ComplexityReport rep = comp_max(model, std::span<const std::size_t>(block), exact_cap);
        block_comps.push_back(rep.comp);
        worst_block = std::max(worst_block, rep.comp);
    }
    double rhs = std::log(static_cast<double>(part.num_blocks())) / model.eta() + worst_block;
    VerificationResult res = VerificationResult::inequality("partition-bound", lhs, rhs, 1e-10);
    res.details = {{"block_comps", block_comps}, {"states", s.states}};
    return res;
}

Estimator conditional_on_block(const Estimator& est, const Partition& part, std::size_t k,
                               std::size_t num_predictors) {
    if (k >= part.num_blocks()) throw IndexOutOfRange("block index out of range");
    Estimator cond;
    cond.kind = Estimator::Kind::randomized;
    std::ostringstream name;
    name << est.name << "|block:" << k;
    cond.name = name.str();
    auto est_ptr = std::make_shared<Estimator>(est);
    auto block = std::make_shared<std::vector<std::size_t>>(part.blocks[k]);
    cond.posterior_fn = [est_ptr, block, num_predictors](std::span<const std::size_t> sample) {
        std::vector<double> post = est_ptr->posterior(sample);
        double mass = 0.0;
        for (std::size_t f : *block) mass += post[f];
        std::vector<double> out(num_predictors, 0.0);
        if (mass > 0.0) {
            for (std::size_t f : *block) out[f] = post[f] / mass;
        } else {
            for (std::size_t f : *block) out[f] = 1.0 / static_cast<double>(block->size());
        }
        return out;
    };
    return cond;
}

VerificationResult composite_decomposition_check(const EntropifiedModel& model,
                                                 const Partition& part,
                                                 const FiniteDistribution& pi_K,
                                                 const std::vector<Luckiness>& block_w,
                                                 const Estimator& est, std::uint64_t exact_cap) {
    const LearningProblem& prob = model.problem();
    if (part.block_of.size() != prob.num_predictors())
        throw BadPartition("partition does not match the predictor class");
    if (pi_K.size() != part.num_blocks())
        throw MalformedSpec("block prior needs one mass per block");
    if (block_w.size() != part.num_blocks())
        throw MalformedSpec("need one sub-luckiness per block");

    Luckiness w = Luckiness::composite(part, pi_K, block_w, est);
    ExactS global = exact_generalized(model, est, w, exact_cap);

    std::vector<Estimator> cond;
    std::vector<double> log_S_block;
    cond.reserve(part.num_blocks());
    for (std::size_t k = 0; k < part.num_blocks(); ++k) {
        cond.push_back(conditional_on_block(est, part, k, prob.num_predictors()));
        log_S_block.push_back(exact_generalized(model, cond[k], block_w[k], exact_cap).log_S);
    }

    // Prior mixture of the block integrals, the form Jensen actually yields.
    double log_mix = kNegInf;
    for (std::size_t k = 0; k < part.num_blocks(); ++k)
        if (pi_K.masses[k] > 0.0)
            log_mix = log_add(log_mix, std::log(pi_K.masses[k]) + log_S_block[k]);

    const double eta = model.eta();
    SampleEnumerator en(prob.num_outcomes(), prob.n, exact_cap);
    double min_slack = kPosInf;
    double worst_lhs = 0.0, worst_rhs = 0.0;
    std::uint64_t worst_rank = 0, rank = 0, checked = 0;
    bool more = true;
    while (more) {
        if (prob.log_pmass(en.sample()) != kNegInf) {
            std::vector<double> post = est.posterior(en.sample());
            std::vector<double> mass_k(part.num_blocks(), 0.0);
            for (std::size_t f = 0; f < post.size(); ++f) mass_k[part.block_of[f]] += post[f];

            double kl = 0.0;
            double expected_block_comp = 0.0;
            for (std::size_t k = 0; k < part.num_blocks(); ++k) {
                if (mass_k[k] <= 0.0) continue;
                if (pi_K.masses[k] <= 0.0)
                    throw BadPartition("block prior vanishes on a block with posterior mass");
                kl += mass_k[k] * std::log(mass_k[k] / pi_K.masses[k]);
                expected_block_comp +=
                    mass_k[k] *
                    comp_generalized_at(model, cond[k], block_w[k], en.sample(), log_S_block[k]);
            }
            if (kl < 0.0 && kl > -1e-13) kl = 0.0;

            double lhs = comp_generalized_at(model, est, w, en.sample(), global.log_S);
            double rhs = kl / eta + expected_block_comp;
            double slack = rhs - lhs;
            if (slack < min_slack) {
                min_slack = slack;
                worst_lhs = lhs;
                worst_rhs = rhs;
                worst_rank = rank;
            }
            ++checked;
        }
        ++rank;
        more = en.advance();
    }

    VerificationResult res =
        VerificationResult::inequality("composite-decomposition", worst_lhs, worst_rhs, 1e-9);
    res.slack = min_slack;
    res.pass = min_slack >= -res.tolerance;
    res.details = {{"samples_checked", checked},
                   {"worst_rank", worst_rank},
                   {"log_shtarkov", global.log_S},
                   {"block_log_shtarkov", log_S_block},
                   {"prior_mixture_slack", log_mix - global.log_S},
                   {"estimator", est.name}};
    return res;
}

}  // namespace nmlcomp
