#include "nmlcomp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "nmlcomp/entropify.hpp"
#include "nmlcomp/logsum.hpp"
#include "nmlcomp/rng.hpp"

namespace nmlcomp {

namespace {

void validate_common(const GeneratorSpec& spec) {
    if (!(spec.eta > 0.0)) throw MalformedSpec("generator eta must be positive");
    if (spec.n < 1) throw MalformedSpec("generator n must be at least 1");
}

LearningProblem generate_random_finite(const GeneratorSpec& spec) {
    if (spec.num_outcomes < 1 || spec.num_predictors < 1)
        throw MalformedSpec("random_finite needs at least one outcome and one predictor");
    const std::size_t Z = spec.num_outcomes;
    const std::size_t F = spec.num_predictors;
    CounterRng rng(spec.seed, 7);

    OutcomeSpace space;
    space.nu.assign(Z, 1.0);
    for (std::size_t z = 0; z < Z; ++z) space.labels.push_back("z" + std::to_string(z));

    PredictorClass cls;
    cls.param = Parameterization::direct;
    cls.loss.assign(F, std::vector<double>(Z, 0.0));

    std::vector<double> p_raw(Z);
    double eta = spec.eta;
    bool log_loss = false;
    if (spec.log_loss_correct) {
        // Draw a density family with per-outcome log spread at most 0.4, so
        // the loss table needs no rescaling, and generate from one member.
        std::vector<double> base(Z);
        double bsum = 0.0;
        for (auto& b : base) {
            b = 0.5 + 0.5 * rng.next_double();
            bsum += b;
        }
        std::vector<std::vector<double>> dens(F, std::vector<double>(Z));
        for (std::size_t f = 0; f < F; ++f) {
            double nsum = 0.0;
            for (std::size_t z = 0; z < Z; ++z) {
                dens[f][z] = (base[z] / bsum) * std::exp(0.2 * rng.next_double() - 0.1);
                nsum += dens[f][z];
            }
            for (std::size_t z = 0; z < Z; ++z) {
                dens[f][z] /= nsum;
                cls.loss[f][z] = -std::log(dens[f][z]);
            }
        }
        std::size_t truth = static_cast<std::size_t>(rng.next_u64() % F);
        p_raw = dens[truth];
        eta = 1.0;
        log_loss = true;
    } else {
        double psum = 0.0;
        for (auto& m : p_raw) {
            m = 0.2 + 0.8 * rng.next_double();
            psum += m;
        }
        for (auto& m : p_raw) m /= psum;
        for (std::size_t f = 0; f < F; ++f)
            for (std::size_t z = 0; z < Z; ++z) cls.loss[f][z] = 0.5 * rng.next_double();
    }

    return build_problem(std::move(space), FiniteDistribution::normalized(std::move(p_raw)),
                         std::move(cls), eta, spec.n, log_loss);
}

LearningProblem generate_threshold(const GeneratorSpec& spec, double margin) {
    if (spec.grid_points < 1) throw MalformedSpec("threshold_grid needs at least one grid point");
    if (margin < 0.0 || margin > 1.0) throw MalformedSpec("margin must lie in [0, 1]");
    const std::size_t m = spec.grid_points;
    const std::size_t jstar = m / 2;

    OutcomeSpace space;
    space.supervised = true;
    space.nu.assign(2 * m, 1.0);
    std::vector<double> p_raw(2 * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t b = 0; b < 2; ++b) {
            space.x_part.push_back("x" + std::to_string(i));
            space.y_part.push_back(std::to_string(b));
            space.labels.push_back("x" + std::to_string(i) + "|" + std::to_string(b));
            bool best = (i >= jstar) == (b == 1);
            p_raw[2 * i + b] = (best ? (1.0 + margin) : (1.0 - margin)) / (2.0 * m);
        }
    }

    PredictorClass cls;
    cls.param = Parameterization::supervised;
    cls.lipschitz = 0.5;
    cls.loss.assign(m + 1, std::vector<double>(2 * m, 0.0));
    cls.feature.assign(m + 1, std::vector<double>(2 * m, 0.0));
    for (std::size_t j = 0; j <= m; ++j)
        for (std::size_t i = 0; i < m; ++i) {
            double pred = i >= j ? 1.0 : 0.0;
            for (std::size_t b = 0; b < 2; ++b) {
                cls.feature[j][2 * i + b] = pred;
                cls.loss[j][2 * i + b] = 0.5 * std::fabs(pred - static_cast<double>(b));
            }
        }

    return build_problem(std::move(space), FiniteDistribution::normalized(std::move(p_raw)),
                         std::move(cls), spec.eta, spec.n, false);
}

LearningProblem generate_nested(const GeneratorSpec& spec) {
    if (spec.block_sizes.empty()) throw MalformedSpec("nested_blocks needs block sizes");
    for (std::size_t s : spec.block_sizes)
        if (s == 0) throw MalformedSpec("block sizes must be positive");
    if (spec.num_outcomes < 1) throw MalformedSpec("nested_blocks needs at least one outcome");
    const std::size_t Z = spec.num_outcomes;
    CounterRng rng(spec.seed, 11);

    OutcomeSpace space;
    space.nu.assign(Z, 1.0);
    for (std::size_t z = 0; z < Z; ++z) space.labels.push_back("z" + std::to_string(z));
    std::vector<double> p_raw(Z);
    double psum = 0.0;
    for (auto& m : p_raw) {
        m = 0.2 + 0.8 * rng.next_double();
        psum += m;
    }
    for (auto& m : p_raw) m /= psum;

    PredictorClass cls;
    cls.param = Parameterization::direct;
    for (std::size_t k = 0; k < spec.block_sizes.size(); ++k)
        for (std::size_t j = 0; j < spec.block_sizes[k]; ++j) {
            std::vector<double> row(Z);
            for (auto& l : row)
                l = k == 0 ? 0.3 * rng.next_double() : 0.1 + 0.4 * rng.next_double();
            cls.loss.push_back(std::move(row));
        }

    return build_problem(std::move(space), FiniteDistribution::normalized(std::move(p_raw)),
                         std::move(cls), spec.eta, spec.n, false);
}

}  // namespace

LearningProblem generate(const GeneratorSpec& spec) {
    validate_common(spec);
    switch (spec.family) {
        case Family::random_finite:
            return generate_random_finite(spec);
        case Family::threshold_grid:
            return generate_threshold(spec, spec.margin);
        case Family::nested_blocks:
            return generate_nested(spec);
    }
    throw MalformedSpec("unknown generator family");
}

Partition nested_partition(const GeneratorSpec& spec) {
    if (spec.family != Family::nested_blocks)
        throw MalformedSpec("only nested_blocks specs carry a partition");
    std::vector<std::vector<std::size_t>> blocks;
    std::size_t next = 0;
    for (std::size_t s : spec.block_sizes) {
        std::vector<std::size_t> block(s);
        for (auto& f : block) f = next++;
        blocks.push_back(std::move(block));
    }
    return make_partition(std::move(blocks), next);
}

Estimator luckiness_ml(const LearningProblem& prob, std::vector<double> gamma) {
    const std::size_t F = prob.num_predictors();
    if (gamma.empty()) gamma.assign(F, 0.0);
    if (gamma.size() != F) throw MalformedSpec("penalty vector length must match the class");
    EntropifiedModel model(prob);
    // -log q_f(z^n) + gamma[f] and eta * loss_sum(f) + n log c1(f) + gamma[f]
    // have the same minimizers, so the rule reduces to a penalized ERM.
    for (std::size_t f = 0; f < F; ++f)
        gamma[f] += static_cast<double>(prob.n) * model.log_c1(f);
    Estimator est = penalized_erm(prob, std::move(gamma));
    est.name = "luckiness-ml";
    return est;
}

namespace {

double ols_slope(std::span<const double> xs, std::span<const double> ys) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - mx) * (ys[i] - my);
        den += (xs[i] - mx) * (xs[i] - mx);
    }
    return num / den;
}

// Empirical threshold risk by prefix sums over per-x label counts:
// errors(j) = #{y=1, x < j} + #{y=0, x >= j}, minimized with the lowest
// index winning ties, matching the generic rule on the same table.
std::size_t threshold_fast_erm(std::span<const std::uint32_t> ones,
                               std::span<const std::uint32_t> zeros) {
    std::uint64_t err = 0;
    for (std::uint32_t c : zeros) err += c;
    std::uint64_t best_err = err;
    std::size_t best_j = 0;
    for (std::size_t j = 1; j <= ones.size(); ++j) {
        err += ones[j - 1];
        err -= zeros[j - 1];
        if (err < best_err) {
            best_err = err;
            best_j = j;
        }
    }
    return best_j;
}

struct BetaChoice {
    double beta = 0.0;
    double b_last = 0.0;
    bool bounded = false;
    nlohmann::json trace = nlohmann::json::array();
};

// Largest beta on the grid whose Bernstein constant stays within a factor
// 1.5 across the n range; beta = 0 is the fallback when none qualifies.
BetaChoice choose_beta(const std::vector<LearningProblem>& problems) {
    BetaChoice choice;
    const double betas[] = {1.0, 0.5, 0.0};
    for (double beta : betas) {
        double bmin = kPosInf, bmax = 0.0;
        bool ok = true;
        nlohmann::json bs = nlohmann::json::array();
        for (const auto& prob : problems) {
            BernsteinFit fit = fit_bernstein(prob, beta);
            if (fit.unsatisfiable || !std::isfinite(fit.B)) {
                ok = false;
                break;
            }
            bs.push_back(fit.B);
            bmin = std::min(bmin, fit.B);
            bmax = std::max(bmax, fit.B);
        }
        bool bounded = ok && (bmax <= 0.0 || bmax <= 1.5 * std::max(bmin, 1e-300));
        choice.trace.push_back({{"beta", beta},
                                {"satisfiable", ok},
                                {"bounded", bounded},
                                {"b_values", bs}});
        if (bounded || (beta == 0.0 && !choice.bounded)) {
            choice.beta = beta;
            choice.bounded = bounded;
            choice.b_last = ok && !bs.empty() ? bs.back().get<double>() : kPosInf;
            if (bounded) break;
        }
    }
    return choice;
}

RatePoint rate_point(const GeneratorSpec& gspec, RateEstimator kind, double beta, double gamma_n,
                     const McConfig& mc, std::uint64_t exact_cap) {
    LearningProblem prob = generate(gspec);
    RatePoint point;
    point.n = static_cast<std::size_t>(gspec.n);

    std::optional<Estimator> est;
    std::optional<VFunction> v;
    switch (kind) {
        case RateEstimator::erm:
            est = erm(prob);
            break;
        case RateEstimator::dirac_fstar:
            est = dirac(prob, prob.fstar);
            break;
        case RateEstimator::gen_bayes: {
            v = VFunction::from_bernstein(fit_bernstein(prob, beta));
            double eta_n = (*v)(gamma_n) / 2.0;
            point.eta_used = eta_n;
            est = generalized_bayes(prob, FiniteDistribution::uniform(prob.num_predictors()),
                                    eta_n);
            break;
        }
    }

    auto posterior_excess = [&](std::span<const std::size_t> sample) {
        if (est->deterministic()) return prob.excess_risk(est->map(sample));
        std::vector<double> post = est->posterior(sample);
        double acc = 0.0;
        for (std::size_t f = 0; f < post.size(); ++f)
            if (post[f] > 0.0) acc += post[f] * prob.excess_risk(f);
        return acc;
    };

    if (enumeration_fits(prob.num_outcomes(), prob.n, exact_cap)) {
        point.mean_excess = exact_expectation(prob, posterior_excess, exact_cap);
        point.std_error = 0.0;
        point.trials = checked_power(prob.num_outcomes(), prob.n, exact_cap);
        if (kind == RateEstimator::gen_bayes) {
            Luckiness w = Luckiness::prior_ratio(
                FiniteDistribution::uniform(prob.num_predictors()), *est);
            EvalConfig cfg;
            cfg.exact_cap = exact_cap;
            cfg.mc = mc;
            RiskBoundReport rb = risk_bound_eval(prob, *est, w, gamma_n, *v, cfg);
            point.bound = exact_expectation(prob, rb.rhs, exact_cap);
        }
        return point;
    }

    if (gspec.family == Family::threshold_grid && kind == RateEstimator::erm) {
        // Per-draw counting sort over x plus a prefix-sum scan; the risk of
        // the selected threshold is read off the problem's own table.
        const std::size_t m = gspec.grid_points;
        const std::size_t jstar = m / 2;
        const double flip = (1.0 - gspec.margin) / 2.0;
        CounterRng rng(mc.seed, mc.stream_id);
        std::vector<std::uint32_t> ones(m), zeros(m);
        double mean = 0.0, m2 = 0.0;
        for (std::uint64_t t = 0; t < mc.trials; ++t) {
            std::fill(ones.begin(), ones.end(), 0u);
            std::fill(zeros.begin(), zeros.end(), 0u);
            for (int i = 0; i < prob.n; ++i) {
                auto x = static_cast<std::size_t>(rng.next_double() * static_cast<double>(m));
                if (x >= m) x = m - 1;
                bool best = x >= jstar;
                bool y = rng.next_double() < flip ? !best : best;
                (y ? ones : zeros)[x]++;
            }
            double value = prob.excess_risk(threshold_fast_erm(ones, zeros));
            double d = value - mean;
            mean += d / static_cast<double>(t + 1);
            m2 += d * (value - mean);
        }
        point.mean_excess = mean;
        point.trials = mc.trials;
        point.std_error =
            mc.trials > 1 ? std::sqrt(m2 / (static_cast<double>(mc.trials - 1) *
                                            static_cast<double>(mc.trials)))
                          : 0.0;
        return point;
    }

    McEstimate mce = mc_expectation(prob, posterior_excess, mc);
    point.mean_excess = mce.mean;
    point.std_error = mce.std_error;
    point.trials = mce.trials;
    return point;
}

}  // namespace

RateReport rate_experiment(const GeneratorSpec& spec, RateEstimator kind,
                           std::span<const std::size_t> ns, const GammaRule& gamma_rule,
                           const McConfig& mc, std::uint64_t exact_cap) {
    if (ns.size() < 4) throw MalformedSpec("slope fits need at least four sample sizes");
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (ns[i] <= ns[i - 1]) throw MalformedSpec("sample sizes must be strictly increasing");

    std::vector<GeneratorSpec> specs;
    std::vector<LearningProblem> problems;
    nlohmann::json margins = nlohmann::json::array();
    for (std::size_t n : ns) {
        GeneratorSpec g = spec;
        g.n = static_cast<int>(n);
        if (spec.family == Family::threshold_grid && spec.margin == 0.0)
            g.margin = 1.0 / std::sqrt(static_cast<double>(n));
        margins.push_back(g.family == Family::threshold_grid ? g.margin : 0.0);
        problems.push_back(generate(g));
        specs.push_back(std::move(g));
    }

    BetaChoice beta = choose_beta(problems);
    problems.clear();

    RateReport report;
    report.beta = beta.beta;
    report.bernstein_b = beta.b_last;
    report.target = -1.0 / (2.0 - beta.beta);
    report.details = {{"beta_trace", beta.trace},
                      {"beta_bounded", beta.bounded},
                      {"margins", margins}};

    std::vector<std::future<RatePoint>> futures;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        double gamma_n = gamma_rule
                             ? gamma_rule(ns[i])
                             : std::pow(static_cast<double>(ns[i]), -1.0 / (2.0 - beta.beta));
        McConfig point_mc = mc;
        point_mc.stream_id = mc.stream_id + 1 + i;
        futures.push_back(std::async(std::launch::async, rate_point, specs[i], kind, beta.beta,
                                     gamma_n, point_mc, exact_cap));
    }
    for (auto& fut : futures) report.points.push_back(fut.get());

    std::vector<double> xs, ys;
    double max_excess = 0.0;
    for (const auto& pt : report.points) {
        max_excess = std::max(max_excess, pt.mean_excess);
        if (pt.mean_excess > 0.0) {
            xs.push_back(std::log(static_cast<double>(pt.n)));
            ys.push_back(std::log(pt.mean_excess));
        }
    }
    if (xs.size() < 4) {
        report.degenerate = true;
        report.slope = 0.0;
        report.pass = max_excess <= 1e-12;
    } else {
        report.slope = ols_slope(xs, ys);
        report.pass = std::fabs(report.slope - report.target) <= report.pass_margin;
    }
    return report;
}

nlohmann::json RateReport::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& pt : points) {
        nlohmann::json row = {{"n", pt.n},
                              {"mean_excess", pt.mean_excess},
                              {"std_error", pt.std_error},
                              {"trials", pt.trials}};
        if (pt.eta_used) row["eta"] = *pt.eta_used;
        if (pt.bound) row["bound"] = *pt.bound;
        pts.push_back(std::move(row));
    }
    return {{"points", pts},          {"beta", beta},
            {"bernstein_b", bernstein_b}, {"slope", slope},
            {"target", target},       {"pass_margin", pass_margin},
            {"degenerate", degenerate}, {"pass", pass},
            {"details", details}};
}

void rate_csv(std::ostream& os, const RateReport& report, std::string_view estimator) {
    os << "n,estimator,mean_excess,std_error,trials,eta,bound\n";
    os.precision(17);
    for (const auto& pt : report.points) {
        os << pt.n << ',' << estimator << ',' << pt.mean_excess << ',' << pt.std_error << ','
           << pt.trials << ',';
        if (pt.eta_used) os << *pt.eta_used;
        os << ',';
        if (pt.bound) os << *pt.bound;
        os << '\n';
    }
}

EqualizerReport equalizer_experiment(const LearningProblem& prob, const Estimator& est,
                                     const Luckiness& w, std::span<const double> gamma,
                                     std::uint64_t exact_cap) {
    const std::size_t F = prob.num_predictors();
    if (!gamma.empty() && gamma.size() != F)
        throw MalformedSpec("penalty vector length must match the class");
    bool penalized = false;
    for (double g : gamma)
        if (g != 0.0) penalized = true;
    if (penalized && !prob.log_loss)
        throw NotLogLoss("penalized regret needs losses that are negative log densities");
    if (penalized && std::fabs(prob.eta - 1.0) > 1e-12)
        throw NotLogLoss("penalized regret needs eta = 1");

    EntropifiedModel model(prob);
    FiniteDistribution r = nml_density(model, est, w, exact_cap);
    EvalConfig cfg;
    cfg.exact_cap = exact_cap;
    ComplexityReport shtarkov = shtarkov_generalized(model, est, w, cfg);

    double plug_min = kPosInf, plug_max = kNegInf;
    double hind_min = kPosInf, hind_max = kNegInf;
    bool broken = false;
    std::uint64_t samples = 0;
    SampleEnumerator it(prob.num_outcomes(), prob.n, exact_cap);
    std::uint64_t rank = 0;
    do {
        std::span<const std::size_t> sample = it.sample();
        if (prob.log_pmass(sample) == kNegInf) {
            ++rank;
            continue;
        }
        ++samples;
        std::size_t fhat = est.map(sample);
        double log_r = std::log(r.masses[rank]);
        double log_w = w.log_eval(sample, fhat);
        if (!std::isfinite(log_r) || !std::isfinite(log_w)) {
            broken = true;
            ++rank;
            continue;
        }
        double plug = -log_r + model.log_q_sample(fhat, sample) + log_w;
        double hindsight_best = kPosInf;
        for (std::size_t f = 0; f < F; ++f) {
            double cand = -model.log_q_sample(f, sample) + (gamma.empty() ? 0.0 : gamma[f]);
            hindsight_best = std::min(hindsight_best, cand);
        }
        double hind = -log_r - hindsight_best;
        plug_min = std::min(plug_min, plug);
        plug_max = std::max(plug_max, plug);
        hind_min = std::min(hind_min, hind);
        hind_max = std::max(hind_max, hind);
        ++rank;
    } while (it.advance());

    EqualizerReport rep;
    rep.samples = samples;
    if (broken || samples == 0) {
        rep.plug_in_spread = kPosInf;
        rep.hindsight_spread = kPosInf;
        rep.constant = kPosInf;
        rep.log_shtarkov = shtarkov.log_shtarkov;
        rep.details["zero_luckiness_sample"] = broken;
        return rep;
    }
    rep.constant = plug_max;
    rep.log_shtarkov = shtarkov.log_shtarkov;
    rep.plug_in_spread = plug_max - plug_min;
    rep.hindsight_spread = hind_max - hind_min;
    rep.pass = rep.plug_in_spread <= 1e-9 &&
               std::fabs(rep.constant - rep.log_shtarkov) <= 1e-9;
    rep.hindsight_pass = rep.hindsight_spread <= 1e-9;
    rep.details = {{"estimator", est.name},
                   {"luckiness", w.name()},
                   {"hindsight_constant", hind_max},
                   {"eta_comp", shtarkov.comp}};
    return rep;
}

nlohmann::json EqualizerReport::to_json() const {
    return {{"constant", constant},
            {"log_shtarkov", log_shtarkov},
            {"plug_in_spread", plug_in_spread},
            {"hindsight_spread", hindsight_spread},
            {"samples", samples},
            {"pass", pass},
            {"hindsight_pass", hindsight_pass},
            {"details", details}};
}

namespace {

Estimator block_erm(const LearningProblem& prob, std::vector<std::size_t> block) {
    Estimator est;
    est.kind = Estimator::Kind::deterministic;
    est.name = "erm-block";
    const LearningProblem* pp = &prob;
    auto blk = std::make_shared<std::vector<std::size_t>>(std::move(block));
    est.pick = [pp, blk](std::span<const std::size_t> sample) {
        std::size_t best = blk->front();
        double best_loss = pp->loss_sum(best, sample);
        for (std::size_t f : *blk) {
            double l = pp->loss_sum(f, sample);
            if (l < best_loss) {
                best_loss = l;
                best = f;
            }
        }
        return best;
    };
    std::size_t F = prob.num_predictors();
    auto pick = est.pick;
    est.posterior_fn = [pick, F](std::span<const std::size_t> sample) {
        std::vector<double> post(F, 0.0);
        post[pick(sample)] = 1.0;
        return post;
    };
    return est;
}

std::size_t select_kstar(const LearningProblem& prob, const Partition& part,
                         const FiniteDistribution& pi_K) {
    std::size_t kstar = 0;
    double best_risk = kPosInf;
    for (std::size_t k = 0; k < part.num_blocks(); ++k) {
        double risk = kPosInf;
        for (std::size_t f : part.blocks[k]) risk = std::min(risk, prob.risk[f]);
        if (risk < best_risk - 1e-15 ||
            (std::fabs(risk - best_risk) <= 1e-15 && pi_K.mass(k) > pi_K.mass(kstar))) {
            best_risk = std::min(best_risk, risk);
            kstar = k;
        }
    }
    return kstar;
}

ModelSelectPoint select_point(const GeneratorSpec& gspec, const FiniteDistribution& pi_K,
                              std::size_t kstar, std::uint64_t exact_cap) {
    LearningProblem prob = generate(gspec);
    Partition part = nested_partition(gspec);
    EntropifiedModel model(prob);

    std::vector<double> comp_bounds;
    for (const auto& block : part.blocks)
        comp_bounds.push_back(comp_max(model, std::span<const std::size_t>(block), exact_cap).comp);

    Estimator two_part = two_part_mdl(prob, part, pi_K, comp_bounds);
    Estimator full = erm(prob);
    Estimator kstar_erm = block_erm(prob, part.blocks[kstar]);

    std::vector<Luckiness> block_w(part.num_blocks(), Luckiness::constant(1.0));
    Luckiness w = Luckiness::composite(part, pi_K, block_w, two_part);
    EvalConfig cfg;
    cfg.exact_cap = exact_cap;
    double log_shtarkov = shtarkov_generalized(model, two_part, w, cfg).log_shtarkov;

    ModelSelectPoint point;
    point.n = static_cast<std::size_t>(gspec.n);
    point.overhead = -std::log(pi_K.mass(kstar)) / prob.eta;
    double bound_rhs = point.overhead + comp_bounds[kstar];

    CompensatedSum two_acc, full_acc, kstar_acc;
    double min_slack = kPosInf;
    SampleEnumerator it(prob.num_outcomes(), prob.n, exact_cap);
    do {
        std::span<const std::size_t> sample = it.sample();
        double log_pm = prob.log_pmass(sample);
        if (log_pm == kNegInf) continue;
        double pm = std::exp(log_pm);
        two_acc.add(pm * prob.excess_risk(two_part.map(sample)));
        full_acc.add(pm * prob.excess_risk(full.map(sample)));
        kstar_acc.add(pm * prob.excess_risk(kstar_erm.map(sample)));
        double lhs = comp_full_at(model, two_part, w, sample, log_shtarkov);
        min_slack = std::min(min_slack, bound_rhs - lhs);
    } while (it.advance());

    point.two_part_excess = two_acc.total();
    point.erm_full_excess = full_acc.total();
    point.erm_kstar_excess = kstar_acc.total();
    point.bound_slack_min = min_slack;
    point.bound_pass = min_slack >= -1e-9;
    point.tracks_pass = point.two_part_excess <=
                        point.erm_kstar_excess + point.overhead / static_cast<double>(point.n) +
                            1e-9;
    return point;
}

}  // namespace

ModelSelectReport model_select_experiment(const GeneratorSpec& spec,
                                          const FiniteDistribution& pi_K,
                                          const std::function<double(std::size_t)>& eta_rule,
                                          std::span<const std::size_t> ns,
                                          std::uint64_t exact_cap) {
    if (spec.family != Family::nested_blocks)
        throw MalformedSpec("model selection runs on the nested_blocks family");
    if (ns.empty()) throw MalformedSpec("model selection needs at least one sample size");
    if (pi_K.size() != spec.block_sizes.size())
        throw MalformedSpec("block prior length must match the number of blocks");

    LearningProblem first = generate(spec);
    Partition part = nested_partition(spec);
    std::size_t kstar = select_kstar(first, part, pi_K);

    ModelSelectReport report;
    report.kstar = kstar;

    std::vector<std::future<ModelSelectPoint>> futures;
    for (std::size_t n : ns) {
        GeneratorSpec g = spec;
        g.n = static_cast<int>(n);
        if (eta_rule) g.eta = eta_rule(n);
        futures.push_back(std::async(std::launch::async, select_point, g, pi_K, kstar, exact_cap));
    }
    bool pass = true;
    for (auto& fut : futures) {
        report.points.push_back(fut.get());
        pass = pass && report.points.back().bound_pass && report.points.back().tracks_pass;
    }
    report.pass = pass;
    report.details = {{"blocks", spec.block_sizes}, {"pi_K", pi_K.masses}};
    return report;
}

nlohmann::json ModelSelectReport::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& pt : points)
        pts.push_back({{"n", pt.n},
                       {"two_part_excess", pt.two_part_excess},
                       {"erm_full_excess", pt.erm_full_excess},
                       {"erm_kstar_excess", pt.erm_kstar_excess},
                       {"overhead", pt.overhead},
                       {"bound_slack_min", pt.bound_slack_min},
                       {"bound_pass", pt.bound_pass},
                       {"tracks_pass", pt.tracks_pass}});
    return {{"points", pts}, {"kstar", kstar}, {"pass", pass}, {"details", details}};
}

void model_select_csv(std::ostream& os, const ModelSelectReport& report) {
    os << "n,estimator,mean_excess,overhead,bound_slack_min,bound_pass\n";
    os.precision(17);
    for (const auto& pt : report.points) {
        os << pt.n << ",two-part," << pt.two_part_excess << ',' << pt.overhead << ','
           << pt.bound_slack_min << ',' << (pt.bound_pass ? 1 : 0) << '\n';
        os << pt.n << ",erm-full," << pt.erm_full_excess << ",,,\n";
        os << pt.n << ",erm-kstar," << pt.erm_kstar_excess << ",,,\n";
    }
}

}  // namespace nmlcomp
