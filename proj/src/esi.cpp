#include "nmlcomp/esi.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nmlcomp/logsum.hpp"

namespace nmlcomp {

EsiMoment esi_moment(const LearningProblem& prob, const EsiStatement& stmt,
                     const EvalConfig& cfg) {
    if (!(stmt.eta > 0.0) || !std::isfinite(stmt.eta))
        throw MalformedSpec("ESI rate must be finite and positive");
    auto exponent = [&stmt](std::span<const std::size_t> sample) {
        return stmt.eta * (stmt.lhs(sample) - stmt.rhs(sample));
    };
    EsiMoment out;
    if (!cfg.force_mc && enumeration_fits(prob.num_outcomes(), prob.n, cfg.exact_cap)) {
        out.value = std::exp(exact_log_expectation(prob, exponent, cfg.exact_cap));
        out.method = "exact";
    } else {
        McEstimate est = mc_expectation(
            prob,
            [&exponent](std::span<const std::size_t> sample) {
                double e = exponent(sample);
                return e == kNegInf ? 0.0 : std::exp(e);
            },
            cfg.mc);
        out.value = est.mean;
        out.method = "monte-carlo";
        out.std_error = est.std_error;
    }
    return out;
}

VerificationResult theorem1_identity(const LearningProblem& prob, const Estimator& est,
                                     const Luckiness& w, std::uint64_t exact_cap) {
    EntropifiedModel model(prob);
    double log_S =
        exact_log_expectation(prob,
                              [&](std::span<const std::size_t> sample) {
                                  return detail::neg_inner_exponent(model, est, w, sample);
                              },
                              exact_cap);
    if (log_S == kPosInf) throw InfiniteShtarkov("Shtarkov integral diverges");

    const double n = static_cast<double>(prob.n);
    std::vector<double> annealed(prob.num_predictors());
    for (std::size_t f = 0; f < annealed.size(); ++f) annealed[f] = model.annealed_excess(f);

    EsiStatement stmt;
    stmt.eta = n * prob.eta;
    stmt.strict_equality = true;
    stmt.lhs = [&est, annealed](std::span<const std::size_t> sample) {
        std::vector<double> post = est.posterior(sample);
        double acc = 0.0;
        for (std::size_t f = 0; f < post.size(); ++f)
            if (post[f] > 0.0) acc += post[f] * annealed[f];
        return acc;
    };
    stmt.rhs = [&model, &est, &w, log_S, n](std::span<const std::size_t> sample) {
        return comp_full_at(model, est, w, sample, log_S) / n;
    };

    EvalConfig cfg;
    cfg.exact_cap = exact_cap;
    EsiMoment m = esi_moment(prob, stmt, cfg);
    VerificationResult res =
        VerificationResult::identity("theorem1-identity", m.value, 1.0, 1e-9);
    res.details = {{"log_shtarkov", log_S}, {"estimator", est.name}, {"luckiness", w.name()},
                   {"rate", stmt.eta}};
    return res;
}

VerificationResult esi_implications_check(const LearningProblem& prob, const EsiStatement& stmt,
                                          std::uint64_t exact_cap) {
    SampleEnumerator en(prob.num_outcomes(), prob.n, exact_cap);
    CompensatedSum mean_lhs, mean_rhs;
    const double Ks[3] = {1.0, 2.0, 3.0};
    CompensatedSum tail[3];
    bool more = true;
    while (more) {
        double lp = prob.log_pmass(en.sample());
        if (lp != kNegInf) {
            double mass = std::exp(lp);
            double lhs = stmt.lhs(en.sample());
            double rhs = stmt.rhs(en.sample());
            mean_lhs.add(mass * lhs);
            mean_rhs.add(mass * rhs);
            for (int i = 0; i < 3; ++i)
                if (lhs > rhs + Ks[i] / stmt.eta) tail[i].add(mass);
        }
        more = en.advance();
    }

    const double tol = 1e-10;
    bool pass = mean_lhs.total() <= mean_rhs.total() + tol;
    nlohmann::json tails = nlohmann::json::array();
    double worst_margin = mean_rhs.total() - mean_lhs.total();
    for (int i = 0; i < 3; ++i) {
        double bound = std::exp(-Ks[i]);
        double p = tail[i].total();
        tails.push_back({{"K", Ks[i]}, {"probability", p}, {"bound", bound}});
        if (p > bound + tol) pass = false;
        worst_margin = std::min(worst_margin, bound - p);
    }
    VerificationResult res;
    res.name = "esi-implications";
    res.lhs = mean_lhs.total();
    res.rhs = mean_rhs.total();
    res.slack = worst_margin;
    res.tolerance = tol;
    res.pass = pass;
    res.details = {{"tails", tails}, {"rate", stmt.eta}};
    return res;
}

BernsteinFit fit_bernstein(const LearningProblem& prob, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw MalformedSpec("beta must lie in [0, 1]");
    const double tol = 1e-12;
    BernsteinFit fit;
    fit.beta = beta;
    for (std::size_t f = 0; f < prob.num_predictors(); ++f) {
        if (f == prob.fstar) continue;
        double er = std::max(0.0, prob.excess_risk(f));
        double er2 = 0.0;
        for (std::size_t z = 0; z < prob.num_outcomes(); ++z)
            er2 += prob.p.masses[z] * prob.excess_at(f, z) * prob.excess_at(f, z);
        if (er <= tol) {
            if (beta > 0.0 && er2 > tol) {
                fit.unsatisfiable = true;
                fit.offender = f;
                fit.B = kPosInf;
                return fit;
            }
            if (beta == 0.0) fit.B = std::max(fit.B, er2);
            continue;
        }
        fit.B = std::max(fit.B, er2 / std::pow(er, beta));
    }
    return fit;
}

double VFunction::operator()(double gamma) const {
    if (!(gamma > 0.0)) throw MalformedSpec("gamma must be positive");
    double raw = eta0 == kPosInf ? kPosInf : eta0 * std::pow(gamma, alpha);
    return std::min(raw, cap);
}

VFunction VFunction::from_bernstein(const BernsteinFit& fit) {
    if (fit.unsatisfiable)
        throw AssumptionViolated("cannot build a v function from an unsatisfiable fit");
    VFunction v;
    v.alpha = 1.0 - fit.beta;
    v.eta0 = fit.B > 0.0 ? 1.0 / fit.B : kPosInf;
    v.cap = 1.0;
    return v;
}

std::vector<double> default_gamma_grid() {
    const int points = 7;
    std::vector<double> grid(points);
    double lo = std::log(1e-3), hi = std::log(0.5);
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] =
            std::exp(lo + (hi - lo) * static_cast<double>(i) / (points - 1));
    return grid;
}

VerificationResult v_central_check(const LearningProblem& prob, const VFunction& v,
                                   std::span<const double> gamma_grid) {
    if (gamma_grid.empty()) throw EmptyGrid("gamma grid is empty");
    double min_slack = kPosInf;
    double worst_lhs = 0.0, worst_rhs = 0.0;
    std::size_t worst_f = 0;
    double worst_gamma = 0.0;
    for (double gamma : gamma_grid) {
        double rate = v(gamma);
        for (std::size_t f = 0; f < prob.num_predictors(); ++f) {
            double acc = kNegInf;
            for (std::size_t z = 0; z < prob.num_outcomes(); ++z) {
                if (prob.log_p[z] == kNegInf) continue;
                acc = log_add(acc, prob.log_p[z] - rate * prob.excess_at(f, z));
            }
            double rhs = rate * gamma;
            double slack = rhs - acc;
            if (slack < min_slack) {
                min_slack = slack;
                worst_lhs = acc;
                worst_rhs = rhs;
                worst_f = f;
                worst_gamma = gamma;
            }
        }
    }
    VerificationResult res = VerificationResult::inequality("v-central", worst_lhs, worst_rhs, 1e-10);
    res.slack = min_slack;
    res.pass = min_slack >= -res.tolerance;
    res.details = {{"worst_predictor", worst_f}, {"worst_gamma", worst_gamma},
                   {"grid_size", gamma_grid.size()}};
    return res;
}

VerificationResult kl_renyi_check(const LearningProblem& prob, std::size_t f, double gamma,
                                  const VFunction& v) {
    prob.check_predictor(f);
    double rate_v = v(gamma);
    double er = prob.excess_risk(f);

    double min_slack = kPosInf;
    double worst_lhs = 0.0, worst_rhs = 0.0, worst_eta = 0.0;
    nlohmann::json cases = nlohmann::json::array();
    for (double eta : {rate_v / 2.0, rate_v / 4.0}) {
        double acc = kNegInf;
        for (std::size_t z = 0; z < prob.num_outcomes(); ++z) {
            if (prob.log_p[z] == kNegInf) continue;
            acc = log_add(acc, prob.log_p[z] - eta * prob.excess_at(f, z));
        }
        double annealed = -acc / eta;
        double c_eta = 2.0 + 2.0 * eta;
        double rhs = c_eta * annealed + (c_eta - 1.0) / eta * rate_v * gamma;
        double slack = rhs - er;
        cases.push_back({{"eta", eta}, {"annealed", annealed}, {"rhs", rhs}, {"slack", slack}});
        if (slack < min_slack) {
            min_slack = slack;
            worst_lhs = er;
            worst_rhs = rhs;
            worst_eta = eta;
        }
    }
    VerificationResult res = VerificationResult::inequality("kl-renyi", worst_lhs, worst_rhs, 1e-10);
    res.slack = min_slack;
    res.pass = min_slack >= -res.tolerance;
    res.details = {{"predictor", f}, {"gamma", gamma}, {"v", rate_v}, {"worst_eta", worst_eta},
                   {"cases", cases}};
    return res;
}

RiskBoundReport risk_bound_eval(const LearningProblem& prob, const Estimator& est,
                                const Luckiness& w, double gamma, const VFunction& v,
                                const EvalConfig& cfg) {
    double rate_v = v(gamma);
    if (!(rate_v > 0.0) || !std::isfinite(rate_v))
        throw AssumptionViolated("v(gamma) must be finite and positive");
    RiskBoundReport rep;
    rep.gamma = gamma;
    rep.eta_used = rate_v / 2.0;
    rep.esi_rate = rate_v * static_cast<double>(prob.n) / 6.0;

    auto model = std::make_shared<EntropifiedModel>(prob, rep.eta_used);
    ComplexityReport s = shtarkov_generalized(*model, est, w, cfg);
    if (s.infinite) throw InfiniteShtarkov("Shtarkov integral diverges at v(gamma)/2");
    double log_S = s.log_shtarkov;

    std::vector<double> true_excess(prob.num_predictors());
    for (std::size_t f = 0; f < true_excess.size(); ++f) true_excess[f] = prob.excess_risk(f);

    const LearningProblem* pp = &prob;
    Estimator est_copy = est;
    Luckiness w_copy = w;
    rep.lhs = [est_copy, true_excess](std::span<const std::size_t> sample) {
        std::vector<double> post = est_copy.posterior(sample);
        double acc = 0.0;
        for (std::size_t f = 0; f < post.size(); ++f)
            if (post[f] > 0.0) acc += post[f] * true_excess[f];
        return acc;
    };
    rep.rhs = [model, est_copy, w_copy, log_S, pp, gamma](std::span<const std::size_t> sample) {
        double cf = comp_full_at(*model, est_copy, w_copy, sample, log_S);
        return 3.0 * cf / static_cast<double>(pp->n) + 4.0 * gamma;
    };

    EsiStatement stmt;
    stmt.eta = rep.esi_rate;
    stmt.lhs = rep.lhs;
    stmt.rhs = rep.rhs;
    EsiMoment m = esi_moment(prob, stmt, cfg);
    double tol = m.method == "exact" ? 1e-10 : 4.0 * m.std_error.value_or(0.0);
    rep.esi = VerificationResult::inequality("risk-bound-moment", m.value, 1.0, tol);
    rep.esi.details = {{"gamma", gamma},   {"v", rate_v},        {"eta_used", rep.eta_used},
                       {"rate", stmt.eta}, {"method", m.method}, {"log_shtarkov", log_S}};
    if (m.std_error) rep.esi.details["std_error"] = *m.std_error;
    return rep;
}

}  // namespace nmlcomp
