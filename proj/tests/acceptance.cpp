// Acceptance battery.  Ten numbered criteria exercise the complexity
// identities, the bound chains and the rate experiments end to end, each
// printing a single [PASS] or [FAIL] line.  The process exits 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nmlcomp/covering.hpp"
#include "nmlcomp/entropify.hpp"
#include "nmlcomp/errors.hpp"
#include "nmlcomp/esi.hpp"
#include "nmlcomp/harness.hpp"
#include "nmlcomp/problem.hpp"
#include "nmlcomp/shtarkov.hpp"

namespace {

using namespace nmlcomp;
using Clock = std::chrono::steady_clock;

constexpr double kIdentityTol = 1e-9;   // |moment - 1| for the exact identity
constexpr double kUnitSlack = 1e-10;    // log S above zero for normalized weights
constexpr double kDecompSlack = 1e-10;  // composite decomposition slack floor
constexpr double kSpreadTol = 1e-9;     // equalizer regret spread
constexpr double kSlopeMargin = 0.15;   // |slope - target| for rate fits
constexpr double kSigmas = 4.0;         // Monte Carlo agreement band
constexpr double kBudgetIdentity = 60.0;
constexpr double kBudgetChain = 120.0;
constexpr double kBudgetRates = 600.0;

struct Criterion {
    int id;
    std::string label;
    bool pass = true;
    std::string note;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_note(const char* fmt, ...) {
    char buf[256];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

// 54 seeded problems spanning two and three outcomes, one to five
// predictors, three learning rates and sample sizes one to five.
std::vector<LearningProblem> identity_battery() {
    std::vector<LearningProblem> probs;
    std::uint64_t seed = 100;
    for (std::size_t Z : {2u, 3u})
        for (std::size_t F : {1u, 3u, 5u})
            for (double eta : {0.25, 0.5, 1.0})
                for (int n : {1, 3, 5}) {
                    GeneratorSpec spec;
                    spec.seed = seed++;
                    spec.num_outcomes = Z;
                    spec.num_predictors = F;
                    spec.eta = eta;
                    spec.n = n;
                    probs.push_back(generate(spec));
                }
    return probs;
}

Partition split_partition(std::size_t F) {
    std::vector<std::vector<std::size_t>> blocks(F == 1 ? 1 : 2);
    for (std::size_t f = 0; f < F; ++f) blocks[F == 1 ? 0 : (f < (F + 1) / 2 ? 0 : 1)].push_back(f);
    return make_partition(std::move(blocks), F);
}

Partition singleton_partition(std::size_t F) {
    std::vector<std::vector<std::size_t>> blocks(F);
    for (std::size_t f = 0; f < F; ++f) blocks[f] = {f};
    return make_partition(std::move(blocks), F);
}

std::vector<double> ramp_gamma(std::size_t F, double step) {
    std::vector<double> gamma(F);
    for (std::size_t f = 0; f < F; ++f) gamma[f] = step * static_cast<double>(f);
    return gamma;
}

struct CatalogEntry {
    std::string name;
    Estimator est;
    Luckiness w;
};

std::vector<CatalogEntry> catalog(const LearningProblem& prob) {
    const std::size_t F = prob.num_predictors();
    std::vector<CatalogEntry> entries;
    entries.push_back({"erm/const", erm(prob), Luckiness::constant(1.0)});
    entries.push_back({"dirac/const", dirac(prob, 0), Luckiness::constant(0.5)});
    {
        auto est = penalized_erm(prob, ramp_gamma(F, 0.05));
        auto w = Luckiness::penalty(ramp_gamma(F, 0.05), est);
        entries.push_back({"penalized/penalty", std::move(est), std::move(w)});
    }
    {
        auto est = generalized_bayes(prob, FiniteDistribution::uniform(F));
        auto w = Luckiness::prior_ratio(FiniteDistribution::uniform(F), est);
        entries.push_back({"bayes/prior-ratio", std::move(est), std::move(w)});
    }
    entries.push_back(
        {"bayes/const", generalized_bayes(prob, FiniteDistribution::uniform(F)),
         Luckiness::constant(1.0)});
    {
        auto part = split_partition(F);
        auto est = erm(prob);
        std::vector<Luckiness> block_w(part.num_blocks(), Luckiness::constant(1.0));
        auto w = Luckiness::composite(std::move(part),
                                      FiniteDistribution::uniform(F == 1 ? 1 : 2),
                                      std::move(block_w), est);
        entries.push_back({"erm/composite", std::move(est), std::move(w)});
    }
    return entries;
}

// Posterior-expected annealed excess risk against comp_full / n, the
// statement whose moment the exact identity pins at one.
EsiStatement excess_comp_statement(const LearningProblem& prob, const EntropifiedModel& model,
                                   const Estimator& est, const Luckiness& w,
                                   double log_shtarkov) {
    EsiStatement stmt;
    stmt.eta = prob.eta * prob.n;
    stmt.lhs = [&model, &est](std::span<const std::size_t> s) {
        auto post = est.posterior(s);
        double acc = 0.0;
        for (std::size_t f = 0; f < post.size(); ++f)
            if (post[f] > 0.0) acc += post[f] * model.annealed_excess(f);
        return acc;
    };
    stmt.rhs = [&prob, &model, &est, &w, log_shtarkov](std::span<const std::size_t> s) {
        return comp_full_at(model, est, w, s, log_shtarkov) / prob.n;
    };
    return stmt;
}

Criterion criterion_identity(const std::vector<LearningProblem>& probs) {
    Criterion c{1, "exact moment identity across the estimator catalog"};
    auto start = Clock::now();
    std::size_t checks = 0;
    double worst = 0.0;
    for (const auto& prob : probs) {
        for (auto& entry : catalog(prob)) {
            auto res = theorem1_identity(prob, entry.est, entry.w);
            ++checks;
            worst = std::max(worst, -res.slack);
            if (!res.pass || res.slack < -kIdentityTol) c.pass = false;
        }
    }
    double dt = seconds_since(start);
    if (dt > kBudgetIdentity) c.pass = false;
    c.note = format_note("%zu instances, %zu identities, max |moment-1| %.2e, %.1fs",
                         probs.size(), checks, worst, dt);
    return c;
}

Criterion criterion_unit_bound(const std::vector<LearningProblem>& probs) {
    Criterion c{2, "prior-ratio weights keep the Shtarkov integral at or below one"};
    std::size_t checks = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& prob : probs) {
        EntropifiedModel model(prob);
        const std::size_t F = prob.num_predictors();
        auto bayes = generalized_bayes(prob, FiniteDistribution::uniform(F));
        auto wb = Luckiness::prior_ratio(FiniteDistribution::uniform(F), bayes);
        double log_s = shtarkov_generalized(model, bayes, wb).log_shtarkov;
        worst = std::max(worst, log_s);
        if (log_s > kUnitSlack) c.pass = false;
        ++checks;

        auto point = erm(prob);
        auto wp = Luckiness::prior_ratio(FiniteDistribution::uniform(F), point);
        log_s = shtarkov_generalized(model, point, wp).log_shtarkov;
        worst = std::max(worst, log_s);
        if (log_s > kUnitSlack) c.pass = false;
        ++checks;
    }
    c.note = format_note("%zu integrals, max log S %.2e", checks, worst);
    return c;
}

Criterion criterion_partition(const std::vector<LearningProblem>& probs) {
    Criterion c{3, "partition bound and composite decomposition"};
    std::size_t instances = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& prob : probs) {
        const std::size_t F = prob.num_predictors();
        if (F < 2) continue;
        ++instances;
        EntropifiedModel model(prob);
        auto point = erm(prob);

        auto part = split_partition(F);
        if (!partition_bound_check(model, part, point).pass) c.pass = false;

        std::vector<Luckiness> ws(part.num_blocks(), Luckiness::constant(1.0));
        auto det = composite_decomposition_check(model, part, FiniteDistribution::uniform(2), ws,
                                                 point);
        double slack = det.details["prior_mixture_slack"].get<double>();
        worst = std::min(worst, std::min(slack, det.slack));
        if (!det.pass || slack < -kDecompSlack) c.pass = false;

        auto singles = singleton_partition(F);
        auto bayes = generalized_bayes(prob, FiniteDistribution::uniform(F));
        std::vector<Luckiness> ws1(F, Luckiness::constant(1.0));
        auto rnd = composite_decomposition_check(model, singles, FiniteDistribution::uniform(F),
                                                 ws1, bayes);
        double slack1 = rnd.details["prior_mixture_slack"].get<double>();
        worst = std::min(worst, std::min(slack1, rnd.slack));
        if (!rnd.pass || slack1 < -kDecompSlack) c.pass = false;
    }
    if (instances < 20) c.pass = false;
    c.note = format_note("%zu partitioned instances, min slack %.2e", instances, worst);
    return c;
}

Criterion criterion_esi_implications(const std::vector<LearningProblem>& probs) {
    Criterion c{4, "mean and tail implications of every certified statement"};
    std::size_t checks = 0;
    for (const auto& prob : probs) {
        EntropifiedModel model(prob);
        const std::size_t F = prob.num_predictors();

        auto point = erm(prob);
        auto w1 = Luckiness::constant(1.0);
        auto rep1 = shtarkov_simple(model, point);
        auto stmt1 = excess_comp_statement(prob, model, point, w1, rep1.log_shtarkov);
        if (!esi_implications_check(prob, stmt1).pass) c.pass = false;
        ++checks;

        auto bayes = generalized_bayes(prob, FiniteDistribution::uniform(F));
        auto w2 = Luckiness::prior_ratio(FiniteDistribution::uniform(F), bayes);
        auto rep2 = shtarkov_generalized(model, bayes, w2);
        auto stmt2 = excess_comp_statement(prob, model, bayes, w2, rep2.log_shtarkov);
        if (!esi_implications_check(prob, stmt2).pass) c.pass = false;
        ++checks;
    }
    c.note = format_note("%zu statements, tails at K = 1, 2, 3 each", checks);
    return c;
}

Criterion criterion_kl_renyi(const std::vector<LearningProblem>& probs) {
    Criterion c{5, "annealed-to-actual bridge wherever the centering condition holds"};
    std::size_t run = 0, skipped = 0;
    auto grid = default_gamma_grid();
    for (const auto& prob : probs) {
        if (prob.num_predictors() < 2) continue;
        for (double beta : {1.0, 0.5, 0.0}) {
            auto fit = fit_bernstein(prob, beta);
            if (fit.unsatisfiable) {
                ++skipped;
                continue;
            }
            auto v = VFunction::from_bernstein(fit);
            if (!v_central_check(prob, v, grid).pass) {
                ++skipped;
                continue;
            }
            for (std::size_t f = 0; f < prob.num_predictors(); ++f)
                for (double gamma : grid) {
                    if (!kl_renyi_check(prob, f, gamma, v).pass) c.pass = false;
                    ++run;
                }
        }
    }
    if (run < 100) c.pass = false;
    c.note = format_note("%zu bridge checks, %zu (beta, instance) pairs skipped", run, skipped);
    return c;
}

double cell_diameter(const EntropifiedModel& model, std::span<const std::size_t> cell) {
    Metric metric;
    double diam = 0.0;
    for (std::size_t a : cell)
        for (std::size_t b : cell) diam = std::max(diam, pseudodistance(model, metric, a, b));
    return diam;
}

Criterion criterion_chain(std::size_t wanted) {
    Criterion c{6, "covering chain with two-cell covers"};
    auto start = Clock::now();
    std::size_t found = 0, attempts = 0;
    std::uint64_t seed = 500;
    Metric metric;
    while (found < wanted && attempts < 200) {
        ++attempts;
        GeneratorSpec spec;
        spec.seed = seed++;
        spec.num_outcomes = 2 + (attempts % 2);
        spec.num_predictors = 4 + (attempts % 3);
        spec.eta = attempts % 2 == 0 ? 0.5 : 1.0;
        spec.n = 2;
        auto prob = generate(spec);
        EntropifiedModel model(prob);

        double dmax = 0.0;
        for (std::size_t a = 0; a < prob.num_predictors(); ++a)
            for (std::size_t b = a + 1; b < prob.num_predictors(); ++b)
                dmax = std::max(dmax, pseudodistance(model, metric, a, b));
        if (dmax == 0.0) continue;

        std::optional<double> epsilon;
        for (int t = 39; t >= 1; --t) {
            double cand = 2.0 * dmax * t / 40.0;
            if (covering_number(model, metric, cand / 2.0).centers.size() == 2) {
                epsilon = cand;
                break;
            }
        }
        if (!epsilon) continue;
        ++found;

        auto oht = verify_oht(model, *epsilon);
        if (!oht.local_form.pass || !oht.rademacher_form.pass) c.pass = false;

        double lip = prob.cls.param == Parameterization::supervised ? prob.cls.lipschitz : 1.0;
        auto cells = oht.cover.cells();
        for (std::size_t k = 0; k < cells.size(); ++k) {
            std::size_t anchor = oht.cover.centers[k];
            const auto& cell = cells[k];
            if (!verify_opper_haussler(model, anchor, cell).pass) c.pass = false;
            double sigma = std::exp(1.0) * lip * cell_diameter(model, cell);
            if (!verify_talagrand_moment(model, anchor, cell, sigma).pass) c.pass = false;
            if (!symmetrization_check(model, anchor, cell).pass) c.pass = false;
        }
        if (!sigma_lemma_check(model).pass) c.pass = false;
        auto eh = extended_haussler_check(model, *epsilon, 400, spec.seed);
        if (!eh.pass) c.pass = false;
    }
    double dt = seconds_since(start);
    if (found < wanted || dt > kBudgetChain) c.pass = false;
    c.note = format_note("%zu two-cell instances from %zu candidates, %.1fs", found, attempts, dt);
    return c;
}

Criterion criterion_equalizer(const std::vector<LearningProblem>& probs) {
    Criterion c{7, "constant regret of the normalized strategy"};
    double worst = 0.0;
    std::size_t flat = 0, hindsight = 0;
    for (const auto& prob : probs) {
        auto rep = equalizer_experiment(prob, erm(prob), Luckiness::constant(1.0));
        worst = std::max(worst, rep.plug_in_spread);
        if (!rep.pass || rep.plug_in_spread > kSpreadTol) c.pass = false;
        ++flat;
    }
    std::uint64_t seed = 900;
    for (int i = 0; i < 10; ++i) {
        GeneratorSpec spec;
        spec.seed = seed++;
        spec.log_loss_correct = true;
        spec.num_outcomes = 2 + (i % 2);
        spec.num_predictors = 2 + (i % 2);
        spec.n = 2 + (i % 2);
        auto prob = generate(spec);
        auto gamma = ramp_gamma(prob.num_predictors(), 0.1);
        auto est = penalized_erm(prob, gamma);
        auto w = Luckiness::penalty(gamma, est);
        auto rep = equalizer_experiment(prob, est, w, gamma);
        worst = std::max(worst, std::max(rep.plug_in_spread, rep.hindsight_spread));
        if (!rep.pass || !rep.hindsight_pass) c.pass = false;
        ++hindsight;
    }
    c.note = format_note("%zu flat + %zu hindsight instances, max spread %.2e", flat, hindsight,
                         worst);
    return c;
}

Criterion criterion_rates() {
    Criterion c{8, "threshold learning rates match their Bernstein exponents"};
    auto start = Clock::now();
    std::vector<std::size_t> ns{16, 32, 64, 128, 256, 512, 1024};
    McConfig mc;
    mc.trials = 2000;
    mc.seed = 1;

    GeneratorSpec noisy;
    noisy.family = Family::threshold_grid;
    noisy.grid_points = 1024;
    noisy.margin = 0.0;
    noisy.seed = 1;
    auto slow = rate_experiment(noisy, RateEstimator::erm, ns, {}, mc);
    if (!slow.pass || std::fabs(slow.slope + 0.5) > kSlopeMargin) c.pass = false;

    GeneratorSpec clean = noisy;
    clean.margin = 0.9;
    auto fast = rate_experiment(clean, RateEstimator::erm, ns, {}, mc);
    if (!fast.pass || std::fabs(fast.slope + 1.0) > kSlopeMargin) c.pass = false;

    double dt = seconds_since(start);
    if (dt > kBudgetRates) c.pass = false;
    c.note = format_note("slope %.3f vs -0.5 at margin 0, %.3f vs -1.0 at margin 0.9, %.1fs",
                         slow.slope, fast.slope, dt);
    return c;
}

Criterion criterion_two_part() {
    Criterion c{9, "two-part selection bound and tracking"};
    std::size_t instances = 0;
    double worst = std::numeric_limits<double>::infinity();
    std::vector<std::vector<std::size_t>> shapes{{1, 3}, {2, 2}, {1, 2, 3}};
    std::vector<std::size_t> ns{2, 3, 4};
    for (int i = 0; i < 10; ++i) {
        GeneratorSpec spec;
        spec.family = Family::nested_blocks;
        spec.seed = 700 + static_cast<std::uint64_t>(i);
        spec.num_outcomes = 2;
        spec.eta = i % 2 == 0 ? 0.5 : 1.0;
        spec.block_sizes = shapes[static_cast<std::size_t>(i) % shapes.size()];
        auto pi = FiniteDistribution::uniform(spec.block_sizes.size());
        auto report = model_select_experiment(spec, pi, {}, ns);
        for (const auto& pt : report.points) worst = std::min(worst, pt.bound_slack_min);
        if (!report.pass) c.pass = false;
        ++instances;
    }
    c.note = format_note("%zu nested instances over n in {2, 3, 4}, min bound slack %.2e",
                         instances, worst);
    return c;
}

bool within_band(double got, double want, double se, std::size_t* checks, double* worst_z) {
    ++*checks;
    if (se <= 0.0) return got == want;
    double z = std::fabs(got - want) / se;
    *worst_z = std::max(*worst_z, z);
    return z <= kSigmas;
}

Criterion criterion_mc_agreement(const std::vector<LearningProblem>& probs) {
    Criterion c{10, "Monte Carlo paths agree with exact enumeration"};
    std::size_t checks = 0;
    double worst_z = 0.0;
    EvalConfig forced;
    forced.force_mc = true;
    forced.mc.trials = 40000;
    forced.mc.seed = 5;

    // Three battery problems with distinct shapes, all with several predictors.
    for (std::size_t idx : {13u, 43u, 47u}) {
        const auto& prob = probs[idx];
        EntropifiedModel model(prob);
        const std::size_t F = prob.num_predictors();
        auto point = erm(prob);

        auto exact = shtarkov_simple(model, point);
        auto mc = shtarkov_simple(model, point, forced);
        if (!within_band(std::exp(mc.log_shtarkov), std::exp(exact.log_shtarkov),
                         mc.std_error.value_or(0.0), &checks, &worst_z))
            c.pass = false;

        auto bayes = generalized_bayes(prob, FiniteDistribution::uniform(F));
        auto w = Luckiness::prior_ratio(FiniteDistribution::uniform(F), bayes);
        auto gexact = shtarkov_generalized(model, bayes, w);
        auto gmc = shtarkov_generalized(model, bayes, w, forced);
        if (!within_band(std::exp(gmc.log_shtarkov), std::exp(gexact.log_shtarkov),
                         gmc.std_error.value_or(0.0), &checks, &worst_z))
            c.pass = false;

        auto stmt = excess_comp_statement(prob, model, point, Luckiness::constant(1.0),
                                          exact.log_shtarkov);
        auto m_exact = esi_moment(prob, stmt);
        auto m_mc = esi_moment(prob, stmt, forced);
        if (!within_band(m_mc.value, m_exact.value, m_mc.std_error.value_or(0.0), &checks,
                         &worst_z))
            c.pass = false;

        if (F >= 2) {
            auto g = [&](std::span<const std::size_t> s) { return prob.excess_sum(1, s); };
            double e_exact = exact_expectation(prob, g);
            auto e_mc = mc_expectation(prob, g, forced.mc);
            if (!within_band(e_mc.mean, e_exact, e_mc.std_error, &checks, &worst_z))
                c.pass = false;

            std::vector<std::size_t> cell{0, 1};
            auto r_exact = rademacher(model, 0, cell, SampleMeasure::p);
            auto r_mc = rademacher(model, 0, cell, SampleMeasure::p, forced);
            if (!within_band(r_mc.mean, r_exact.mean, r_mc.std_error, &checks, &worst_z))
                c.pass = false;

            auto h_exact = h_local(model, 0, cell);
            auto h_mc = h_local(model, 0, cell, forced);
            if (!within_band(h_mc.mean, h_exact.mean, h_mc.std_error, &checks, &worst_z))
                c.pass = false;
        }
    }
    c.note = format_note("%zu paired estimates, worst |z| = %.2f", checks, worst_z);
    return c;
}

}  // namespace

int main() {
    auto probs = identity_battery();
    std::vector<Criterion> results;
    results.push_back(criterion_identity(probs));
    results.push_back(criterion_unit_bound(probs));
    results.push_back(criterion_partition(probs));
    results.push_back(criterion_esi_implications(probs));
    results.push_back(criterion_kl_renyi(probs));
    results.push_back(criterion_chain(20));
    results.push_back(criterion_equalizer(probs));
    results.push_back(criterion_rates());
    results.push_back(criterion_two_part());
    results.push_back(criterion_mc_agreement(probs));

    bool all_pass = true;
    for (const auto& c : results) {
        std::printf("[%s] %2d %s: %s\n", c.pass ? "PASS" : "FAIL", c.id, c.label.c_str(),
                    c.note.c_str());
        all_pass = all_pass && c.pass;
    }
    return all_pass ? 0 : 1;
}
