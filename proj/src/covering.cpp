#include "nmlcomp/covering.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "nmlcomp/logsum.hpp"
#include "nmlcomp/rng.hpp"
#include "nmlcomp/shtarkov.hpp"

namespace nmlcomp {

namespace {

std::vector<double> metric_masses(const EntropifiedModel& model, const Metric& metric) {
    const LearningProblem& prob = model.problem();
    switch (metric.kind) {
        case MetricKind::l2_p:
            return prob.p.masses;
        case MetricKind::l2_pn: {
            if (metric.sample.empty())
                throw MalformedSpec("empirical metric needs a nonempty sample");
            std::vector<double> m(prob.num_outcomes(), 0.0);
            for (std::size_t z : metric.sample) {
                if (z >= prob.num_outcomes()) throw IndexOutOfRange("sample outcome out of range");
                m[z] += 1.0 / static_cast<double>(metric.sample.size());
            }
            return m;
        }
        case MetricKind::l2_q:
        case MetricKind::l1_q:
            return model.q_distribution(metric.f0).masses;
    }
    throw MalformedSpec("unknown metric kind");
}

double metric_value(const LearningProblem& prob, const Metric& metric, std::size_t f,
                    std::size_t z) {
    if (metric.over == MetricOver::loss_class)
        return prob.loss_at(metric.f0, z) - prob.loss_at(f, z);
    if (prob.cls.param == Parameterization::supervised) return prob.cls.feature[f][z];
    return prob.loss_at(f, z);
}

}  // namespace

double pseudodistance(const EntropifiedModel& model, const Metric& metric, std::size_t a,
                      std::size_t b) {
    const LearningProblem& prob = model.problem();
    prob.check_predictor(a);
    prob.check_predictor(b);
    if (metric.over == MetricOver::loss_class || metric.kind == MetricKind::l2_q ||
        metric.kind == MetricKind::l1_q)
        prob.check_predictor(metric.f0);
    std::vector<double> masses = metric_masses(model, metric);
    double acc = 0.0;
    for (std::size_t z = 0; z < prob.num_outcomes(); ++z) {
        if (masses[z] <= 0.0) continue;
        double d = metric_value(prob, metric, a, z) - metric_value(prob, metric, b, z);
        if (metric.kind == MetricKind::l1_q)
            acc += masses[z] * std::fabs(d);
        else
            acc += masses[z] * d * d;
    }
    return metric.kind == MetricKind::l1_q ? acc : std::sqrt(acc);
}

std::vector<std::vector<std::size_t>> CoverResult::cells() const {
    std::vector<std::vector<std::size_t>> out(centers.size());
    for (std::size_t f = 0; f < cell_of.size(); ++f) out[cell_of[f]].push_back(f);
    return out;
}

CoverResult covering_number(const EntropifiedModel& model, const Metric& metric, double epsilon) {
    if (!(epsilon > 0.0)) throw MalformedSpec("epsilon must be positive");
    const std::size_t F = model.problem().num_predictors();

    std::vector<std::vector<double>> dist(F, std::vector<double>(F, 0.0));
    for (std::size_t a = 0; a < F; ++a)
        for (std::size_t b = a + 1; b < F; ++b)
            dist[a][b] = dist[b][a] = pseudodistance(model, metric, a, b);

    // Farthest-point traversal; the order is independent of epsilon.
    std::vector<std::size_t> order{0};
    std::vector<double> nearest(F);
    for (std::size_t f = 0; f < F; ++f) nearest[f] = dist[0][f];
    std::vector<double> radius_after;  // radius_after[k]: max distance using first k+1 centers
    while (true) {
        std::size_t far = 0;
        for (std::size_t f = 1; f < F; ++f)
            if (nearest[f] > nearest[far]) far = f;
        radius_after.push_back(nearest[far]);
        if (nearest[far] <= 0.0 || order.size() == F) break;
        order.push_back(far);
        for (std::size_t f = 0; f < F; ++f) nearest[f] = std::min(nearest[f], dist[far][f]);
    }

    std::size_t k = radius_after.size();
    for (std::size_t i = 0; i < radius_after.size(); ++i)
        if (radius_after[i] <= epsilon) {
            k = i + 1;
            break;
        }
    if (k > order.size()) k = order.size();

    CoverResult cover;
    cover.epsilon = epsilon;
    cover.centers.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    cover.cell_of.assign(F, 0);
    for (std::size_t f = 0; f < F; ++f) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < cover.centers.size(); ++c)
            if (dist[cover.centers[c]][f] < dist[cover.centers[best]][f]) best = c;
        cover.cell_of[f] = best;
    }

    if (F <= 15) {
        // Exhaustive minimum over predictor-centered balls.
        std::vector<std::uint32_t> ball(F, 0);
        for (std::size_t c = 0; c < F; ++c)
            for (std::size_t f = 0; f < F; ++f)
                if (dist[c][f] <= epsilon) ball[c] |= (1u << f);
        std::uint32_t full = (F == 32) ? 0xFFFFFFFFu : ((1u << F) - 1u);
        std::size_t best = F;
        for (std::uint32_t mask = 1; mask <= full; ++mask) {
            std::size_t count = static_cast<std::size_t>(std::popcount(mask));
            if (count >= best) continue;
            std::uint32_t covered = 0;
            for (std::size_t c = 0; c < F; ++c)
                if (mask & (1u << c)) covered |= ball[c];
            if (covered == full) best = count;
        }
        cover.exact_size = best;
    }
    return cover;
}

namespace {

// Rows of h_f = loss(f0) - loss(f) evaluated on the sample.
std::vector<std::vector<double>> h_rows(const LearningProblem& prob, std::size_t f0,
                                        std::span<const std::size_t> cell,
                                        std::span<const std::size_t> sample) {
    std::vector<std::vector<double>> rows(cell.size(), std::vector<double>(sample.size()));
    for (std::size_t i = 0; i < cell.size(); ++i)
        for (std::size_t j = 0; j < sample.size(); ++j)
            rows[i][j] = prob.loss_at(f0, sample[j]) - prob.loss_at(cell[i], sample[j]);
    return rows;
}

double sup_abs_mean(const std::vector<double>& sums, double n) {
    double best = 0.0;
    for (double s : sums) best = std::max(best, std::fabs(s));
    return best / n;
}

}  // namespace

McEstimate empirical_rademacher(const EntropifiedModel& model, std::size_t f0,
                                std::span<const std::size_t> cell,
                                std::span<const std::size_t> sample, const McConfig& mc) {
    const LearningProblem& prob = model.problem();
    prob.check_predictor(f0);
    if (cell.empty()) throw MalformedSpec("cell must be nonempty");
    for (std::size_t f : cell) prob.check_predictor(f);
    const std::size_t n = sample.size();
    if (n == 0) throw MalformedSpec("sample must be nonempty");
    auto rows = h_rows(prob, f0, cell, sample);

    McEstimate out;
    if (n <= 20) {
        // Gray-code walk over all sign vectors: one sign flip per step.
        std::vector<double> sums(cell.size(), 0.0);
        for (std::size_t i = 0; i < cell.size(); ++i)
            for (std::size_t j = 0; j < n; ++j) sums[i] -= rows[i][j];  // all signs -1
        std::vector<int> sign(n, -1);
        CompensatedSum total;
        total.add(sup_abs_mean(sums, static_cast<double>(n)));
        const std::uint64_t count = 1ull << n;
        for (std::uint64_t k = 1; k < count; ++k) {
            unsigned bit = static_cast<unsigned>(std::countr_zero(k));
            double flip = sign[bit] == -1 ? 2.0 : -2.0;
            sign[bit] = -sign[bit];
            for (std::size_t i = 0; i < cell.size(); ++i) sums[i] += flip * rows[i][bit];
            total.add(sup_abs_mean(sums, static_cast<double>(n)));
        }
        out.mean = total.total() / static_cast<double>(count);
        out.trials = count;
        out.std_error = 0.0;
        return out;
    }

    CounterRng rng(mc.seed, mc.stream_id);
    double mean = 0.0, m2 = 0.0;
    std::vector<double> sums(cell.size());
    for (std::uint64_t t = 0; t < mc.trials; ++t) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            int s = rng.next_sign();
            for (std::size_t i = 0; i < cell.size(); ++i) sums[i] += s * rows[i][j];
        }
        double v = sup_abs_mean(sums, static_cast<double>(n));
        double d = v - mean;
        mean += d / static_cast<double>(t + 1);
        m2 += d * (v - mean);
    }
    out.mean = mean;
    out.trials = mc.trials;
    out.std_error = mc.trials > 1 ? std::sqrt(m2 / (static_cast<double>(mc.trials - 1) *
                                                    static_cast<double>(mc.trials)))
                                  : 0.0;
    return out;
}

McEstimate rademacher(const EntropifiedModel& model, std::size_t f0,
                      std::span<const std::size_t> cell, SampleMeasure measure,
                      const EvalConfig& cfg) {
    const LearningProblem& prob = model.problem();
    std::vector<double> masses =
        measure == SampleMeasure::p ? prob.p.masses : model.q_distribution(f0).masses;
    auto inner = [&](std::span<const std::size_t> sample) {
        return empirical_rademacher(model, f0, cell, sample, cfg.mc).mean;
    };
    if (!cfg.force_mc && enumeration_fits(prob.num_outcomes(), prob.n, cfg.exact_cap)) {
        McEstimate out;
        out.mean = exact_expectation(masses, prob.n, inner, cfg.exact_cap);
        out.std_error = 0.0;
        out.trials = checked_power(prob.num_outcomes(), prob.n, cfg.exact_cap);
        return out;
    }
    return mc_expectation(masses, prob.n, inner, cfg.mc);
}

double t_n_value(const EntropifiedModel& model, std::size_t f0, std::span<const std::size_t> cell,
                 std::span<const std::size_t> sample) {
    const LearningProblem& prob = model.problem();
    prob.check_predictor(f0);
    if (std::find(cell.begin(), cell.end(), f0) == cell.end())
        throw AssumptionViolated("the anchor f0 must belong to its cell");
    FiniteDistribution q = model.q_distribution(f0);
    double best = kNegInf;
    for (std::size_t f : cell) {
        prob.check_predictor(f);
        double emp = 0.0;
        for (std::size_t z : sample) emp += prob.loss_at(f0, z) - prob.loss_at(f, z);
        double mean = 0.0;
        for (std::size_t z = 0; z < prob.num_outcomes(); ++z)
            mean += q.masses[z] * (prob.loss_at(f0, z) - prob.loss_at(f, z));
        best = std::max(best, emp - static_cast<double>(sample.size()) * mean);
    }
    return best;
}

McEstimate h_local(const EntropifiedModel& model, std::size_t f0,
                   std::span<const std::size_t> cell, const EvalConfig& cfg) {
    const LearningProblem& prob = model.problem();
    FiniteDistribution q = model.q_distribution(f0);
    auto g = [&](std::span<const std::size_t> sample) {
        return t_n_value(model, f0, cell, sample);
    };
    if (!cfg.force_mc && enumeration_fits(prob.num_outcomes(), prob.n, cfg.exact_cap)) {
        McEstimate out;
        out.mean = exact_expectation(q.masses, prob.n, g, cfg.exact_cap);
        out.std_error = 0.0;
        out.trials = checked_power(prob.num_outcomes(), prob.n, cfg.exact_cap);
        return out;
    }
    return mc_expectation(q.masses, prob.n, g, cfg.mc);
}

VerificationResult verify_opper_haussler(const EntropifiedModel& model, std::size_t f0,
                                         std::span<const std::size_t> cell,
                                         std::uint64_t exact_cap) {
    const LearningProblem& prob = model.problem();
    const double eta = model.eta();
    ComplexityReport comp_cell = comp_max(model, cell, exact_cap);
    FiniteDistribution q = model.q_distribution(f0);
    double log_moment = exact_log_expectation(
        q.masses, prob.n,
        [&](std::span<const std::size_t> sample) {
            return eta * t_n_value(model, f0, cell, sample);
        },
        exact_cap);
    double rhs = log_moment / eta;
    VerificationResult res =
        VerificationResult::inequality("opper-haussler", comp_cell.comp, rhs, 1e-10);
    res.details = {{"f0", f0}, {"cell_size", cell.size()}, {"log_moment", log_moment}};
    return res;
}

namespace {

double cell_diameter_l2p(const EntropifiedModel& model, std::span<const std::size_t> cell) {
    Metric m;  // L2(P) over predictor representations
    double d = 0.0;
    for (std::size_t i = 0; i < cell.size(); ++i)
        for (std::size_t j = i + 1; j < cell.size(); ++j)
            d = std::max(d, pseudodistance(model, m, cell[i], cell[j]));
    return d;
}

}  // namespace

VerificationResult verify_talagrand_moment(const EntropifiedModel& model, std::size_t f0,
                                           std::span<const std::size_t> cell, double sigma,
                                           std::uint64_t exact_cap) {
    const LearningProblem& prob = model.problem();
    const double eta = model.eta();
    if (eta > 1.0 + 1e-12)
        throw AssumptionViolated("the moment bound requires eta <= 1");
    const double L = prob.cls.lipschitz;
    double diameter = cell_diameter_l2p(model, cell);
    if (std::exp(1.0) * L * diameter > sigma + 1e-12) {
        std::ostringstream os;
        os << "cell L2(P) diameter " << diameter << " exceeds sigma/(e L) = "
           << sigma / (std::exp(1.0) * L);
        throw DiameterViolated(os.str());
    }

    FiniteDistribution q = model.q_distribution(f0);
    auto tn = [&](std::span<const std::size_t> sample) {
        return t_n_value(model, f0, cell, sample);
    };
    double log_moment = exact_log_expectation(
        q.masses, prob.n,
        [&](std::span<const std::size_t> sample) { return eta * tn(sample); }, exact_cap);
    double mean_tn = exact_expectation(q.masses, prob.n, tn, exact_cap);
    double n = static_cast<double>(prob.n);
    double rhs = 3.0 * eta * mean_tn + n * eta * eta * sigma * sigma;
    VerificationResult res =
        VerificationResult::inequality("talagrand-moment", log_moment, rhs, 1e-10);
    res.details = {{"f0", f0},
                   {"sigma", sigma},
                   {"diameter", diameter},
                   {"mean_tn", mean_tn}};
    return res;
}

VerificationResult symmetrization_check(const EntropifiedModel& model, std::size_t f0,
                                        std::span<const std::size_t> cell,
                                        std::uint64_t exact_cap) {
    EvalConfig cfg;
    cfg.exact_cap = exact_cap;
    double h = h_local(model, f0, cell, cfg).mean;
    double rad = rademacher(model, f0, cell, SampleMeasure::q_f0, cfg).mean;
    double n = static_cast<double>(model.problem().n);
    VerificationResult res =
        VerificationResult::inequality("symmetrization", h, 2.0 * n * rad, 1e-10);
    res.details = {{"f0", f0}, {"h_local", h}, {"rademacher", rad}};
    return res;
}

VerificationResult sigma_lemma_check(const EntropifiedModel& model) {
    const LearningProblem& prob = model.problem();
    if (model.eta() > 1.0 + 1e-12)
        throw AssumptionViolated("the density-ratio factor e requires eta <= 1");
    const double factor =
        std::exp(1.0) *
        (prob.cls.param == Parameterization::supervised ? prob.cls.lipschitz : 1.0);
    double min_slack = kPosInf;
    double worst_lhs = 0.0, worst_rhs = 0.0;
    nlohmann::json worst = nlohmann::json::object();
    for (std::size_t f0 = 0; f0 < prob.num_predictors(); ++f0) {
        Metric lhs_m{MetricKind::l2_q, MetricOver::loss_class, f0, {}};
        Metric rhs_m;  // L2(P) over predictor representations
        for (std::size_t a = 0; a < prob.num_predictors(); ++a)
            for (std::size_t b = a + 1; b < prob.num_predictors(); ++b) {
                double lhs = pseudodistance(model, lhs_m, a, b);
                double rhs = factor * pseudodistance(model, rhs_m, a, b);
                if (rhs - lhs < min_slack) {
                    min_slack = rhs - lhs;
                    worst_lhs = lhs;
                    worst_rhs = rhs;
                    worst = {{"f0", f0}, {"a", a}, {"b", b}};
                }
            }
    }
    VerificationResult res =
        VerificationResult::inequality("sigma-lemma", worst_lhs, worst_rhs, 1e-10);
    res.slack = min_slack;
    res.pass = min_slack >= -res.tolerance;
    res.details = {{"factor", factor}, {"worst", worst}};
    return res;
}

OhtReport verify_oht(const EntropifiedModel& model, double epsilon, std::uint64_t exact_cap) {
    const LearningProblem& prob = model.problem();
    const double eta = model.eta();
    if (eta > 1.0 + 1e-12)
        throw AssumptionViolated("the chain requires eta <= 1");
    if (!(epsilon > 0.0)) throw MalformedSpec("epsilon must be positive");

    OhtReport rep;
    Metric pred_metric;  // L2(P) over predictor representations
    rep.cover = covering_number(model, pred_metric, epsilon / 2.0);
    auto cells = rep.cover.cells();

    const double L = prob.cls.lipschitz;
    const double n = static_cast<double>(prob.n);
    double comp_all = comp_max(model, {}, exact_cap).comp;
    double log_n_eta = std::log(static_cast<double>(rep.cover.centers.size())) / eta;

    EvalConfig cfg;
    cfg.exact_cap = exact_cap;
    double worst_local = kNegInf, worst_rad = kNegInf;
    rep.cells = nlohmann::json::array();
    for (std::size_t k = 0; k < cells.size(); ++k) {
        std::size_t f_k = rep.cover.centers[k];
        double diameter = cell_diameter_l2p(model, cells[k]);
        double sigma = std::exp(1.0) * L * diameter;
        double h_k = h_local(model, f_k, cells[k], cfg).mean;
        double r_k = rademacher(model, f_k, cells[k], SampleMeasure::q_f0, cfg).mean;
        double local = 3.0 * h_k + eta * n * sigma * sigma;
        double rad = 6.0 * n * r_k + eta * n * sigma * sigma;
        worst_local = std::max(worst_local, local);
        worst_rad = std::max(worst_rad, rad);
        rep.cells.push_back({{"center", f_k},
                             {"size", cells[k].size()},
                             {"nominal_diameter", epsilon},
                             {"measured_diameter", diameter},
                             {"sigma", sigma},
                             {"h_local", h_k},
                             {"rademacher", r_k}});
    }

    rep.local_form =
        VerificationResult::inequality("oht-local", comp_all, log_n_eta + worst_local, 1e-10);
    rep.local_form.details = {{"epsilon", epsilon}, {"cover_size", rep.cover.centers.size()}};
    rep.rademacher_form =
        VerificationResult::inequality("oht-rademacher", comp_all, log_n_eta + worst_rad, 1e-10);
    rep.rademacher_form.details = {{"epsilon", epsilon},
                                   {"cover_size", rep.cover.centers.size()}};
    return rep;
}

VerificationResult extended_haussler_check(const EntropifiedModel& model, double epsilon,
                                           std::size_t sample_budget, std::uint64_t seed) {
    const LearningProblem& prob = model.problem();
    const std::size_t F = prob.num_predictors();
    if (F > 15)
        throw AssumptionViolated("exact covering search is limited to 15 predictors");
    if (!(epsilon > 0.0)) throw MalformedSpec("epsilon must be positive");

    Metric pop;  // L2(P) over predictors
    std::size_t lhs = *covering_number(model, pop, epsilon).exact_size;

    auto empirical_cover = [&](std::vector<std::size_t> pts) {
        Metric m{MetricKind::l2_pn, MetricOver::predictors, 0, std::move(pts)};
        return *covering_number(model, m, epsilon / 2.0).exact_size;
    };

    std::size_t best_rhs = 0;
    // All singletons, then the full-support multiset.
    for (std::size_t z = 0; z < prob.num_outcomes(); ++z)
        best_rhs = std::max(best_rhs, empirical_cover({z}));
    {
        std::vector<std::size_t> all(prob.num_outcomes());
        for (std::size_t z = 0; z < all.size(); ++z) all[z] = z;
        best_rhs = std::max(best_rhs, empirical_cover(std::move(all)));
    }
    // Seeded random multisets drawn from P, sizes cycling upward.
    CounterRng rng(seed, 0);
    std::vector<double> cdf = cumulative(prob.p.masses);
    const std::size_t sizes[] = {2, 4, 8, 16, 32};
    for (std::size_t i = 0; i < sample_budget && lhs > best_rhs; ++i) {
        std::size_t len = sizes[i % 5];
        std::vector<std::size_t> pts(len);
        for (auto& z : pts) z = rng.next_categorical(cdf);
        best_rhs = std::max(best_rhs, empirical_cover(std::move(pts)));
    }

    VerificationResult res = VerificationResult::inequality(
        "extended-haussler", static_cast<double>(lhs), static_cast<double>(best_rhs), 0.0);
    res.details = {{"epsilon", epsilon}, {"budget", sample_budget}};
    if (!res.pass) res.details["status"] = "InconclusiveBudget";
    return res;
}

}  // namespace nmlcomp
