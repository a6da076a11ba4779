// Command line front end: complexity reports, two-part selection, statement
// verification, regret equalization and rate experiments on problem files.
//
// Exit codes: 0 success (all requested checks pass), 1 a check ran and
// failed, 3 bad input or violated precondition.  CLI11 usage errors keep
// their own codes.

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nmlcomp/covering.hpp"
#include "nmlcomp/entropify.hpp"
#include "nmlcomp/errors.hpp"
#include "nmlcomp/esi.hpp"
#include "nmlcomp/harness.hpp"
#include "nmlcomp/problem.hpp"
#include "nmlcomp/shtarkov.hpp"

namespace {

using nlohmann::json;
using namespace nmlcomp;

struct GlobalOpts {
    std::string problem_path;
    std::uint64_t seed = 1;
    std::uint64_t exact_cap = 10'000'000;
    std::uint64_t mc_trials = 20000;
    std::string out = "json";
    bool allow_unscaled = false;
    bool force_mc = false;

    EvalConfig eval() const {
        EvalConfig cfg;
        cfg.exact_cap = exact_cap;
        cfg.mc.trials = mc_trials;
        cfg.mc.seed = seed;
        cfg.force_mc = force_mc;
        return cfg;
    }
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedSpec("cannot open " + path);
    try {
        json doc;
        in >> doc;
        return doc;
    } catch (const json::exception& e) {
        throw MalformedSpec("invalid JSON in " + path + ": " + e.what());
    }
}

template <typename T>
T json_field(const json& doc, const char* key, const std::string& path) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception& e) {
        throw MalformedSpec(path + ": missing or malformed \"" + key + "\": " + e.what());
    }
}

std::vector<std::size_t> parse_sample(const std::string& text, const LearningProblem& prob) {
    std::vector<std::size_t> sample;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            sample.push_back(std::stoul(tok));
        } catch (const std::exception&) {
            throw MalformedSpec("sample entries must be outcome indices, got \"" + tok + "\"");
        }
    }
    if (sample.size() != static_cast<std::size_t>(prob.n))
        throw MalformedSpec("sample length must equal n = " + std::to_string(prob.n));
    for (std::size_t z : sample)
        if (z >= prob.num_outcomes()) throw MalformedSpec("sample outcome index out of range");
    return sample;
}

std::vector<std::size_t> parse_index_list(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stoul(tok));
        } catch (const std::exception&) {
            throw MalformedSpec("expected a comma separated index list, got \"" + tok + "\"");
        }
    }
    if (out.empty()) throw MalformedSpec("expected a nonempty comma separated index list");
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw MalformedSpec("expected a comma separated number list, got \"" + tok + "\"");
        }
    }
    if (out.empty()) throw MalformedSpec("expected a nonempty comma separated number list");
    return out;
}

// Estimator specs: erm | bayes | bayes:<prior.json> | penalized:<gamma.json>
// | dirac:<index>.
Estimator make_estimator(const LearningProblem& prob, const std::string& spec) {
    auto colon = spec.find(':');
    std::string head = spec.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);

    if (head == "erm") return erm(prob);
    if (head == "bayes") {
        if (arg.empty()) return generalized_bayes(prob, FiniteDistribution::uniform(prob.num_predictors()));
        auto doc = read_json_file(arg);
        auto pi = json_field<std::vector<double>>(doc, "pi", arg);
        return generalized_bayes(prob, FiniteDistribution::normalized(std::move(pi)));
    }
    if (head == "penalized") {
        if (arg.empty()) throw MalformedSpec("penalized estimator needs penalized:<gamma.json>");
        auto doc = read_json_file(arg);
        return penalized_erm(prob, json_field<std::vector<double>>(doc, "gamma", arg));
    }
    if (head == "dirac") {
        try {
            return dirac(prob, std::stoul(arg));
        } catch (const std::exception&) {
            throw MalformedSpec("dirac estimator needs dirac:<index>");
        }
    }
    throw MalformedSpec("unknown estimator \"" + spec + "\"");
}

// Luckiness specs: const | const:<value> | prior-ratio | prior-ratio:<pi.json>
// | penalty:<gamma.json> | composite:<blocks.json>.
Luckiness make_luckiness(const LearningProblem& prob, const Estimator& est,
                         const std::string& spec) {
    auto colon = spec.find(':');
    std::string head = spec.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    const std::size_t F = prob.num_predictors();

    if (head == "const") {
        if (arg.empty()) return Luckiness::constant(1.0);
        try {
            return Luckiness::constant(std::stod(arg));
        } catch (const std::exception&) {
            throw MalformedSpec("const luckiness needs const:<value>");
        }
    }
    if (head == "prior-ratio") {
        FiniteDistribution prior;
        if (!arg.empty()) {
            auto doc = read_json_file(arg);
            prior = FiniteDistribution::normalized(json_field<std::vector<double>>(doc, "pi", arg));
        } else if (!est.bayes_prior.empty()) {
            prior.masses = est.bayes_prior;
        } else {
            prior = FiniteDistribution::uniform(F);
        }
        return Luckiness::prior_ratio(std::move(prior), est);
    }
    if (head == "penalty") {
        if (arg.empty()) throw MalformedSpec("penalty luckiness needs penalty:<gamma.json>");
        auto doc = read_json_file(arg);
        return Luckiness::penalty(json_field<std::vector<double>>(doc, "gamma", arg), est);
    }
    if (head == "composite") {
        if (arg.empty()) throw MalformedSpec("composite luckiness needs composite:<blocks.json>");
        auto doc = read_json_file(arg);
        auto part = parse_partition(doc, F);
        auto pi = FiniteDistribution::normalized(json_field<std::vector<double>>(doc, "pi", arg));
        std::vector<Luckiness> block_w(part.num_blocks(), Luckiness::constant(1.0));
        return Luckiness::composite(std::move(part), std::move(pi), std::move(block_w), est);
    }
    throw MalformedSpec("unknown luckiness \"" + spec + "\"");
}

void print_complexity(const ComplexityReport& rep, const std::string& out) {
    if (out == "csv") {
        std::cout << "variant,method,log_shtarkov,comp,comp_full,std_error,states\n";
        std::cout << rep.variant << ',' << rep.method << ',';
        std::cout.precision(17);
        std::cout << rep.log_shtarkov << ',' << rep.comp << ',';
        if (rep.comp_full) std::cout << *rep.comp_full;
        std::cout << ',';
        if (rep.std_error) std::cout << *rep.std_error;
        std::cout << ',' << rep.states << '\n';
    } else {
        std::cout << rep.to_json().dump(2) << '\n';
    }
}

struct CompOpts {
    std::string estimator = "erm";
    std::string luckiness = "const";
    std::string mode = "simple";
    std::string sample;
};

int cmd_comp(const GlobalOpts& g, const CompOpts& o) {
    auto prob = load_problem(g.problem_path, {g.allow_unscaled});
    EntropifiedModel model(prob);
    auto est = make_estimator(prob, o.estimator);
    auto w = make_luckiness(prob, est, o.luckiness);
    auto cfg = g.eval();

    if (o.mode == "simple") {
        print_complexity(shtarkov_simple(model, est, cfg), g.out);
    } else if (o.mode == "max") {
        print_complexity(comp_max(model, {}, g.exact_cap), g.out);
    } else if (o.mode == "luckiness") {
        print_complexity(shtarkov_luckiness(model, est, w, cfg), g.out);
    } else if (o.mode == "generalized") {
        print_complexity(shtarkov_generalized(model, est, w, cfg), g.out);
    } else {  // full
        if (o.sample.empty()) throw MalformedSpec("--mode full requires --sample");
        auto sample = parse_sample(o.sample, prob);
        double value = comp_full(model, est, w, sample, cfg);
        if (g.out == "csv") {
            std::cout << "variant,method,log_shtarkov,comp,comp_full,std_error,states\n";
            std::cout.precision(17);
            std::cout << "full,exact,,," << value << ",,0\n";
        } else {
            json doc{{"variant", "full"}, {"comp_full", value}, {"sample", sample}};
            std::cout << doc.dump(2) << '\n';
        }
    }
    return 0;
}

struct SelectOpts {
    std::string partition_path;
    std::string prior_path;
    std::string bounds = "exact";
    std::string sample;
    std::optional<double> eta;
    std::string eta_grid;
};

int cmd_select(const GlobalOpts& g, const SelectOpts& o) {
    auto prob = load_problem(g.problem_path, {g.allow_unscaled});
    auto part = parse_partition(read_json_file(o.partition_path), prob.num_predictors());
    auto pi_doc = read_json_file(o.prior_path);
    auto pi = FiniteDistribution::normalized(
        json_field<std::vector<double>>(pi_doc, "pi", o.prior_path));
    if (pi.size() != part.num_blocks())
        throw MalformedSpec("block prior size must match the number of blocks");
    auto sample = parse_sample(o.sample, prob);

    auto bounds_at = [&](double eta) {
        std::vector<double> bounds;
        if (o.bounds == "exact") {
            EntropifiedModel model(prob, eta);
            for (const auto& block : part.blocks)
                bounds.push_back(comp_max(model, std::span<const std::size_t>(block),
                                          g.exact_cap).comp);
        } else {
            auto doc = read_json_file(o.bounds);
            bounds = json_field<std::vector<double>>(doc, "bounds", o.bounds);
        }
        return bounds;
    };

    double eta_used = o.eta.value_or(prob.eta);
    if (!o.eta_grid.empty()) {
        auto grid = parse_double_list(o.eta_grid);
        McConfig mc;
        mc.trials = g.mc_trials;
        mc.seed = g.seed;
        eta_used = eta_grid_select(
            prob, [&](double e) { return two_part_mdl(prob, part, pi, bounds_at(e), e); }, grid,
            mc);
    }

    auto bounds = bounds_at(eta_used);
    auto est = two_part_mdl(prob, part, pi, bounds, eta_used);
    std::size_t f = est.map(sample);
    json doc{{"predictor", f},
             {"block", part.block_of[f]},
             {"eta", eta_used},
             {"comp_bounds", bounds},
             {"sample", sample}};
    std::cout << doc.dump(2) << '\n';
    return 0;
}

struct VerifyOpts {
    std::string check = "all";
    std::string estimator = "erm";
    std::string luckiness = "const";
    std::optional<double> gamma;
    std::optional<double> epsilon;
    std::optional<double> sigma;
    std::string cell;
    std::size_t budget = 200;
};

double second_excess_moment(const LearningProblem& prob, std::size_t f) {
    double m2 = 0.0;
    for (std::size_t z = 0; z < prob.num_outcomes(); ++z)
        m2 += prob.p.mass(z) * prob.excess_at(f, z) * prob.excess_at(f, z);
    return m2;
}

VerificationResult bernstein_fit_result(const LearningProblem& prob, double beta) {
    auto fit = fit_bernstein(prob, beta);
    VerificationResult res;
    res.name = "bernstein-fit";
    if (fit.unsatisfiable) {
        std::size_t f = *fit.offender;
        res.lhs = second_excess_moment(prob, f);
        res.rhs = 0.0;
        res.slack = -res.lhs;
        res.pass = false;
        res.details = {{"beta", beta}, {"unsatisfiable", true}, {"offender", f}};
        return res;
    }
    double worst = std::numeric_limits<double>::infinity();
    std::size_t arg = prob.fstar;
    for (std::size_t f = 0; f < prob.num_predictors(); ++f) {
        if (f == prob.fstar) continue;
        double slack = fit.B * std::pow(prob.excess_risk(f), beta) - second_excess_moment(prob, f);
        if (slack < worst) {
            worst = slack;
            arg = f;
        }
    }
    res = VerificationResult::inequality("bernstein-fit", second_excess_moment(prob, arg),
                                         fit.B * std::pow(prob.excess_risk(arg), beta), 1e-12);
    res.details = {{"beta", beta}, {"B", fit.B}, {"worst_predictor", arg}};
    return res;
}

// Largest beta on the standard grid whose fit exists.
BernsteinFit best_bernstein(const LearningProblem& prob, double& beta_out) {
    for (double beta : {1.0, 0.5, 0.0}) {
        auto fit = fit_bernstein(prob, beta);
        if (!fit.unsatisfiable) {
            beta_out = beta;
            return fit;
        }
    }
    throw AssumptionViolated("no Bernstein condition holds, not even beta = 0");
}

EsiStatement excess_comp_statement(const LearningProblem& prob, const EntropifiedModel& model,
                                   const Estimator& est, const Luckiness& w, double log_shtarkov) {
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

int cmd_verify(const GlobalOpts& g, const VerifyOpts& o) {
    auto prob = load_problem(g.problem_path, {g.allow_unscaled});
    EntropifiedModel model(prob);
    auto est = make_estimator(prob, o.estimator);
    auto w = make_luckiness(prob, est, o.luckiness);

    auto cell_of = [&]() {
        if (o.cell.empty()) throw MalformedSpec("--check " + o.check + " requires --cell");
        auto cell = parse_index_list(o.cell);
        for (std::size_t f : cell) prob.check_predictor(f);
        return cell;
    };
    auto epsilon_of = [&]() {
        if (!o.epsilon) throw MalformedSpec("--check " + o.check + " requires --epsilon");
        return *o.epsilon;
    };

    std::vector<VerificationResult> results;
    auto statement_checks = [&](const std::string& which) {
        if (which == "theorem1" || which == "all")
            results.push_back(theorem1_identity(prob, est, w, g.exact_cap));
        if (which == "esi" || which == "all") {
            auto rep = shtarkov_generalized(model, est, w, EvalConfig{g.exact_cap});
            auto stmt = excess_comp_statement(prob, model, est, w, rep.log_shtarkov);
            results.push_back(esi_implications_check(prob, stmt, g.exact_cap));
        }
        if (which == "bernstein" || which == "all")
            for (double beta : {1.0, 0.5, 0.0})
                results.push_back(bernstein_fit_result(prob, beta));
        if (which == "vcentral" || which == "all") {
            double beta = 0.0;
            auto v = VFunction::from_bernstein(best_bernstein(prob, beta));
            auto grid = default_gamma_grid();
            results.push_back(v_central_check(prob, v, grid));
        }
        if (which == "klrenyi" || which == "all") {
            double beta = 0.0;
            auto v = VFunction::from_bernstein(best_bernstein(prob, beta));
            for (std::size_t f = 0; f < prob.num_predictors(); ++f)
                for (double gamma : default_gamma_grid())
                    results.push_back(kl_renyi_check(prob, f, gamma, v));
        }
        if (which == "riskbound" || which == "all") {
            double beta = 0.0;
            auto v = VFunction::from_bernstein(best_bernstein(prob, beta));
            double gamma =
                o.gamma.value_or(std::pow(static_cast<double>(prob.n), -1.0 / (2.0 - beta)));
            auto rb = risk_bound_eval(prob, est, w, gamma, v, g.eval());
            auto res = rb.esi;
            res.details["gamma"] = rb.gamma;
            res.details["eta_used"] = rb.eta_used;
            res.details["esi_rate"] = rb.esi_rate;
            results.push_back(std::move(res));
        }
    };

    if (o.check == "all" || o.check == "theorem1" || o.check == "esi" || o.check == "bernstein" ||
        o.check == "vcentral" || o.check == "klrenyi" || o.check == "riskbound") {
        statement_checks(o.check);
    } else if (o.check == "oht") {
        auto rep = verify_oht(model, epsilon_of(), g.exact_cap);
        rep.local_form.details["cells"] = rep.cells;
        results.push_back(rep.local_form);
        results.push_back(rep.rademacher_form);
    } else if (o.check == "opperhaussler") {
        auto cell = cell_of();
        results.push_back(verify_opper_haussler(model, cell.front(), cell, g.exact_cap));
    } else if (o.check == "talagrand") {
        auto cell = cell_of();
        double sigma;
        if (o.sigma) {
            sigma = *o.sigma;
        } else {
            Metric metric;
            double diam = 0.0;
            for (std::size_t a : cell)
                for (std::size_t b : cell)
                    diam = std::max(diam, pseudodistance(model, metric, a, b));
            double lip =
                prob.cls.param == Parameterization::supervised ? prob.cls.lipschitz : 1.0;
            sigma = std::exp(1.0) * lip * diam;
        }
        results.push_back(
            verify_talagrand_moment(model, cell.front(), cell, sigma, g.exact_cap));
    } else if (o.check == "symmetrization") {
        auto cell = cell_of();
        results.push_back(symmetrization_check(model, cell.front(), cell, g.exact_cap));
    } else if (o.check == "sigma") {
        results.push_back(sigma_lemma_check(model));
    } else if (o.check == "haussler") {
        results.push_back(extended_haussler_check(model, epsilon_of(), o.budget, g.seed));
    } else {
        throw MalformedSpec("unknown check \"" + o.check + "\"");
    }

    bool all_pass = true;
    if (g.out == "csv") {
        std::cout << VerificationResult::csv_header() << '\n';
        for (const auto& res : results) {
            std::cout << res.csv_row() << '\n';
            all_pass = all_pass && res.pass;
        }
    } else {
        json arr = json::array();
        for (const auto& res : results) {
            arr.push_back(res.to_json());
            all_pass = all_pass && res.pass;
        }
        std::cout << arr.dump(2) << '\n';
    }
    return all_pass ? 0 : 1;
}

struct EqualizerOpts {
    std::string estimator = "erm";
    std::string luckiness = "const";
    std::string gamma_path;
};

int cmd_equalizer(const GlobalOpts& g, const EqualizerOpts& o) {
    auto prob = load_problem(g.problem_path, {g.allow_unscaled});
    auto est = make_estimator(prob, o.estimator);
    auto w = make_luckiness(prob, est, o.luckiness);
    std::vector<double> gamma;
    if (!o.gamma_path.empty()) {
        auto doc = read_json_file(o.gamma_path);
        gamma = json_field<std::vector<double>>(doc, "gamma", o.gamma_path);
    }
    auto rep = equalizer_experiment(prob, est, w, gamma, g.exact_cap);
    std::cout << rep.to_json().dump(2) << '\n';
    bool ok = rep.pass && (gamma.empty() || rep.hindsight_pass);
    return ok ? 0 : 1;
}

struct RatesOpts {
    std::string family = "random";
    std::string estimator = "erm";
    std::string ns = "16,32,64,128";
    std::size_t outcomes = 3;
    std::size_t predictors = 3;
    bool log_loss_correct = false;
    std::size_t grid_points = 8;
    double margin = 0.0;
    std::string block_sizes = "1,3";
    double eta = 0.5;
};

GeneratorSpec generator_from(const GlobalOpts& g, const RatesOpts& o) {
    GeneratorSpec spec;
    if (o.family == "random") {
        spec.family = Family::random_finite;
    } else if (o.family == "threshold") {
        spec.family = Family::threshold_grid;
    } else if (o.family == "nested") {
        spec.family = Family::nested_blocks;
    } else {
        throw MalformedSpec("unknown family \"" + o.family + "\"");
    }
    spec.seed = g.seed;
    spec.eta = o.eta;
    spec.num_outcomes = o.outcomes;
    spec.num_predictors = o.predictors;
    spec.log_loss_correct = o.log_loss_correct;
    spec.grid_points = o.grid_points;
    spec.margin = o.margin;
    spec.block_sizes = parse_index_list(o.block_sizes);
    return spec;
}

int cmd_rates(const GlobalOpts& g, const RatesOpts& o) {
    auto spec = generator_from(g, o);
    RateEstimator kind;
    if (o.estimator == "erm") {
        kind = RateEstimator::erm;
    } else if (o.estimator == "fstar") {
        kind = RateEstimator::dirac_fstar;
    } else if (o.estimator == "bayes") {
        kind = RateEstimator::gen_bayes;
    } else {
        throw MalformedSpec("unknown rate estimator \"" + o.estimator + "\"");
    }
    auto ns = parse_index_list(o.ns);
    McConfig mc;
    mc.trials = g.mc_trials;
    mc.seed = g.seed;
    auto report = rate_experiment(spec, kind, ns, {}, mc, g.exact_cap);
    if (g.out == "csv")
        rate_csv(std::cout, report, o.estimator);
    else
        std::cout << report.to_json().dump(2) << '\n';
    return report.pass ? 0 : 1;
}

struct MdlOpts {
    std::string block_sizes = "1,3";
    std::string prior_path;
    std::string ns = "2,3,4";
    std::size_t outcomes = 2;
    double eta = 0.5;
};

int cmd_mdl(const GlobalOpts& g, const MdlOpts& o) {
    GeneratorSpec spec;
    spec.family = Family::nested_blocks;
    spec.seed = g.seed;
    spec.eta = o.eta;
    spec.num_outcomes = o.outcomes;
    spec.block_sizes = parse_index_list(o.block_sizes);

    FiniteDistribution pi;
    if (o.prior_path.empty()) {
        pi = FiniteDistribution::uniform(spec.block_sizes.size());
    } else {
        auto doc = read_json_file(o.prior_path);
        pi = FiniteDistribution::normalized(
            json_field<std::vector<double>>(doc, "pi", o.prior_path));
    }
    auto ns = parse_index_list(o.ns);
    auto report = model_select_experiment(spec, pi, {}, ns, g.exact_cap);
    if (g.out == "csv")
        model_select_csv(std::cout, report);
    else
        std::cout << report.to_json().dump(2) << '\n';
    return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complexity measures and certification checks for finite learning problems"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--problem", g.problem_path, "Problem description JSON file");
    app.add_option("--seed", g.seed, "Seed for every randomized path")->capture_default_str();
    app.add_option("--exact-cap", g.exact_cap, "Largest |Z|^n enumerated exactly")
        ->capture_default_str();
    app.add_option("--mc-trials", g.mc_trials, "Monte Carlo trials when enumeration is skipped")
        ->capture_default_str();
    app.add_option("--out", g.out, "Output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    app.add_flag("--allow-unscaled", g.allow_unscaled,
                 "Rescale out-of-range loss tables instead of rejecting them");
    app.add_flag("--force-mc", g.force_mc, "Skip exact enumeration even when it fits the cap");

    CompOpts comp_o;
    auto* comp = app.add_subcommand("comp", "Complexity of a problem under an estimator");
    comp->add_option("--estimator", comp_o.estimator,
                     "erm | bayes[:<pi.json>] | penalized:<gamma.json> | dirac:<i>")
        ->capture_default_str();
    comp->add_option("--luckiness", comp_o.luckiness,
                     "const[:<v>] | prior-ratio[:<pi.json>] | penalty:<gamma.json> | "
                     "composite:<blocks.json>")
        ->capture_default_str();
    comp->add_option("--mode", comp_o.mode, "Which complexity to compute")
        ->check(CLI::IsMember({"simple", "max", "luckiness", "generalized", "full"}))
        ->capture_default_str();
    comp->add_option("--sample", comp_o.sample, "Comma separated outcome indices, length n");

    SelectOpts sel_o;
    auto* sel = app.add_subcommand("select", "Two-part model selection on one sample");
    sel->add_option("--partition", sel_o.partition_path, "Blocks JSON file")->required();
    sel->add_option("--prior", sel_o.prior_path, "Block prior JSON file")->required();
    sel->add_option("--bounds", sel_o.bounds, "exact or a bounds JSON file")
        ->capture_default_str();
    sel->add_option("--sample", sel_o.sample, "Comma separated outcome indices, length n")
        ->required();
    sel->add_option("--eta", sel_o.eta, "Learning rate override");
    sel->add_option("--eta-grid", sel_o.eta_grid, "Comma separated grid for held-out selection");

    VerifyOpts ver_o;
    auto* ver = app.add_subcommand("verify", "Certify identities and bounds on a problem");
    ver->add_option("--check", ver_o.check,
                    "theorem1 | esi | bernstein | vcentral | klrenyi | riskbound | all | oht | "
                    "opperhaussler | talagrand | symmetrization | sigma | haussler")
        ->capture_default_str();
    ver->add_option("--estimator", ver_o.estimator, "As in comp")->capture_default_str();
    ver->add_option("--luckiness", ver_o.luckiness, "As in comp")->capture_default_str();
    ver->add_option("--gamma", ver_o.gamma, "Slack level for riskbound");
    ver->add_option("--epsilon", ver_o.epsilon, "Cover radius for oht and haussler");
    ver->add_option("--sigma", ver_o.sigma, "Scale for talagrand; default e L diameter");
    ver->add_option("--cell", ver_o.cell, "Comma separated predictor cell, first entry anchors");
    ver->add_option("--budget", ver_o.budget, "Candidate sets for haussler")
        ->capture_default_str();

    EqualizerOpts eq_o;
    auto* eq = app.add_subcommand("equalizer", "Regret spread of the normalized strategy");
    eq->add_option("--estimator", eq_o.estimator, "As in comp")->capture_default_str();
    eq->add_option("--luckiness", eq_o.luckiness, "As in comp")->capture_default_str();
    eq->add_option("--gamma", eq_o.gamma_path, "Penalty JSON for the hindsight comparison");

    RatesOpts rates_o;
    auto* rates = app.add_subcommand("rates", "Excess risk rates over generated problems");
    rates->add_option("--family", rates_o.family, "random | threshold | nested")
        ->capture_default_str();
    rates->add_option("--rate-estimator", rates_o.estimator, "erm | fstar | bayes")
        ->capture_default_str();
    rates->add_option("--ns", rates_o.ns, "Comma separated sample sizes, increasing, at least 4")
        ->capture_default_str();
    rates->add_option("--outcomes", rates_o.outcomes, "Outcomes for the random family")
        ->capture_default_str();
    rates->add_option("--predictors", rates_o.predictors, "Predictors for the random family")
        ->capture_default_str();
    rates->add_flag("--log-loss-correct", rates_o.log_loss_correct,
                    "Random family drawn as a correct log-loss model");
    rates->add_option("--grid-points", rates_o.grid_points, "Grid size for the threshold family")
        ->capture_default_str();
    rates->add_option("--margin", rates_o.margin, "Threshold margin in [0, 1]")
        ->capture_default_str();
    rates->add_option("--block-sizes", rates_o.block_sizes, "Blocks for the nested family")
        ->capture_default_str();
    rates->add_option("--eta", rates_o.eta, "Learning rate for generated problems")
        ->capture_default_str();

    MdlOpts mdl_o;
    auto* mdl = app.add_subcommand("mdl", "Two-part selection against block ERM over n");
    mdl->add_option("--block-sizes", mdl_o.block_sizes, "Nested block sizes")
        ->capture_default_str();
    mdl->add_option("--prior", mdl_o.prior_path, "Block prior JSON file; default uniform");
    mdl->add_option("--ns", mdl_o.ns, "Comma separated sample sizes")->capture_default_str();
    mdl->add_option("--outcomes", mdl_o.outcomes, "Outcome count")->capture_default_str();
    mdl->add_option("--eta", mdl_o.eta, "Learning rate")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (comp->parsed()) return cmd_comp(g, comp_o);
        if (sel->parsed()) return cmd_select(g, sel_o);
        if (ver->parsed()) return cmd_verify(g, ver_o);
        if (eq->parsed()) return cmd_equalizer(g, eq_o);
        if (rates->parsed()) return cmd_rates(g, rates_o);
        if (mdl->parsed()) return cmd_mdl(g, mdl_o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
