#include "nmlcomp/problem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nmlcomp/logsum.hpp"

namespace nmlcomp {

FiniteDistribution FiniteDistribution::normalized(std::vector<double> raw, double tol) {
    if (raw.empty()) throw MalformedSpec("distribution must have at least one atom");
    double sum = 0.0;
    for (double m : raw) {
        if (!(m >= 0.0) || !std::isfinite(m))
            throw MalformedSpec("distribution masses must be finite and nonnegative");
        sum += m;
    }
    if (std::fabs(sum - 1.0) > tol) {
        std::ostringstream os;
        os << "distribution masses sum to " << sum << ", expected 1 within " << tol;
        throw MalformedSpec(os.str());
    }
    for (double& m : raw) m /= sum;
    return FiniteDistribution{std::move(raw)};
}

FiniteDistribution FiniteDistribution::uniform(std::size_t k) {
    if (k == 0) throw MalformedSpec("uniform distribution needs k >= 1");
    return FiniteDistribution{std::vector<double>(k, 1.0 / static_cast<double>(k))};
}

double LearningProblem::loss_sum(std::size_t f, std::span<const std::size_t> sample) const {
    check_predictor(f);
    double s = 0.0;
    for (std::size_t z : sample) s += cls.loss[f][z];
    return s;
}

double LearningProblem::excess_sum(std::size_t f, std::span<const std::size_t> sample) const {
    check_predictor(f);
    double s = 0.0;
    for (std::size_t z : sample) s += excess[f][z];
    return s;
}

double LearningProblem::log_pmass(std::span<const std::size_t> sample) const {
    double s = 0.0;
    for (std::size_t z : sample) {
        if (z >= num_outcomes()) throw IndexOutOfRange("outcome index out of range");
        s += log_p[z];
    }
    return s;
}

void LearningProblem::check_predictor(std::size_t f) const {
    if (f >= num_predictors()) throw IndexOutOfRange("predictor index out of range");
}

namespace {

void validate_space(const OutcomeSpace& space) {
    if (space.size() == 0) throw MalformedSpec("outcome space is empty");
    if (space.nu.size() != space.size())
        throw MalformedSpec("nu weights must match the number of outcomes");
    for (double w : space.nu)
        if (!(w > 0.0) || !std::isfinite(w))
            throw MalformedSpec("nu weights must be finite and strictly positive");
    if (space.supervised &&
        (space.x_part.size() != space.size() || space.y_part.size() != space.size()))
        throw MalformedSpec("supervised outcome space needs an (x, y) split per outcome");
}

void validate_class(const PredictorClass& cls, std::size_t num_outcomes) {
    if (cls.size() == 0) throw MalformedSpec("predictor class is empty");
    for (const auto& row : cls.loss) {
        if (row.size() != num_outcomes)
            throw MalformedSpec("loss row length must match the number of outcomes");
        for (double v : row)
            if (!std::isfinite(v)) throw MalformedSpec("losses must be finite");
    }
    if (cls.param == Parameterization::supervised) {
        if (cls.feature.size() != cls.size())
            throw MalformedSpec("supervised parameterization requires a feature row per predictor");
        for (const auto& row : cls.feature) {
            if (row.size() != num_outcomes)
                throw MalformedSpec("feature row length must match the number of outcomes");
            for (double v : row)
                if (!std::isfinite(v)) throw MalformedSpec("features must be finite");
        }
        if (!(cls.lipschitz > 0.0) || !std::isfinite(cls.lipschitz))
            throw MalformedSpec("lipschitz constant must be finite and positive");
    }
}

// Largest pointwise loss gap between any two predictors.
double max_loss_gap(const PredictorClass& cls, std::size_t num_outcomes) {
    double gap = 0.0;
    for (std::size_t z = 0; z < num_outcomes; ++z) {
        double lo = cls.loss[0][z], hi = cls.loss[0][z];
        for (std::size_t f = 1; f < cls.size(); ++f) {
            lo = std::min(lo, cls.loss[f][z]);
            hi = std::max(hi, cls.loss[f][z]);
        }
        gap = std::max(gap, hi - lo);
    }
    return gap;
}

void check_lipschitz(const PredictorClass& cls, std::size_t num_outcomes) {
    const double tol = 1e-9 * (1.0 + cls.lipschitz);
    for (std::size_t f = 0; f < cls.size(); ++f)
        for (std::size_t g = f + 1; g < cls.size(); ++g)
            for (std::size_t z = 0; z < num_outcomes; ++z) {
                double lhs = std::fabs(cls.loss[f][z] - cls.loss[g][z]);
                double rhs = cls.lipschitz * std::fabs(cls.feature[f][z] - cls.feature[g][z]);
                if (lhs > rhs + tol) {
                    std::ostringstream os;
                    os << "loss gap " << lhs << " exceeds lipschitz bound " << rhs
                       << " for predictors " << f << "," << g << " at outcome " << z;
                    throw AssumptionViolated(os.str());
                }
            }
}

void check_log_loss(const LearningProblem& prob) {
    for (std::size_t f = 0; f < prob.num_predictors(); ++f) {
        double mass = 0.0;
        for (std::size_t z = 0; z < prob.num_outcomes(); ++z)
            mass += prob.space.nu[z] * std::exp(-prob.cls.loss[f][z]);
        if (std::fabs(mass - 1.0) > 1e-9) {
            std::ostringstream os;
            os << "predictor " << f << " is not a normalized log-loss density: integral " << mass;
            throw NotLogLoss(os.str());
        }
    }
}

}  // namespace

LearningProblem build_problem(OutcomeSpace space, FiniteDistribution p, PredictorClass cls,
                              double eta, int n, bool log_loss, BuildOptions opts) {
    validate_space(space);
    if (p.size() != space.size())
        throw MalformedSpec("generating distribution must match the number of outcomes");
    validate_class(cls, space.size());
    if (!(eta > 0.0) || !std::isfinite(eta)) throw MalformedSpec("eta must be finite and positive");
    if (n < 1) throw MalformedSpec("n must be at least 1");
    if (cls.param == Parameterization::direct) cls.lipschitz = 1.0;

    LearningProblem prob;
    prob.loss_scale = 1.0;
    double gap = max_loss_gap(cls, space.size());
    if (gap > 0.5 + 1e-12) {
        if (!opts.allow_unscaled) {
            std::ostringstream os;
            os << "loss gap " << gap << " exceeds 1/2; rescale or pass allow_unscaled";
            throw AssumptionViolated(os.str());
        }
        if (log_loss)
            throw AssumptionViolated("cannot rescale a log-loss table without breaking normalization");
        double s = 0.5 / gap;
        for (auto& row : cls.loss)
            for (double& v : row) v *= s;
        cls.lipschitz *= s;
        prob.loss_scale = s;
    }
    if (cls.param == Parameterization::supervised) check_lipschitz(cls, space.size());

    prob.space = std::move(space);
    prob.p = std::move(p);
    prob.cls = std::move(cls);
    prob.eta = eta;
    prob.n = n;
    prob.log_loss = log_loss;

    const std::size_t F = prob.num_predictors();
    const std::size_t Z = prob.num_outcomes();
    prob.risk.assign(F, 0.0);
    for (std::size_t f = 0; f < F; ++f)
        for (std::size_t z = 0; z < Z; ++z) prob.risk[f] += prob.p.masses[z] * prob.cls.loss[f][z];
    prob.fstar = 0;
    for (std::size_t f = 1; f < F; ++f)
        if (prob.risk[f] < prob.risk[prob.fstar]) prob.fstar = f;

    prob.excess.assign(F, std::vector<double>(Z, 0.0));
    for (std::size_t f = 0; f < F; ++f)
        for (std::size_t z = 0; z < Z; ++z)
            prob.excess[f][z] = prob.cls.loss[f][z] - prob.cls.loss[prob.fstar][z];

    prob.log_p.assign(Z, kNegInf);
    for (std::size_t z = 0; z < Z; ++z)
        if (prob.p.masses[z] > 0.0) prob.log_p[z] = std::log(prob.p.masses[z]);

    if (log_loss) check_log_loss(prob);
    return prob;
}

namespace {

std::vector<double> read_vector(const nlohmann::json& arr, const char* what) {
    if (!arr.is_array()) throw MalformedSpec(std::string(what) + " must be an array");
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) throw MalformedSpec(std::string(what) + " entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

LearningProblem parse_problem(const nlohmann::json& doc, BuildOptions opts) {
    if (!doc.is_object()) throw MalformedSpec("problem document must be a JSON object");
    for (const char* key : {"outcomes", "p", "predictors", "eta", "n"})
        if (!doc.contains(key)) throw MalformedSpec(std::string("missing required field: ") + key);

    OutcomeSpace space;
    const auto& outcomes = doc.at("outcomes");
    if (!outcomes.is_array() || outcomes.empty())
        throw MalformedSpec("outcomes must be a nonempty array");
    bool any_split = false;
    for (const auto& o : outcomes) {
        if (o.is_string()) {
            space.labels.push_back(o.get<std::string>());
            space.x_part.emplace_back();
            space.y_part.emplace_back();
        } else if (o.is_object() && o.contains("x") && o.contains("y")) {
            std::string x = o.at("x").is_string() ? o.at("x").get<std::string>() : o.at("x").dump();
            std::string y = o.at("y").is_string() ? o.at("y").get<std::string>() : o.at("y").dump();
            space.labels.push_back(o.value("label", x + "|" + y));
            space.x_part.push_back(x);
            space.y_part.push_back(y);
            any_split = true;
        } else {
            throw MalformedSpec("outcomes entries must be labels or {x, y} objects");
        }
    }
    space.supervised = any_split;

    if (doc.contains("nu"))
        space.nu = read_vector(doc.at("nu"), "nu");
    else
        space.nu.assign(space.labels.size(), 1.0);

    FiniteDistribution p = FiniteDistribution::normalized(read_vector(doc.at("p"), "p"), opts.mass_tol);

    PredictorClass cls;
    std::string param = doc.value("parameterization", std::string("direct"));
    if (param == "direct")
        cls.param = Parameterization::direct;
    else if (param == "supervised")
        cls.param = Parameterization::supervised;
    else
        throw MalformedSpec("parameterization must be 'direct' or 'supervised'");
    cls.lipschitz = doc.value("lipschitz", 1.0);

    const auto& preds = doc.at("predictors");
    if (!preds.is_array() || preds.empty())
        throw MalformedSpec("predictors must be a nonempty array");
    for (const auto& pr : preds) {
        if (!pr.is_object() || !pr.contains("losses"))
            throw MalformedSpec("each predictor needs a losses array");
        cls.loss.push_back(read_vector(pr.at("losses"), "losses"));
        if (pr.contains("features")) cls.feature.push_back(read_vector(pr.at("features"), "features"));
    }
    if (cls.param == Parameterization::supervised && cls.feature.size() != cls.loss.size())
        throw MalformedSpec("supervised parameterization requires features for every predictor");
    if (cls.param == Parameterization::direct) cls.feature.clear();

    if (!doc.at("eta").is_number()) throw MalformedSpec("eta must be a number");
    if (!doc.at("n").is_number_integer()) throw MalformedSpec("n must be an integer");

    bool log_loss = doc.value("log_loss", false);
    return build_problem(std::move(space), std::move(p), std::move(cls), doc.at("eta").get<double>(),
                         doc.at("n").get<int>(), log_loss, opts);
}

LearningProblem load_problem(const std::string& path, BuildOptions opts) {
    std::ifstream in(path);
    if (!in) throw MalformedSpec("cannot open problem file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw MalformedSpec(std::string("invalid JSON in ") + path + ": " + e.what());
    }
    return parse_problem(doc, opts);
}

nlohmann::json problem_to_json(const LearningProblem& prob) {
    nlohmann::json doc;
    if (prob.space.supervised) {
        auto arr = nlohmann::json::array();
        for (std::size_t z = 0; z < prob.num_outcomes(); ++z)
            arr.push_back({{"label", prob.space.labels[z]},
                           {"x", prob.space.x_part[z]},
                           {"y", prob.space.y_part[z]}});
        doc["outcomes"] = arr;
    } else {
        doc["outcomes"] = prob.space.labels;
    }
    doc["p"] = prob.p.masses;
    doc["nu"] = prob.space.nu;
    auto preds = nlohmann::json::array();
    for (std::size_t f = 0; f < prob.num_predictors(); ++f) {
        nlohmann::json pr{{"losses", prob.cls.loss[f]}};
        if (prob.cls.param == Parameterization::supervised) pr["features"] = prob.cls.feature[f];
        preds.push_back(pr);
    }
    doc["predictors"] = preds;
    doc["eta"] = prob.eta;
    doc["n"] = prob.n;
    doc["parameterization"] =
        prob.cls.param == Parameterization::supervised ? "supervised" : "direct";
    if (prob.cls.param == Parameterization::supervised) doc["lipschitz"] = prob.cls.lipschitz;
    if (prob.log_loss) doc["log_loss"] = true;
    return doc;
}

double predictor_risk(const LearningProblem& prob, std::size_t f) {
    prob.check_predictor(f);
    return prob.risk[f];
}

double excess_loss(const LearningProblem& prob, std::size_t f, std::span<const std::size_t> sample) {
    return prob.excess_sum(f, sample);
}

}  // namespace nmlcomp
