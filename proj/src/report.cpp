#include "nmlcomp/report.hpp"

#include <cmath>
#include <sstream>

namespace nmlcomp {

VerificationResult VerificationResult::inequality(std::string name, double lhs, double rhs,
                                                  double tol) {
    VerificationResult r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.tolerance = tol;
    r.pass = r.slack >= -tol;
    return r;
}

VerificationResult VerificationResult::identity(std::string name, double value, double target,
                                                double tol) {
    VerificationResult r;
    r.name = std::move(name);
    r.lhs = value;
    r.rhs = target;
    r.slack = -std::fabs(value - target);
    r.tolerance = tol;
    r.pass = r.slack >= -tol;
    return r;
}

nlohmann::json VerificationResult::to_json() const {
    nlohmann::json j{{"name", name}, {"lhs", lhs},           {"rhs", rhs},
                     {"slack", slack}, {"tolerance", tolerance}, {"pass", pass}};
    if (!details.empty()) j["details"] = details;
    return j;
}

std::string VerificationResult::csv_header() { return "name,lhs,rhs,slack,tolerance,pass"; }

std::string VerificationResult::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << name << ',' << lhs << ',' << rhs << ',' << slack << ',' << tolerance << ','
       << (pass ? "true" : "false");
    return os.str();
}

}  // namespace nmlcomp
