#pragma once

#include <string>

#include <json.hpp>

namespace nmlcomp {

// Outcome of one named identity or inequality check.  For inequalities the
// slack is rhs - lhs (negative means violated); for identities it is
// -|lhs - rhs| so that pass always means slack >= -tolerance.
struct VerificationResult {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    nlohmann::json details = nlohmann::json::object();

    nlohmann::json to_json() const;
    std::string csv_row() const;

    static VerificationResult inequality(std::string name, double lhs, double rhs, double tol);
    static VerificationResult identity(std::string name, double value, double target, double tol);
    static std::string csv_header();
};

}  // namespace nmlcomp
