#pragma once

#include <cmath>
#include <limits>

namespace nmlcomp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// log(e^a + e^b), stable for any mix of finite and infinite arguments.
inline double log_add(double a, double b) {
    if (a == kPosInf || b == kPosInf) return kPosInf;
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    double hi = a > b ? a : b;
    double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

// log(e^a - e^b) for a >= b; returns -inf when the difference underflows.
inline double log_sub(double a, double b) {
    if (b == kNegInf) return a;
    if (a <= b) return kNegInf;
    return a + std::log1p(-std::exp(b - a));
}

// Streaming accumulator for sums of signed terms supplied in log magnitude,
// i.e. sum_i s_i * e^{l_i} with s_i in {-1, 0, +1}.  Positive and negative
// parts are kept in separate log-domain registers so cancellation only
// happens once, at readout.
class SignedLogSum {
public:
    void add_log(double log_mag, int sign) {
        if (sign == 0 || log_mag == kNegInf) return;
        if (sign > 0)
            pos_ = log_add(pos_, log_mag);
        else
            neg_ = log_add(neg_, log_mag);
    }

    // Adds a plain value, routing it through the log registers.
    void add_value(double v) {
        if (v == 0.0) return;
        add_log(std::log(std::fabs(v)), v > 0.0 ? 1 : -1);
    }

    void merge(const SignedLogSum& other) {
        pos_ = log_add(pos_, other.pos_);
        neg_ = log_add(neg_, other.neg_);
    }

    double log_positive() const { return pos_; }
    double log_negative() const { return neg_; }

    // log of the (assumed nonnegative) total; -inf when the parts cancel.
    double log_total() const { return log_sub(pos_, neg_); }

    double total() const {
        if (neg_ == kNegInf) return pos_ == kNegInf ? 0.0 : std::exp(pos_);
        if (pos_ == kNegInf) return -std::exp(neg_);
        double hi = pos_ > neg_ ? pos_ : neg_;
        return std::exp(hi) * (std::exp(pos_ - hi) - std::exp(neg_ - hi));
    }

private:
    double pos_ = kNegInf;
    double neg_ = kNegInf;
};

// Neumaier-compensated plain summation, used when merging chunk results so
// the merge order cannot move the total by more than one ulp per chunk.
class CompensatedSum {
public:
    void add(double v) {
        double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double total() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace nmlcomp
