#include "nmlcomp/measure.hpp"

#include <cmath>
#include <sstream>

#include "nmlcomp/logsum.hpp"
#include "nmlcomp/rng.hpp"

namespace nmlcomp {

std::uint64_t checked_power(std::uint64_t base, int exp, std::uint64_t cap) {
    if (base == 0) throw MalformedSpec("sample space is empty");
    std::uint64_t total = 1;
    for (int i = 0; i < exp; ++i) {
        if (total > cap / base) {
            std::ostringstream os;
            os << "enumeration of " << base << "^" << exp << " states exceeds cap " << cap;
            throw EnumerationCapExceeded(os.str());
        }
        total *= base;
    }
    if (total > cap) {
        std::ostringstream os;
        os << "enumeration of " << base << "^" << exp << " states exceeds cap " << cap;
        throw EnumerationCapExceeded(os.str());
    }
    return total;
}

bool enumeration_fits(std::uint64_t base, int exp, std::uint64_t cap) {
    if (base == 0) return false;
    std::uint64_t total = 1;
    for (int i = 0; i < exp; ++i) {
        if (total > cap / base) return false;
        total *= base;
    }
    return total <= cap;
}

SampleEnumerator::SampleEnumerator(std::size_t num_outcomes, int n, std::uint64_t cap)
    : z_(num_outcomes), n_(n) {
    if (n < 1) throw MalformedSpec("sample length must be at least 1");
    count_ = checked_power(num_outcomes, n, cap);
    sample_.assign(static_cast<std::size_t>(n), 0);
}

bool SampleEnumerator::advance() {
    for (int i = n_ - 1; i >= 0; --i) {
        if (++sample_[static_cast<std::size_t>(i)] < z_) return true;
        sample_[static_cast<std::size_t>(i)] = 0;
    }
    done_ = true;
    return false;
}

void SampleEnumerator::reset() {
    std::fill(sample_.begin(), sample_.end(), 0);
    done_ = false;
}

double SampleEnumerator::log_mass(std::span<const double> log_masses) const {
    double s = 0.0;
    for (std::size_t z : sample_) {
        double lm = log_masses[z];
        if (lm == kNegInf) return kNegInf;
        s += lm;
    }
    return s;
}

namespace {

constexpr std::uint64_t kChunk = 1u << 16;

std::vector<double> to_log(std::span<const double> masses) {
    std::vector<double> lm(masses.size(), kNegInf);
    for (std::size_t i = 0; i < masses.size(); ++i)
        if (masses[i] > 0.0) lm[i] = std::log(masses[i]);
    return lm;
}

}  // namespace

double exact_expectation(std::span<const double> masses, int n, const SampleFn& g,
                         std::uint64_t cap) {
    SampleEnumerator en(masses.size(), n, cap);
    std::vector<double> lm = to_log(masses);
    SignedLogSum master;
    SignedLogSum chunk;
    std::uint64_t in_chunk = 0;
    bool more = true;
    while (more) {
        double log_mass = en.log_mass(lm);
        if (log_mass != kNegInf) {
            double v = g(en.sample());
            if (v != 0.0) {
                chunk.add_log(log_mass + std::log(std::fabs(v)), v > 0.0 ? 1 : -1);
            }
        }
        if (++in_chunk == kChunk) {
            master.merge(chunk);
            chunk = SignedLogSum{};
            in_chunk = 0;
        }
        more = en.advance();
    }
    master.merge(chunk);
    return master.total();
}

double exact_expectation(const LearningProblem& prob, const SampleFn& g, std::uint64_t cap) {
    return exact_expectation(prob.p.masses, prob.n, g, cap);
}

double exact_log_expectation(std::span<const double> masses, int n, const SampleFn& log_g,
                             std::uint64_t cap) {
    SampleEnumerator en(masses.size(), n, cap);
    std::vector<double> lm = to_log(masses);
    double master = kNegInf;
    double chunk = kNegInf;
    std::uint64_t in_chunk = 0;
    bool more = true;
    while (more) {
        double log_mass = en.log_mass(lm);
        if (log_mass != kNegInf) {
            double lg = log_g(en.sample());
            if (lg != kNegInf) chunk = log_add(chunk, log_mass + lg);
        }
        if (++in_chunk == kChunk) {
            master = log_add(master, chunk);
            chunk = kNegInf;
            in_chunk = 0;
        }
        more = en.advance();
    }
    return log_add(master, chunk);
}

double exact_log_expectation(const LearningProblem& prob, const SampleFn& log_g,
                             std::uint64_t cap) {
    return exact_log_expectation(prob.p.masses, prob.n, log_g, cap);
}

McEstimate mc_expectation(std::span<const double> masses, int n, const SampleFn& g, McConfig cfg) {
    if (cfg.trials < 1) throw MalformedSpec("mc trials must be at least 1");
    CounterRng rng(cfg.seed, cfg.stream_id);
    std::vector<double> cdf = cumulative(masses);
    std::vector<std::size_t> sample(static_cast<std::size_t>(n), 0);
    double mean = 0.0, m2 = 0.0;
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
        for (auto& z : sample) z = rng.next_categorical(cdf);
        double v = g(sample);
        double d = v - mean;
        mean += d / static_cast<double>(t + 1);
        m2 += d * (v - mean);
    }
    McEstimate est;
    est.mean = mean;
    est.trials = cfg.trials;
    est.std_error = cfg.trials > 1
                        ? std::sqrt(m2 / (static_cast<double>(cfg.trials - 1) *
                                          static_cast<double>(cfg.trials)))
                        : 0.0;
    return est;
}

McEstimate mc_expectation(const LearningProblem& prob, const SampleFn& g, McConfig cfg) {
    return mc_expectation(prob.p.masses, prob.n, g, cfg);
}

std::vector<std::size_t> draw_sample(std::span<const double> cdf, int n, CounterRng& rng) {
    std::vector<std::size_t> sample(static_cast<std::size_t>(n));
    for (auto& z : sample) z = rng.next_categorical(cdf);
    return sample;
}

}  // namespace nmlcomp
