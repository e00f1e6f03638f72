#pragma once

#include <cstdint>

#include "diagscreen/test_model.hpp"

namespace diagscreen {

/// splitmix64 with the constants of the public-domain reference
/// implementation (Vigna). The algorithm is fully specified here, and the
/// [0,1) mapping takes the top 53 bits scaled by 2^-53, so seeded runs are
/// reproducible bit-for-bit across platforms and toolchain upgrades.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_unit() < p; }

private:
    std::uint64_t state_;
};

/// Seeded Monte Carlo specification. Identical configs yield bit-identical
/// results; trials run sequentially off a single stream.
///
/// Draw order per trial (load-bearing for reproducibility): infection status
/// first, then one draw per test outcome in order, each as
/// u < P(positive | status). Unused outcome draws are skipped once the
/// conditioning pattern is broken.
struct TrialConfig {
    DiagnosticTest test;
    double prevalence = 0.0;
    int repetitions = 1;
    long long trials = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ScreenTally {
    long long true_positives = 0;
    long long false_positives = 0;
    long long true_negatives = 0;
    long long false_negatives = 0;

    long long population() const {
        return true_positives + false_positives + true_negatives + false_negatives;
    }
};

/// Minimum conditioning hits for the binomial standard error to mean much.
inline constexpr long long kMinReliableHits = 100;

struct PosteriorEstimate {
    double estimate;               // NaN when no trial matched the pattern
    double standard_error;         // sqrt(est*(1-est)/hits); NaN when no hits
    long long conditioning_hits;
    bool underpowered;             // conditioning_hits < kMinReliableHits

    bool has_estimate() const { return conditioning_hits > 0; }
};

/// Test everyone once: per individual, draw the infection status, then one
/// test outcome, and tally the four cells.
ScreenTally simulate_cohort_screen(long long population, double prevalence,
                                   const DiagnosticTest& test, std::uint64_t seed);

/// Among trials whose first k-1 outcomes are negative and k-th positive,
/// the fraction actually infected.
PosteriorEstimate estimate_posterior_first_positive(const TrialConfig& config);

/// Among trials with all k outcomes negative, the fraction actually infected.
PosteriorEstimate estimate_posterior_all_negative(const TrialConfig& config);

}  // namespace diagscreen
