#include "diagscreen/simulate.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace diagscreen {

namespace {

void require_prevalence(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("prevalence must lie in [0,1]");
}

PosteriorEstimate make_estimate(long long hits, long long infected_hits) {
    PosteriorEstimate out{std::numeric_limits<double>::quiet_NaN(),
                          std::numeric_limits<double>::quiet_NaN(), hits,
                          hits < kMinReliableHits};
    if (hits > 0) {
        out.estimate = static_cast<double>(infected_hits) / static_cast<double>(hits);
        out.standard_error =
            std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(hits));
    }
    return out;
}

enum class Pattern { first_positive, all_negative };

PosteriorEstimate estimate_posterior(const TrialConfig& config, Pattern pattern) {
    config.validate();
    const double sen = config.test.sensitivity();
    const double fpr = config.test.false_positive_rate();
    const int k = config.repetitions;

    SplitMix64 rng(config.seed);
    long long hits = 0;
    long long infected_hits = 0;
    for (long long trial = 0; trial < config.trials; ++trial) {
        const bool infected = rng.bernoulli(config.prevalence);
        const double p_positive = infected ? sen : fpr;
        bool match = true;
        for (int i = 1; i <= k && match; ++i) {
            const bool positive = rng.bernoulli(p_positive);
            const bool want_positive = pattern == Pattern::first_positive && i == k;
            match = positive == want_positive;
        }
        if (match) {
            ++hits;
            if (infected) ++infected_hits;
        }
    }
    return make_estimate(hits, infected_hits);
}

}  // namespace

void TrialConfig::validate() const {
    require_prevalence(prevalence);
    if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
}

ScreenTally simulate_cohort_screen(long long population, double prevalence,
                                   const DiagnosticTest& test, std::uint64_t seed) {
    if (population < 1) throw std::invalid_argument("population must be >= 1");
    require_prevalence(prevalence);

    SplitMix64 rng(seed);
    ScreenTally tally;
    for (long long i = 0; i < population; ++i) {
        const bool infected = rng.bernoulli(prevalence);
        const bool positive =
            rng.bernoulli(infected ? test.sensitivity() : test.false_positive_rate());
        if (infected) {
            positive ? ++tally.true_positives : ++tally.false_negatives;
        } else {
            positive ? ++tally.false_positives : ++tally.true_negatives;
        }
    }
    return tally;
}

PosteriorEstimate estimate_posterior_first_positive(const TrialConfig& config) {
    return estimate_posterior(config, Pattern::first_positive);
}

PosteriorEstimate estimate_posterior_all_negative(const TrialConfig& config) {
    return estimate_posterior(config, Pattern::all_negative);
}

}  // namespace diagscreen
