#include "diagscreen/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace diagscreen {

namespace {

// 1 / (1 + e^L) without overflow on either side of L.
double inv_one_plus_exp(double log_odds_against) {
    if (log_odds_against > 0.0) {
        const double e = std::exp(-log_odds_against);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(log_odds_against));
}

void require_prevalence(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("prevalence must lie in [0,1]");
}

void require_repetitions(int k) {
    if (k < 1) throw std::invalid_argument("repetitions must be >= 1");
}

void require_tolerance(double tol) {
    if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("tolerance must lie in (0,1)");
}

[[noreturn]] void throw_impossible_event() {
    throw std::domain_error("conditioning event has probability zero");
}

}  // namespace

void RepeatPlan::validate() const {
    require_prevalence(prevalence);
    require_repetitions(repetitions);
    require_tolerance(tolerance);
}

double posterior_first_positive_at(const DiagnosticTest& test, double prevalence, int k) {
    require_prevalence(prevalence);
    require_repetitions(k);
    const double sen = test.sensitivity();
    const double spe = test.specificity();

    // A branch contributes to the conditioning event iff every factor of its
    // pattern probability is nonzero; that classification is exact even where
    // the linear-domain product would underflow.
    const bool diseased_possible = prevalence > 0.0 && sen > 0.0 && (k == 1 || sen < 1.0);
    const bool healthy_possible = prevalence < 1.0 && spe < 1.0 && (k == 1 || spe > 0.0);
    if (!diseased_possible && !healthy_possible) throw_impossible_event();
    if (!healthy_possible) return 1.0;
    if (!diseased_possible) return 0.0;

    // k >= 2 guarantees spe > 0 and sen < 1 here, so every log is finite.
    const double log_power =
        k == 1 ? 0.0 : (k - 1) * (std::log(spe) - std::log(1.0 - sen));
    const double log_odds_against = log_power + std::log(1.0 - spe) - std::log(sen) +
                                    std::log(1.0 - prevalence) - std::log(prevalence);
    return inv_one_plus_exp(log_odds_against);
}

double posterior_first_positive_at(const RepeatPlan& plan) {
    plan.validate();
    return posterior_first_positive_at(plan.test, plan.prevalence, plan.repetitions);
}

double posterior_all_negative(const DiagnosticTest& test, double prevalence, int k) {
    require_prevalence(prevalence);
    require_repetitions(k);
    const double sen = test.sensitivity();
    const double spe = test.specificity();

    const bool diseased_possible = prevalence > 0.0 && sen < 1.0;
    const bool healthy_possible = prevalence < 1.0 && spe > 0.0;
    if (!diseased_possible && !healthy_possible) throw_impossible_event();
    if (!healthy_possible) return 1.0;
    if (!diseased_possible) return 0.0;

    const double log_odds_against = k * (std::log(spe) - std::log(1.0 - sen)) +
                                    std::log(1.0 - prevalence) - std::log(prevalence);
    return inv_one_plus_exp(log_odds_against);
}

double posterior_all_negative(const RepeatPlan& plan) {
    plan.validate();
    return posterior_all_negative(plan.test, plan.prevalence, plan.repetitions);
}

std::optional<int> min_negatives_to_discharge(const DiagnosticTest& test, double prevalence,
                                              double tolerance, int cap) {
    require_prevalence(prevalence);
    require_tolerance(tolerance);
    if (cap < 1) throw std::invalid_argument("cap must be >= 1");

    const auto miss = [&](int k) { return posterior_all_negative(test, prevalence, k); };

    if (prevalence == 1.0) return std::nullopt;  // no run of negatives can discharge
    if (prevalence == 0.0) {
        // Posterior is 0 whenever the all-negative event can occur at all.
        try {
            return miss(1) <= tolerance ? std::optional<int>(1) : std::nullopt;
        } catch (const std::domain_error&) {
            return std::nullopt;
        }
    }

    if (!is_informative(test)) {
        // Repetition does not shrink the posterior; only k = 1 can qualify.
        try {
            if (miss(1) <= tolerance) return 1;
        } catch (const std::domain_error&) {
        }
        return std::nullopt;
    }

    int k = 1;
    if (test.sensitivity() < 1.0) {
        const double log_ratio =
            std::log(test.specificity()) - std::log(1.0 - test.sensitivity());
        const double target = std::log((1.0 - tolerance) / tolerance) +
                              std::log(prevalence) - std::log(1.0 - prevalence);
        if (target > 0.0) {
            const double k_real = target / log_ratio;
            k = k_real >= static_cast<double>(cap) + 2.0
                    ? cap
                    : std::max(1, static_cast<int>(std::ceil(k_real)));
        }
    }
    // sensitivity == 1: one negative already settles it for prevalence < 1.

    // Walk off any floating-point slack in the closed form, then certify.
    while (k > 1 && miss(k - 1) <= tolerance) --k;
    while (k <= cap && miss(k) > tolerance) ++k;
    if (k > cap) return std::nullopt;
    if (miss(k) > tolerance || (k > 1 && miss(k - 1) <= tolerance)) {
        throw std::logic_error("discharge solver lost its minimality certificate");
    }
    return k;
}

double max_prevalence_for_k(const DiagnosticTest& test, int k, double tolerance) {
    require_repetitions(k);
    require_tolerance(tolerance);
    if (!is_informative(test)) {
        throw std::invalid_argument("test must be informative (specificity > 1 - sensitivity)");
    }
    if (test.sensitivity() == 1.0) return 1.0;  // any prevalence below 1 discharges

    const double log_rk = k * (std::log(test.specificity()) - std::log(1.0 - test.sensitivity())) +
                          std::log(tolerance) - std::log(1.0 - tolerance);
    return inv_one_plus_exp(-log_rk);  // R/(1+R)
}

std::vector<DischargeRow> discharge_table(const DiagnosticTest& test,
                                          const std::vector<double>& prevalences,
                                          double tolerance, int cap) {
    if (prevalences.empty()) throw std::invalid_argument("prevalence list must not be empty");
    for (double p : prevalences) {
        if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("each prevalence must lie in [0,1)");
    }

    std::vector<DischargeRow> rows;
    rows.reserve(prevalences.size());
    for (double p : prevalences) {
        DischargeRow row{p, min_negatives_to_discharge(test, p, tolerance, cap),
                         std::numeric_limits<double>::quiet_NaN()};
        if (row.required_negatives) {
            row.achieved_miss_probability = posterior_all_negative(test, p, *row.required_negatives);
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<CurvePoint> posterior_curve(const DiagnosticTest& test,
                                        std::vector<double> prevalence_grid,
                                        std::vector<int> k_values, PosteriorKind kind) {
    if (prevalence_grid.empty()) throw std::invalid_argument("prevalence grid must not be empty");
    if (k_values.empty()) throw std::invalid_argument("k values must not be empty");
    for (double p : prevalence_grid) require_prevalence(p);
    for (int k : k_values) require_repetitions(k);

    std::sort(k_values.begin(), k_values.end());
    std::sort(prevalence_grid.begin(), prevalence_grid.end());

    std::vector<CurvePoint> points;
    points.reserve(k_values.size() * prevalence_grid.size());
    for (int k : k_values) {
        for (double p : prevalence_grid) {
            const double probability = kind == PosteriorKind::first_positive
                                           ? posterior_first_positive_at(test, p, k)
                                           : posterior_all_negative(test, p, k);
            points.push_back({k, p, probability});
        }
    }
    return points;
}

}  // namespace diagscreen
