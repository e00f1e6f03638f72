#pragma once

#include <optional>
#include <vector>

#include "diagscreen/test_model.hpp"

namespace diagscreen {

/// A repeated-testing question: apply `test` to one individual `repetitions`
/// times, independently, in a cohort with the given prevalence.
struct RepeatPlan {
    DiagnosticTest test;
    double prevalence = 0.0;
    int repetitions = 1;
    double tolerance = 0.05;

    void validate() const;  // throws std::invalid_argument on violation
};

/// P(infected | first k-1 results negative, k-th positive).
///
/// Evaluated in log-odds form, 1 / (1 + e^L), so large k neither overflows
/// nor collapses to the wrong branch. Exact prevalence limits return 0 and 1.
/// Throws std::domain_error when the conditioning pattern has probability
/// zero under both infection states.
double posterior_first_positive_at(const DiagnosticTest& test, double prevalence, int k);
double posterior_first_positive_at(const RepeatPlan& plan);

/// P(infected | all k results negative) -- the chance of discharging a
/// carrier after k consecutive negatives. Same conventions as above.
double posterior_all_negative(const DiagnosticTest& test, double prevalence, int k);
double posterior_all_negative(const RepeatPlan& plan);

inline constexpr int kDefaultDischargeCap = 100;

/// Smallest k >= 1 with posterior_all_negative(test, prevalence, k) <=
/// tolerance, or std::nullopt when no k up to `cap` reaches it (prevalence 1,
/// a non-informative test, an impossible conditioning event, or simply k >
/// cap). A tie at exactly the tolerance counts as success.
///
/// The candidate comes from the closed-form bound
///   k >= log(((1-tol)/tol) * (P/(1-P))) / log(spe/(1-sen))
/// and is then certified by direct evaluation at k and k-1.
std::optional<int> min_negatives_to_discharge(const DiagnosticTest& test, double prevalence,
                                              double tolerance = 0.05,
                                              int cap = kDefaultDischargeCap);

/// Largest prevalence P for which k consecutive negatives meet the
/// tolerance: P = R/(1+R) with R = (spe/(1-sen))^k * tol/(1-tol).
/// Requires an informative test; strictly increasing in k.
double max_prevalence_for_k(const DiagnosticTest& test, int k, double tolerance = 0.05);

struct DischargeRow {
    double prevalence;
    std::optional<int> required_negatives;  // nullopt = unreachable
    double achieved_miss_probability;       // NaN when unreachable
};

/// One row per prevalence; unreachable rows are reported, not fatal.
/// Prevalences must lie in [0,1).
std::vector<DischargeRow> discharge_table(const DiagnosticTest& test,
                                          const std::vector<double>& prevalences,
                                          double tolerance = 0.05,
                                          int cap = kDefaultDischargeCap);

enum class PosteriorKind { first_positive, all_negative };

struct CurvePoint {
    int repetitions;
    double prevalence;
    double probability;
};

/// Dense posterior evaluation for plot emission; rows ordered by
/// (repetitions, prevalence).
std::vector<CurvePoint> posterior_curve(const DiagnosticTest& test,
                                        std::vector<double> prevalence_grid,
                                        std::vector<int> k_values, PosteriorKind kind);

}  // namespace diagscreen
