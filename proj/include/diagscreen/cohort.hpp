#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "diagscreen/test_model.hpp"

namespace diagscreen {

/// How a confirmed-case series maps onto per-day cohort states.
///
/// daily_confirmed: the infected count on day t is that day's newly confirmed
/// cases, and the population is the initial population minus everyone
/// confirmed through day t (confirmed cases leave the cohort the day they
/// are counted).
///
/// cumulative_onboard: the infected count on day t is the cumulative
/// confirmed total through t, treated as proxy carriers attributable to the
/// cohort even after they leave; the healthy count is everyone still aboard.
/// No constraint ties the proxy-carrier count to the remaining population.
enum class CountingMode { daily_confirmed, cumulative_onboard };

std::string_view to_string(CountingMode mode);
std::optional<CountingMode> counting_mode_from(std::string_view text);

struct DailyRecord {
    int day;
    long long new_confirmed;
};

/// Day-indexed confirmed-case counts plus the initial population.
/// Construction validates: initial_population > 0, days strictly increasing
/// and >= 0, counts >= 0, cumulative confirmed never above the population.
class CohortSeries {
public:
    CohortSeries(std::string name, long long initial_population,
                 std::vector<DailyRecord> records,
                 CountingMode mode = CountingMode::daily_confirmed);

    const std::string& name() const { return name_; }
    long long initial_population() const { return initial_population_; }
    const std::vector<DailyRecord>& records() const { return records_; }
    CountingMode mode() const { return mode_; }

    long long total_confirmed() const;
    int first_day() const;  // requires a nonempty series
    int last_day() const;

    CohortSeries with_mode(CountingMode mode) const;

private:
    std::string name_;
    long long initial_population_;
    std::vector<DailyRecord> records_;
    CountingMode mode_;
};

class SeriesParseError : public std::runtime_error {
public:
    SeriesParseError(int line, const std::string& message)
        : std::runtime_error(message), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

class IoError : public std::runtime_error {
public:
    IoError(const std::filesystem::path& path, const std::string& message)
        : std::runtime_error(path.string() + ": " + message), path_(path) {}
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// The 84 cases reported only as a total for days 33-44 can be booked as a
/// single terminal batch on day 44 (default) or spread evenly, 7 per day.
enum class DiamondTailAllocation { terminal_batch, uniform };

/// The embedded Diamond Princess series: initial population 3711, days 1-44,
/// 705 confirmed cases in total, daily_confirmed mode.
CohortSeries builtin_diamond_princess(
    DiamondTailAllocation alloc = DiamondTailAllocation::terminal_batch);

/// Series file format (UTF-8, comma separated, \n line endings):
///   name=<text>                 optional, defaults to "series"
///   initial_population=<int>    required before the first data row
///   mode=daily|cumulative       optional, defaults to daily
///   <day>,<new_confirmed>       one row per day, days strictly increasing
/// Parse errors carry the offending line number in the message.
CohortSeries load_series(std::istream& in);
CohortSeries load_series_file(const std::filesystem::path& path);

void write_series(const CohortSeries& series, std::ostream& out);
void write_series_file(const CohortSeries& series, const std::filesystem::path& path);

/// Per-day cohort states under the series' counting mode (see CountingMode).
std::vector<CohortState> evolve(const CohortSeries& series);

struct PolicyRow {
    int day;
    double population;   // people still in the cohort on that day
    double infected;
    double prevalence;
    double false_positives;
    double false_negatives;
};

/// Computed values around the question "how many carriers slip through if
/// everyone is tested daily". The checkpoint fields are filled when the
/// series contains day 30 (the day the built-in cruise data is usually
/// quoted at); reference_figure carries the externally circulated number a
/// report should be compared against, when one exists for the series.
struct MissedCarrierSummary {
    std::optional<int> checkpoint_day;
    std::optional<double> daily_missed_at_checkpoint;
    std::optional<double> cumulative_missed_at_checkpoint;
    double rate_times_total_confirmed = 0.0;  // (1 - sensitivity) * total confirmed
    std::optional<double> reference_figure;
};

MissedCarrierSummary missed_carrier_summary(const CohortSeries& series,
                                            const DiagnosticTest& test);

struct PolicyEvaluation {
    std::string series_name;
    CountingMode mode;
    DiagnosticTest test;
    int start_day;
    long long initial_population;
    long long total_confirmed;
    std::vector<PolicyRow> rows;
    MissedCarrierSummary missed;
};

/// Apply the expected false-count model to every evolved state from
/// start_day onward. start_day must lie within the series' day range.
PolicyEvaluation evaluate_testing_policy(const CohortSeries& series,
                                         const DiagnosticTest& test, int start_day);

enum class ReportFormat { delimited_table, structured_document };

/// delimited_table writes <name>.prevalence.csv, <name>.fp_pop.csv and
/// <name>.fn.csv (numbers at 6 significant digits, \n endings, byte-stable
/// for identical inputs). structured_document writes <name>.report.json
/// bundling the rows plus metadata and the missed-carrier summary.
/// Returns the paths written.
std::vector<std::filesystem::path> emit_report(const PolicyEvaluation& evaluation,
                                               ReportFormat format,
                                               const std::filesystem::path& out_dir);

}  // namespace diagscreen
