#include "diagscreen/cohort.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "diagscreen/format.hpp"

namespace diagscreen {

namespace {

using ordered_json = nlohmann::ordered_json;

std::optional<long long> parse_int(std::string_view text) {
    long long value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

void validate_series(const std::string& name, long long initial_population,
                     const std::vector<DailyRecord>& records) {
    (void)name;
    if (initial_population <= 0) {
        throw std::invalid_argument("initial population must be positive");
    }
    long long cumulative = 0;
    const DailyRecord* previous = nullptr;
    for (const DailyRecord& record : records) {
        if (record.day < 0) throw std::invalid_argument("record days must be >= 0");
        if (previous && record.day <= previous->day) {
            throw std::invalid_argument("record days must be strictly increasing");
        }
        if (record.new_confirmed < 0) {
            throw std::invalid_argument("confirmed counts must be >= 0");
        }
        cumulative += record.new_confirmed;
        if (cumulative > initial_population) {
            throw std::invalid_argument(
                "cumulative confirmed exceeds initial population at day " +
                std::to_string(record.day));
        }
        previous = &record;
    }
}

}  // namespace

std::string_view to_string(CountingMode mode) {
    return mode == CountingMode::daily_confirmed ? "daily" : "cumulative";
}

std::optional<CountingMode> counting_mode_from(std::string_view text) {
    if (text == "daily" || text == "daily-confirmed") return CountingMode::daily_confirmed;
    if (text == "cumulative" || text == "cumulative-onboard") {
        return CountingMode::cumulative_onboard;
    }
    return std::nullopt;
}

CohortSeries::CohortSeries(std::string name, long long initial_population,
                           std::vector<DailyRecord> records, CountingMode mode)
    : name_(std::move(name)),
      initial_population_(initial_population),
      records_(std::move(records)),
      mode_(mode) {
    validate_series(name_, initial_population_, records_);
}

long long CohortSeries::total_confirmed() const {
    long long total = 0;
    for (const DailyRecord& record : records_) total += record.new_confirmed;
    return total;
}

int CohortSeries::first_day() const {
    if (records_.empty()) throw std::logic_error("series has no records");
    return records_.front().day;
}

int CohortSeries::last_day() const {
    if (records_.empty()) throw std::logic_error("series has no records");
    return records_.back().day;
}

CohortSeries CohortSeries::with_mode(CountingMode mode) const {
    return CohortSeries(name_, initial_population_, records_, mode);
}

CohortSeries builtin_diamond_princess(DiamondTailAllocation alloc) {
    std::vector<DailyRecord> records;
    records.reserve(44);
    for (int day = 1; day <= 16; ++day) records.push_back({day, 0});

    constexpr long long confirmed_17_to_32[] = {10, 10, 41, 3,  0, 6,  65, 39,
                                                0,  47, 0,  134, 0, 99, 88, 79};
    for (int i = 0; i < 16; ++i) records.push_back({17 + i, confirmed_17_to_32[i]});

    // Days 33-44 are reported only as an 84-case total.
    if (alloc == DiamondTailAllocation::terminal_batch) {
        for (int day = 33; day <= 43; ++day) records.push_back({day, 0});
        records.push_back({44, 84});
    } else {
        for (int day = 33; day <= 44; ++day) records.push_back({day, 7});
    }
    return CohortSeries("diamond-princess", 3711, std::move(records),
                        CountingMode::daily_confirmed);
}

CohortSeries load_series(std::istream& in) {
    std::string line;
    int line_no = 0;

    std::string name = "series";
    std::optional<long long> initial_population;
    CountingMode mode = CountingMode::daily_confirmed;
    std::vector<DailyRecord> records;
    long long cumulative = 0;
    std::optional<int> last_day;
    bool seen_rows = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto comma = line.find(',');
        const auto equals = line.find('=');
        if (comma == std::string::npos && equals != std::string::npos) {
            if (seen_rows) {
                throw SeriesParseError(line_no, "header line after data rows at line " +
                                                    std::to_string(line_no));
            }
            const std::string key = line.substr(0, equals);
            const std::string value = line.substr(equals + 1);
            if (key == "name") {
                name = value;
            } else if (key == "initial_population") {
                const auto parsed = parse_int(value);
                if (!parsed || *parsed <= 0) {
                    throw SeriesParseError(
                        line_no, "invalid initial_population '" + value + "' at line " +
                                     std::to_string(line_no));
                }
                initial_population = *parsed;
            } else if (key == "mode") {
                const auto parsed = counting_mode_from(value);
                if (!parsed) {
                    throw SeriesParseError(line_no, "unknown mode '" + value + "' at line " +
                                                        std::to_string(line_no));
                }
                mode = *parsed;
            } else {
                throw SeriesParseError(line_no, "unknown header '" + key + "' at line " +
                                                    std::to_string(line_no));
            }
            continue;
        }

        // Data row: <day>,<new_confirmed>
        if (!initial_population) {
            throw SeriesParseError(line_no, "missing initial_population header before line " +
                                                std::to_string(line_no));
        }
        seen_rows = true;
        std::optional<long long> day, count;
        if (comma != std::string::npos) {
            day = parse_int(std::string_view(line).substr(0, comma));
            count = parse_int(std::string_view(line).substr(comma + 1));
        }
        if (!day || !count) {
            throw SeriesParseError(line_no, "malformed row at line " + std::to_string(line_no) +
                                                " (expected day,new_confirmed)");
        }
        if (*day < 0) {
            throw SeriesParseError(line_no, "negative day at line " + std::to_string(line_no));
        }
        if (*count < 0) {
            throw SeriesParseError(line_no,
                                   "negative case count at line " + std::to_string(line_no));
        }
        if (last_day && *day <= *last_day) {
            throw SeriesParseError(line_no, "days not strictly increasing at line " +
                                                std::to_string(line_no));
        }
        cumulative += *count;
        if (cumulative > *initial_population) {
            throw SeriesParseError(line_no,
                                   "cumulative confirmed exceeds initial population " +
                                       std::to_string(*initial_population) + " at day " +
                                       std::to_string(*day) + " (line " +
                                       std::to_string(line_no) + ")");
        }
        records.push_back({static_cast<int>(*day), *count});
        last_day = static_cast<int>(*day);
    }

    if (!initial_population) {
        throw SeriesParseError(line_no, "missing initial_population header");
    }
    return CohortSeries(name, *initial_population, std::move(records), mode);
}

CohortSeries load_series_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    try {
        return load_series(in);
    } catch (const SeriesParseError& e) {
        throw SeriesParseError(e.line(), path.string() + ": " + e.what());
    }
}

void write_series(const CohortSeries& series, std::ostream& out) {
    out << "name=" << series.name() << "\n";
    out << "initial_population=" << series.initial_population() << "\n";
    out << "mode=" << to_string(series.mode()) << "\n";
    for (const DailyRecord& record : series.records()) {
        out << record.day << "," << record.new_confirmed << "\n";
    }
}

void write_series_file(const CohortSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open for writing");
    write_series(series, out);
    out.flush();
    if (!out) throw IoError(path, "write failed");
}

std::vector<CohortState> evolve(const CohortSeries& series) {
    std::vector<CohortState> states;
    states.reserve(series.records().size());
    const auto initial = static_cast<double>(series.initial_population());
    long long cumulative = 0;
    for (const DailyRecord& record : series.records()) {
        cumulative += record.new_confirmed;
        if (series.mode() == CountingMode::daily_confirmed) {
            const double remaining = initial - static_cast<double>(cumulative);
            if (static_cast<double>(record.new_confirmed) > remaining) {
                throw std::invalid_argument(
                    "day " + std::to_string(record.day) +
                    ": confirmed cases exceed the remaining population under daily accounting");
            }
            states.push_back(CohortState::from_total(
                record.day, remaining, static_cast<double>(record.new_confirmed)));
        } else {
            states.push_back(CohortState::from_total(record.day, initial,
                                                     static_cast<double>(cumulative)));
        }
    }
    return states;
}

MissedCarrierSummary missed_carrier_summary(const CohortSeries& series,
                                            const DiagnosticTest& test) {
    MissedCarrierSummary summary;
    const double miss_rate = test.false_negative_rate();
    summary.rate_times_total_confirmed =
        miss_rate * static_cast<double>(series.total_confirmed());

    constexpr int checkpoint = 30;
    long long cumulative = 0;
    for (const DailyRecord& record : series.records()) {
        cumulative += record.new_confirmed;
        if (record.day == checkpoint) {
            summary.checkpoint_day = checkpoint;
            summary.daily_missed_at_checkpoint =
                miss_rate * static_cast<double>(record.new_confirmed);
            summary.cumulative_missed_at_checkpoint =
                miss_rate * static_cast<double>(cumulative);
            break;
        }
    }
    if (series.name() == "diamond-princess") summary.reference_figure = 300.0;
    return summary;
}

PolicyEvaluation evaluate_testing_policy(const CohortSeries& series,
                                         const DiagnosticTest& test, int start_day) {
    if (series.records().empty()) throw std::invalid_argument("series has no records");
    if (start_day < series.first_day() || start_day > series.last_day()) {
        throw std::invalid_argument("start day " + std::to_string(start_day) +
                                    " outside series range " +
                                    std::to_string(series.first_day()) + ".." +
                                    std::to_string(series.last_day()));
    }

    PolicyEvaluation evaluation{series.name(),
                                series.mode(),
                                test,
                                start_day,
                                series.initial_population(),
                                series.total_confirmed(),
                                {},
                                missed_carrier_summary(series, test)};
    for (const CohortState& state : evolve(series)) {
        if (state.day() < start_day) continue;
        const double aboard = series.mode() == CountingMode::daily_confirmed
                                  ? state.total()
                                  : state.healthy();
        evaluation.rows.push_back({state.day(), aboard, state.infected(), state.prevalence(),
                                   expected_false_positives(state, test),
                                   expected_false_negatives(state, test)});
    }
    return evaluation;
}

namespace {

constexpr int kCsvDigits = 6;

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw IoError(path, "write failed");
}

ordered_json test_to_json(const DiagnosticTest& test) {
    return ordered_json{{"label", test.label()},
                        {"sensitivity", test.sensitivity()},
                        {"specificity", test.specificity()}};
}

ordered_json missed_to_json(const MissedCarrierSummary& missed) {
    ordered_json out;
    out["rate_times_total_confirmed"] = missed.rate_times_total_confirmed;
    if (missed.checkpoint_day) {
        out["checkpoint_day"] = *missed.checkpoint_day;
        out["daily_mode_missed_at_checkpoint"] = *missed.daily_missed_at_checkpoint;
        out["cumulative_mode_missed_at_checkpoint"] = *missed.cumulative_missed_at_checkpoint;
    }
    if (missed.reference_figure) {
        out["reference_figure"] = *missed.reference_figure;
        out["note"] =
            "The widely circulated figure of about 300 carriers missed by day 30 is not "
            "reproduced by either accounting mode; the closest construction is the "
            "false-negative rate times the total confirmed count.";
    }
    return out;
}

}  // namespace

std::vector<std::filesystem::path> emit_report(const PolicyEvaluation& evaluation,
                                               ReportFormat format,
                                               const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError(out_dir, "cannot create output directory: " + ec.message());

    std::vector<std::filesystem::path> written;

    if (format == ReportFormat::delimited_table) {
        std::string prevalence = "day,prevalence\n";
        std::string fp_pop = "day,population,false_positives\n";
        std::string fn = "day,false_negatives\n";
        for (const PolicyRow& row : evaluation.rows) {
            const std::string day = std::to_string(row.day);
            prevalence += day + "," + format_significant(row.prevalence, kCsvDigits) + "\n";
            fp_pop += day + "," + format_significant(row.population, kCsvDigits) + "," +
                      format_significant(row.false_positives, kCsvDigits) + "\n";
            fn += day + "," + format_significant(row.false_negatives, kCsvDigits) + "\n";
        }
        const auto base = out_dir / evaluation.series_name;
        const std::filesystem::path paths[] = {
            std::filesystem::path(base.string() + ".prevalence.csv"),
            std::filesystem::path(base.string() + ".fp_pop.csv"),
            std::filesystem::path(base.string() + ".fn.csv")};
        const std::string* contents[] = {&prevalence, &fp_pop, &fn};
        for (int i = 0; i < 3; ++i) {
            write_text_file(paths[i], *contents[i]);
            written.push_back(paths[i]);
        }
        return written;
    }

    ordered_json report;
    report["schema"] = "cohort-report/1";
    report["series"] = evaluation.series_name;
    report["mode"] = std::string(to_string(evaluation.mode));
    report["test"] = test_to_json(evaluation.test);
    report["start_day"] = evaluation.start_day;
    report["initial_population"] = evaluation.initial_population;
    report["total_confirmed"] = evaluation.total_confirmed;
    report["row_count"] = evaluation.rows.size();
    ordered_json rows = ordered_json::array();
    for (const PolicyRow& row : evaluation.rows) {
        rows.push_back(ordered_json{{"day", row.day},
                                    {"population", row.population},
                                    {"infected", row.infected},
                                    {"prevalence", row.prevalence},
                                    {"false_positives", row.false_positives},
                                    {"false_negatives", row.false_negatives}});
    }
    report["rows"] = std::move(rows);
    report["missed_carriers"] = missed_to_json(evaluation.missed);

    const auto path = out_dir / (evaluation.series_name + ".report.json");
    write_text_file(path, report.dump(2) + "\n");
    written.push_back(path);
    return written;
}

}  // namespace diagscreen
