#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "diagscreen/bayes.hpp"
#include "diagscreen/cohort.hpp"
#include "diagscreen/format.hpp"
#include "diagscreen/simulate.hpp"
#include "diagscreen/test_model.hpp"

namespace {

using diagscreen::DiagnosticTest;
using ordered_json = nlohmann::ordered_json;

constexpr int kHumanDigits = 6;

std::string human(double value) { return diagscreen::format_significant(value, kHumanDigits); }

ordered_json test_to_json(const DiagnosticTest& test) {
    return ordered_json{{"label", test.label()},
                        {"sensitivity", test.sensitivity()},
                        {"specificity", test.specificity()}};
}

std::string describe(const DiagnosticTest& test) {
    return test.label() + " (sensitivity " + human(test.sensitivity()) + ", specificity " +
           human(test.specificity()) + ")";
}

void print_json(const ordered_json& value) { std::cout << value.dump(2) << "\n"; }

// Shared --test / --sensitivity / --specificity selection.
struct TestOptions {
    std::string preset;
    std::optional<double> sensitivity;
    std::optional<double> specificity;

    void attach(CLI::App* cmd) {
        cmd->add_option("--test", preset, "built-in test preset (hutchison, biomedomics)");
        cmd->add_option("--sensitivity", sensitivity, "custom test sensitivity in [0,1]");
        cmd->add_option("--specificity", specificity, "custom test specificity in [0,1]");
    }

    DiagnosticTest resolve() const {
        if (!preset.empty()) {
            if (sensitivity || specificity) {
                throw std::invalid_argument("give either --test or --sensitivity/--specificity, not both");
            }
            auto test = diagscreen::presets::by_name(preset);
            if (!test) {
                std::string known;
                for (const auto& name : diagscreen::presets::names()) {
                    known += known.empty() ? name : ", " + name;
                }
                throw std::invalid_argument("unknown preset '" + preset + "' (available: " + known + ")");
            }
            return *test;
        }
        if (!sensitivity || !specificity) {
            throw std::invalid_argument("select a test with --test <preset> or --sensitivity and --specificity");
        }
        return DiagnosticTest(*sensitivity, *specificity);
    }
};

std::vector<double> linspace(double lo, double hi, int points) {
    if (points < 2) return {lo};
    std::vector<double> grid;
    grid.reserve(points);
    for (int i = 0; i < points; ++i) {
        grid.push_back(lo + (hi - lo) * static_cast<double>(i) / (points - 1));
    }
    return grid;
}

// ---------------------------------------------------------------- eval ----

struct EvalOptions {
    TestOptions test;
    double population = 0.0;
    std::optional<double> infected;
    std::optional<double> prevalence;
    int day = 0;
};

void run_eval(const EvalOptions& opt, bool json) {
    const DiagnosticTest test = opt.test.resolve();
    if (opt.infected.has_value() == opt.prevalence.has_value()) {
        throw std::invalid_argument("give exactly one of --infected or --prevalence");
    }
    double infected;
    if (opt.infected) {
        infected = *opt.infected;
    } else {
        if (!(*opt.prevalence >= 0.0 && *opt.prevalence <= 1.0)) {
            throw std::invalid_argument("prevalence must lie in [0,1]");
        }
        infected = opt.population * *opt.prevalence;
    }
    const auto state = diagscreen::CohortState::from_total(opt.day, opt.population, infected);
    const double fp = diagscreen::expected_false_positives(state, test);
    const double fn = diagscreen::expected_false_negatives(state, test);

    if (json) {
        print_json(ordered_json{{"command", "eval"},
                                {"test", test_to_json(test)},
                                {"state",
                                 ordered_json{{"day", state.day()},
                                              {"total", state.total()},
                                              {"infected", state.infected()},
                                              {"healthy", state.healthy()},
                                              {"prevalence", state.prevalence()}}},
                                {"false_positives", fp},
                                {"false_negatives", fn}});
        return;
    }
    std::cout << "test = " << describe(test) << "\n"
              << "population = " << human(state.total()) << " (infected " << human(state.infected())
              << ", healthy " << human(state.healthy()) << ")\n"
              << "fp = " << human(fp) << "\n"
              << "fn = " << human(fn) << "\n";
}

// -------------------------------------------------------------- repeat ----

struct RepeatOptions {
    TestOptions test;
    double prevalence = 0.0;
    int repetitions = 1;
    std::string kind = "all-negative";
};

void run_repeat(const RepeatOptions& opt, bool json) {
    const DiagnosticTest test = opt.test.resolve();
    double posterior;
    if (opt.kind == "first-positive") {
        posterior = diagscreen::posterior_first_positive_at(test, opt.prevalence, opt.repetitions);
    } else if (opt.kind == "all-negative") {
        posterior = diagscreen::posterior_all_negative(test, opt.prevalence, opt.repetitions);
    } else {
        throw std::invalid_argument("--kind must be first-positive or all-negative");
    }

    if (json) {
        print_json(ordered_json{{"command", "repeat"},
                                {"kind", opt.kind},
                                {"test", test_to_json(test)},
                                {"prevalence", opt.prevalence},
                                {"repetitions", opt.repetitions},
                                {"posterior", posterior}});
        return;
    }
    std::cout << "test = " << describe(test) << "\n"
              << "kind = " << opt.kind << ", k = " << opt.repetitions << ", prevalence = "
              << human(opt.prevalence) << "\n"
              << "posterior = " << human(posterior) << "\n";
}

// ----------------------------------------------------------- discharge ----

struct DischargeOptions {
    TestOptions test;
    std::vector<double> prevalences;
    double tolerance = 0.05;
    int cap = diagscreen::kDefaultDischargeCap;
    std::optional<int> boundaries;
};

void run_discharge(const DischargeOptions& opt, bool json) {
    const DiagnosticTest test = opt.test.resolve();
    const auto rows = diagscreen::discharge_table(test, opt.prevalences, opt.tolerance, opt.cap);

    ordered_json boundaries = ordered_json::array();
    if (opt.boundaries) {
        if (*opt.boundaries < 1) throw std::invalid_argument("--boundaries must be >= 1");
        for (int k = 1; k <= *opt.boundaries; ++k) {
            boundaries.push_back(ordered_json{
                {"negatives", k},
                {"max_prevalence", diagscreen::max_prevalence_for_k(test, k, opt.tolerance)}});
        }
    }

    if (json) {
        ordered_json table = ordered_json::array();
        for (const auto& row : rows) {
            ordered_json entry{{"prevalence", row.prevalence}};
            if (row.required_negatives) {
                entry["required_negatives"] = *row.required_negatives;
                entry["achieved_miss_probability"] = row.achieved_miss_probability;
            } else {
                entry["required_negatives"] = nullptr;
                entry["achieved_miss_probability"] = nullptr;
            }
            table.push_back(std::move(entry));
        }
        ordered_json out{{"command", "discharge"},
                         {"test", test_to_json(test)},
                         {"tolerance", opt.tolerance},
                         {"cap", opt.cap},
                         {"rows", std::move(table)}};
        if (opt.boundaries) out["boundaries"] = std::move(boundaries);
        print_json(out);
        return;
    }

    std::cout << "test = " << describe(test) << "\n"
              << "tolerance = " << human(opt.tolerance) << "\n"
              << "prevalence  negatives  miss_probability\n";
    for (const auto& row : rows) {
        std::printf("%-11s %-10s %s\n", human(row.prevalence).c_str(),
                    row.required_negatives ? std::to_string(*row.required_negatives).c_str()
                                           : "unreachable",
                    row.required_negatives ? human(row.achieved_miss_probability).c_str() : "-");
    }
    if (opt.boundaries) {
        std::cout << "negatives  max_prevalence\n";
        for (const auto& entry : boundaries) {
            std::printf("%-10d %s\n", entry["negatives"].get<int>(),
                        human(entry["max_prevalence"].get<double>()).c_str());
        }
    }
}

// -------------------------------------------------------------- cohort ----

struct CohortOptions {
    TestOptions test;
    std::string builtin;
    std::string input;
    std::string mode;
    std::string tail_allocation = "terminal";
    std::optional<int> start_day;
    std::string out_dir = ".";
    std::string export_series;
    bool report = false;
};

void run_cohort(const CohortOptions& opt, bool json) {
    const DiagnosticTest test = opt.test.resolve();

    if (opt.builtin.empty() == opt.input.empty()) {
        throw std::invalid_argument("give exactly one of --builtin or --input");
    }
    diagscreen::CohortSeries series = [&] {
        if (!opt.builtin.empty()) {
            if (opt.builtin != "diamond-princess") {
                throw std::invalid_argument("unknown builtin series '" + opt.builtin +
                                            "' (available: diamond-princess)");
            }
            if (opt.tail_allocation == "terminal") {
                return diagscreen::builtin_diamond_princess();
            }
            if (opt.tail_allocation == "uniform") {
                return diagscreen::builtin_diamond_princess(
                    diagscreen::DiamondTailAllocation::uniform);
            }
            throw std::invalid_argument("--tail-allocation must be terminal or uniform");
        }
        return diagscreen::load_series_file(opt.input);
    }();

    if (!opt.mode.empty()) {
        const auto mode = diagscreen::counting_mode_from(opt.mode);
        if (!mode) throw std::invalid_argument("--mode must be daily or cumulative");
        series = series.with_mode(*mode);
    }

    if (!opt.export_series.empty()) {
        diagscreen::write_series_file(series, opt.export_series);
    }

    const int start_day = opt.start_day.value_or(series.first_day());
    const auto evaluation = diagscreen::evaluate_testing_policy(series, test, start_day);

    auto files = diagscreen::emit_report(evaluation, diagscreen::ReportFormat::delimited_table,
                                         opt.out_dir);
    if (opt.report) {
        auto json_files = diagscreen::emit_report(
            evaluation, diagscreen::ReportFormat::structured_document, opt.out_dir);
        files.insert(files.end(), json_files.begin(), json_files.end());
    }

    ordered_json file_list = ordered_json::array();
    for (const auto& path : files) file_list.push_back(path.string());

    if (json) {
        ordered_json missed{{"rate_times_total_confirmed",
                             evaluation.missed.rate_times_total_confirmed}};
        if (evaluation.missed.checkpoint_day) {
            missed["checkpoint_day"] = *evaluation.missed.checkpoint_day;
            missed["daily_mode_missed_at_checkpoint"] =
                *evaluation.missed.daily_missed_at_checkpoint;
            missed["cumulative_mode_missed_at_checkpoint"] =
                *evaluation.missed.cumulative_missed_at_checkpoint;
        }
        if (evaluation.missed.reference_figure) {
            missed["reference_figure"] = *evaluation.missed.reference_figure;
        }
        print_json(ordered_json{{"command", "cohort"},
                                {"series", evaluation.series_name},
                                {"mode", std::string(diagscreen::to_string(evaluation.mode))},
                                {"test", test_to_json(test)},
                                {"start_day", evaluation.start_day},
                                {"initial_population", evaluation.initial_population},
                                {"total_confirmed", evaluation.total_confirmed},
                                {"row_count", evaluation.rows.size()},
                                {"missed_carriers", std::move(missed)},
                                {"files", std::move(file_list)}});
        return;
    }
    std::cout << "series = " << evaluation.series_name << " (initial population "
              << evaluation.initial_population << ", " << evaluation.total_confirmed
              << " confirmed)\n"
              << "mode = " << diagscreen::to_string(evaluation.mode) << "\n"
              << "test = " << describe(test) << "\n"
              << "start_day = " << evaluation.start_day << ", rows = " << evaluation.rows.size()
              << "\n";
    for (const auto& path : files) std::cout << "wrote " << path.string() << "\n";
}

// ------------------------------------------------------------ simulate ----

struct SimulateOptions {
    TestOptions test;
    std::string kind = "all-negative";
    double prevalence = 0.0;
    int repetitions = 1;
    long long trials = 1000000;
    long long population = 1000000;
    std::uint64_t seed = 1;
};

void run_simulate(const SimulateOptions& opt, bool json) {
    const DiagnosticTest test = opt.test.resolve();

    if (opt.kind == "screen") {
        const auto tally =
            diagscreen::simulate_cohort_screen(opt.population, opt.prevalence, test, opt.seed);
        if (json) {
            print_json(ordered_json{{"command", "simulate"},
                                    {"kind", "screen"},
                                    {"test", test_to_json(test)},
                                    {"prevalence", opt.prevalence},
                                    {"population", opt.population},
                                    {"seed", opt.seed},
                                    {"true_positives", tally.true_positives},
                                    {"false_positives", tally.false_positives},
                                    {"true_negatives", tally.true_negatives},
                                    {"false_negatives", tally.false_negatives}});
            return;
        }
        std::cout << "kind = screen, seed = " << opt.seed << "\n"
                  << "test = " << describe(test) << ", prevalence = " << human(opt.prevalence)
                  << "\n"
                  << "population = " << opt.population << "\n"
                  << "true_positives = " << tally.true_positives << "\n"
                  << "false_positives = " << tally.false_positives << "\n"
                  << "true_negatives = " << tally.true_negatives << "\n"
                  << "false_negatives = " << tally.false_negatives << "\n";
        return;
    }

    const diagscreen::TrialConfig config{test, opt.prevalence, opt.repetitions, opt.trials,
                                         opt.seed};
    diagscreen::PosteriorEstimate estimate{};
    double analytic = std::numeric_limits<double>::quiet_NaN();
    if (opt.kind == "first-positive") {
        estimate = diagscreen::estimate_posterior_first_positive(config);
        analytic = diagscreen::posterior_first_positive_at(test, opt.prevalence, opt.repetitions);
    } else if (opt.kind == "all-negative") {
        estimate = diagscreen::estimate_posterior_all_negative(config);
        analytic = diagscreen::posterior_all_negative(test, opt.prevalence, opt.repetitions);
    } else {
        throw std::invalid_argument("--kind must be screen, first-positive or all-negative");
    }

    if (json) {
        ordered_json out{{"command", "simulate"},
                         {"kind", opt.kind},
                         {"test", test_to_json(test)},
                         {"prevalence", opt.prevalence},
                         {"repetitions", opt.repetitions},
                         {"trials", opt.trials},
                         {"seed", opt.seed},
                         {"conditioning_hits", estimate.conditioning_hits},
                         {"underpowered", estimate.underpowered}};
        if (estimate.has_estimate()) {
            out["estimate"] = estimate.estimate;
            out["standard_error"] = estimate.standard_error;
        } else {
            out["estimate"] = nullptr;
            out["standard_error"] = nullptr;
        }
        out["analytic"] = analytic;
        print_json(out);
        return;
    }
    std::cout << "kind = " << opt.kind << ", seed = " << opt.seed << ", trials = " << opt.trials
              << "\n"
              << "test = " << describe(test) << ", prevalence = " << human(opt.prevalence)
              << ", k = " << opt.repetitions << "\n"
              << "conditioning_hits = " << estimate.conditioning_hits
              << (estimate.underpowered ? " (underpowered)" : "") << "\n";
    if (estimate.has_estimate()) {
        std::cout << "estimate = " << human(estimate.estimate) << "\n"
                  << "standard_error = " << human(estimate.standard_error) << "\n";
    } else {
        std::cout << "estimate = (no conditioning hits)\n";
    }
    std::cout << "analytic = " << human(analytic) << "\n";
}

// -------------------------------------------------------------- curves ----

struct CurvesOptions {
    TestOptions test;
    std::string family = "all-negative";
    std::vector<int> k_values{1, 2, 3, 4, 5, 6};
    int k_fixed = 1;
    std::vector<double> prevalences{0.0001, 0.001, 0.01, 0.1, 0.25};
    long long population = 10000;
    int grid_points = 101;
    double grid_min = 0.0;
    double grid_max = 1.0;
};

void run_curves(const CurvesOptions& opt, bool json) {
    if (opt.grid_points < 1) throw std::invalid_argument("--grid-points must be >= 1");

    std::string header;
    std::vector<std::vector<double>> rows;

    if (opt.family == "first-positive" || opt.family == "all-negative") {
        const DiagnosticTest test = opt.test.resolve();
        const auto kind = opt.family == "first-positive"
                              ? diagscreen::PosteriorKind::first_positive
                              : diagscreen::PosteriorKind::all_negative;
        const auto points = diagscreen::posterior_curve(
            test, linspace(opt.grid_min, opt.grid_max, opt.grid_points), opt.k_values, kind);
        header = "k,prevalence,probability";
        for (const auto& point : points) {
            rows.push_back({static_cast<double>(point.repetitions), point.prevalence,
                            point.probability});
        }
    } else if (opt.family == "fn-vs-sensitivity" || opt.family == "fp-vs-specificity") {
        const bool fn_family = opt.family == "fn-vs-sensitivity";
        header = fn_family ? "prevalence,sensitivity,false_negatives"
                           : "prevalence,specificity,false_positives";
        for (double prevalence : opt.prevalences) {
            const auto state = diagscreen::CohortState::from_total(
                0, static_cast<double>(opt.population),
                static_cast<double>(opt.population) * prevalence);
            for (double swept : linspace(opt.grid_min, opt.grid_max, opt.grid_points)) {
                const DiagnosticTest test = fn_family ? DiagnosticTest(swept, 1.0)
                                                      : DiagnosticTest(1.0, swept);
                const double count = fn_family
                                         ? diagscreen::expected_false_negatives(state, test)
                                         : diagscreen::expected_false_positives(state, test);
                rows.push_back({prevalence, swept, count});
            }
        }
    } else if (opt.family == "first-positive-surface" || opt.family == "all-negative-surface") {
        const bool first_positive = opt.family == "first-positive-surface";
        header = "prevalence,sensitivity,specificity,probability";
        // Default surface grid stays off the degenerate sensitivity/specificity
        // endpoints, where some conditioning patterns are impossible.
        const double lo = opt.grid_min > 0.0 ? opt.grid_min : 0.05;
        const double hi = opt.grid_max < 1.0 ? opt.grid_max : 0.95;
        const auto grid = linspace(lo, hi, opt.grid_points == 101 ? 19 : opt.grid_points);
        for (double prevalence : opt.prevalences) {
            for (double sensitivity : grid) {
                for (double specificity : grid) {
                    const DiagnosticTest test(sensitivity, specificity);
                    const double probability =
                        first_positive
                            ? diagscreen::posterior_first_positive_at(test, prevalence, opt.k_fixed)
                            : diagscreen::posterior_all_negative(test, prevalence, opt.k_fixed);
                    rows.push_back({prevalence, sensitivity, specificity, probability});
                }
            }
        }
    } else {
        throw std::invalid_argument(
            "--family must be one of first-positive, all-negative, fn-vs-sensitivity, "
            "fp-vs-specificity, first-positive-surface, all-negative-surface");
    }

    if (json) {
        ordered_json out{{"command", "curves"}, {"family", opt.family}, {"columns", header},
                         {"rows", rows}};
        print_json(out);
        return;
    }
    std::cout << header << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            std::cout << (i ? "," : "") << human(row[i]);
        }
        std::cout << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"expected false test counts, repeated-testing posteriors and cohort screening "
                 "analysis for imperfect diagnostic tests"};
    app.require_subcommand(1);
    bool json = false;
    app.add_flag("--json", json, "machine-readable JSON output (full precision)");

    EvalOptions eval_opt;
    auto* eval = app.add_subcommand("eval", "expected false positives/negatives for one day");
    eval_opt.test.attach(eval);
    eval->add_option("--population", eval_opt.population, "cohort size")->required();
    eval->add_option("--infected", eval_opt.infected, "infected count (may be fractional)");
    eval->add_option("--prevalence", eval_opt.prevalence, "infected fraction in [0,1]");
    eval->add_option("--day", eval_opt.day, "day index for the report");

    RepeatOptions repeat_opt;
    auto* repeat = app.add_subcommand("repeat", "posterior after repeated independent tests");
    repeat_opt.test.attach(repeat);
    repeat->add_option("--prevalence", repeat_opt.prevalence, "cohort prevalence")->required();
    repeat->add_option("--k", repeat_opt.repetitions, "number of repetitions")->required();
    repeat->add_option("--kind", repeat_opt.kind,
                       "first-positive (k-1 negatives then a positive) or all-negative");

    DischargeOptions discharge_opt;
    auto* discharge = app.add_subcommand(
        "discharge", "minimal consecutive negatives per prevalence (ties at the tolerance pass)");
    discharge_opt.test.attach(discharge);
    discharge->add_option("--prevalence", discharge_opt.prevalences, "prevalence list")
        ->required()
        ->delimiter(',');
    discharge->add_option("--tolerance", discharge_opt.tolerance, "miss-probability tolerance");
    discharge->add_option("--cap", discharge_opt.cap, "largest k to consider");
    discharge->add_option("--boundaries", discharge_opt.boundaries,
                          "also print the largest admissible prevalence for k = 1..N");

    CohortOptions cohort_opt;
    auto* cohort = app.add_subcommand("cohort", "evaluate daily testing of an evolving cohort");
    cohort_opt.test.attach(cohort);
    cohort->add_option("--builtin", cohort_opt.builtin, "built-in series (diamond-princess)");
    cohort->add_option("--input", cohort_opt.input, "series file to load");
    cohort->add_option("--mode", cohort_opt.mode, "daily or cumulative counting");
    cohort->add_option("--tail-allocation", cohort_opt.tail_allocation,
                       "terminal or uniform booking of the built-in series' 84-case tail");
    cohort->add_option("--start-day", cohort_opt.start_day, "first day tested (default: first day)");
    cohort->add_option("--out", cohort_opt.out_dir, "output directory for the series files");
    cohort->add_option("--export-series", cohort_opt.export_series,
                       "also write the series itself to this path");
    cohort->add_flag("--report", cohort_opt.report, "also write <name>.report.json");

    SimulateOptions simulate_opt;
    auto* simulate = app.add_subcommand("simulate", "seeded Monte Carlo oracle");
    simulate_opt.test.attach(simulate);
    simulate->add_option("--kind", simulate_opt.kind, "screen, first-positive or all-negative");
    simulate->add_option("--prevalence", simulate_opt.prevalence, "cohort prevalence")->required();
    simulate->add_option("--k", simulate_opt.repetitions, "repetitions per trial");
    simulate->add_option("--trials", simulate_opt.trials, "number of trials");
    simulate->add_option("--population", simulate_opt.population, "population for kind=screen");
    simulate->add_option("--seed", simulate_opt.seed, "RNG seed (echoed in the output)");

    CurvesOptions curves_opt;
    auto* curves = app.add_subcommand("curves", "plot-data grids (CSV on stdout)");
    curves_opt.test.attach(curves);
    curves->add_option("--family", curves_opt.family,
                       "first-positive | all-negative | fn-vs-sensitivity | fp-vs-specificity | "
                       "first-positive-surface | all-negative-surface");
    curves->add_option("--k", curves_opt.k_values, "k list for the posterior families")
        ->delimiter(',');
    curves->add_option("--k-fixed", curves_opt.k_fixed, "k for the surface families");
    curves->add_option("--prevalence", curves_opt.prevalences,
                       "prevalence list for the sweep/surface families")
        ->delimiter(',');
    curves->add_option("--population", curves_opt.population, "cohort size for the count families");
    curves->add_option("--grid-points", curves_opt.grid_points, "points in the swept grid");
    curves->add_option("--grid-min", curves_opt.grid_min, "lower end of the swept grid");
    curves->add_option("--grid-max", curves_opt.grid_max, "upper end of the swept grid");

    try {
        app.parse(argc, argv);
        if (*eval) run_eval(eval_opt, json);
        if (*repeat) run_repeat(repeat_opt, json);
        if (*discharge) run_discharge(discharge_opt, json);
        if (*cohort) run_cohort(cohort_opt, json);
        if (*simulate) run_simulate(simulate_opt, json);
        if (*curves) run_curves(curves_opt, json);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const diagscreen::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
