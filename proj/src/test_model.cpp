#include "diagscreen/test_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace diagscreen {

namespace {

void require_probability(double value, const char* what) {
    // The negated form also rejects NaN.
    if (!(value >= 0.0 && value <= 1.0)) {
        throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
    }
}

}  // namespace

DiagnosticTest::DiagnosticTest(double sensitivity, double specificity, std::string label)
    : sensitivity_(sensitivity), specificity_(specificity), label_(std::move(label)) {
    require_probability(sensitivity_, "sensitivity");
    require_probability(specificity_, "specificity");
}

CohortState::CohortState(int day, double total, double infected, double healthy)
    : day_(day), total_(total), infected_(infected), healthy_(healthy) {}

CohortState CohortState::from_total(int day, double total, double infected) {
    if (day < 0) throw std::invalid_argument("day must be >= 0");
    if (!(total >= 0.0)) throw std::invalid_argument("total count must be >= 0");
    if (!(infected >= 0.0)) throw std::invalid_argument("infected count must be >= 0");
    if (infected > total) throw std::invalid_argument("infected count exceeds total population");
    return CohortState(day, total, infected, total - infected);
}

CohortState CohortState::from_counts(int day, double infected, double healthy) {
    if (day < 0) throw std::invalid_argument("day must be >= 0");
    if (!(infected >= 0.0)) throw std::invalid_argument("infected count must be >= 0");
    if (!(healthy >= 0.0)) throw std::invalid_argument("healthy count must be >= 0");
    return CohortState(day, infected + healthy, infected, healthy);
}

double CohortState::prevalence() const {
    if (!(total_ > 0.0)) throw std::logic_error("prevalence undefined when total is 0");
    return infected_ / total_;
}

double expected_false_positives(const CohortState& state, const DiagnosticTest& test) {
    if (!(state.total() > 0.0)) {
        throw std::invalid_argument("population is empty (total = 0)");
    }
    return state.healthy() * test.false_positive_rate();
}

double expected_false_negatives(const CohortState& state, const DiagnosticTest& test) {
    if (!(state.total() > 0.0)) {
        throw std::invalid_argument("population is empty (total = 0)");
    }
    return state.infected() * test.false_negative_rate();
}

double likelihood_ratio(const DiagnosticTest& test) {
    const double miss = test.false_negative_rate();
    if (miss == 0.0) {
        return test.specificity() > 0.0 ? std::numeric_limits<double>::infinity()
                                        : std::numeric_limits<double>::quiet_NaN();
    }
    return test.specificity() / miss;
}

bool is_informative(const DiagnosticTest& test) {
    return test.specificity() > 1.0 - test.sensitivity();
}

namespace presets {

DiagnosticTest hutchison() { return DiagnosticTest(0.60, 0.90, "hutchison"); }

DiagnosticTest biomedomics() { return DiagnosticTest(0.8866, 0.9063, "biomedomics"); }

std::optional<DiagnosticTest> by_name(std::string_view name) {
    if (name == "hutchison") return hutchison();
    if (name == "biomedomics") return biomedomics();
    return std::nullopt;
}

std::vector<std::string> names() { return {"hutchison", "biomedomics"}; }

}  // namespace presets

}  // namespace diagscreen
