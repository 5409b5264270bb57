#pragma once

#include <string>
#include <utility>
#include <vector>

#include "skewsim/function.hpp"

namespace skewsim {

struct Violation {
    std::string condition;
    double witness = 0.0;
    double value = 0.0;
};

/// Outcome of a hypothesis check. passed() is true exactly when no
/// violation was recorded.
class ConditionReport {
public:
    void add_violation(std::string condition, double witness, double value);
    void add_note(const std::string& note);

    bool passed() const noexcept { return violations_.empty(); }
    const std::vector<Violation>& violations() const noexcept { return violations_; }
    const std::string& notes() const noexcept { return notes_; }

    /// First violation of the named condition, or nullptr.
    const Violation* find(const std::string& condition) const;

    Json to_json() const;

private:
    std::vector<Violation> violations_;
    std::string notes_;
};

struct Metric {
    std::string label;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct RefinementRow {
    std::string parameter;  // e.g. "dt", "offset", "epsilon"
    double parameter_value = 0.0;
    std::string label;
    double value = 0.0;
};

/// Structured result of one experiment. The verdict is derived from the
/// metrics: an experiment passes when every metric passes.
class ExperimentReport {
public:
    explicit ExperimentReport(std::string name, Json config = Json::object())
        : name_(std::move(name)), config_(std::move(config)) {}

    void add_metric(std::string label, double value, double tolerance, bool pass);
    void add_row(std::string parameter, double parameter_value, std::string label, double value);
    void add_note(const std::string& note);
    /// Location that illustrates a failed (or borderline) metric.
    void add_witness(std::string label, double x);
    void merge(const ExperimentReport& other, const std::string& prefix);

    const std::string& name() const noexcept { return name_; }
    const Json& config() const noexcept { return config_; }
    const std::vector<Metric>& metrics() const noexcept { return metrics_; }
    const std::vector<RefinementRow>& refinement_table() const noexcept { return rows_; }
    const std::vector<std::string>& notes() const noexcept { return notes_; }
    const std::vector<std::pair<std::string, double>>& witnesses() const noexcept { return witnesses_; }
    /// Witness recorded under label, or nullptr.
    const double* witness(const std::string& label) const;
    const Metric* metric(const std::string& label) const;

    bool verdict() const noexcept;

    Json to_json() const;
    std::string refinement_csv() const;

private:
    std::string name_;
    Json config_;
    std::vector<Metric> metrics_;
    std::vector<RefinementRow> rows_;
    std::vector<std::string> notes_;
    std::vector<std::pair<std::string, double>> witnesses_;
};

/// Shortest round-trip decimal form; used for every CSV number so output is
/// byte-stable.
std::string format_double(double value);

}  // namespace skewsim
