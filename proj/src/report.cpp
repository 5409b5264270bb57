#include "skewsim/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace skewsim {

namespace {

// JSON has no inf/nan; encode them as strings so reports stay parseable.
Json number_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace

void ConditionReport::add_violation(std::string condition, double witness, double value) {
    violations_.push_back(Violation{std::move(condition), witness, value});
}

void ConditionReport::add_note(const std::string& note) {
    if (!notes_.empty()) notes_ += "; ";
    notes_ += note;
}

const Violation* ConditionReport::find(const std::string& condition) const {
    auto it = std::find_if(violations_.begin(), violations_.end(),
                           [&](const Violation& v) { return v.condition == condition; });
    return it == violations_.end() ? nullptr : &*it;
}

Json ConditionReport::to_json() const {
    Json doc;
    doc["passed"] = passed();
    doc["violations"] = Json::array();
    for (const auto& v : violations_)
        doc["violations"].push_back({{"condition", v.condition}, {"witness", number_json(v.witness)},
                                     {"value", number_json(v.value)}});
    doc["notes"] = notes_;
    return doc;
}

void ExperimentReport::add_metric(std::string label, double value, double tolerance, bool pass) {
    metrics_.push_back(Metric{std::move(label), value, tolerance, pass});
}

void ExperimentReport::add_row(std::string parameter, double parameter_value, std::string label, double value) {
    rows_.push_back(RefinementRow{std::move(parameter), parameter_value, std::move(label), value});
}

void ExperimentReport::add_note(const std::string& note) { notes_.push_back(note); }

void ExperimentReport::add_witness(std::string label, double x) { witnesses_.emplace_back(std::move(label), x); }

const double* ExperimentReport::witness(const std::string& label) const {
    for (const auto& w : witnesses_)
        if (w.first == label) return &w.second;
    return nullptr;
}

void ExperimentReport::merge(const ExperimentReport& other, const std::string& prefix) {
    for (const auto& m : other.metrics_) metrics_.push_back(Metric{prefix + m.label, m.value, m.tolerance, m.pass});
    for (const auto& r : other.rows_) rows_.push_back(RefinementRow{r.parameter, r.parameter_value, prefix + r.label, r.value});
    for (const auto& n : other.notes_) notes_.push_back(prefix + n);
    for (const auto& w : other.witnesses_) witnesses_.emplace_back(prefix + w.first, w.second);
}

const Metric* ExperimentReport::metric(const std::string& label) const {
    auto it = std::find_if(metrics_.begin(), metrics_.end(), [&](const Metric& m) { return m.label == label; });
    return it == metrics_.end() ? nullptr : &*it;
}

bool ExperimentReport::verdict() const noexcept {
    return std::all_of(metrics_.begin(), metrics_.end(), [](const Metric& m) { return m.pass; });
}

Json ExperimentReport::to_json() const {
    Json doc;
    doc["name"] = name_;
    doc["config"] = config_;
    doc["metrics"] = Json::array();
    for (const auto& m : metrics_)
        doc["metrics"].push_back({{"label", m.label}, {"value", number_json(m.value)},
                                  {"tolerance", number_json(m.tolerance)}, {"pass", m.pass}});
    doc["refinement_table"] = Json::array();
    for (const auto& r : rows_)
        doc["refinement_table"].push_back({{"parameter", r.parameter}, {"parameter_value", number_json(r.parameter_value)},
                                           {"label", r.label}, {"value", number_json(r.value)}});
    doc["notes"] = notes_;
    doc["witnesses"] = Json::object();
    for (const auto& w : witnesses_) doc["witnesses"][w.first] = number_json(w.second);
    doc["verdict"] = verdict() ? "pass" : "fail";
    return doc;
}

std::string ExperimentReport::refinement_csv() const {
    std::string out = "parameter,parameter_value,label,value\n";
    for (const auto& r : rows_) {
        out += r.parameter;
        out += ',';
        out += format_double(r.parameter_value);
        out += ',';
        out += r.label;
        out += ',';
        out += format_double(r.value);
        out += '\n';
    }
    return out;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

}  // namespace skewsim
