#include "skewsim/sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "skewsim/error.hpp"

namespace skewsim {

bool Interval::contains(double x) const noexcept {
    bool above = lo_closed ? x >= lo : x > lo;
    bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
}

IntervalUnion IntervalUnion::real_line() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return IntervalUnion{{Interval{-inf, inf, false, false}}, {}};
}

IntervalUnion IntervalUnion::of(std::vector<Interval> parts) {
    IntervalUnion u{std::move(parts), {}};
    u.validate();
    return u;
}

namespace {

void check_interval(const Interval& iv, const char* what) {
    if (std::isnan(iv.lo) || std::isnan(iv.hi)) throw InputError(std::string(what) + ": NaN interval bound");
    if (iv.lo > iv.hi) throw InputError(std::string(what) + ": interval with lo > hi");
}

// Sorted copy; throws when two parts share a point.
std::vector<Interval> sorted_disjoint(std::vector<Interval> parts, const char* what) {
    for (const auto& iv : parts) check_interval(iv, what);
    std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto& prev = parts[i - 1];
        const auto& cur = parts[i];
        bool touch = prev.hi > cur.lo || (prev.hi == cur.lo && prev.hi_closed && cur.lo_closed);
        if (touch) throw InputError(std::string(what) + ": overlapping intervals");
    }
    return parts;
}

}  // namespace

void IntervalUnion::validate() const {
    sorted_disjoint(parts, "interval union");
    for (double p : excluded)
        if (std::isnan(p)) throw InputError("interval union: NaN excluded point");
}

bool IntervalUnion::contains(double x) const noexcept {
    if (std::find(excluded.begin(), excluded.end(), x) != excluded.end()) return false;
    return std::any_of(parts.begin(), parts.end(), [x](const Interval& iv) { return iv.contains(x); });
}

ZeroSet::ZeroSet(std::vector<double> points, std::vector<Interval> intervals)
    : points_(std::move(points)), intervals_(sorted_disjoint(std::move(intervals), "zero set")) {
    for (double p : points_)
        if (std::isnan(p)) throw InputError("zero set: NaN point");
    std::sort(points_.begin(), points_.end());
    points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
}

bool ZeroSet::contains(double x) const noexcept {
    if (std::binary_search(points_.begin(), points_.end(), x)) return true;
    return std::any_of(intervals_.begin(), intervals_.end(), [x](const Interval& iv) { return iv.contains(x); });
}

bool ZeroSet::subset_of(const ZeroSet& other, double* witness) const {
    for (double p : points_) {
        if (!other.contains(p)) {
            if (witness) *witness = p;
            return false;
        }
    }
    for (const auto& iv : intervals_) {
        bool covered = std::any_of(other.intervals_.begin(), other.intervals_.end(), [&](const Interval& o) {
            bool lo_ok = o.lo < iv.lo || (o.lo == iv.lo && (o.lo_closed || !iv.lo_closed));
            bool hi_ok = o.hi > iv.hi || (o.hi == iv.hi && (o.hi_closed || !iv.hi_closed));
            return lo_ok && hi_ok;
        });
        if (!covered && iv.lo == iv.hi && other.contains(iv.lo)) covered = true;
        if (!covered) {
            if (witness) *witness = std::isfinite(iv.lo) ? iv.lo : iv.hi;
            return false;
        }
    }
    return true;
}

namespace {

Json bound_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
    return v;
}

double bound_from_json(const Json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw ConfigError("interval bound must be a number, \"inf\" or \"-inf\"");
}

}  // namespace

Json ZeroSet::to_json() const {
    Json doc;
    doc["points"] = points_;
    doc["intervals"] = Json::array();
    for (const auto& iv : intervals_) {
        Json j = Json::array({bound_to_json(iv.lo), bound_to_json(iv.hi)});
        if (!iv.lo_closed || !iv.hi_closed) {
            doc["intervals"].push_back(Json{{"lo", j[0]}, {"hi", j[1]}, {"lo_closed", iv.lo_closed},
                                            {"hi_closed", iv.hi_closed}});
        } else {
            doc["intervals"].push_back(j);
        }
    }
    return doc;
}

ZeroSet ZeroSet::from_json(const Json& doc) {
    if (doc.is_null()) return {};
    if (!doc.is_object()) throw ConfigError("zero_set must be an object");
    check_keys(doc, {"points", "intervals"}, "zero_set");
    std::vector<double> points;
    std::vector<Interval> intervals;
    if (auto it = doc.find("points"); it != doc.end()) {
        for (const auto& p : *it) {
            if (!p.is_number()) throw ConfigError("zero_set.points must hold numbers");
            points.push_back(p.get<double>());
        }
    }
    if (auto it = doc.find("intervals"); it != doc.end()) {
        for (const auto& iv : *it) {
            if (iv.is_array() && iv.size() == 2) {
                intervals.push_back(Interval{bound_from_json(iv[0]), bound_from_json(iv[1]), true, true});
            } else if (iv.is_object()) {
                check_keys(iv, {"lo", "hi", "lo_closed", "hi_closed"}, "zero_set interval");
                Interval out{bound_from_json(iv.at("lo")), bound_from_json(iv.at("hi")), iv.value("lo_closed", true),
                             iv.value("hi_closed", true)};
                intervals.push_back(out);
            } else {
                throw ConfigError("zero_set.intervals entries must be [lo, hi] or {lo, hi, lo_closed, hi_closed}");
            }
        }
    }
    for (auto& iv : intervals) {
        if (std::isinf(iv.lo)) iv.lo_closed = false;
        if (std::isinf(iv.hi)) iv.hi_closed = false;
    }
    try {
        return ZeroSet(std::move(points), std::move(intervals));
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace skewsim
