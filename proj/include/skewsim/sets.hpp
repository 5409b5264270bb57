#pragma once

#include <string>
#include <vector>

#include "skewsim/function.hpp"

namespace skewsim {

/// Interval of the real line; endpoints may be infinite (always open there).
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_closed = true;
    bool hi_closed = true;

    bool contains(double x) const noexcept;
    double length() const noexcept { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

/// Finite union of disjoint intervals minus a finite point set.
struct IntervalUnion {
    std::vector<Interval> parts;
    std::vector<double> excluded;

    static IntervalUnion real_line();
    static IntervalUnion of(std::vector<Interval> parts);

    /// Throws InputError on NaN bounds, lo > hi, or overlapping parts.
    void validate() const;
    bool contains(double x) const noexcept;
};

/// Declared zero set N of a coefficient: isolated points plus disjoint
/// intervals (closed unless flagged otherwise). Membership is exact.
class ZeroSet {
public:
    ZeroSet() = default;
    ZeroSet(std::vector<double> points, std::vector<Interval> intervals);

    bool contains(double x) const noexcept;
    bool empty() const noexcept { return points_.empty() && intervals_.empty(); }
    const std::vector<double>& points() const noexcept { return points_; }
    const std::vector<Interval>& intervals() const noexcept { return intervals_; }

    /// Structural inclusion: every point and interval of *this lies in other.
    /// On failure, witness receives an offending location.
    bool subset_of(const ZeroSet& other, double* witness = nullptr) const;

    Json to_json() const;
    static ZeroSet from_json(const Json& doc);

    bool operator==(const ZeroSet&) const = default;

private:
    std::vector<double> points_;
    std::vector<Interval> intervals_;
};

}  // namespace skewsim
