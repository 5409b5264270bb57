#include "skewsim/localtime.hpp"

#include <algorithm>
#include <cmath>

#include "skewsim/error.hpp"

namespace skewsim {

namespace {

double pos(double v) { return v > 0.0 ? v : 0.0; }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Tanaka residual contributed by the step x0 -> x1 at level a.
double tanaka_term(double x0, double x1, double a, LocalTimeConvention c) {
    if (c == LocalTimeConvention::right) return pos(x1 - a) - pos(x0 - a) - (x0 > a ? x1 - x0 : 0.0);
    return std::abs(x1 - a) - std::abs(x0 - a) - sign(x0 - a) * (x1 - x0);
}

bool uses_sigma(LocalTimeEstimator e) { return e == LocalTimeEstimator::occupation; }

// Weight of step k in the window estimators.
double window_weight(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma, std::size_t k,
                     LocalTimeEstimator e) {
    if (e == LocalTimeEstimator::occupation) {
        double s = sigma(path[k]);
        return s * s * grid.dt();
    }
    double d = path[k + 1] - path[k];
    return d * d;
}

void check_path(std::span<const double> path, const TimeGrid& grid) {
    if (path.size() != static_cast<std::size_t>(grid.steps()) + 1) throw InputError("path length does not match the time grid");
}

void check_step(int k, const TimeGrid& grid) {
    if (k < 0 || k > grid.steps()) throw InputError("time index outside the grid");
}

std::vector<double> pointwise(std::span<const double> x1, std::span<const double> x2, bool take_max) {
    std::vector<double> out(x1.size());
    for (std::size_t k = 0; k < x1.size(); ++k) out[k] = take_max ? std::max(x1[k], x2[k]) : std::min(x1[k], x2[k]);
    return out;
}

double total(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

std::string to_string(LocalTimeEstimator e) {
    switch (e) {
    case LocalTimeEstimator::occupation: return "occupation";
    case LocalTimeEstimator::occupation_qv: return "occupation_qv";
    case LocalTimeEstimator::tanaka: return "tanaka";
    }
    return "occupation";
}

std::string to_string(LocalTimeConvention c) { return c == LocalTimeConvention::right ? "right" : "symmetric"; }

LocalTimeEstimator estimator_from_string(const std::string& name) {
    if (name == "occupation") return LocalTimeEstimator::occupation;
    if (name == "occupation_qv") return LocalTimeEstimator::occupation_qv;
    if (name == "tanaka") return LocalTimeEstimator::tanaka;
    throw ConfigError("unknown local-time estimator '" + name + "' (occupation, occupation_qv, tanaka)");
}

LocalTimeConvention convention_from_string(const std::string& name) {
    if (name == "right") return LocalTimeConvention::right;
    if (name == "symmetric") return LocalTimeConvention::symmetric;
    throw ConfigError("unknown local-time convention '" + name + "' (right, symmetric)");
}

void LocalTimeOptions::validate() const {
    if (estimator != LocalTimeEstimator::tanaka && !(epsilon > 0.0))
        throw InputError("occupation bandwidth epsilon must be positive");
    if (!std::isfinite(tanaka_factor)) throw InputError("tanaka factor must be finite");
}

int step_of_time(const TimeGrid& grid, double t) {
    double r = t / grid.dt();
    double k = std::round(r);
    if (!(k >= 0.0 && k <= grid.steps()) || std::abs(r - k) > 1e-9 * std::max(1.0, r))
        throw InputError("time is not a knot of the grid");
    return static_cast<int>(k);
}

double estimate_occupation(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma, double a,
                           double epsilon, int k) {
    if (!(epsilon > 0.0)) throw InputError("occupation bandwidth epsilon must be positive");
    check_path(path, grid);
    check_step(k, grid);
    double acc = 0.0;
    for (int j = 0; j < k; ++j) {
        if (!(std::abs(path[j] - a) < epsilon)) continue;
        double s = sigma(path[j]);
        acc += s * s * grid.dt();
    }
    return acc / (2.0 * epsilon);
}

double tanaka_residual(std::span<const double> path, double a, int k, LocalTimeConvention convention) {
    if (k < 0 || static_cast<std::size_t>(k) >= path.size()) throw InputError("time index outside the path");
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += tanaka_term(path[j], path[j + 1], a, convention);
    return acc;
}

double estimate_tanaka(std::span<const double> path, double a, int k, LocalTimeConvention convention, double factor) {
    return factor * tanaka_residual(path, a, k, convention);
}

std::vector<double> local_time_increments(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma,
                                          double a, const LocalTimeOptions& options) {
    options.validate();
    check_path(path, grid);
    auto n = static_cast<std::size_t>(grid.steps());
    std::vector<double> inc(n, 0.0);
    if (options.estimator == LocalTimeEstimator::tanaka) {
        for (std::size_t k = 0; k < n; ++k)
            inc[k] = options.tanaka_factor * tanaka_term(path[k], path[k + 1], a, options.convention);
    } else {
        double scale = 1.0 / (2.0 * options.epsilon);
        for (std::size_t k = 0; k < n; ++k)
            if (std::abs(path[k] - a) < options.epsilon)
                inc[k] = scale * window_weight(path, grid, sigma, k, options.estimator);
    }
    return inc;
}

namespace {

// Adds the first k steps of the path to acc (tanaka) or to the difference
// array diff (window estimators), over sorted levels.
class ProfileAccumulator {
public:
    ProfileAccumulator(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma,
                       const std::vector<double>& levels, const LocalTimeOptions& options)
        : path_(path), grid_(grid), sigma_(sigma), levels_(levels), options_(options),
          acc_(levels.size(), 0.0) {}

    void advance_to(int k) {
        for (; next_ < k; ++next_) add_step(static_cast<std::size_t>(next_));
    }

    const std::vector<double>& snapshot() const { return acc_; }

private:
    void add_step(std::size_t k) {
        double x0 = path_[k];
        if (options_.estimator == LocalTimeEstimator::tanaka) {
            double x1 = path_[k + 1];
            if (x0 == x1) return;
            double lo = std::min(x0, x1);
            double hi = std::max(x0, x1);
            auto first = std::lower_bound(levels_.begin(), levels_.end(), lo);
            for (auto it = first; it != levels_.end() && *it <= hi; ++it)
                acc_[static_cast<std::size_t>(it - levels_.begin())] +=
                    options_.tanaka_factor * tanaka_term(x0, x1, *it, options_.convention);
            return;
        }
        const double eps = options_.epsilon;
        std::size_t n = levels_.size();
        auto lo = static_cast<std::size_t>(std::upper_bound(levels_.begin(), levels_.end(), x0 - eps) - levels_.begin());
        auto hi = static_cast<std::size_t>(std::lower_bound(levels_.begin(), levels_.end(), x0 + eps) - levels_.begin());
        // Match the direct test |x - a| < eps exactly at the window edges.
        while (lo > 0 && std::abs(levels_[lo - 1] - x0) < eps) --lo;
        while (lo < n && lo < hi && !(std::abs(levels_[lo] - x0) < eps)) ++lo;
        while (hi < n && std::abs(levels_[hi] - x0) < eps) ++hi;
        while (hi > lo && !(std::abs(levels_[hi - 1] - x0) < eps)) --hi;
        if (lo >= hi) return;
        double w = window_weight(path_, grid_, sigma_, k, options_.estimator) / (2.0 * eps);
        // direct sums keep every level non-decreasing in time
        for (std::size_t i = lo; i < hi; ++i) acc_[i] += w;
    }

    std::span<const double> path_;
    const TimeGrid& grid_;
    const RealFunction& sigma_;
    const std::vector<double>& levels_;
    const LocalTimeOptions& options_;
    std::vector<double> acc_;
    int next_ = 0;
};

}  // namespace

std::vector<double> local_time_profile(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma,
                                       const std::vector<double>& levels, int k, const LocalTimeOptions& options) {
    options.validate();
    check_path(path, grid);
    check_step(k, grid);
    if (!std::is_sorted(levels.begin(), levels.end())) throw InputError("levels must be sorted");
    ProfileAccumulator acc(path, grid, sigma, levels, options);
    acc.advance_to(k);
    return acc.snapshot();
}

LocalTimeField estimate_field(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma,
                              const std::vector<double>& levels, const std::vector<int>& steps,
                              const LocalTimeOptions& options) {
    options.validate();
    check_path(path, grid);
    if (!std::is_sorted(levels.begin(), levels.end())) throw InputError("levels must be sorted");
    if (!std::is_sorted(steps.begin(), steps.end())) throw InputError("field times must be sorted");
    for (int k : steps) check_step(k, grid);
    LocalTimeField field;
    field.levels = levels;
    field.steps = steps;
    field.estimator = options.estimator;
    field.epsilon = options.estimator == LocalTimeEstimator::tanaka ? 0.0 : options.epsilon;
    for (int k : steps) field.times.push_back(grid.time(k));
    field.estimates.assign(levels.size() * steps.size(), 0.0);
    ProfileAccumulator acc(path, grid, sigma, levels, options);
    for (std::size_t j = 0; j < steps.size(); ++j) {
        acc.advance_to(steps[j]);
        auto snap = acc.snapshot();
        for (std::size_t i = 0; i < levels.size(); ++i) field.estimates[i * steps.size() + j] = snap[i];
    }
    return field;
}

std::string LocalTimeField::to_csv() const {
    std::string out = "level,time,estimate,estimator,epsilon\n";
    std::string tag = to_string(estimator);
    std::string eps = format_double(epsilon);
    for (std::size_t i = 0; i < levels.size(); ++i) {
        for (std::size_t j = 0; j < times.size(); ++j) {
            out += format_double(levels[i]);
            out += ',';
            out += format_double(times[j]);
            out += ',';
            out += format_double(at(i, j));
            out += ',';
            out += tag;
            out += ',';
            out += eps;
            out += '\n';
        }
    }
    return out;
}

std::vector<double> quantile_levels(std::span<const double> values, double epsilon, double max_gap_factor) {
    if (values.empty()) throw InputError("quantile levels need at least one value");
    if (!(epsilon > 0.0) || !(max_gap_factor > 0.0)) throw InputError("quantile levels need positive spacing");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double lo = sorted.front() - epsilon;
    double hi = sorted.back() + epsilon;
    double gap = epsilon * max_gap_factor;
    auto count = static_cast<std::size_t>(std::ceil((hi - lo) / gap)) + 1;
    std::vector<double> base{lo, hi};
    for (std::size_t i = 0; i < count; ++i) {
        double q = static_cast<double>(i) / static_cast<double>(count - 1);
        auto idx = static_cast<std::size_t>(std::llround(q * static_cast<double>(sorted.size() - 1)));
        base.push_back(sorted[idx]);
    }
    std::sort(base.begin(), base.end());
    base.erase(std::unique(base.begin(), base.end()), base.end());
    std::vector<double> levels;
    levels.reserve(2 * base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        levels.push_back(base[i]);
        if (i + 1 == base.size()) break;
        double width = base[i + 1] - base[i];
        if (width > gap) {
            auto extra = static_cast<int>(std::ceil(width / gap)) - 1;
            for (int j = 1; j <= extra; ++j) levels.push_back(base[i] + width * j / (extra + 1));
        }
    }
    return levels;
}

IdentityResult occupation_residual(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma,
                                   const RealFunction& g, const std::vector<double>& levels,
                                   const LocalTimeOptions& options) {
    auto profile = local_time_profile(path, grid, sigma, levels, grid.steps(), options);
    IdentityResult r;
    for (std::size_t i = 0; i + 1 < levels.size(); ++i)
        r.lhs += 0.5 * (levels[i + 1] - levels[i]) * (g(levels[i]) * profile[i] + g(levels[i + 1]) * profile[i + 1]);
    for (int k = 0; k < grid.steps(); ++k) {
        double s = sigma(path[static_cast<std::size_t>(k)]);
        r.rhs += g(path[static_cast<std::size_t>(k)]) * s * s * grid.dt();
    }
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

IdentityResult lattice_identity_check(std::span<const double> x1, std::span<const double> x2, const TimeGrid& grid,
                                      const RealFunction& sigma, double a, const LocalTimeOptions& options) {
    check_path(x1, grid);
    check_path(x2, grid);
    auto upper = pointwise(x1, x2, true);
    auto d_max = local_time_increments(upper, grid, sigma, a, options);
    auto d1 = local_time_increments(x1, grid, sigma, a, options);
    auto d2 = local_time_increments(x2, grid, sigma, a, options);
    IdentityResult r;
    r.lhs = total(d_max);
    for (std::size_t k = 0; k < d1.size(); ++k) r.rhs += x1[k] > x2[k] ? d1[k] : d2[k];
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

IdentityResult minmax_identity_check(std::span<const double> x1, std::span<const double> x2, const TimeGrid& grid,
                                     const RealFunction& sigma, double a, const LocalTimeOptions& options) {
    check_path(x1, grid);
    check_path(x2, grid);
    auto upper = pointwise(x1, x2, true);
    auto lower = pointwise(x1, x2, false);
    IdentityResult r;
    r.lhs = total(local_time_increments(lower, grid, sigma, a, options)) +
            total(local_time_increments(upper, grid, sigma, a, options));
    r.rhs = total(local_time_increments(x1, grid, sigma, a, options)) +
            total(local_time_increments(x2, grid, sigma, a, options));
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

IdentityResult odd_power_identity_check(std::span<const double> x, std::span<const double> y, const TimeGrid& grid,
                                        int n, const LocalTimeOptions& options) {
    if (n < 1) throw InputError("odd-power identity needs n >= 1");
    if (uses_sigma(options.estimator))
        throw InputError("odd-power identity needs a path-only estimator (occupation_qv or tanaka)");
    check_path(x, grid);
    check_path(y, grid);
    const int p = 2 * n + 1;
    double biggest = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) biggest = std::max({biggest, std::abs(x[k]), std::abs(y[k])});
    if (biggest > 0.0 && p * std::log10(biggest) > 150.0)
        throw InputError("odd powers of the paths overflow; rescale the inputs");
    std::vector<double> z(x.size());
    std::vector<double> d(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        z[k] = std::pow(x[k], p) - std::pow(y[k], p);
        d[k] = x[k] - y[k];
    }
    RealFunction unused = [](double) { return 0.0; };
    IdentityResult r;
    r.lhs = total(local_time_increments(z, grid, unused, 0.0, options));
    auto dl = local_time_increments(d, grid, unused, 0.0, options);
    for (std::size_t k = 0; k < dl.size(); ++k)
        if (dl[k] != 0.0) r.rhs += (std::pow(x[k], p - 1) + std::pow(y[k], p - 1)) * dl[k];
    r.rhs *= p;
    r.residual = std::abs(r.lhs - r.rhs);
    return r;
}

SupportResult support_check(std::span<const double> x1, std::span<const double> x2, const TimeGrid& grid, double delta,
                            const LocalTimeOptions& options) {
    if (!(delta > 0.0)) throw InputError("support check needs delta > 0");
    if (uses_sigma(options.estimator))
        throw InputError("support check needs a path-only estimator (occupation_qv or tanaka)");
    check_path(x1, grid);
    check_path(x2, grid);
    std::vector<double> d(x1.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = x1[k] - x2[k];
    RealFunction unused = [](double) { return 0.0; };
    auto dl = local_time_increments(d, grid, unused, 0.0, options);
    SupportResult r;
    double away = 0.0;
    for (std::size_t k = 0; k < dl.size(); ++k) {
        double m = std::abs(dl[k]);
        r.mass += m;
        if (std::max(std::abs(x1[k]), std::abs(x2[k])) > delta) away += m;
    }
    if (r.mass == 0.0) {
        r.zero_mass = true;
        return r;
    }
    r.fraction = away / r.mass;
    return r;
}

}  // namespace skewsim
