#include "skewsim/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "skewsim/error.hpp"
#include "skewsim/quadrature.hpp"

namespace skewsim {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::string describe(const char* what, double x) {
    std::ostringstream out;
    out.precision(17);
    out << what << " " << x;
    return out.str();
}

// Neumaier-compensated running sum.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + carry; }
};

// Up to n points of the zero-set interval iv clipped to [lo, hi].
std::vector<double> interval_samples(const Interval& iv, double lo, double hi, int n) {
    std::vector<double> out;
    double a = std::max(iv.lo, lo);
    double b = std::min(iv.hi, hi);
    if (!(a <= b)) return out;
    if (a == b) {
        if (iv.contains(a)) out.push_back(a);
        return out;
    }
    for (int i = 0; i <= n; ++i) {
        double x = i == n ? b : a + (b - a) * i / n;
        if (iv.contains(x)) out.push_back(x);
    }
    return out;
}

double distance_to(const ZeroSet& z, double a) {
    double d = inf;
    for (double p : z.points()) d = std::min(d, std::abs(a - p));
    for (const auto& iv : z.intervals()) {
        if (a < iv.lo)
            d = std::min(d, iv.lo - a);
        else if (a > iv.hi)
            d = std::min(d, a - iv.hi);
        else
            d = 0.0;
    }
    return d;
}

}  // namespace

std::string DiffusionSpec::hash() const { return hex64(hash_json(description)); }

ConditionReport DiffusionSpec::check_consistency(double lo, double hi, int samples) const {
    ConditionReport report;
    for (double p : zero_set.points()) {
        if (p < lo || p > hi) continue;
        double s = sigma(p);
        if (s != 0.0) report.add_violation("zero_set", p, s);
    }
    for (const auto& iv : zero_set.intervals()) {
        for (double x : interval_samples(iv, lo, hi, 32)) {
            double s = sigma(x);
            if (s != 0.0) {
                report.add_violation("zero_set", x, s);
                break;
            }
        }
    }
    int undeclared = 0;
    for (int i = 0; i < samples; ++i) {
        double x = samples == 1 ? lo : lo + (hi - lo) * i / (samples - 1);
        double s = sigma(x);
        if (!std::isfinite(s)) {
            report.add_violation("sigma_finite", x, s);
            break;
        }
        if (s == 0.0 && !zero_set.contains(x)) ++undeclared;
        if (growth_bound) {
            auto [A, B] = *growth_bound;
            double bound = A * (B + std::abs(x));
            if (std::abs(s) > bound * (1.0 + 1e-12)) {
                report.add_violation("growth_bound", x, s);
                break;
            }
        }
    }
    if (undeclared > 0) report.add_note(std::to_string(undeclared) + " sampled zeros of sigma lie outside the declared zero set");
    return report;
}

DiffusionSpec DiffusionSpec::from_json(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("spec must be an object");
    if (!doc.contains("sigma")) throw ConfigError("spec.sigma is required");
    check_keys(doc, {"sigma", "zero_set", "drift", "growth_bound", "label"}, "spec");
    DiffusionSpec spec;
    spec.description = doc;
    spec.sigma = make_function(doc["sigma"]);
    if (doc.contains("zero_set")) spec.zero_set = ZeroSet::from_json(doc["zero_set"]);
    if (doc.contains("drift") && !doc["drift"].is_null()) spec.drift = make_function(doc["drift"]);
    if (doc.contains("growth_bound") && !doc["growth_bound"].is_null()) {
        const auto& g = doc["growth_bound"];
        if (!g.is_array() || g.size() != 2 || !g[0].is_number() || !g[1].is_number())
            throw ConfigError("spec.growth_bound must be [A, B]");
        double A = g[0].get<double>();
        double B = g[1].get<double>();
        if (!(A >= 0.0) || !(B >= 0.0)) throw ConfigError("spec.growth_bound entries must be non-negative");
        spec.growth_bound = std::make_pair(A, B);
    }
    return spec;
}

DiffusionSpec DiffusionSpec::constant(double sigma) {
    DiffusionSpec spec;
    spec.sigma = [sigma](double) { return sigma; };
    spec.description = Json{{"sigma", {{"kind", "const"}, {"value", sigma}}}};
    if (sigma == 0.0) {
        spec.zero_set = ZeroSet({}, {Interval{-inf, inf, false, false}});
        spec.description["zero_set"] = spec.zero_set.to_json();
    }
    return spec;
}

DiffusionSpec DiffusionSpec::without_drift() const {
    DiffusionSpec copy = *this;
    copy.drift = nullptr;
    copy.description.erase("drift");
    return copy;
}

ZvonkinTransform build_transform(const SignedMeasure& nu, double x_min, double x_max, int resolution) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max))
        throw InputError("transform domain needs finite x_min < x_max");
    if (!(x_min <= 0.0 && 0.0 <= x_max)) throw InputError("transform domain must contain 0");
    if (resolution < 1) throw InputError("transform resolution must be positive");
    for (const auto& a : nu.atoms())
        if (a.location < x_min || a.location > x_max)
            throw InputError(describe("transform domain excludes the atom at", a.location));
    atom_product(nu, x_max);  // rejects |weight| >= 1

    ZvonkinTransform t;
    t.identity_ = nu.empty();

    auto& knots = t.knots_;
    knots.reserve(static_cast<std::size_t>(resolution) + nu.atoms().size() + 2 * nu.pieces().size() + 2);
    double h = (x_max - x_min) / resolution;
    for (int i = 0; i < resolution; ++i) knots.push_back(x_min + i * h);
    knots.push_back(x_max);
    knots.push_back(0.0);
    for (const auto& a : nu.atoms()) knots.push_back(a.location);
    for (const auto& p : nu.pieces()) {
        if (p.lo() > x_min && p.lo() < x_max) knots.push_back(p.lo());
        if (p.hi() > x_min && p.hi() < x_max) knots.push_back(p.hi());
        if (p.kind() == DensityPiece::Kind::table)
            for (double x : p.xs())
                if (x > x_min && x < x_max) knots.push_back(x);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    const std::size_t n = knots.size();
    t.f_right_.resize(n);
    t.f_left_.resize(n);
    const auto& atoms = nu.atoms();
    std::size_t next_atom = 0;
    double prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = knots[i];
        double scale = nu.pieces().empty() ? 1.0 : std::exp(-2.0 * continuous_cdf(nu, x));
        t.f_left_[i] = scale * prod;
        while (next_atom < atoms.size() && atoms[next_atom].location <= x) {
            double w = atoms[next_atom].weight;
            prod *= (1.0 - w) / (1.0 + w);
            ++next_atom;
        }
        t.f_right_[i] = scale * prod;
    }
    t.f_left_[0] = t.f_right_[0];

    // F accumulated outward from the knot at 0 so that F(0) = 0 exactly.
    auto zero_it = std::lower_bound(knots.begin(), knots.end(), 0.0);
    std::size_t z = static_cast<std::size_t>(zero_it - knots.begin());
    t.F_.assign(n, 0.0);
    CompensatedSum up;
    for (std::size_t i = z; i + 1 < n; ++i) {
        up.add(0.5 * (knots[i + 1] - knots[i]) * (t.f_right_[i] + t.f_left_[i + 1]));
        t.F_[i + 1] = up.value();
    }
    CompensatedSum down;
    for (std::size_t i = z; i > 0; --i) {
        down.add(-0.5 * (knots[i] - knots[i - 1]) * (t.f_right_[i - 1] + t.f_left_[i]));
        t.F_[i - 1] = down.value();
    }

    t.m_lower_ = std::min(*std::min_element(t.f_right_.begin(), t.f_right_.end()),
                          *std::min_element(t.f_left_.begin(), t.f_left_.end()));
    t.m_upper_ = std::max(*std::max_element(t.f_right_.begin(), t.f_right_.end()),
                          *std::max_element(t.f_left_.begin(), t.f_left_.end()));
    if (!(t.m_lower_ > 0.0) || !std::isfinite(t.m_upper_))
        throw InputError("transform density f is degenerate on the domain");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(t.F_[i + 1] > t.F_[i])) throw InputError("transform F is not strictly increasing; refine the domain");
    return t;
}

std::size_t ZvonkinTransform::cell_of_x(double x) const {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(i, knots_.size() - 2);
}

double ZvonkinTransform::F(double x) const {
    if (!in_domain(x)) throw RangeError(describe("F evaluated outside the transform domain at", x));
    if (identity_) return x;
    std::size_t i = cell_of_x(x);
    double h = knots_[i + 1] - knots_[i];
    double d = x - knots_[i];
    if (d >= h) return F_[i + 1];
    double slope = (f_left_[i + 1] - f_right_[i]) / h;
    return F_[i] + d * (f_right_[i] + 0.5 * slope * d);
}

double ZvonkinTransform::f(double x) const {
    if (!in_domain(x)) throw RangeError(describe("f evaluated outside the transform domain at", x));
    if (identity_) return 1.0;
    std::size_t i = cell_of_x(x);
    double h = knots_[i + 1] - knots_[i];
    double d = x - knots_[i];
    if (d >= h) return f_left_[i + 1];
    return f_right_[i] + (f_left_[i + 1] - f_right_[i]) * (d / h);
}

double ZvonkinTransform::inverse_in_cell(std::size_t i, double y) const {
    double r = y - F_[i];
    if (r <= 0.0) return knots_[i];
    if (y >= F_[i + 1]) return knots_[i + 1];
    double h = knots_[i + 1] - knots_[i];
    double slope = (f_left_[i + 1] - f_right_[i]) / h;
    double f0 = f_right_[i];
    // Root of f0 d + slope d^2 / 2 = r in the cancellation-free form.
    double disc = std::max(f0 * f0 + 2.0 * slope * r, 0.0);
    double d = 2.0 * r / (f0 + std::sqrt(disc));
    return knots_[i] + std::min(d, h);
}

double ZvonkinTransform::F_inverse(double y) const {
    if (!in_image(y)) throw RangeError(describe("F inverse evaluated outside the transform image at", y));
    if (identity_) return y;
    auto it = std::upper_bound(F_.begin(), F_.end(), y);
    std::size_t i = it == F_.begin() ? 0 : static_cast<std::size_t>(it - F_.begin()) - 1;
    i = std::min(i, F_.size() - 2);
    return inverse_in_cell(i, y);
}

std::pair<double, double> ZvonkinTransform::inverse_and_f(double y) const {
    if (!in_image(y)) throw RangeError(describe("F inverse evaluated outside the transform image at", y));
    if (identity_) return {y, 1.0};
    auto it = std::upper_bound(F_.begin(), F_.end(), y);
    std::size_t i = it == F_.begin() ? 0 : static_cast<std::size_t>(it - F_.begin()) - 1;
    i = std::min(i, F_.size() - 2);
    double x = inverse_in_cell(i, y);
    double h = knots_[i + 1] - knots_[i];
    double d = x - knots_[i];
    if (d >= h) return {x, i + 2 < knots_.size() ? f_right_[i + 1] : f_left_[i + 1]};
    return {x, f_right_[i] + (f_left_[i + 1] - f_right_[i]) * (d / h)};
}

std::string ZvonkinTransform::to_csv() const {
    std::string out = "knot,f,F\n";
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        out += format_double(knots_[i]);
        out += ',';
        out += format_double(f_right_[i]);
        out += ',';
        out += format_double(F_[i]);
        out += '\n';
    }
    return out;
}

RealFunction build_sigma_tilde(std::shared_ptr<const ZvonkinTransform> t, const DiffusionSpec& spec) {
    RealFunction sigma = spec.sigma;
    return [t = std::move(t), sigma = std::move(sigma)](double y) {
        auto [x, fx] = t->inverse_and_f(y);
        return fx * sigma(x);
    };
}

SignedMeasure drift_to_measure(const DiffusionSpec& spec, double lo, double hi, int resolution) {
    if (!spec.has_drift()) throw InputError("drift_to_measure needs a drift");
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi) || resolution < 1)
        throw InputError("drift_to_measure needs a finite domain lo < hi and a positive resolution");
    const auto& b = spec.drift;

    auto violation = [](double x, const char* what) {
        throw ConditionError("A2'", x, describe(what, x));
    };
    for (double p : spec.zero_set.points())
        if (p >= lo && p <= hi && b(p) != 0.0) violation(p, "(A2') sigma vanishes where the drift does not, at");
    for (const auto& iv : spec.zero_set.intervals())
        for (double x : interval_samples(iv, lo, hi, 64))
            if (b(x) != 0.0) violation(x, "(A2') sigma vanishes where the drift does not, at");

    std::vector<double> xs(static_cast<std::size_t>(resolution) + 1);
    std::vector<double> ys(xs.size());
    double h = (hi - lo) / resolution;
    bool any = false;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        double x = j + 1 == xs.size() ? hi : lo + static_cast<double>(j) * h;
        xs[j] = x;
        double bx = b(x);
        if (bx == 0.0) continue;
        double s = spec.sigma(x);
        if (s == 0.0) violation(x, "(A2') sigma vanishes where the drift does not, at");
        double v = bx / (s * s);
        if (!std::isfinite(v) || std::abs(v) > divergence_guard) violation(x, "(A2') density b/sigma^2 is not integrable near");
        ys[j] = v;
        any = true;
    }
    if (!any) return SignedMeasure{};
    double tv = 0.0;
    double worst = xs[0];
    for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
        tv += 0.5 * (xs[j + 1] - xs[j]) * (std::abs(ys[j]) + std::abs(ys[j + 1]));
        if (std::abs(ys[j]) > std::abs(ys[0]) && std::abs(ys[j]) >= std::abs(ys[j + 1])) worst = xs[j];
    }
    if (!(tv <= divergence_guard)) violation(worst, "(A2') density b/sigma^2 is not integrable near");
    return SignedMeasure({}, {DensityPiece::table(std::move(xs), std::move(ys))});
}

ConditionReport check_I_sigma(const DiffusionSpec& spec, const std::vector<Interval>& compacts, int samples,
                              double radius) {
    ConditionReport report;
    constexpr double blow_up = 1e10;
    constexpr int panels = 4096;
    auto inv_sq = [&](double y) {
        double s = spec.sigma(y);
        return s == 0.0 ? inf : 1.0 / (s * s);
    };
    int checked = 0;
    int outside = 0;
    for (const auto& c : compacts) {
        if (!std::isfinite(c.lo) || !std::isfinite(c.hi) || !(c.lo < c.hi)) {
            report.add_note("skipped a compact that is not a finite interval");
            continue;
        }
        for (int j = 0; j < samples; ++j) {
            double a = c.lo + (j + 0.5) * (c.hi - c.lo) / samples;
            if (spec.zero_set.contains(a)) continue;
            ++checked;
            double r = std::min(radius, 0.5 * distance_to(spec.zero_set, a));
            bool diverges = true;
            double last = 0.0;
            for (int k = 0; k < 30 && diverges; ++k, r *= 0.5) {
                last = midpoint_rule(inv_sq, a - r, a + r, panels);
                diverges = !(last <= blow_up);
            }
            if (diverges) {
                ++outside;
                report.add_violation("I_sigma", a, last);
            }
        }
    }
    report.add_note(std::to_string(checked) + " points sampled off the zero set; " + std::to_string(outside) +
                    " without a neighbourhood where sigma^-2 is integrable");
    return report;
}

}  // namespace skewsim
