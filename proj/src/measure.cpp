#include "skewsim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "skewsim/error.hpp"
#include "skewsim/quadrature.hpp"

namespace skewsim {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double poly_eval(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

double poly_antiderivative(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i] / static_cast<double>(i + 1);
    return acc * x;
}

// Linear interpolation on one table segment.
double lerp_at(double x0, double x1, double y0, double y1, double x) {
    if (x == x0) return y0;
    if (x == x1) return y1;
    return y0 + (y1 - y0) * ((x - x0) / (x1 - x0));
}

double abs_trapezoid(double p, double q, double vp, double vq) {
    if ((vp >= 0.0 && vq >= 0.0) || (vp <= 0.0 && vq <= 0.0)) return 0.5 * (q - p) * std::abs(vp + vq);
    double r = p + (q - p) * vp / (vp - vq);
    return 0.5 * (std::abs(vp) * (r - p) + std::abs(vq) * (q - r));
}

}  // namespace

DensityPiece::DensityPiece(Kind kind, double lo, double hi, std::vector<double> data, std::vector<double> xs)
    : kind_(kind), lo_(lo), hi_(hi), data_(std::move(data)), xs_(std::move(xs)) {}

DensityPiece DensityPiece::constant(double lo, double hi, double value) {
    if (std::isnan(lo) || std::isnan(hi) || !(lo < hi)) throw InputError("density piece needs lo < hi");
    if (!std::isfinite(value)) throw InputError("density piece value must be finite");
    return DensityPiece(Kind::constant, lo, hi, {value}, {});
}

DensityPiece DensityPiece::polynomial(double lo, double hi, std::vector<double> coeffs) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
        throw InputError("polynomial density piece needs finite lo < hi");
    if (coeffs.empty()) coeffs.push_back(0.0);
    for (double c : coeffs)
        if (!std::isfinite(c)) throw InputError("polynomial density coefficients must be finite");
    return DensityPiece(Kind::polynomial, lo, hi, std::move(coeffs), {});
}

DensityPiece DensityPiece::table(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() < 2 || xs.size() != ys.size()) throw InputError("table density needs >= 2 matching knots");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw InputError("table density entries must be finite");
        if (i > 0 && !(xs[i] > xs[i - 1])) throw InputError("table density knots must be strictly increasing");
    }
    double lo = xs.front();
    double hi = xs.back();
    return DensityPiece(Kind::table, lo, hi, std::move(ys), std::move(xs));
}

double DensityPiece::value(double x) const {
    if (!(x >= lo_ && x < hi_)) return 0.0;
    switch (kind_) {
    case Kind::constant:
        return data_[0];
    case Kind::polynomial:
        return poly_eval(data_, x);
    case Kind::table: {
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        auto i = static_cast<std::size_t>(it - xs_.begin()) - 1;
        return lerp_at(xs_[i], xs_[i + 1], data_[i], data_[i + 1], x);
    }
    }
    return 0.0;
}

double DensityPiece::integral(double a, double b) const {
    double c = std::max(a, lo_);
    double d = std::min(b, hi_);
    if (!(c < d)) return 0.0;
    switch (kind_) {
    case Kind::constant:
        if (data_[0] == 0.0) return 0.0;
        return data_[0] * (d - c);
    case Kind::polynomial:
        return poly_antiderivative(data_, d) - poly_antiderivative(data_, c);
    case Kind::table: {
        double acc = 0.0;
        auto first = std::upper_bound(xs_.begin(), xs_.end(), c);
        std::size_t start = first == xs_.begin() ? 0 : static_cast<std::size_t>(first - xs_.begin()) - 1;
        for (std::size_t i = start; i + 1 < xs_.size() && xs_[i] < d; ++i) {
            double p = std::max(c, xs_[i]);
            double q = std::min(d, xs_[i + 1]);
            if (!(p < q)) continue;
            double vp = lerp_at(xs_[i], xs_[i + 1], data_[i], data_[i + 1], p);
            double vq = lerp_at(xs_[i], xs_[i + 1], data_[i], data_[i + 1], q);
            acc += 0.5 * (q - p) * (vp + vq);
        }
        return acc;
    }
    }
    return 0.0;
}

double DensityPiece::abs_integral(double a, double b) const {
    double c = std::max(a, lo_);
    double d = std::min(b, hi_);
    if (!(c < d)) return 0.0;
    switch (kind_) {
    case Kind::constant:
        if (data_[0] == 0.0) return 0.0;
        return std::abs(data_[0]) * (d - c);
    case Kind::polynomial: {
        const auto& coeffs = data_;
        return adaptive_trapezoid([&coeffs](double x) { return std::abs(poly_eval(coeffs, x)); }, c, d, 1e-10);
    }
    case Kind::table: {
        double acc = 0.0;
        auto first = std::upper_bound(xs_.begin(), xs_.end(), c);
        std::size_t start = first == xs_.begin() ? 0 : static_cast<std::size_t>(first - xs_.begin()) - 1;
        for (std::size_t i = start; i + 1 < xs_.size() && xs_[i] < d; ++i) {
            double p = std::max(c, xs_[i]);
            double q = std::min(d, xs_[i + 1]);
            if (!(p < q)) continue;
            double vp = lerp_at(xs_[i], xs_[i + 1], data_[i], data_[i + 1], p);
            double vq = lerp_at(xs_[i], xs_[i + 1], data_[i], data_[i + 1], q);
            acc += abs_trapezoid(p, q, vp, vq);
        }
        return acc;
    }
    }
    return 0.0;
}

DensityPiece DensityPiece::clipped(double a, double b) const {
    double c = std::max(a, lo_);
    double d = std::min(b, hi_);
    if (!(c < d)) throw InputError("clipped density piece would be empty");
    if (c == lo_ && d == hi_) return *this;
    switch (kind_) {
    case Kind::constant:
        return DensityPiece(Kind::constant, c, d, data_, {});
    case Kind::polynomial:
        return DensityPiece(Kind::polynomial, c, d, data_, {});
    case Kind::table: {
        std::vector<double> xs{c};
        std::vector<double> ys;
        auto at = [this](double x) {
            if (x >= hi_) return data_.back();
            auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            auto i = static_cast<std::size_t>(it - xs_.begin()) - 1;
            return lerp_at(xs_[i], xs_[i + 1], data_[i], data_[i + 1], x);
        };
        ys.push_back(at(c));
        for (std::size_t i = 0; i < xs_.size(); ++i) {
            if (xs_[i] > c && xs_[i] < d) {
                xs.push_back(xs_[i]);
                ys.push_back(data_[i]);
            }
        }
        xs.push_back(d);
        ys.push_back(at(d));
        return DensityPiece(Kind::table, c, d, std::move(ys), std::move(xs));
    }
    }
    return *this;
}

namespace {

Json bound_json(double v) {
    if (std::isinf(v)) return v > 0 ? Json("inf") : Json("-inf");
    return v;
}

double bound_value(const Json& v, const char* what) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf") return inf;
        if (s == "-inf") return -inf;
    }
    throw ConfigError(std::string(what) + " must be a number, \"inf\" or \"-inf\"");
}

std::vector<double> numbers(const Json& v, const char* what) {
    if (!v.is_array()) throw ConfigError(std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(std::string(what) + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

}  // namespace

Json DensityPiece::to_json() const {
    Json doc{{"lo", bound_json(lo_)}, {"hi", bound_json(hi_)}};
    switch (kind_) {
    case Kind::constant:
        doc["kind"] = "const";
        doc["data"] = data_[0];
        break;
    case Kind::polynomial:
        doc["kind"] = "poly";
        doc["data"] = data_;
        break;
    case Kind::table:
        doc["kind"] = "table";
        doc["data"] = {{"x", xs_}, {"y", data_}};
        break;
    }
    return doc;
}

DensityPiece DensityPiece::from_json(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("density piece must be an object");
    check_keys(doc, {"kind", "lo", "hi", "data", "x"}, "density piece");
    const std::string kind = doc.value("kind", "");
    try {
        if (kind == "const") {
            if (!doc.contains("data") || !doc["data"].is_number()) throw ConfigError("const density needs numeric data");
            return constant(bound_value(doc.at("lo"), "density lo"), bound_value(doc.at("hi"), "density hi"),
                            doc["data"].get<double>());
        }
        if (kind == "poly") {
            return polynomial(bound_value(doc.at("lo"), "density lo"), bound_value(doc.at("hi"), "density hi"),
                              numbers(doc.at("data"), "poly density data"));
        }
        if (kind == "table") {
            const Json& data = doc.at("data");
            auto piece = table(numbers(data.at("x"), "table density x"), numbers(data.at("y"), "table density y"));
            double lo = doc.contains("lo") ? bound_value(doc["lo"], "density lo") : piece.lo();
            double hi = doc.contains("hi") ? bound_value(doc["hi"], "density hi") : piece.hi();
            return piece.clipped(lo, hi);
        }
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("density piece: ") + e.what());
    }
    throw ConfigError("density piece kind must be one of const, poly, table");
}

SignedMeasure::SignedMeasure(std::vector<Atom> atoms, std::vector<DensityPiece> pieces)
    : atoms_(std::move(atoms)), pieces_(std::move(pieces)) {
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.location < b.location; });
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (!std::isfinite(atoms_[i].location) || !std::isfinite(atoms_[i].weight))
            throw InputError("atom location and weight must be finite");
        if (atoms_[i].weight == 0.0) throw InputError("atom weight must be non-zero");
        if (i > 0 && atoms_[i].location == atoms_[i - 1].location)
            throw InputError("atom locations must be distinct");
    }
    std::sort(pieces_.begin(), pieces_.end(), [](const DensityPiece& a, const DensityPiece& b) { return a.lo() < b.lo(); });
    for (std::size_t i = 1; i < pieces_.size(); ++i)
        if (pieces_[i - 1].hi() > pieces_[i].lo()) throw InputError("density pieces overlap");
}

double SignedMeasure::density(double x) const {
    double acc = 0.0;
    for (const auto& p : pieces_) acc += p.value(x);
    return acc;
}

Json SignedMeasure::to_json() const {
    Json doc;
    doc["atoms"] = Json::array();
    for (const auto& a : atoms_) doc["atoms"].push_back({{"a", a.location}, {"alpha", a.weight}});
    doc["density"] = Json::array();
    for (const auto& p : pieces_) doc["density"].push_back(p.to_json());
    return doc;
}

SignedMeasure SignedMeasure::from_json(const Json& doc) {
    if (doc.is_null()) return {};
    if (!doc.is_object()) throw ConfigError("measure must be an object");
    check_keys(doc, {"atoms", "density"}, "measure");
    std::vector<Atom> atoms;
    std::vector<DensityPiece> pieces;
    if (auto it = doc.find("atoms"); it != doc.end()) {
        for (const auto& a : *it) {
            if (!a.is_object() || !a.contains("a") || !a.contains("alpha") || !a["a"].is_number() || !a["alpha"].is_number())
                throw ConfigError("measure atoms must be objects {a, alpha}");
            check_keys(a, {"a", "alpha"}, "measure atom");
            atoms.push_back(Atom{a["a"].get<double>(), a["alpha"].get<double>()});
        }
    }
    if (auto it = doc.find("density"); it != doc.end()) {
        for (const auto& p : *it) pieces.push_back(DensityPiece::from_json(p));
    }
    try {
        return SignedMeasure(std::move(atoms), std::move(pieces));
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
}

double tv_on(const SignedMeasure& nu, const IntervalUnion& set) {
    set.validate();
    double total = 0.0;
    for (const auto& a : nu.atoms())
        if (set.contains(a.location)) total += std::abs(a.weight);
    for (const auto& piece : nu.pieces()) {
        for (const auto& part : set.parts) {
            total += piece.abs_integral(part.lo, part.hi);
            if (!(total <= divergence_guard)) return inf;
        }
    }
    return total;
}

double continuous_cdf(const SignedMeasure& nu, double x) {
    double total = 0.0;
    for (const auto& piece : nu.pieces()) {
        if (piece.lo() >= x) break;
        double part = piece.integral(-inf, x);
        if (!std::isfinite(part) || std::abs(part) > divergence_guard)
            throw InputError("continuous part of the measure has infinite mass below x");
        total += part;
    }
    return total;
}

double atom_product(const SignedMeasure& nu, double x) {
    double prod = 1.0;
    for (const auto& a : nu.atoms()) {
        if (a.location > x) break;
        if (std::abs(a.weight) >= 1.0) {
            std::ostringstream msg;
            msg << "(A1) atom at " << a.location << " has |weight| = " << std::abs(a.weight) << " >= 1";
            throw ConditionError("A1", a.location, msg.str());
        }
        prod *= (1.0 - a.weight) / (1.0 + a.weight);
    }
    return prod;
}

namespace {

// Parts of [lo, hi) that survive removal of the zero-set intervals.
std::vector<std::pair<double, double>> subtract_intervals(double lo, double hi, const std::vector<Interval>& holes) {
    std::vector<std::pair<double, double>> out;
    double cursor = lo;
    for (const auto& h : holes) {
        if (h.hi <= cursor) continue;
        if (h.lo >= hi) break;
        if (h.lo > cursor) out.emplace_back(cursor, std::min(h.lo, hi));
        cursor = std::max(cursor, h.hi);
        if (cursor >= hi) break;
    }
    if (cursor < hi) out.emplace_back(cursor, hi);
    return out;
}

}  // namespace

SignedMeasure restrict(const SignedMeasure& nu, const ZeroSet& zero_set) {
    std::vector<Atom> atoms;
    for (const auto& a : nu.atoms())
        if (!zero_set.contains(a.location)) atoms.push_back(a);
    std::vector<DensityPiece> pieces;
    for (const auto& piece : nu.pieces()) {
        for (auto [a, b] : subtract_intervals(piece.lo(), piece.hi(), zero_set.intervals())) {
            if (a < b) pieces.push_back(piece.clipped(a, b));
        }
    }
    return SignedMeasure(std::move(atoms), std::move(pieces));
}

IntervalUnion complement(const ZeroSet& zero_set) {
    IntervalUnion out;
    double cursor = -inf;
    bool cursor_closed = false;
    auto gap = [&](double hi, bool hi_closed) {
        if (cursor < hi || (cursor == hi && cursor_closed && hi_closed))
            out.parts.push_back(Interval{cursor, hi, cursor_closed && std::isfinite(cursor), hi_closed && std::isfinite(hi)});
    };
    for (const auto& iv : zero_set.intervals()) {
        gap(iv.lo, !iv.lo_closed);
        cursor = iv.hi;
        cursor_closed = !iv.hi_closed;
    }
    gap(inf, false);
    out.excluded = zero_set.points();
    return out;
}

Json MeasureConditions::to_json() const { return Json{{"strong", strong.to_json()}, {"weak", weak.to_json()}}; }

MeasureConditions check_measure_conditions(const SignedMeasure& nu, const ZeroSet& zero_set) {
    MeasureConditions out;
    for (const auto& a : nu.atoms()) {
        if (std::abs(a.weight) >= 1.0) {
            out.strong.add_violation("A1", a.location, std::abs(a.weight));
            if (zero_set.contains(a.location)) out.weak.add_violation("A1_weak", a.location, std::abs(a.weight));
        }
    }
    double total = tv_on(nu, IntervalUnion::real_line());
    if (!std::isfinite(total)) out.strong.add_violation("A2", std::nan(""), total);
    double off_zero = tv_on(nu, complement(zero_set));
    if (!std::isfinite(off_zero)) out.weak.add_violation("A2_weak", std::nan(""), off_zero);
    out.strong.add_note("|nu|(R) = " + format_double(total));
    out.weak.add_note("|nu|(N^c) = " + format_double(off_zero));
    return out;
}

}  // namespace skewsim
