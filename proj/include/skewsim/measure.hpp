#pragma once

#include <vector>

#include "skewsim/function.hpp"
#include "skewsim/report.hpp"
#include "skewsim/sets.hpp"

namespace skewsim {

/// Point mass of a signed measure.
struct Atom {
    double location = 0.0;
    double weight = 0.0;
    bool operator==(const Atom&) const = default;
};

/// Density of the continuous part on [lo, hi). Constant pieces may have
/// infinite bounds; polynomial and tabulated pieces are finite. All three
/// kinds have exact antiderivatives.
class DensityPiece {
public:
    enum class Kind { constant, polynomial, table };

    static DensityPiece constant(double lo, double hi, double value);
    /// Polynomial in absolute x: sum coeffs[i] * x^i.
    static DensityPiece polynomial(double lo, double hi, std::vector<double> coeffs);
    /// Linear interpolation of (xs, ys) on [xs.front(), xs.back()).
    static DensityPiece table(std::vector<double> xs, std::vector<double> ys);

    Kind kind() const noexcept { return kind_; }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    const std::vector<double>& data() const noexcept { return data_; }
    const std::vector<double>& xs() const noexcept { return xs_; }

    /// Density at x; zero outside [lo, hi).
    double value(double x) const;
    /// Integral of the density over [a, b] intersected with the piece.
    double integral(double a, double b) const;
    /// Integral of |density| over [a, b] intersected with the piece.
    double abs_integral(double a, double b) const;
    /// The same density restricted to [a, b] intersected with the piece.
    /// The intersection must have positive length.
    DensityPiece clipped(double a, double b) const;

    Json to_json() const;
    static DensityPiece from_json(const Json& doc);

    bool operator==(const DensityPiece&) const = default;

private:
    DensityPiece(Kind kind, double lo, double hi, std::vector<double> data, std::vector<double> xs);

    Kind kind_ = Kind::constant;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::vector<double> data_;  // constant: {value}; polynomial: coeffs; table: ys
    std::vector<double> xs_;    // table knots only
};

/// Signed Radon measure made of finitely many atoms plus a piecewise
/// density. Immutable after construction.
class SignedMeasure {
public:
    SignedMeasure() = default;
    /// Sorts atoms and pieces. Throws InputError on repeated atom
    /// locations, zero weights, or overlapping pieces.
    SignedMeasure(std::vector<Atom> atoms, std::vector<DensityPiece> pieces);

    static SignedMeasure dirac(double location, double weight) { return SignedMeasure({{location, weight}}, {}); }

    const std::vector<Atom>& atoms() const noexcept { return atoms_; }
    const std::vector<DensityPiece>& pieces() const noexcept { return pieces_; }
    bool empty() const noexcept { return atoms_.empty() && pieces_.empty(); }
    bool purely_atomic() const noexcept { return pieces_.empty(); }

    /// Sum of densities at x.
    double density(double x) const;

    Json to_json() const;
    static SignedMeasure from_json(const Json& doc);

    bool operator==(const SignedMeasure&) const = default;

private:
    std::vector<Atom> atoms_;
    std::vector<DensityPiece> pieces_;
};

/// Running integrals beyond this are treated as divergent.
inline constexpr double divergence_guard = 1e12;

/// |nu|(set); +inf when the density part diverges.
double tv_on(const SignedMeasure& nu, const IntervalUnion& set);

/// nu^c((-inf, x]). Throws InputError when the continuous part has
/// infinite mass below x.
double continuous_cdf(const SignedMeasure& nu, double x);

/// Product over atoms at or below x of (1 - w) / (1 + w). Throws
/// ConditionError("A1") naming the first atom with |w| >= 1.
double atom_product(const SignedMeasure& nu, double x);

/// nu(. minus zero_set): atoms inside zero_set dropped, density removed on it.
SignedMeasure restrict(const SignedMeasure& nu, const ZeroSet& zero_set);

/// Complement of a zero set as an interval union.
IntervalUnion complement(const ZeroSet& zero_set);

/// Both hypothesis pairs on nu: the strong pair (|nu({a})| < 1 everywhere,
/// finite total variation) and the weakened pair (|nu({a})| < 1 on the zero
/// set, finite variation off it). The strong pair implies the weak one.
struct MeasureConditions {
    ConditionReport strong;
    ConditionReport weak;
    Json to_json() const;
};

MeasureConditions check_measure_conditions(const SignedMeasure& nu, const ZeroSet& zero_set);

}  // namespace skewsim
