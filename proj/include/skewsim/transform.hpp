#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skewsim/function.hpp"
#include "skewsim/measure.hpp"
#include "skewsim/report.hpp"
#include "skewsim/sets.hpp"

namespace skewsim {

/// Time-homogeneous coefficients of dX = sigma(X) dW [+ b(X) dt] together
/// with the declared zero set of sigma.
struct DiffusionSpec {
    RealFunction sigma;
    ZeroSet zero_set;
    RealFunction drift;  // empty when the SDE has no drift
    std::optional<std::pair<double, double>> growth_bound;  // (A, B): |sigma(x)| <= A (B + |x|)
    Json description = Json::object();

    bool has_drift() const noexcept { return static_cast<bool>(drift); }

    /// Hex hash of the JSON description; ties outputs to the spec.
    std::string hash() const;

    /// Spot checks sigma = 0 on the zero set and the growth bound on
    /// `samples` uniform points of [lo, hi].
    ConditionReport check_consistency(double lo, double hi, int samples = 1001) const;

    /// {sigma, zero_set?, drift?, growth_bound?: [A, B]}
    static DiffusionSpec from_json(const Json& doc);
    static DiffusionSpec constant(double sigma);
    /// Copy with the drift removed, for use once it is folded into a measure.
    DiffusionSpec without_drift() const;
};

/// Tabulated f, F = int_0^x f and F^{-1} on a finite domain. Knots are
/// strictly increasing; each knot carries the left and right limits of f,
/// which differ only at atoms. Between knots f is linear, so F is an exact
/// quadratic on each cell and F^{-1} is a closed-form root.
class ZvonkinTransform {
public:
    const std::vector<double>& knots() const noexcept { return knots_; }
    /// Right-continuous values f(x) at the knots.
    const std::vector<double>& f_values() const noexcept { return f_right_; }
    const std::vector<double>& f_left_values() const noexcept { return f_left_; }
    const std::vector<double>& F_values() const noexcept { return F_; }

    double x_min() const noexcept { return knots_.front(); }
    double x_max() const noexcept { return knots_.back(); }
    double y_min() const noexcept { return F_.front(); }
    double y_max() const noexcept { return F_.back(); }
    double m_lower() const noexcept { return m_lower_; }
    double m_upper() const noexcept { return m_upper_; }
    /// True for the zero measure, where F and f are evaluated exactly.
    bool is_identity() const noexcept { return identity_; }

    bool in_domain(double x) const noexcept { return x >= x_min() && x <= x_max(); }
    bool in_image(double y) const noexcept { return y >= y_min() && y <= y_max(); }

    /// Throw RangeError outside the domain (resp. image).
    double F(double x) const;
    double F_inverse(double y) const;
    double f(double x) const;

    /// F^{-1}(y) and the right-continuous f there, from one cell lookup.
    std::pair<double, double> inverse_and_f(double y) const;

    /// CSV with columns knot,f,F.
    std::string to_csv() const;

    friend ZvonkinTransform build_transform(const SignedMeasure& nu, double x_min, double x_max, int resolution);

private:
    std::size_t cell_of_x(double x) const;
    double inverse_in_cell(std::size_t i, double y) const;

    std::vector<double> knots_;
    std::vector<double> f_right_;
    std::vector<double> f_left_;
    std::vector<double> F_;
    double m_lower_ = 1.0;
    double m_upper_ = 1.0;
    bool identity_ = false;
};

/// Builds the transform of nu on [x_min, x_max] from a uniform grid with
/// `resolution` cells plus every atom, piece endpoint and 0. The domain must
/// contain 0 and every atom. Throws ConditionError("A1") for an atom with
/// |weight| >= 1 and InputError for a bad domain.
ZvonkinTransform build_transform(const SignedMeasure& nu, double x_min, double x_max, int resolution);

/// y -> f(F^{-1}(y)) sigma(F^{-1}(y)).
RealFunction build_sigma_tilde(std::shared_ptr<const ZvonkinTransform> t, const DiffusionSpec& spec);

/// Measure with density b / sigma^2 off the zeros of b, tabulated on
/// `resolution` cells of [lo, hi]. Throws ConditionError("A2'") when sigma
/// vanishes where b does not, or when the density is not integrable.
SignedMeasure drift_to_measure(const DiffusionSpec& spec, double lo, double hi, int resolution);

/// Samples each compact minus the zero set and tests local integrability of
/// sigma^{-2} on three dyadic radii around every sample. Radii are capped at
/// half the distance to the declared zero set.
ConditionReport check_I_sigma(const DiffusionSpec& spec, const std::vector<Interval>& compacts, int samples = 64,
                              double radius = 0.25);

}  // namespace skewsim
