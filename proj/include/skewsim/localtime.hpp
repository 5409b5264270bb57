#pragma once

#include <span>
#include <string>
#include <vector>

#include "skewsim/engine.hpp"
#include "skewsim/function.hpp"

namespace skewsim {

enum class LocalTimeEstimator {
    occupation,     // (1/2eps) sum 1{|X_k - a| < eps} sigma^2(X_k) dt
    occupation_qv,  // same window, weights (X_{k+1} - X_k)^2 from the path alone
    tanaka,         // scaled discrete Tanaka residual
};

/// Right: residual of the (x - a)^+ formula, which estimates half the local
/// time, hence a natural factor 2. Symmetric: residual of |x - a|, factor 1.
enum class LocalTimeConvention { right, symmetric };

std::string to_string(LocalTimeEstimator e);
std::string to_string(LocalTimeConvention c);
LocalTimeEstimator estimator_from_string(const std::string& name);
LocalTimeConvention convention_from_string(const std::string& name);

/// Factor turning the Tanaka residual into the occupation-density local time.
inline double natural_tanaka_factor(LocalTimeConvention c) { return c == LocalTimeConvention::right ? 2.0 : 1.0; }

struct LocalTimeOptions {
    LocalTimeEstimator estimator = LocalTimeEstimator::occupation;
    double epsilon = 0.0;  // occupation bandwidth
    LocalTimeConvention convention = LocalTimeConvention::right;
    double tanaka_factor = 2.0;

    /// Throws InputError for a non-positive bandwidth on window estimators.
    void validate() const;
};

/// Index k with t_k = t; throws InputError when t is not a grid knot.
int step_of_time(const TimeGrid& grid, double t);

/// Occupation estimate of L^a at knot k (sums over j < k).
double estimate_occupation(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma, double a,
                           double epsilon, int k);

/// Raw Tanaka residual at knot k for the given convention, unscaled.
double tanaka_residual(std::span<const double> path, double a, int k, LocalTimeConvention convention);

/// factor * tanaka_residual.
double estimate_tanaka(std::span<const double> path, double a, int k, LocalTimeConvention convention, double factor);

/// Estimates at knot k for every level at once. Levels must be sorted.
std::vector<double> local_time_profile(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma,
                                       const std::vector<double>& levels, int k, const LocalTimeOptions& options);

/// Per-step increments of the running estimator at level a (size N).
std::vector<double> local_time_increments(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma,
                                          double a, const LocalTimeOptions& options);

/// Estimates L^a_t over levels x times.
struct LocalTimeField {
    std::vector<double> levels;
    std::vector<double> times;
    std::vector<int> steps;
    std::vector<double> estimates;  // levels.size() x times.size(), row-major by level
    LocalTimeEstimator estimator = LocalTimeEstimator::occupation;
    double epsilon = 0.0;

    double at(std::size_t level, std::size_t time) const { return estimates[level * times.size() + time]; }
    /// CSV with columns level,time,estimate,estimator,epsilon.
    std::string to_csv() const;
};

LocalTimeField estimate_field(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma,
                              const std::vector<double>& levels, const std::vector<int>& steps,
                              const LocalTimeOptions& options);

/// Levels at empirical quantiles of `values`, spanning [min - eps, max + eps],
/// with extra uniform levels wherever the gap exceeds eps * max_gap_factor.
std::vector<double> quantile_levels(std::span<const double> values, double epsilon, double max_gap_factor = 0.25);

struct IdentityResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
};

/// lhs = trapezoid over levels of g(a) L^a_T, rhs = sum g(X_k) sigma^2(X_k) dt.
IdentityResult occupation_residual(std::span<const double> path, const TimeGrid& grid, const RealFunction& sigma,
                                   const RealFunction& g, const std::vector<double>& levels,
                                   const LocalTimeOptions& options);

/// lhs = L^a_T(X1 v X2); rhs = sum of increments of L^a(X1) where X1 > X2
/// and of L^a(X2) elsewhere.
IdentityResult lattice_identity_check(std::span<const double> x1, std::span<const double> x2, const TimeGrid& grid,
                                      const RealFunction& sigma, double a, const LocalTimeOptions& options);

/// lhs = L^a(X1 ^ X2) + L^a(X1 v X2); rhs = L^a(X1) + L^a(X2).
IdentityResult minmax_identity_check(std::span<const double> x1, std::span<const double> x2, const TimeGrid& grid,
                                     const RealFunction& sigma, double a, const LocalTimeOptions& options);

/// lhs = L^0_T(X^{2n+1} - Y^{2n+1}); rhs = (2n+1) sum (X_k^{2n} + Y_k^{2n}) dL^0_k(X - Y).
/// Needs a path-only estimator (occupation_qv or tanaka).
IdentityResult odd_power_identity_check(std::span<const double> x, std::span<const double> y, const TimeGrid& grid,
                                        int n, const LocalTimeOptions& options);

struct SupportResult {
    double fraction = 0.0;  // share of dL^0(X1 - X2) at steps with max(|X1|, |X2|) > delta
    double mass = 0.0;      // total estimated mass
    bool zero_mass = false;
};

SupportResult support_check(std::span<const double> x1, std::span<const double> x2, const TimeGrid& grid, double delta,
                            const LocalTimeOptions& options);

}  // namespace skewsim
