#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "skewsim/engine.hpp"
#include "skewsim/localtime.hpp"
#include "skewsim/report.hpp"

namespace skewsim {

// ---------------------------------------------------------------- analysis

enum class Padding { mirror, periodic };

Padding padding_from_string(const std::string& name);

/// Applies the Fourier multiplier |z|^exponent to uniform samples with grid
/// step dx. Mirror padding evaluates the even extension of length 2n, which
/// avoids the jump a periodic wrap would create. Throws InputError unless
/// the length is a power of two, and ConditionError when the inverse
/// transform leaves an imaginary residue above 1e-8 relative.
std::vector<double> fourier_multiplier(std::span<const double> values, double dx, double exponent,
                                       Padding padding = Padding::mirror);

/// Half derivative F^{-1} |z|^{1/2} F. xs must be uniform.
std::vector<double> frac_half_derivative(std::span<const double> xs, std::span<const double> values,
                                         Padding padding = Padding::mirror);

/// Dyadic radii dx, 2 dx, ... up to the domain width.
std::vector<double> dyadic_radii(double dx, double width);

/// For each sample, the largest mean of |values| over the samples within
/// distance r, over the radii. Windows are clipped to the grid and averaged
/// over the samples they contain.
std::vector<double> maximal_operator(std::span<const double> values, double dx, const std::vector<double>& radii);

/// sup |X| plus the largest |X_j - X_i| / |t_j - t_i|^alpha over index pairs
/// at power-of-two distance. This is a lower bound of the discrete Holder
/// norm; the full seminorm is at most 1 / (1 - 2^-alpha) times the ladder
/// seminorm for alpha > 0.
double holder_norm(std::span<const double> path, const TimeGrid& grid, double alpha);

/// f, h and the zero set of f in (f(x) + f(y)) h(|x - y|). h is either the
/// power family |a|^gamma or a tabulated function.
struct ModulusPair {
    RealFunction f;
    std::optional<double> gamma;
    RealFunction h;
    ZeroSet zero_set_f;

    double h_of(double a) const;
    static ModulusPair power(RealFunction f, double gamma, ZeroSet zero_set_f = {});
    /// {f, gamma | h, zero_set_f?}
    static ModulusPair from_json(const Json& doc);
};

/// Integral of 1/h^2 over [0+, 1] diverges. Analytic for the power family
/// (diverges iff gamma >= 1/2); for tabulated h uses lower limits 1e-2,
/// 1e-4, 1e-6.
bool modulus_integral_diverges(const ModulusPair& pair, double* growth = nullptr);

/// Three resolutions of a quadrature sequence. Divergent when the sequence
/// keeps growing: each refinement doubles it, or the last increment is at
/// least 0.85 times the previous one and above 1% of the value.
bool looks_divergent(double coarse, double middle, double fine);

ExperimentReport check_A3A4(const DiffusionSpec& spec, const ModulusPair& pair, double lo, double hi,
                            int pairs = 100000, std::uint64_t seed = 1);

ExperimentReport check_sobolev_condition(const DiffusionSpec& spec, double lo, double hi, int resolution,
                                         int pairs = 20000, std::uint64_t seed = 1);

ExperimentReport nakao_check(const DiffusionSpec& spec, double epsilon_floor, const std::vector<Interval>& compacts,
                             int resolution = 4096);

/// Largest |op(op(f)) - |z| f| / max |(|z| f)| over cos(k x) modes, k = 1..modes,
/// on a periodic grid of n points.
double half_derivative_composition_error(int n, int modes);

// ---------------------------------------------------------------- experiments

struct UniquenessConfig {
    double horizon = 1.0;
    std::vector<int> steps{1024, 4096, 16384};
    int paths = 1000;
    std::uint64_t seed = 1;
    std::vector<double> deltas{1e-2, 1e-3, 1e-4};
    std::string scheme = "transform";
    std::string reference = "atom";
    double gap_threshold = 1e-8;
    double rounding_floor = 1e-12;
    double max_exit_fraction = 1e-3;
    SchemeOptions options;
};

ExperimentReport uniqueness_experiment(const DiffusionSpec& spec, const SignedMeasure& nu, double x0,
                                       const UniquenessConfig& config);

struct ContinuityConfig {
    double horizon = 1.0;
    int steps = 1024;
    int paths = 1000;
    std::uint64_t seed = 1;
    std::vector<double> offsets{0.2, 0.1, 0.05, 0.02, 0.01};
    double alpha = 0.25;
    double epsilon_level = 0.1;
    double probability_floor = 0.05;
    SchemeOptions options;
};

/// Throws ConfigError when the spec has no growth bound.
ExperimentReport continuity_experiment(const DiffusionSpec& spec, const SignedMeasure& nu, double x0,
                                       const ContinuityConfig& config);

struct RegularityConfig {
    double horizon = 1.0;
    int steps = 1024;
    int paths = 2000;
    std::uint64_t seed = 1;
    int batches = 20;
    int start_points = 4;
    double expected_slope = 1.0;
    double slope_se_multiple = 4.0;
    std::optional<std::pair<double, double>> slope_band;
    SchemeOptions options;
};

ExperimentReport time_regularity_experiment(const DiffusionSpec& spec, const SignedMeasure& nu, double x0,
                                            const RegularityConfig& config);

struct LocalTimeConfig {
    double horizon = 1.0;
    std::vector<int> steps{4096, 8192, 16384};
    int paths = 10000;
    int residual_paths = 400;
    int pair_paths = 200;
    std::uint64_t seed = 1;
    double bandwidth_exponent = 0.4;
    double level = 0.0;
    double x0 = 0.0;
    double perturbation = 0.05;
    LocalTimeConvention convention = LocalTimeConvention::right;
    double tanaka_factor = 2.0;
    double residual_tolerance = 0.05;
    double identity_tolerance = 0.10;
    double calibration_se = 3.0;
    double consistency_tolerance = 0.05;
    /// Oracle for the mean of L^level_T; the Brownian closed form is used
    /// when unset and the spec is sigma = 1 with nu = 0.
    std::optional<double> expected_local_time;
    SchemeOptions options;
};

/// Calibration of the occupation estimator at the finest grid (Brownian
/// closed form when nu = 0 and sigma = 1), occupation-formula residuals
/// across the grid ladder, and lattice and min/max identities.
ExperimentReport localtime_experiment(const DiffusionSpec& spec, const SignedMeasure& nu,
                                      const LocalTimeConfig& config);

struct ReflectedConfig {
    double horizon = 1.0;
    int steps = 16384;
    int paths = 10000;
    int pair_paths = 400;
    std::uint64_t seed = 1;
    double x0 = 0.0;
    double x0_pair = 0.5;
    double delta = 0.05;
    int power_n = 1;
    double bandwidth_exponent = 0.4;
    double identity_tolerance = 0.10;
    double identity_floor = 1e-3;
    double support_tolerance = 0.1;
    double mean_se = 3.0;
    std::optional<double> expected_mean;
    int threads = 1;
};

ExperimentReport reflected_experiment(const DiffusionSpec& spec, const ReflectedConfig& config);

/// Mean, standard error and batch statistics helpers.
struct SampleStats {
    double mean = 0.0;
    double standard_error = 0.0;
};
SampleStats sample_stats(std::span<const double> values);

}  // namespace skewsim
