#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "skewsim/measure.hpp"
#include "skewsim/transform.hpp"

namespace skewsim {

/// Uniform grid t_k = k T / N on [0, T].
class TimeGrid {
public:
    TimeGrid(double horizon, int steps);

    double horizon() const noexcept { return horizon_; }
    int steps() const noexcept { return steps_; }
    double dt() const noexcept { return dt_; }
    double time(int k) const noexcept { return k == steps_ ? horizon_ : k * dt_; }

    bool operator==(const TimeGrid&) const = default;

private:
    double horizon_;
    int steps_;
    double dt_;
};

/// Bytes a materialized driver or path set may occupy.
inline constexpr std::size_t memory_budget = std::size_t{1} << 30;

/// Seeded Gaussian increments, generated on demand. Increment (p, k) comes
/// from Philox block (k / 2, p) keyed by the seed, through Box-Muller, so any
/// path can be regenerated independently of the others.
class BrownianDriver {
public:
    BrownianDriver(std::uint64_t seed, int paths, TimeGrid grid);

    std::uint64_t seed() const noexcept { return seed_; }
    int paths() const noexcept { return paths_; }
    const TimeGrid& grid() const noexcept { return grid_; }

    double increment(int path, int step) const;
    /// Writes the grid().steps() increments of one path.
    void fill(int path, std::span<double> out) const;
    /// Row-major paths x steps array. Throws ResourceError beyond memory_budget.
    std::vector<double> materialize() const;

private:
    std::uint64_t seed_;
    int paths_;
    TimeGrid grid_;
    double scale_;
};

/// Validates (M, N) and returns the lazy driver.
BrownianDriver sample_driver(std::uint64_t seed, int paths, const TimeGrid& grid);

/// One-path kernel of a discretization scheme. run() writes N + 1 values
/// into out (out[0] = x0) and, for schemes with an auxiliary process, N + 1
/// values into aux. It returns false when the path left the working domain;
/// the path is then held at the boundary for the remaining steps.
class Scheme {
public:
    virtual ~Scheme() = default;
    virtual std::string name() const = 0;
    virtual bool has_aux() const noexcept { return false; }
    virtual bool run(double x0, const TimeGrid& grid, std::span<const double> dW, std::span<double> out,
                     std::span<double> aux) const = 0;
};

/// Working domain and threading shared by all schemes.
struct SchemeOptions {
    double x_min = -10.0;
    double x_max = 10.0;
    int resolution = 4096;  // transform cells
    int threads = 1;
};

/// Euler on Y = F(X) with coefficient sigma~, output F^{-1}(Y). The
/// transform is built from nu restricted off the zero set of sigma.
class TransformScheme final : public Scheme {
public:
    TransformScheme(const DiffusionSpec& spec, const SignedMeasure& nu, const SchemeOptions& options);
    std::string name() const override { return "transform"; }
    bool run(double x0, const TimeGrid& grid, std::span<const double> dW, std::span<double> out,
             std::span<double> aux) const override;
    const ZvonkinTransform& transform() const noexcept { return *transform_; }
    std::shared_ptr<const ZvonkinTransform> transform_ptr() const noexcept { return transform_; }

private:
    RealFunction sigma_;
    std::shared_ptr<const ZvonkinTransform> transform_;
};

/// Atom of a time-dependent flow: level a, coefficient beta(t) in (-1, 1)
/// and a bound on |beta'|.
struct FlowAtom {
    double location = 0.0;
    RealFunction beta;
    double derivative_bound = 0.0;
};

struct AtomicFlow {
    std::vector<FlowAtom> atoms;

    static AtomicFlow constant(const SignedMeasure& nu);
    /// {atoms: [{a, beta: function of t, M}]}
    static AtomicFlow from_json(const Json& doc);
    /// Throws ConfigError unless beta stays in (-1, 1) and respects the
    /// derivative bound on the grid knots.
    void validate(const TimeGrid& grid) const;
};

/// Frozen-coefficient single-atom transform step around the nearest atom;
/// plain Euler farther than 6 sigma_max sqrt(dt) from every atom.
class AtomScheme final : public Scheme {
public:
    AtomScheme(const DiffusionSpec& spec, AtomicFlow flow, const TimeGrid& grid, const SchemeOptions& options);
    std::string name() const override { return "atom"; }
    bool run(double x0, const TimeGrid& grid, std::span<const double> dW, std::span<double> out,
             std::span<double> aux) const override;

private:
    RealFunction sigma_;
    AtomicFlow flow_;
    double zone_;
    double x_min_;
    double x_max_;
};

/// Projected Euler for the SDE reflected at 0. aux holds K, the cumulative
/// push from the boundary.
class ReflectedScheme final : public Scheme {
public:
    explicit ReflectedScheme(const DiffusionSpec& spec);
    std::string name() const override { return "reflected"; }
    bool has_aux() const noexcept override { return true; }
    bool run(double x0, const TimeGrid& grid, std::span<const double> dW, std::span<double> out,
             std::span<double> aux) const override;

private:
    RealFunction sigma_;
};

/// Euler-Maruyama with drift.
class ClassicalScheme final : public Scheme {
public:
    ClassicalScheme(const DiffusionSpec& spec, const SchemeOptions& options);
    std::string name() const override { return "classical"; }
    bool run(double x0, const TimeGrid& grid, std::span<const double> dW, std::span<double> out,
             std::span<double> aux) const override;

private:
    RealFunction sigma_;
    RealFunction drift_;
    double x_min_;
    double x_max_;
};

/// Simulated paths, row-major M x (N + 1).
struct PathSet {
    TimeGrid grid{1.0, 1};
    int paths = 0;
    std::vector<double> values;
    std::vector<double> aux;  // reflection process when the scheme has one
    std::vector<std::uint8_t> exited;
    std::string scheme;
    std::string spec_hash;
    std::uint64_t seed = 0;

    int width() const noexcept { return grid.steps() + 1; }
    std::span<const double> path(int p) const {
        return {values.data() + static_cast<std::size_t>(p) * width(), static_cast<std::size_t>(width())};
    }
    std::span<const double> aux_path(int p) const {
        return {aux.data() + static_cast<std::size_t>(p) * width(), static_cast<std::size_t>(width())};
    }
    double at(int p, int k) const { return values[static_cast<std::size_t>(p) * width() + k]; }
    int exit_count() const;

    /// Time-major CSV: header comments with seed, scheme and spec hash, then
    /// columns t, path_0, ..., path_{M-1}.
    std::string to_csv() const;
};

/// Called once per path on a worker thread with that path's values.
using PathVisitor = std::function<void(int path, std::span<const double> x, std::span<const double> aux, bool exited)>;

/// Streams every driver path through the scheme without storing the set.
void for_each_path(const Scheme& scheme, double x0, const BrownianDriver& driver, int threads, const PathVisitor& visit);

/// Materializes all paths. Throws ResourceError beyond memory_budget.
PathSet simulate(const Scheme& scheme, double x0, const BrownianDriver& driver, int threads,
                 const std::string& spec_hash = "");

PathSet simulate_transform_scheme(const DiffusionSpec& spec, const SignedMeasure& nu, double x0,
                                  const BrownianDriver& driver, const SchemeOptions& options = {});
PathSet simulate_atom_scheme(const DiffusionSpec& spec, const AtomicFlow& flow, double x0, const BrownianDriver& driver,
                             const SchemeOptions& options = {});
/// Path set with the reflection process in aux. Throws InputError for x0 < 0.
PathSet simulate_reflected(const DiffusionSpec& spec, double x0, const BrownianDriver& driver,
                           const SchemeOptions& options = {});
PathSet simulate_classical(const DiffusionSpec& spec, double x0, const BrownianDriver& driver,
                           const SchemeOptions& options = {});

/// Scheme by name: "transform", "atom", "reflected" or "classical". A drift
/// in the spec is folded into the measure for the transform scheme; the atom
/// scheme uses the atoms of nu as a constant flow.
std::unique_ptr<Scheme> make_scheme(const std::string& name, const DiffusionSpec& spec, const SignedMeasure& nu,
                                    const TimeGrid& grid, const SchemeOptions& options);

/// Largest |f| on n uniform samples of [lo, hi].
double sup_abs(const RealFunction& f, double lo, double hi, int n = 4097);

}  // namespace skewsim
