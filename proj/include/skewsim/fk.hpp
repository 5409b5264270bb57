#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "skewsim/engine.hpp"
#include "skewsim/report.hpp"

namespace skewsim {

/// Terminal payoff f and running payoff g(t, x). Bounds are optional; when
/// declared they are checked on a sample grid by validate().
struct TerminalPayoff {
    RealFunction f;
    TimeFunction g;  // empty means g = 0
    std::optional<double> f_max;
    std::optional<double> g_max;
    Json description = Json::object();

    bool has_running() const noexcept { return static_cast<bool>(g); }
    double running(double t, double x) const { return g ? g(t, x) : 0.0; }

    /// Throws ConfigError when a declared bound fails on [lo, hi] x [0, T].
    void validate(double lo, double hi, double horizon, int samples = 257) const;

    /// {f, g?, f_max?, g_max?}
    static TerminalPayoff from_json(const Json& doc);
};

/// Cell-centred space grid on [y_lo, y_hi] with J cells and K time steps on
/// [0, T].
struct PdeGrid {
    double y_lo = -1.0;
    double y_hi = 1.0;
    int cells = 64;
    double horizon = 1.0;
    int time_steps = 64;

    double dy() const noexcept { return (y_hi - y_lo) / cells; }
    double dtau() const noexcept { return horizon / time_steps; }
    double node(int j) const noexcept { return y_lo + (j + 0.5) * dy(); }

    /// Throws ConfigError when dtau > dy^2 / sigma_max^2 or the grid is degenerate.
    void check_cfl(double sigma_max) const;

    /// Smallest step count that is a multiple of `multiple` and keeps
    /// dtau <= cfl * dy^2 / sigma_max^2.
    static PdeGrid stable(double y_lo, double y_hi, int cells, double horizon, double sigma_max, double cfl = 0.9,
                          int multiple = 64);
};

/// u(s, y) at the requested snapshot times (grid knots).
struct PdeSolution {
    PdeGrid grid;
    std::vector<double> times;
    std::vector<std::vector<double>> values;  // per snapshot, one entry per node

    /// Linear interpolation between nodes, flat beyond the outer nodes.
    double at(double s, double y) const;
    /// Columns s,y,u.
    std::string to_csv() const;
};

/// Backward explicit scheme for u_t + sigma~^2 u_yy / 2 + g = 0 with
/// u(T) = terminal. Outer nodes keep the terminal value and only integrate
/// the source. Throws ConfigError on a CFL violation before stepping, and
/// ConditionError if the discrete maximum principle ever fails.
PdeSolution pde_solve(const RealFunction& sigma_tilde, const RealFunction& terminal, const TimeFunction& source,
                      const PdeGrid& grid, std::vector<double> snapshot_times);

struct McValue {
    double estimate = 0.0;
    double standard_error = 0.0;
};

/// E[f(X_T) + sum g(t_k, X_k) dt] for X started at x at time s, simulated by
/// the transform scheme with `steps` steps on [s, T].
McValue mc_value(const DiffusionSpec& spec, const SignedMeasure& nu, const TerminalPayoff& payoff, double horizon,
                 double s, double x, int paths, int steps, std::uint64_t seed, const SchemeOptions& options = {});

struct FkConfig {
    double horizon = 1.0;
    int paths = 20000;
    int mc_steps = 1024;
    std::uint64_t seed = 1;
    int cells = 200;  // coarse PDE grid; the fine grid doubles it
    double cfl = 0.9;
    double x_lo = -1.0;  // x-range mapped through F before adding the margin
    double x_hi = 1.0;
    int margin_cells = 10;
    double se_multiple = 3.0;
    SchemeOptions options;
};

/// Compares mc_value with u(s, F(x)) at each probe (s, x). A probe passes when
/// |mc - u_fine| <= se_multiple * SE + C_pde (dy_f^2 + dtau_f), with C_pde from
/// the coarse/fine pair (J, K) and (2J, 4K). Probe times must be multiples of
/// T / 64.
ExperimentReport fk_compare(const DiffusionSpec& spec, const SignedMeasure& nu, const TerminalPayoff& payoff,
                            const std::vector<std::pair<double, double>>& probes, const FkConfig& config,
                            PdeSolution* fine_out = nullptr);

}  // namespace skewsim
