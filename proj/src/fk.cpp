#include "skewsim/fk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "skewsim/error.hpp"
#include "skewsim/parallel.hpp"

namespace skewsim {

void TerminalPayoff::validate(double lo, double hi, double horizon, int samples) const {
    if (!f) throw ConfigError("payoff needs a terminal function f");
    if (samples < 2) throw InputError("payoff validation needs at least two samples");
    for (int i = 0; i < samples; ++i) {
        double x = lo + (hi - lo) * i / (samples - 1);
        if (f_max && !(std::abs(f(x)) <= *f_max))
            throw ConfigError("terminal payoff exceeds its declared bound at x = " + format_double(x));
        if (g_max && g)
            for (int k = 0; k < 5; ++k) {
                double t = horizon * k / 4.0;
                if (!(std::abs(g(t, x)) <= *g_max))
                    throw ConfigError("running payoff exceeds its declared bound at x = " + format_double(x));
            }
    }
}

TerminalPayoff TerminalPayoff::from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("f")) throw ConfigError("payoff needs 'f'");
    check_keys(doc, {"f", "g", "f_max", "g_max"}, "payoff");
    TerminalPayoff p;
    p.f = make_function(doc.at("f"));
    if (doc.contains("g")) p.g = make_time_function(doc.at("g"));
    if (doc.contains("f_max")) p.f_max = doc.at("f_max").get<double>();
    if (doc.contains("g_max")) p.g_max = doc.at("g_max").get<double>();
    p.description = doc;
    return p;
}

void PdeGrid::check_cfl(double sigma_max) const {
    if (!(y_lo < y_hi) || cells < 3 || time_steps < 1 || !(horizon > 0.0))
        throw ConfigError("PDE grid needs y_lo < y_hi, at least 3 cells, steps >= 1 and T > 0");
    if (dtau() * sigma_max * sigma_max > dy() * dy())
        throw ConfigError("PDE grid violates the CFL condition: dtau = " + format_double(dtau()) +
                          " > dy^2 / sigma_max^2 = " + format_double(dy() * dy() / (sigma_max * sigma_max)));
}

PdeGrid PdeGrid::stable(double y_lo, double y_hi, int cells, double horizon, double sigma_max, double cfl,
                        int multiple) {
    if (!(cfl > 0.0) || cfl > 1.0) throw ConfigError("CFL factor must lie in (0, 1]");
    if (multiple < 1) throw InputError("step multiple must be positive");
    PdeGrid g{y_lo, y_hi, cells, horizon, multiple};
    double dy = g.dy();
    double needed = sigma_max > 0.0 ? std::ceil(horizon * sigma_max * sigma_max / (cfl * dy * dy)) : 1.0;
    auto blocks = static_cast<long long>(std::ceil(needed / multiple));
    if (blocks * multiple > std::numeric_limits<int>::max()) throw ResourceError("PDE grid needs too many time steps");
    g.time_steps = static_cast<int>(std::max<long long>(1, blocks) * multiple);
    g.check_cfl(sigma_max);
    return g;
}

double PdeSolution::at(double s, double y) const {
    std::size_t idx = times.size();
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - s) <= 1e-12 * std::max(1.0, grid.horizon)) idx = i;
    if (idx == times.size()) throw InputError("no PDE snapshot at s = " + format_double(s));
    const auto& u = values[idx];
    double pos = (y - grid.y_lo) / grid.dy() - 0.5;
    if (pos <= 0.0) return u.front();
    if (pos >= grid.cells - 1) return u.back();
    auto j = static_cast<std::size_t>(pos);
    double w = pos - static_cast<double>(j);
    return (1.0 - w) * u[j] + w * u[j + 1];
}

std::string PdeSolution::to_csv() const {
    std::ostringstream out;
    out << "s,y,u\n";
    for (std::size_t i = 0; i < times.size(); ++i)
        for (int j = 0; j < grid.cells; ++j)
            out << format_double(times[i]) << ',' << format_double(grid.node(j)) << ','
                << format_double(values[i][static_cast<std::size_t>(j)]) << '\n';
    return out.str();
}

PdeSolution pde_solve(const RealFunction& sigma_tilde, const RealFunction& terminal, const TimeFunction& source,
                      const PdeGrid& grid, std::vector<double> snapshot_times) {
    const auto n = static_cast<std::size_t>(grid.cells);
    std::vector<double> a(n);  // sigma~^2 dtau / (2 dy^2)
    std::vector<double> u(n);
    double sigma_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double y = grid.node(static_cast<int>(j));
        double s = sigma_tilde(y);
        if (!std::isfinite(s)) throw InputError("sigma~ is not finite at y = " + format_double(y));
        sigma_max = std::max(sigma_max, std::abs(s));
        a[j] = 0.5 * s * s;
        u[j] = terminal(y);
        if (!std::isfinite(u[j])) throw InputError("terminal data is not finite at y = " + format_double(y));
    }
    grid.check_cfl(sigma_max);
    const double dtau = grid.dtau();
    const double ratio = dtau / (grid.dy() * grid.dy());
    for (auto& v : a) v *= ratio;

    // snapshot knots, validated up front
    std::vector<int> knots;
    for (double s : snapshot_times) {
        double k = s / dtau;
        auto kr = std::llround(k);
        if (s < 0.0 || s > grid.horizon || std::abs(k - static_cast<double>(kr)) > 1e-9 * std::max(1.0, k))
            throw InputError("snapshot time " + format_double(s) + " is not a PDE time knot");
        knots.push_back(static_cast<int>(kr));
    }

    const auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
    const double u_min = *lo_it;
    const double u_max = *hi_it;
    double g_max = 0.0;

    PdeSolution sol;
    sol.grid = grid;
    sol.times = snapshot_times;
    sol.values.resize(knots.size());
    auto record = [&](int k) {
        for (std::size_t i = 0; i < knots.size(); ++i)
            if (knots[i] == k) sol.values[i] = u;
    };
    record(grid.time_steps);

    std::vector<double> next(n);
    for (int k = grid.time_steps - 1; k >= 0; --k) {
        double t = k == 0 ? 0.0 : k * dtau;
        for (std::size_t j = 0; j < n; ++j) {
            double g = source ? source(t, grid.node(static_cast<int>(j))) : 0.0;
            g_max = std::max(g_max, std::abs(g));
            double diffusion = 0.0;
            if (j > 0 && j + 1 < n) diffusion = a[j] * (u[j + 1] - 2.0 * u[j] + u[j - 1]);
            next[j] = u[j] + diffusion + dtau * g;
        }
        u.swap(next);
        const double span = (grid.horizon - t) * g_max;
        const double slack = 1e-12 * std::max({1.0, std::abs(u_min), std::abs(u_max), span});
        for (std::size_t j = 0; j < n; ++j)
            if (u[j] < u_min - span - slack || u[j] > u_max + span + slack)
                throw ConditionError("maximum_principle", grid.node(static_cast<int>(j)),
                                     "PDE solution left the maximum-principle bounds");
        record(k);
    }
    return sol;
}

McValue mc_value(const DiffusionSpec& spec, const SignedMeasure& nu, const TerminalPayoff& payoff, double horizon,
                 double s, double x, int paths, int steps, std::uint64_t seed, const SchemeOptions& options) {
    if (!payoff.f) throw ConfigError("payoff needs a terminal function f");
    if (!(s >= 0.0) || !(s < horizon)) throw InputError("mc_value needs 0 <= s < T");
    if (paths < 2) throw InputError("mc_value needs at least two paths");
    TimeGrid grid(horizon - s, steps);
    auto driver = sample_driver(seed, paths, grid);
    auto scheme = make_scheme("transform", spec, nu, grid, options);
    std::vector<double> samples(static_cast<std::size_t>(paths));
    const double dt = grid.dt();
    for_each_path(*scheme, x, driver, options.threads,
                  [&](int p, std::span<const double> path, std::span<const double>, bool exited) {
                      if (exited) throw ConditionError("domain", path.back(), "Monte Carlo path left the domain");
                      double value = payoff.f(path.back());
                      if (payoff.has_running())
                          for (int k = 0; k < grid.steps(); ++k)
                              value += payoff.g(s + grid.time(k), path[static_cast<std::size_t>(k)]) * dt;
                      samples[static_cast<std::size_t>(p)] = value;
                  });
    double sum = 0.0;
    for (double v : samples) sum += v;
    McValue out;
    out.estimate = sum / paths;
    double ss = 0.0;
    for (double v : samples) ss += (v - out.estimate) * (v - out.estimate);
    out.standard_error = std::sqrt(ss / (paths - 1.0) / paths);
    return out;
}

ExperimentReport fk_compare(const DiffusionSpec& spec, const SignedMeasure& nu, const TerminalPayoff& payoff,
                            const std::vector<std::pair<double, double>>& probes, const FkConfig& config,
                            PdeSolution* fine_out) {
    if (probes.empty()) throw InputError("fk_compare needs at least one probe");
    if (!(config.x_lo < config.x_hi)) throw ConfigError("fk x-range needs x_lo < x_hi");
    Json probe_list = Json::array();
    for (auto [s, x] : probes) probe_list.push_back({s, x});
    Json cfg{{"horizon", config.horizon}, {"paths", config.paths},     {"mc_steps", config.mc_steps},
             {"seed", config.seed},       {"cells", config.cells},     {"cfl", config.cfl},
             {"x_range", {config.x_lo, config.x_hi}}, {"margin_cells", config.margin_cells},
             {"se_multiple", config.se_multiple},     {"probes", probe_list}};
    ExperimentReport report("fk", cfg);
    payoff.validate(config.x_lo, config.x_hi, config.horizon);

    TimeGrid unit(config.horizon, 1);
    auto scheme = make_scheme("transform", spec, nu, unit, config.options);
    const auto& ts = dynamic_cast<const TransformScheme&>(*scheme);
    auto transform = ts.transform_ptr();
    RealFunction sigma_tilde = build_sigma_tilde(transform, spec.without_drift());

    double y_lo = transform->F(config.x_lo);
    double y_hi = transform->F(config.x_hi);
    double sigma_max = 0.0;
    for (int i = 0; i <= 4096; ++i) {
        double y = transform->y_min() + (transform->y_max() - transform->y_min()) * i / 4096.0;
        sigma_max = std::max(sigma_max, std::abs(sigma_tilde(y)));
    }
    double margin = 6.0 * sigma_max * std::sqrt(config.horizon);
    y_lo -= margin;
    y_hi += margin;
    if (y_lo < transform->y_min() || y_hi > transform->y_max()) {
        y_lo = std::max(y_lo, transform->y_min());
        y_hi = std::min(y_hi, transform->y_max());
        report.add_note("PDE domain clamped to the transform image");
    }

    RealFunction terminal = [&](double y) { return payoff.f(transform->F_inverse(y)); };
    TimeFunction source;
    if (payoff.has_running())
        source = [&](double t, double y) { return payoff.g(t, transform->F_inverse(y)); };

    std::vector<double> times;
    for (auto [s, x] : probes) {
        (void)x;
        if (std::find(times.begin(), times.end(), s) == times.end()) times.push_back(s);
    }
    auto coarse_grid = PdeGrid::stable(y_lo, y_hi, config.cells, config.horizon, sigma_max, config.cfl);
    PdeGrid fine_grid = coarse_grid;
    fine_grid.cells *= 2;
    fine_grid.time_steps *= 4;
    auto coarse = pde_solve(sigma_tilde, terminal, source, coarse_grid, times);
    auto fine = pde_solve(sigma_tilde, terminal, source, fine_grid, times);
    report.add_row("grid", 0, "coarse_cells", coarse_grid.cells);
    report.add_row("grid", 0, "coarse_time_steps", coarse_grid.time_steps);
    report.add_row("grid", 0, "y_lo", y_lo);
    report.add_row("grid", 0, "y_hi", y_hi);

    const double h_coarse = coarse_grid.dy() * coarse_grid.dy() + coarse_grid.dtau();
    const double h_fine = fine_grid.dy() * fine_grid.dy() + fine_grid.dtau();
    int checked = 0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        auto [s, x] = probes[i];
        std::string tag = "[" + std::to_string(i) + "]";
        if (!transform->in_domain(x)) {
            report.add_note("probe " + tag + " skipped: x outside the transform domain");
            continue;
        }
        double y = transform->F(x);
        double edge = config.margin_cells * coarse_grid.dy();
        if (y < y_lo + edge || y > y_hi - edge) {
            report.add_note("probe " + tag + " skipped: within " + std::to_string(config.margin_cells) +
                            " cells of the PDE boundary");
            continue;
        }
        double u_c = coarse.at(s, y);
        double u_f = fine.at(s, y);
        double c_pde = std::abs(u_c - u_f) / (h_coarse - h_fine);
        double pde_budget = c_pde * h_fine;
        auto mc = mc_value(spec, nu, payoff, config.horizon, s, x, config.paths, config.mc_steps,
                           config.seed + i, config.options);
        double discrepancy = std::abs(mc.estimate - u_f);
        double budget = config.se_multiple * mc.standard_error + pde_budget;
        report.add_row("probe", static_cast<double>(i), "s", s);
        report.add_row("probe", static_cast<double>(i), "x", x);
        report.add_row("probe", static_cast<double>(i), "mc", mc.estimate);
        report.add_row("probe", static_cast<double>(i), "mc_se", mc.standard_error);
        report.add_row("probe", static_cast<double>(i), "u_coarse", u_c);
        report.add_row("probe", static_cast<double>(i), "u_fine", u_f);
        report.add_row("probe", static_cast<double>(i), "pde_budget", pde_budget);
        report.add_row("probe", static_cast<double>(i), "mc_budget", config.se_multiple * mc.standard_error);
        report.add_metric("discrepancy" + tag, discrepancy, budget, discrepancy <= budget + 1e-12);
        ++checked;
    }
    if (checked == 0) report.add_metric("probes_checked", 0.0, 1.0, false);
    if (fine_out) *fine_out = std::move(fine);
    return report;
}

}  // namespace skewsim
