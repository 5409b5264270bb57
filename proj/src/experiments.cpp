#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "skewsim/error.hpp"
#include "skewsim/parallel.hpp"
#include "skewsim/verify.hpp"

namespace skewsim {

namespace {

using Buffer = std::vector<double>;

double sup_gap(std::span<const double> a, std::span<const double> b) {
    double g = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) g = std::max(g, std::abs(a[k] - b[k]));
    return g;
}

double percentile95(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    auto idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size()))) - 1;
    return v[std::min(idx, v.size() - 1)];
}

Json options_json(const SchemeOptions& o) {
    return Json{{"x_min", o.x_min}, {"x_max", o.x_max}, {"resolution", o.resolution}};
}

void require_paths(int paths, const char* what) {
    if (paths < 1) throw InputError(std::string(what) + " needs at least one path");
}

// E|mu + s Z| for a standard normal Z.
double mean_abs_normal(double mu, double s) {
    if (s == 0.0) return std::abs(mu);
    double z = mu / s;
    double cdf_neg = 0.5 * std::erfc(z / std::numbers::sqrt2);
    double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    return mu * (1.0 - 2.0 * cdf_neg) + 2.0 * s * pdf;
}

bool unit_brownian(const DiffusionSpec& spec, const SignedMeasure& nu, double lo, double hi) {
    if (spec.has_drift() || !nu.empty()) return false;
    RealFunction off = [&](double x) { return spec.sigma(x) - 1.0; };
    return sup_abs(off, lo, hi) == 0.0;
}

// non-increasing with ties below floor
bool non_increasing(const std::vector<double>& v, double floor, double* worst = nullptr) {
    bool ok = true;
    double w = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        double bound = std::max(v[i - 1], floor);
        w = std::max(w, v[i] / std::max(bound, std::numeric_limits<double>::min()));
        if (v[i] > bound) ok = false;
    }
    if (worst) *worst = w;
    return ok;
}

}  // namespace

ExperimentReport uniqueness_experiment(const DiffusionSpec& spec, const SignedMeasure& nu, double x0,
                                       const UniquenessConfig& config) {
    require_paths(config.paths, "uniqueness experiment");
    if (config.steps.empty()) throw InputError("uniqueness experiment needs a grid ladder");
    Json cfg{{"horizon", config.horizon}, {"steps", config.steps},     {"paths", config.paths},
             {"seed", config.seed},       {"deltas", config.deltas},   {"scheme", config.scheme},
             {"reference", config.reference}, {"x0", x0},              {"gap_threshold", config.gap_threshold},
             {"rounding_floor", config.rounding_floor}, {"options", options_json(config.options)}};
    ExperimentReport report("uniqueness", cfg);

    auto steps = config.steps;
    std::sort(steps.begin(), steps.end());
    auto deltas = config.deltas;
    std::sort(deltas.begin(), deltas.end(), std::greater<>());

    std::vector<double> pair_gaps;
    std::vector<double> finest_perturbation;
    bool reference_ok = true;
    double exit_fraction = 0.0;
    for (int n : steps) {
        TimeGrid grid(config.horizon, n);
        auto driver = sample_driver(config.seed, config.paths, grid);
        std::unique_ptr<Scheme> scheme;
        std::unique_ptr<Scheme> reference;
        try {
            scheme = make_scheme(config.scheme, spec, nu, grid, config.options);
        } catch (const Error& e) {
            report.add_note("scheme '" + config.scheme + "' skipped at N=" + std::to_string(n) + ": " + e.what());
            report.add_metric("scheme_available", 0.0, 1.0, false);
            return report;
        }
        if (reference_ok) {
            try {
                reference = make_scheme(config.reference, spec, nu, grid, config.options);
            } catch (const Error& e) {
                report.add_note("reference '" + config.reference + "' skipped: " + e.what());
                reference_ok = false;
            }
        }

        const auto m = static_cast<std::size_t>(config.paths);
        const std::size_t d = deltas.size();
        std::vector<double> pair_gap(m, 0.0);
        std::vector<double> pert_gap(m * d, 0.0);
        std::vector<int> exits(m, 0);
        const int width = n + 1;
        parallel_for(m, config.options.threads, [&](std::size_t begin, std::size_t end) {
            Buffer dW(static_cast<std::size_t>(n)), base(width), other(width), aux(width);
            for (std::size_t p = begin; p < end; ++p) {
                driver.fill(static_cast<int>(p), dW);
                int exited = 0;
                exited += !scheme->run(x0, grid, dW, base, aux);
                if (reference) {
                    exited += !reference->run(x0, grid, dW, other, aux);
                    pair_gap[p] = sup_gap(base, other);
                }
                for (std::size_t j = 0; j < d; ++j) {
                    exited += !scheme->run(x0 + deltas[j], grid, dW, other, aux);
                    pert_gap[p * d + j] = sup_gap(base, other);
                }
                exits[p] = exited;
            }
        });

        int runs = 1 + (reference ? 1 : 0) + static_cast<int>(d);
        double total_exits = 0.0;
        for (int e : exits) total_exits += e;
        exit_fraction = std::max(exit_fraction, total_exits / (static_cast<double>(runs) * config.paths));

        const double dt = grid.dt();
        if (reference) {
            double mean = sample_stats(pair_gap).mean;
            pair_gaps.push_back(mean);
            report.add_row("dt", dt, "scheme_gap_mean", mean);
            report.add_row("dt", dt, "scheme_gap_p95", percentile95(pair_gap));
        }
        std::vector<double> per_delta(d);
        for (std::size_t j = 0; j < d; ++j) {
            std::vector<double> col(m);
            for (std::size_t p = 0; p < m; ++p) col[p] = pert_gap[p * d + j];
            per_delta[j] = sample_stats(col).mean;
            std::string tag = "[" + format_double(deltas[j]) + "]";
            report.add_row("dt", dt, "perturbation_gap_mean" + tag, per_delta[j]);
            report.add_row("dt", dt, "perturbation_gap_p95" + tag, percentile95(col));
        }
        finest_perturbation = per_delta;
    }

    if (reference_ok && !pair_gaps.empty()) {
        double worst = 0.0;
        bool mono = non_increasing(pair_gaps, config.rounding_floor, &worst);
        report.add_metric("scheme_gap_monotone", worst, 1.0, mono);
        report.add_metric("scheme_gap_final", pair_gaps.back(), config.gap_threshold,
                          pair_gaps.back() <= config.gap_threshold);
        if (*std::max_element(pair_gaps.begin(), pair_gaps.end()) <= config.rounding_floor)
            report.add_note("scheme gaps are at the rounding floor at every level");
    }
    if (!finest_perturbation.empty()) {
        double worst = 0.0;
        bool mono = non_increasing(finest_perturbation, config.rounding_floor, &worst);
        report.add_metric("perturbation_gap_shrinks", worst, 1.0, mono);
    }
    report.add_metric("exit_fraction", exit_fraction, config.max_exit_fraction,
                      exit_fraction <= config.max_exit_fraction);
    return report;
}

ExperimentReport continuity_experiment(const DiffusionSpec& spec, const SignedMeasure& nu, double x0,
                                       const ContinuityConfig& config) {
    if (!spec.growth_bound) throw ConfigError("continuity experiment needs a declared growth bound");
    require_paths(config.paths, "continuity experiment");
    if (config.offsets.empty()) throw InputError("continuity experiment needs offsets");
    if (!(config.epsilon_level > 0.0)) throw InputError("epsilon level must be positive");
    auto offsets = config.offsets;
    std::sort(offsets.begin(), offsets.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    Json cfg{{"horizon", config.horizon}, {"steps", config.steps}, {"paths", config.paths},
             {"seed", config.seed}, {"offsets", offsets}, {"alpha", config.alpha},
             {"epsilon_level", config.epsilon_level}, {"probability_floor", config.probability_floor},
             {"x0", x0}, {"options", options_json(config.options)}};
    ExperimentReport report("continuity", cfg);

    TimeGrid grid(config.horizon, config.steps);
    auto driver = sample_driver(config.seed, config.paths, grid);
    auto scheme = make_scheme("transform", spec, nu, grid, config.options);
    const auto m = static_cast<std::size_t>(config.paths);
    const std::size_t d = offsets.size();
    std::vector<std::uint8_t> exceed(m * d, 0);
    const std::size_t width = static_cast<std::size_t>(config.steps) + 1;
    parallel_for(m, config.options.threads, [&](std::size_t begin, std::size_t end) {
        Buffer dW(static_cast<std::size_t>(config.steps)), base(width), other(width), diff(width), aux(width);
        for (std::size_t p = begin; p < end; ++p) {
            driver.fill(static_cast<int>(p), dW);
            scheme->run(x0, grid, dW, base, aux);
            for (std::size_t j = 0; j < d; ++j) {
                if (offsets[j] == 0.0) continue;
                scheme->run(x0 + offsets[j], grid, dW, other, aux);
                for (std::size_t k = 0; k < width; ++k) diff[k] = other[k] - base[k];
                exceed[p * d + j] = holder_norm(diff, grid, config.alpha) > config.epsilon_level;
            }
        }
    });

    std::vector<double> probs(d);
    for (std::size_t j = 0; j < d; ++j) {
        double count = 0.0;
        for (std::size_t p = 0; p < m; ++p) count += exceed[p * d + j];
        probs[j] = count / static_cast<double>(m);
        report.add_row("offset", std::abs(offsets[j]), "exceed_probability", probs[j]);
    }
    double worst = 0.0;
    bool mono = non_increasing(probs, 0.0, &worst);
    report.add_metric("probability_non_increasing", worst, 1.0, mono);
    report.add_metric("smallest_offset_probability", probs.back(), config.probability_floor,
                      probs.back() <= config.probability_floor);
    return report;
}

ExperimentReport time_regularity_experiment(const DiffusionSpec& spec, const SignedMeasure& nu, double x0,
                                            const RegularityConfig& config) {
    require_paths(config.paths, "regularity experiment");
    if (config.batches < 2 || config.batches > config.paths)
        throw InputError("regularity experiment needs 2 <= batches <= paths");
    if (config.start_points < 1) throw InputError("regularity experiment needs a start point");
    if (config.steps < 2) throw InputError("regularity experiment needs at least two steps");
    Json cfg{{"horizon", config.horizon}, {"steps", config.steps}, {"paths", config.paths},
             {"seed", config.seed}, {"batches", config.batches}, {"start_points", config.start_points},
             {"expected_slope", config.expected_slope}, {"slope_se_multiple", config.slope_se_multiple},
             {"x0", x0}, {"options", options_json(config.options)}};
    if (config.slope_band) cfg["slope_band"] = {config.slope_band->first, config.slope_band->second};
    ExperimentReport report("regularity", cfg);

    TimeGrid grid(config.horizon, config.steps);
    auto driver = sample_driver(config.seed, config.paths, grid);
    auto scheme = make_scheme("transform", spec, nu, grid, config.options);

    struct Pair {
        int s;
        int lag;
    };
    std::vector<int> lags;
    for (int lag = 1; lag <= config.steps / 2; lag *= 2) lags.push_back(lag);
    std::vector<Pair> mesh;
    for (int lag : lags)
        for (int i = 0; i < config.start_points; ++i) {
            int s = static_cast<int>(static_cast<long long>(config.steps) * i / config.start_points);
            if (s + lag <= config.steps) mesh.push_back({s, lag});
        }

    const auto m = static_cast<std::size_t>(config.paths);
    const std::size_t q = mesh.size();
    std::vector<double> sq(m * q);
    const std::size_t width = static_cast<std::size_t>(config.steps) + 1;
    parallel_for(m, config.options.threads, [&](std::size_t begin, std::size_t end) {
        Buffer dW(static_cast<std::size_t>(config.steps)), x(width), aux(width);
        for (std::size_t p = begin; p < end; ++p) {
            driver.fill(static_cast<int>(p), dW);
            scheme->run(x0, grid, dW, x, aux);
            for (std::size_t j = 0; j < q; ++j) {
                double inc = x[static_cast<std::size_t>(mesh[j].s + mesh[j].lag)] - x[static_cast<std::size_t>(mesh[j].s)];
                sq[p * q + j] = inc * inc;
            }
        }
    });

    // per-pair means, and per-lag means over all paths and per batch
    std::vector<double> pair_mean(q, 0.0);
    const auto nb = static_cast<std::size_t>(config.batches);
    std::vector<double> lag_mean(lags.size(), 0.0);
    std::vector<double> batch_lag(nb * lags.size(), 0.0);
    std::vector<double> lag_count(lags.size(), 0.0);
    std::vector<double> batch_size(nb, 0.0);
    for (std::size_t p = 0; p < m; ++p) batch_size[p * nb / m] += 1.0;
    for (std::size_t j = 0; j < q; ++j) {
        auto li = static_cast<std::size_t>(std::countr_zero(static_cast<unsigned>(mesh[j].lag)));
        lag_count[li] += 1.0;
        for (std::size_t p = 0; p < m; ++p) {
            pair_mean[j] += sq[p * q + j];
            batch_lag[(p * nb / m) * lags.size() + li] += sq[p * q + j];
        }
        pair_mean[j] /= static_cast<double>(m);
        lag_mean[li] += pair_mean[j];
    }
    for (std::size_t li = 0; li < lags.size(); ++li) lag_mean[li] /= lag_count[li];
    for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t li = 0; li < lags.size(); ++li) batch_lag[b * lags.size() + li] /= batch_size[b] * lag_count[li];

    double max_ratio = 0.0;
    for (std::size_t j = 0; j < q; ++j)
        max_ratio = std::max(max_ratio, pair_mean[j] / std::sqrt(mesh[j].lag * grid.dt()));
    const double c_hat = 1.1 * max_ratio;
    bool bound = std::isfinite(c_hat);
    for (std::size_t j = 0; j < q && bound; ++j)
        bound = pair_mean[j] <= c_hat * std::sqrt(mesh[j].lag * grid.dt());
    report.add_metric("holder_half_bound", c_hat, c_hat, bound);
    for (std::size_t li = 0; li < lags.size(); ++li)
        report.add_row("lag", lags[li] * grid.dt(), "mean_square_increment", lag_mean[li]);

    auto fit = [&](const double* means) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double k = static_cast<double>(lags.size());
        for (std::size_t li = 0; li < lags.size(); ++li) {
            double lx = std::log(lags[li] * grid.dt());
            double ly = std::log(means[li]);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
        }
        return (k * sxy - sx * sy) / (k * sxx - sx * sx);
    };
    bool positive = std::all_of(lag_mean.begin(), lag_mean.end(), [](double v) { return v > 0.0; }) &&
                    std::all_of(batch_lag.begin(), batch_lag.end(), [](double v) { return v > 0.0; });
    if (!positive || lags.size() < 2) {
        report.add_note("increments vanish on some lag; slope fit skipped");
        return report;
    }
    double slope = fit(lag_mean.data());
    std::vector<double> batch_slopes(nb);
    for (std::size_t b = 0; b < nb; ++b) batch_slopes[b] = fit(batch_lag.data() + b * lags.size());
    double se = sample_stats(batch_slopes).standard_error;
    report.add_row("fit", 0.0, "slope_standard_error", se);
    if (config.slope_band) {
        auto [lo, hi] = *config.slope_band;
        report.add_metric("slope", slope, 0.5 * (hi - lo), slope >= lo && slope <= hi);
    } else {
        double tol = config.slope_se_multiple * se;
        report.add_metric("slope", slope, tol, std::abs(slope - config.expected_slope) <= tol);
    }
    return report;
}

ExperimentReport localtime_experiment(const DiffusionSpec& spec, const SignedMeasure& nu,
                                      const LocalTimeConfig& config) {
    require_paths(config.paths, "local-time experiment");
    require_paths(config.residual_paths, "local-time experiment");
    require_paths(config.pair_paths, "local-time experiment");
    if (config.steps.empty()) throw InputError("local-time experiment needs a grid ladder");
    auto steps = config.steps;
    std::sort(steps.begin(), steps.end());
    Json cfg{{"horizon", config.horizon},
             {"steps", steps},
             {"paths", config.paths},
             {"residual_paths", config.residual_paths},
             {"pair_paths", config.pair_paths},
             {"seed", config.seed},
             {"bandwidth_exponent", config.bandwidth_exponent},
             {"level", config.level},
             {"x0", config.x0},
             {"perturbation", config.perturbation},
             {"convention", to_string(config.convention)},
             {"tanaka_factor", config.tanaka_factor},
             {"options", options_json(config.options)}};
    if (config.expected_local_time) cfg["expected_local_time"] = *config.expected_local_time;
    ExperimentReport report("localtime", cfg);
    const int threads = config.options.threads;
    const double a = config.level;

    // calibration and Tanaka consistency at the finest grid
    {
        TimeGrid grid(config.horizon, steps.back());
        auto driver = sample_driver(config.seed, config.paths, grid);
        auto scheme = make_scheme("transform", spec, nu, grid, config.options);
        const double eps = std::pow(grid.dt(), config.bandwidth_exponent);
        std::vector<double> occ(static_cast<std::size_t>(config.paths));
        std::vector<double> tan(occ.size());
        for_each_path(*scheme, config.x0, driver, threads,
                      [&](int p, std::span<const double> x, std::span<const double>, bool) {
                          occ[static_cast<std::size_t>(p)] =
                              estimate_occupation(x, grid, spec.sigma, a, eps, grid.steps());
                          tan[static_cast<std::size_t>(p)] =
                              estimate_tanaka(x, a, grid.steps(), config.convention, config.tanaka_factor);
                      });
        auto so = sample_stats(occ);
        auto st = sample_stats(tan);
        report.add_row("dt", grid.dt(), "occupation_mean", so.mean);
        report.add_row("dt", grid.dt(), "occupation_se", so.standard_error);
        report.add_row("dt", grid.dt(), "tanaka_mean", st.mean);
        std::optional<double> expected = config.expected_local_time;
        if (!expected && unit_brownian(spec, nu, config.options.x_min, config.options.x_max))
            expected = mean_abs_normal(config.x0 - a, std::sqrt(config.horizon)) - std::abs(config.x0 - a);
        if (expected) {
            double z = so.standard_error > 0.0 ? (so.mean - *expected) / so.standard_error : 0.0;
            report.add_metric("calibration_z", z, config.calibration_se, std::abs(z) <= config.calibration_se);
            report.add_row("dt", grid.dt(), "expected_local_time", *expected);
        } else {
            report.add_note("no local-time oracle for this spec; calibration skipped");
        }
        double rel = std::abs(st.mean - so.mean) / std::max(std::abs(so.mean), 1e-12);
        report.add_metric("tanaka_consistency", rel, config.consistency_tolerance,
                          rel <= config.consistency_tolerance);
    }

    // occupation-formula residuals and identities across the ladder
    const LocalTimeEstimator ladder_estimators[] = {LocalTimeEstimator::occupation, LocalTimeEstimator::tanaka};
    std::vector<std::vector<double>> residuals(2);
    std::vector<double> lattice_ordered, lattice_free, minmax_ordered, minmax_free;
    RealFunction one = [](double) { return 1.0; };
    for (int n : steps) {
        TimeGrid grid(config.horizon, n);
        const double eps = std::pow(grid.dt(), config.bandwidth_exponent);
        auto scheme = make_scheme("transform", spec, nu, grid, config.options);
        const int pair_count = std::max(config.residual_paths, 2 * config.pair_paths);
        auto driver = sample_driver(config.seed, pair_count, grid);
        auto paths = simulate(*scheme, config.x0, driver, threads);

        for (std::size_t e = 0; e < 2; ++e) {
            LocalTimeOptions opts{ladder_estimators[e], eps, config.convention, config.tanaka_factor};
            const auto rp = static_cast<std::size_t>(config.residual_paths);
            std::vector<double> res(rp), rhs(rp);
            parallel_for(rp, threads, [&](std::size_t begin, std::size_t end) {
                for (std::size_t p = begin; p < end; ++p) {
                    auto x = paths.path(static_cast<int>(p));
                    auto r = occupation_residual(x, grid, spec.sigma, one, quantile_levels(x, eps), opts);
                    res[p] = r.residual;
                    rhs[p] = r.rhs;
                }
            });
            double sr = 0.0, sh = 0.0;
            for (std::size_t p = 0; p < rp; ++p) {
                sr += res[p];
                sh += rhs[p];
            }
            double rel = sh > 0.0 ? sr / sh : 0.0;
            residuals[e].push_back(rel);
            report.add_row("dt", grid.dt(), "occupation_residual[" + to_string(ladder_estimators[e]) + "]", rel);
        }

        // identities with the Tanaka estimator: ordered pairs share the driver,
        // free pairs use paths p and p + pair_paths
        LocalTimeOptions topts{LocalTimeEstimator::tanaka, eps, config.convention, config.tanaka_factor};
        const auto pp = static_cast<std::size_t>(config.pair_paths);
        auto shifted_driver = sample_driver(config.seed, config.pair_paths, grid);
        auto shifted = simulate(*scheme, config.x0 + config.perturbation, shifted_driver, threads);
        std::vector<double> lo_res(pp), lo_scale(pp), lf_res(pp), lf_scale(pp);
        std::vector<double> mo_res(pp), mf_res(pp);
        parallel_for(pp, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                auto x1 = paths.path(static_cast<int>(p));
                auto y1 = shifted.path(static_cast<int>(p));
                auto y2 = paths.path(static_cast<int>(p + pp));
                auto lo = lattice_identity_check(x1, y1, grid, spec.sigma, a, topts);
                auto mo = minmax_identity_check(x1, y1, grid, spec.sigma, a, topts);
                auto lf = lattice_identity_check(x1, y2, grid, spec.sigma, a, topts);
                auto mf = minmax_identity_check(x1, y2, grid, spec.sigma, a, topts);
                lo_res[p] = lo.residual;
                mo_res[p] = mo.residual;
                lo_scale[p] = 0.5 * mo.rhs;
                lf_res[p] = lf.residual;
                mf_res[p] = mf.residual;
                lf_scale[p] = 0.5 * mf.rhs;
            }
        });
        auto ratio = [](const std::vector<double>& num, const std::vector<double>& den) {
            double s = 0.0, t = 0.0;
            for (std::size_t i = 0; i < num.size(); ++i) {
                s += num[i];
                t += den[i];
            }
            return t > 0.0 ? s / t : (s > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        };
        lattice_ordered.push_back(ratio(lo_res, lo_scale));
        minmax_ordered.push_back(ratio(mo_res, lo_scale));
        lattice_free.push_back(ratio(lf_res, lf_scale));
        minmax_free.push_back(ratio(mf_res, lf_scale));
        report.add_row("dt", grid.dt(), "lattice_residual[ordered]", lattice_ordered.back());
        report.add_row("dt", grid.dt(), "minmax_residual[ordered]", minmax_ordered.back());
        report.add_row("dt", grid.dt(), "lattice_residual[free]", lattice_free.back());
        report.add_row("dt", grid.dt(), "minmax_residual[free]", minmax_free.back());
    }

    for (std::size_t e = 0; e < 2; ++e) {
        std::string tag = "[" + to_string(ladder_estimators[e]) + "]";
        double worst = 0.0;
        bool mono = true;
        for (std::size_t i = 1; i < residuals[e].size(); ++i) {
            worst = std::max(worst, residuals[e][i] / std::max(residuals[e][i - 1], 1e-300));
            if (!(residuals[e][i] < residuals[e][i - 1])) mono = false;
        }
        if (residuals[e].size() > 1) report.add_metric("residual_decreasing" + tag, worst, 1.0, mono);
        report.add_metric("residual_final" + tag, residuals[e].back(), config.residual_tolerance,
                          residuals[e].back() < config.residual_tolerance);
    }
    const double tol = config.identity_tolerance;
    report.add_metric("lattice_identity[ordered]", lattice_ordered.back(), tol, lattice_ordered.back() < tol);
    report.add_metric("minmax_identity[ordered]", minmax_ordered.back(), tol, minmax_ordered.back() < tol);
    report.add_metric("lattice_identity[free]", lattice_free.back(), tol, lattice_free.back() < tol);
    report.add_metric("minmax_identity[free]", minmax_free.back(), tol, minmax_free.back() < tol);
    return report;
}

ExperimentReport reflected_experiment(const DiffusionSpec& spec, const ReflectedConfig& config) {
    require_paths(config.paths, "reflected experiment");
    require_paths(config.pair_paths, "reflected experiment");
    if (config.x0 < 0.0 || config.x0_pair < 0.0) throw InputError("reflected experiment needs x0 >= 0");
    Json cfg{{"horizon", config.horizon},   {"steps", config.steps},
             {"paths", config.paths},       {"pair_paths", config.pair_paths},
             {"seed", config.seed},         {"x0", config.x0},
             {"x0_pair", config.x0_pair},   {"delta", config.delta},
             {"power_n", config.power_n},   {"bandwidth_exponent", config.bandwidth_exponent},
             {"identity_floor", config.identity_floor}};
    if (config.expected_mean) cfg["expected_mean"] = *config.expected_mean;
    ExperimentReport report("reflected", cfg);

    TimeGrid grid(config.horizon, config.steps);
    ReflectedScheme scheme(spec);
    auto driver = sample_driver(config.seed, config.paths, grid);
    const auto m = static_cast<std::size_t>(config.paths);
    std::vector<double> terminal(m), min_x(m);
    std::vector<std::uint8_t> k_monotone(m);
    for_each_path(scheme, config.x0, driver, config.threads,
                  [&](int p, std::span<const double> x, std::span<const double> k, bool) {
                      auto i = static_cast<std::size_t>(p);
                      terminal[i] = x.back();
                      min_x[i] = *std::min_element(x.begin(), x.end());
                      bool mono = true;
                      for (std::size_t j = 1; j < k.size(); ++j) mono = mono && k[j] >= k[j - 1];
                      k_monotone[i] = mono;
                  });
    double lowest = *std::min_element(min_x.begin(), min_x.end());
    report.add_metric("nonnegative", lowest, 0.0, lowest >= 0.0);
    bool all_mono = std::all_of(k_monotone.begin(), k_monotone.end(), [](std::uint8_t v) { return v != 0; });
    report.add_metric("reflection_non_decreasing", all_mono ? 1.0 : 0.0, 1.0, all_mono);

    auto st = sample_stats(terminal);
    report.add_row("dt", grid.dt(), "terminal_mean", st.mean);
    report.add_row("dt", grid.dt(), "terminal_se", st.standard_error);
    std::optional<double> expected = config.expected_mean;
    if (!expected && unit_brownian(spec, SignedMeasure{}, 0.0, 10.0))
        expected = mean_abs_normal(config.x0, std::sqrt(config.horizon));
    if (expected) {
        double z = st.standard_error > 0.0 ? (st.mean - *expected) / st.standard_error : 0.0;
        report.add_metric("terminal_mean_z", z, config.mean_se, std::abs(z) <= config.mean_se);
    } else {
        report.add_note("no oracle for the terminal mean; check skipped");
    }

    // same-driver pairs from x0 and x0_pair, and the pair (X, 0)
    auto pair_driver = sample_driver(config.seed, config.pair_paths, grid);
    auto xs = simulate(scheme, config.x0, pair_driver, config.threads);
    auto ys = simulate(scheme, config.x0_pair, pair_driver, config.threads);
    const double eps = std::pow(grid.dt(), config.bandwidth_exponent);
    LocalTimeOptions opts{LocalTimeEstimator::tanaka, eps, LocalTimeConvention::right, 2.0};
    const auto pp = static_cast<std::size_t>(config.pair_paths);
    std::vector<double> lhs(pp), rhs(pp), res(pp), zl(pp), zr(pp), zres(pp), away(pp), mass(pp);
    const std::vector<double> zero(static_cast<std::size_t>(grid.steps()) + 1, 0.0);
    parallel_for(pp, config.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            auto x = xs.path(static_cast<int>(p));
            auto y = ys.path(static_cast<int>(p));
            auto r = odd_power_identity_check(x, y, grid, config.power_n, opts);
            lhs[p] = r.lhs;
            rhs[p] = r.rhs;
            res[p] = r.residual;
            auto z = odd_power_identity_check(x, zero, grid, config.power_n, opts);
            zl[p] = z.lhs;
            zr[p] = z.rhs;
            zres[p] = z.residual;
            auto s = support_check(x, y, grid, config.delta, opts);
            mass[p] = s.mass;
            away[p] = s.fraction * s.mass;
        }
    });
    auto mean_of = [](const std::vector<double>& v) { return sample_stats(v).mean; };
    auto identity_metric = [&](const std::string& label, const std::vector<double>& l, const std::vector<double>& r,
                               const std::vector<double>& d) {
        double scale = std::max({std::abs(mean_of(l)), std::abs(mean_of(r)), config.identity_floor});
        double value = mean_of(d) / scale;
        report.add_row("dt", grid.dt(), label + "_lhs", mean_of(l));
        report.add_row("dt", grid.dt(), label + "_rhs", mean_of(r));
        report.add_metric(label, value, config.identity_tolerance, value < config.identity_tolerance);
    };
    identity_metric("odd_power_identity[pair]", lhs, rhs, res);
    // against Y = 0 both sides vanish in the limit; the estimate carries an O(dt) bias
    report.add_row("dt", grid.dt(), "odd_power_identity[zero]_lhs", mean_of(zl));
    report.add_row("dt", grid.dt(), "odd_power_identity[zero]_rhs", mean_of(zr));
    report.add_row("dt", grid.dt(), "odd_power_identity[zero]_residual", mean_of(zres));

    double total_mass = 0.0, total_away = 0.0;
    for (std::size_t p = 0; p < pp; ++p) {
        total_mass += mass[p];
        total_away += away[p];
    }
    double fraction = total_mass > 0.0 ? total_away / total_mass : 0.0;
    if (total_mass == 0.0) report.add_note("local time of the pair difference vanishes; support fraction is 0");
    report.add_row("delta", config.delta, "support_fraction", fraction);
    report.add_metric("support_fraction", fraction, config.support_tolerance, fraction < config.support_tolerance);
    return report;
}

}  // namespace skewsim
