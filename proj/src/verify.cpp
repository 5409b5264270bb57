#include "skewsim/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "skewsim/error.hpp"
#include "skewsim/quadrature.hpp"
#include "skewsim/rng.hpp"

namespace skewsim {

namespace {

// FFTW planning is not thread-safe; execution on distinct arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

bool is_power_of_two(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

struct FftBuffer {
    explicit FftBuffer(std::size_t n) : size(n), data(fftw_alloc_complex(n)) {
        if (!data) throw ResourceError("FFT buffer allocation failed");
    }
    ~FftBuffer() { fftw_free(data); }
    FftBuffer(const FftBuffer&) = delete;
    FftBuffer& operator=(const FftBuffer&) = delete;

    std::size_t size;
    fftw_complex* data;
};

void transform_in_place(FftBuffer& buf, int direction) {
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(buf.size), buf.data, buf.data, direction, FFTW_ESTIMATE);
    }
    if (!plan) throw ResourceError("FFTW could not create a plan");
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

double square(double v) { return v * v; }

}  // namespace

Padding padding_from_string(const std::string& name) {
    if (name == "mirror") return Padding::mirror;
    if (name == "periodic") return Padding::periodic;
    throw ConfigError("unknown padding '" + name + "' (mirror, periodic)");
}

std::vector<double> fourier_multiplier(std::span<const double> values, double dx, double exponent, Padding padding) {
    const std::size_t n = values.size();
    if (!is_power_of_two(n) || n < 2) throw InputError("Fourier multiplier needs a power-of-two sample count");
    if (!(dx > 0.0) || !std::isfinite(dx)) throw InputError("Fourier multiplier needs a positive grid step");
    const std::size_t m = padding == Padding::mirror ? 2 * n : n;

    FftBuffer buf(m);
    for (std::size_t i = 0; i < m; ++i) {
        double v = i < n ? values[i] : values[m - 1 - i];
        if (!std::isfinite(v)) throw InputError("Fourier multiplier input is not finite");
        buf.data[i][0] = v;
        buf.data[i][1] = 0.0;
    }
    transform_in_place(buf, FFTW_FORWARD);

    const double base = 2.0 * std::numbers::pi / (static_cast<double>(m) * dx);
    for (std::size_t k = 0; k < m; ++k) {
        double signed_k = k <= m / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(m);
        double omega = std::abs(signed_k) * base;
        double factor = omega == 0.0 ? (exponent == 0.0 ? 1.0 : 0.0) : std::pow(omega, exponent);
        buf.data[k][0] *= factor;
        buf.data[k][1] *= factor;
    }
    transform_in_place(buf, FFTW_BACKWARD);

    std::vector<double> out(n);
    double re_max = 0.0;
    double im_max = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double re = buf.data[i][0] / static_cast<double>(m);
        double im = buf.data[i][1] / static_cast<double>(m);
        re_max = std::max(re_max, std::abs(re));
        im_max = std::max(im_max, std::abs(im));
        if (i < n) out[i] = re;
    }
    if (im_max > 1e-8 * std::max(re_max, 1e-300) && im_max > 1e-300)
        throw ConditionError("real_output", 0.0, "Fourier multiplier left an imaginary residue");
    return out;
}

std::vector<double> frac_half_derivative(std::span<const double> xs, std::span<const double> values, Padding padding) {
    if (xs.size() != values.size()) throw InputError("grid and samples differ in length");
    if (xs.size() < 2) throw InputError("half derivative needs at least two samples");
    const double dx = xs[1] - xs[0];
    for (std::size_t i = 1; i < xs.size(); ++i) {
        double step = xs[i] - xs[i - 1];
        if (!(std::abs(step - dx) <= 1e-9 * std::abs(dx))) throw InputError("half derivative needs a uniform grid");
    }
    return fourier_multiplier(values, dx, 0.5, padding);
}

std::vector<double> dyadic_radii(double dx, double width) {
    if (!(dx > 0.0) || !(width > 0.0)) throw InputError("radii need positive step and width");
    std::vector<double> radii;
    for (double r = dx; r <= width * (1.0 + 1e-12); r *= 2.0) radii.push_back(r);
    if (radii.empty()) radii.push_back(dx);
    return radii;
}

std::vector<double> maximal_operator(std::span<const double> values, double dx, const std::vector<double>& radii) {
    if (!(dx > 0.0)) throw InputError("maximal operator needs a positive grid step");
    const std::size_t n = values.size();
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + std::abs(values[i]);
    std::vector<double> out(n, 0.0);
    for (double r : radii) {
        auto w = static_cast<std::size_t>(std::floor(r / dx + 1e-9));
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t lo = i >= w ? i - w : 0;
            std::size_t hi = std::min(n - 1, i + w);
            double avg = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
            out[i] = std::max(out[i], avg);
        }
    }
    return out;
}

double holder_norm(std::span<const double> path, const TimeGrid& grid, double alpha) {
    if (!(alpha >= 0.0) || alpha >= 1.0) throw InputError("Holder exponent must lie in [0, 1)");
    if (path.size() != static_cast<std::size_t>(grid.steps()) + 1) throw InputError("path length does not match grid");
    double sup = 0.0;
    for (double v : path) sup = std::max(sup, std::abs(v));
    double semi = 0.0;
    const std::size_t n = path.size();
    for (std::size_t lag = 1; lag < n; lag *= 2) {
        double scale = std::pow(static_cast<double>(lag) * grid.dt(), alpha);
        double best = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) best = std::max(best, std::abs(path[i + lag] - path[i]));
        semi = std::max(semi, best / scale);
    }
    return sup + semi;
}

double ModulusPair::h_of(double a) const {
    a = std::abs(a);
    if (gamma) return std::pow(a, *gamma);
    return h(a);
}

ModulusPair ModulusPair::power(RealFunction f, double gamma, ZeroSet zero_set_f) {
    if (!(gamma > 0.0)) throw InputError("modulus exponent must be positive");
    ModulusPair p;
    p.f = std::move(f);
    p.gamma = gamma;
    p.zero_set_f = std::move(zero_set_f);
    return p;
}

ModulusPair ModulusPair::from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("f")) throw ConfigError("modulus pair needs 'f'");
    check_keys(doc, {"f", "gamma", "h", "zero_set_f"}, "modulus pair");
    ModulusPair p;
    p.f = make_function(doc.at("f"));
    if (doc.contains("zero_set_f")) p.zero_set_f = ZeroSet::from_json(doc.at("zero_set_f"));
    if (doc.contains("gamma")) {
        double g = doc.at("gamma").get<double>();
        if (!(g > 0.0)) throw ConfigError("modulus exponent must be positive");
        p.gamma = g;
    } else if (doc.contains("h")) {
        p.h = make_function(doc.at("h"));
    } else {
        throw ConfigError("modulus pair needs 'gamma' or 'h'");
    }
    return p;
}

bool modulus_integral_diverges(const ModulusPair& pair, double* growth) {
    if (pair.gamma) {
        if (growth) *growth = *pair.gamma;
        return *pair.gamma >= 0.5;
    }
    // integral over [eps, 1] in log space, 2000 panels per decade
    auto integral = [&](double from_decade, double to_decade) {
        const int panels = static_cast<int>(2000 * (to_decade - from_decade));
        const double du = (to_decade - from_decade) * std::numbers::ln10 / panels;
        double sum = 0.0;
        for (int i = 0; i < panels; ++i) {
            double u = -to_decade * std::numbers::ln10 + (i + 0.5) * du;
            double a = std::exp(u);
            double h = pair.h_of(a);
            if (!(h > 0.0)) return std::numeric_limits<double>::infinity();
            sum += a / (h * h) * du;
        }
        return sum;
    };
    double i2 = integral(0.0, 2.0);
    double i4 = i2 + integral(2.0, 4.0);
    double i6 = i4 + integral(4.0, 6.0);
    if (growth) *growth = std::isfinite(i6) ? i6 / i4 : std::numeric_limits<double>::infinity();
    if (!std::isfinite(i6)) return true;
    bool doubling = i4 >= 2.0 * i2 && i6 >= 2.0 * i4;
    bool steady = (i6 - i4) >= 0.95 * (i4 - i2) && (i4 - i2) > 0.0;
    return doubling || steady;
}

bool looks_divergent(double coarse, double middle, double fine) {
    if (!std::isfinite(coarse) || !std::isfinite(middle) || !std::isfinite(fine)) return true;
    if (std::abs(fine) <= 1e-12) return false;
    bool doubling = middle >= 2.0 * coarse && fine >= 2.0 * middle && coarse > 0.0;
    double first = middle - coarse;
    double second = fine - middle;
    bool steady = first > 0.0 && second >= 0.85 * first && second > 0.01 * std::abs(fine);
    return doubling || steady;
}

ExperimentReport check_A3A4(const DiffusionSpec& spec, const ModulusPair& pair, double lo, double hi, int pairs,
                            std::uint64_t seed) {
    if (!(lo < hi)) throw InputError("check domain needs lo < hi");
    if (pairs < 1) throw InputError("check needs at least one pair");
    Json cfg{{"domain", {lo, hi}}, {"pairs", pairs}, {"seed", seed}};
    if (pair.gamma) cfg["gamma"] = *pair.gamma;
    ExperimentReport report("conditions", cfg);

    double growth = 0.0;
    bool diverges = modulus_integral_diverges(pair, &growth);
    report.add_metric("A3_h_integral_diverges", growth, pair.gamma ? 0.5 : 0.95, diverges);
    if (pair.gamma)
        report.add_note("(A3) integral of 1/h^2 decided analytically: diverges iff gamma >= 1/2");

    // f / sigma in L^2 on [lo, hi] minus N_sigma
    double worst_x = lo;
    auto l2 = [&](int cells, bool track) {
        const double dx = (hi - lo) / cells;
        double sum = 0.0;
        double worst = -1.0;
        for (int i = 0; i < cells; ++i) {
            double x = lo + (i + 0.5) * dx;
            if (spec.zero_set.contains(x)) continue;
            double s = spec.sigma(x);
            double f = pair.f(x);
            double term;
            if (s == 0.0)
                term = f == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
            else
                term = square(f / s);
            if (track && term > worst) {
                worst = term;
                worst_x = x;
            }
            sum += term * dx;
        }
        return sum;
    };
    double q1 = l2(1000, false);
    double q2 = l2(8000, false);
    double q3 = l2(64000, true);
    bool square_integrable = !looks_divergent(q1, q2, q3);
    report.add_metric("A3_f_over_sigma_L2", q3, 0.0, square_integrable);
    report.add_row("cells", 1000, "f_over_sigma_L2", q1);
    report.add_row("cells", 8000, "f_over_sigma_L2", q2);
    report.add_row("cells", 64000, "f_over_sigma_L2", q3);
    if (!square_integrable) report.add_witness("A3_f_over_sigma_L2", worst_x);

    // (A4) on random pairs
    double max_ratio = 0.0;
    double witness = lo;
    for (int i = 0; i < pairs; ++i) {
        auto u = uniform_pair(seed, 0xA4u, static_cast<std::uint64_t>(i));
        double x = lo + (hi - lo) * u[0];
        double y = lo + (hi - lo) * u[1];
        double lhs = std::abs(spec.sigma(x) - spec.sigma(y));
        if (lhs <= 1e-12) continue;
        double rhs = (pair.f(x) + pair.f(y)) * pair.h_of(x - y);
        double ratio = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
        if (ratio > max_ratio) {
            max_ratio = ratio;
            witness = x;
        }
    }
    bool modulus_ok = max_ratio <= 1.0 + 1e-9;
    report.add_metric("A4_modulus_ratio", max_ratio, 1.0, modulus_ok);
    if (!modulus_ok) report.add_witness("A4_modulus_ratio", witness);

    double subset_witness = 0.0;
    bool subset = spec.zero_set.subset_of(pair.zero_set_f, &subset_witness);
    report.add_metric("A4_zero_set_inclusion", subset ? 1.0 : 0.0, 1.0, subset);
    if (!subset) report.add_witness("A4_zero_set_inclusion", subset_witness);
    return report;
}

namespace {

struct SobolevLevel {
    std::vector<double> xs;
    std::vector<double> sigma;
    std::vector<double> g;
    double l2 = 0.0;
    double worst_x = 0.0;
};

SobolevLevel sobolev_level(const DiffusionSpec& spec, double lo, double hi, std::size_t n) {
    SobolevLevel lv;
    const double dx = (hi - lo) / static_cast<double>(n);
    lv.xs.resize(n);
    lv.sigma.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        lv.xs[i] = lo + (static_cast<double>(i) + 0.5) * dx;
        lv.sigma[i] = spec.sigma(lv.xs[i]);
        if (!std::isfinite(lv.sigma[i])) throw InputError("sigma is not finite on the check grid");
    }
    auto half = frac_half_derivative(lv.xs, lv.sigma, Padding::mirror);
    lv.g = maximal_operator(half, dx, dyadic_radii(dx, hi - lo));
    double worst = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (spec.zero_set.contains(lv.xs[i])) continue;
        double s = lv.sigma[i];
        double term;
        if (s == 0.0)
            term = lv.g[i] <= 1e-8 ? 0.0 : std::numeric_limits<double>::infinity();
        else
            term = square(lv.g[i] / s);
        if (term > worst) {
            worst = term;
            lv.worst_x = lv.xs[i];
        }
        lv.l2 += term * dx;
    }
    return lv;
}

}  // namespace

ExperimentReport check_sobolev_condition(const DiffusionSpec& spec, double lo, double hi, int resolution, int pairs,
                                         std::uint64_t seed) {
    if (!(lo < hi)) throw InputError("check domain needs lo < hi");
    if (resolution < 2) throw InputError("resolution must be at least 2");
    if (pairs < 1) throw InputError("check needs at least one pair");
    std::size_t n = 1;
    while (n < static_cast<std::size_t>(resolution)) n *= 2;
    ExperimentReport report("sobolev", Json{{"domain", {lo, hi}}, {"resolution", n}, {"pairs", pairs}, {"seed", seed}});

    const std::size_t cap = std::size_t{1} << 20;
    std::vector<std::size_t> sizes{n, std::min(4 * n, cap), std::min(16 * n, cap)};
    std::vector<SobolevLevel> levels;
    for (std::size_t size : sizes) {
        levels.push_back(sobolev_level(spec, lo, hi, size));
        report.add_row("cells", static_cast<double>(size), "g_over_sigma_L2", levels.back().l2);
    }
    const SobolevLevel& fine = levels.back();

    bool integrable = !looks_divergent(levels[0].l2, levels[1].l2, fine.l2);
    report.add_metric("g_over_sigma_L2", fine.l2, 0.0, integrable);
    if (!integrable) report.add_witness("g_over_sigma_L2", fine.worst_x);

    // N_sigma inside {g = 0}
    double g_on_zero = 0.0;
    double zero_witness = 0.0;
    for (std::size_t i = 0; i < fine.xs.size(); ++i) {
        if (!spec.zero_set.contains(fine.xs[i])) continue;
        if (fine.g[i] > g_on_zero) {
            g_on_zero = fine.g[i];
            zero_witness = fine.xs[i];
        }
    }
    bool inside = g_on_zero <= 1e-8;
    report.add_metric("zero_set_in_g_zero", g_on_zero, 1e-8, inside);
    if (!inside) report.add_witness("zero_set_in_g_zero", zero_witness);

    // |sigma(x) - sigma(y)| <= C (g(x) + g(y)) |x - y|^{1/2}
    double max_ratio = 0.0;
    double witness = lo;
    const auto m = fine.xs.size();
    for (int i = 0; i < pairs; ++i) {
        auto u = uniform_pair(seed, 0x50B0u, static_cast<std::uint64_t>(i));
        auto a = std::min(m - 1, static_cast<std::size_t>(u[0] * static_cast<double>(m)));
        auto b = std::min(m - 1, static_cast<std::size_t>(u[1] * static_cast<double>(m)));
        double lhs = std::abs(fine.sigma[a] - fine.sigma[b]);
        if (lhs <= 1e-12) continue;
        double rhs = (fine.g[a] + fine.g[b]) * std::sqrt(std::abs(fine.xs[a] - fine.xs[b]));
        double ratio = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
        if (ratio > max_ratio) {
            max_ratio = ratio;
            witness = fine.xs[a];
        }
    }
    constexpr double modulus_tolerance = 10.0;
    bool modulus_ok = max_ratio <= modulus_tolerance;
    report.add_metric("modulus_constant", max_ratio, modulus_tolerance, modulus_ok);
    if (!modulus_ok) report.add_witness("modulus_constant", witness);
    report.add_note("Radon-measure condition on the half derivative is not checked numerically");
    return report;
}

ExperimentReport nakao_check(const DiffusionSpec& spec, double epsilon_floor, const std::vector<Interval>& compacts,
                             int resolution) {
    if (!(epsilon_floor > 0.0)) throw InputError("sigma floor must be positive");
    if (resolution < 2) throw InputError("resolution must be at least 2");
    if (compacts.empty()) throw InputError("nakao check needs at least one compact");
    Json boxes = Json::array();
    for (const auto& c : compacts) boxes.push_back({c.lo, c.hi});
    ExperimentReport report("nakao", Json{{"epsilon_floor", epsilon_floor}, {"compacts", boxes},
                                          {"resolution", resolution}});
    for (std::size_t c = 0; c < compacts.size(); ++c) {
        const Interval& box = compacts[c];
        if (!std::isfinite(box.lo) || !std::isfinite(box.hi) || !(box.lo < box.hi))
            throw InputError("nakao compacts must be finite with lo < hi");
        std::string tag = "[" + std::to_string(c) + "]";
        double tv[3] = {0.0, 0.0, 0.0};
        double min_sigma = std::numeric_limits<double>::infinity();
        double witness = box.lo;
        for (int level = 0; level < 3; ++level) {
            const int n = resolution << level;
            const double dx = (box.hi - box.lo) / n;
            double prev = 0.0;
            for (int i = 0; i <= n; ++i) {
                double x = i == n ? box.hi : box.lo + i * dx;
                double s = spec.sigma(x);
                if (level == 0 && s < min_sigma) {
                    min_sigma = s;
                    witness = x;
                }
                double inv = s > 0.0 ? 1.0 / s : std::numeric_limits<double>::infinity();
                if (i > 0) tv[level] += std::abs(inv - prev);
                prev = inv;
            }
            report.add_row("cells" + tag, n, "tv_inverse_sigma", tv[level]);
        }
        bool floor_ok = min_sigma >= epsilon_floor;
        report.add_metric("sigma_floor" + tag, min_sigma, epsilon_floor, floor_ok);
        if (!floor_ok) report.add_witness("sigma_floor" + tag, witness);
        double tol = 0.01 * std::max(std::abs(tv[2]), 1e-9);
        bool stable = std::isfinite(tv[2]) && std::abs(tv[2] - tv[1]) <= tol && std::abs(tv[1] - tv[0]) <= tol;
        report.add_metric("tv_stable" + tag, tv[2], tol, stable);
    }
    return report;
}

double half_derivative_composition_error(int n, int modes) {
    if (n < 4 || !is_power_of_two(static_cast<std::size_t>(n))) throw InputError("composition check needs n = 2^k");
    if (modes < 1 || 2 * modes >= n) throw InputError("modes must be below the Nyquist index");
    const double dx = 2.0 * std::numbers::pi / n;
    double worst = 0.0;
    std::vector<double> f(static_cast<std::size_t>(n));
    for (int k = 1; k <= modes; ++k) {
        for (int i = 0; i < n; ++i) f[static_cast<std::size_t>(i)] = std::cos(k * i * dx);
        auto once = fourier_multiplier(f, dx, 0.5, Padding::periodic);
        auto twice = fourier_multiplier(once, dx, 0.5, Padding::periodic);
        double err = 0.0;
        double scale = 0.0;
        for (int i = 0; i < n; ++i) {
            double target = k * f[static_cast<std::size_t>(i)];
            err = std::max(err, std::abs(twice[static_cast<std::size_t>(i)] - target));
            scale = std::max(scale, std::abs(target));
        }
        worst = std::max(worst, err / scale);
    }
    return worst;
}

SampleStats sample_stats(std::span<const double> values) {
    SampleStats s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return s;
    double ss = 0.0;
    for (double v : values) ss += square(v - s.mean);
    double n = static_cast<double>(values.size());
    s.standard_error = std::sqrt(ss / (n - 1.0) / n);
    return s;
}

}  // namespace skewsim
