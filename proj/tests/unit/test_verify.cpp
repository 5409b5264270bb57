#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "skewsim/error.hpp"
#include "skewsim/verify.hpp"

using namespace skewsim;

namespace {

DiffusionSpec spec_from(const char* text) { return DiffusionSpec::from_json(Json::parse(text)); }

std::vector<double> uniform(double lo, double hi, int n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[i] = lo + (hi - lo) * (i + 0.5) / n;
    return x;
}

bool passes(const ExperimentReport& r, const std::string& label) {
    const Metric* m = r.metric(label);
    REQUIRE(m != nullptr);
    return m->pass;
}

}  // namespace

TEST_CASE("half derivative of a constant vanishes") {
    auto xs = uniform(-1.0, 1.0, 1024);
    std::vector<double> c(xs.size(), 2.5);
    for (double v : frac_half_derivative(xs, c)) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("half derivative acts on cosine modes by sqrt(k)") {
    const int n = 512;
    const double dx = 2.0 * M_PI / n;
    for (int k : {1, 3, 8}) {
        std::vector<double> f(n);
        for (int i = 0; i < n; ++i) f[i] = std::cos(k * i * dx);
        auto g = fourier_multiplier(f, dx, 0.5, Padding::periodic);
        for (int i = 0; i < n; ++i) CHECK(g[i] == doctest::Approx(std::sqrt(k) * f[i]).epsilon(1e-10).scale(1.0));
    }
    CHECK(half_derivative_composition_error(1024, 8) < 1e-6);
}

TEST_CASE("half derivative is linear") {
    auto xs = uniform(-1.0, 1.0, 256);
    std::vector<double> a(xs.size()), b(xs.size()), mix(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        a[i] = std::tanh(5 * xs[i]);
        b[i] = xs[i] * xs[i];
        mix[i] = 2.0 * a[i] - 0.5 * b[i];
    }
    auto da = frac_half_derivative(xs, a);
    auto db = frac_half_derivative(xs, b);
    auto dm = frac_half_derivative(xs, mix);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(dm[i] - (2.0 * da[i] - 0.5 * db[i])) < 1e-10);
}

TEST_CASE("half derivative input checks") {
    auto xs = uniform(0.0, 1.0, 100);
    std::vector<double> v(100, 1.0);
    CHECK_THROWS_AS(frac_half_derivative(xs, v), InputError);
    auto ys = uniform(0.0, 1.0, 64);
    ys[10] += 1e-4;
    std::vector<double> w(64, 1.0);
    CHECK_THROWS_AS(frac_half_derivative(ys, w), InputError);
}

TEST_CASE("maximal operator") {
    std::vector<double> c(64, -3.0);
    for (double v : maximal_operator(c, 0.1, dyadic_radii(0.1, 6.4))) CHECK(v == doctest::Approx(3.0));

    // 1_[0,1] on [-2, 3]; brute-force window means at x = 2 for radii {1, 2, 4}
    const int n = 500;
    const double dx = 5.0 / n;
    std::vector<double> xs(n), f(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = -2.0 + (i + 0.5) * dx;
        f[i] = (xs[i] >= 0.0 && xs[i] < 1.0) ? 1.0 : 0.0;
    }
    std::vector<double> radii{1.0, 2.0, 4.0};
    auto m = maximal_operator(f, dx, radii);
    int at = static_cast<int>((2.0 + 2.0) / dx);
    double oracle = 0.0;
    for (double r : radii) {
        double sum = 0.0;
        int count = 0;
        int w = static_cast<int>(std::floor(r / dx + 1e-9));
        for (int j = std::max(0, at - w); j <= std::min(n - 1, at + w); ++j) {
            sum += std::abs(f[j]);
            ++count;
        }
        oracle = std::max(oracle, sum / count);
    }
    CHECK(m[at] == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(oracle > 0.2);

    std::vector<double> small(n), big(n);
    for (int i = 0; i < n; ++i) {
        small[i] = std::sin(0.05 * i);
        big[i] = std::abs(small[i]) + 0.1 * (i % 3);
    }
    auto ms = maximal_operator(small, dx, dyadic_radii(dx, 5.0));
    auto mb = maximal_operator(big, dx, dyadic_radii(dx, 5.0));
    for (int i = 0; i < n; ++i) {
        CHECK(ms[i] <= mb[i] + 1e-12);
        // smallest radius dx: the three-cell window average
        double sum = 0.0;
        int count = 0;
        for (int j = std::max(0, i - 1); j <= std::min(n - 1, i + 1); ++j, ++count) sum += std::abs(small[j]);
        CHECK(ms[i] >= sum / count - 1e-12);
    }
}

TEST_CASE("Holder norm") {
    TimeGrid grid(1.0, 256);
    std::vector<double> c(257, -0.7);
    CHECK(holder_norm(c, grid, 0.3) == doctest::Approx(0.7));
    std::vector<double> line(257);
    for (int k = 0; k <= 256; ++k) line[k] = grid.time(k);
    CHECK(holder_norm(line, grid, 0.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(holder_norm(line, grid, 1.0), InputError);
    CHECK_THROWS_AS(holder_norm(line, grid, -0.1), InputError);
}

TEST_CASE("Holder norm of Brownian paths: 0.45 stays bounded, 0.55 grows") {
    auto median_norm = [](int n, double alpha) {
        TimeGrid grid(1.0, n);
        auto d = sample_driver(1, 101, grid);
        std::vector<double> dw(static_cast<std::size_t>(n)), x(dw.size() + 1), norms;
        for (int p = 0; p < 101; ++p) {
            d.fill(p, dw);
            x[0] = 0.0;
            for (int k = 0; k < n; ++k) x[k + 1] = x[k] + dw[k];
            norms.push_back(holder_norm(x, grid, alpha));
        }
        std::nth_element(norms.begin(), norms.begin() + 50, norms.end());
        return norms[50];
    };
    double low_ratio = median_norm(1 << 16, 0.45) / median_norm(1 << 8, 0.45);
    double high_ratio = median_norm(1 << 16, 0.55) / median_norm(1 << 8, 0.55);
    CHECK(high_ratio > low_ratio);
    CHECK(high_ratio > 1.3);
}

TEST_CASE("modulus integral divergence rule") {
    for (double g : {0.5, 0.75, 1.0, 2.0}) CHECK(modulus_integral_diverges(ModulusPair::power({}, g)));
    for (double g : {0.1, 0.25, 0.49}) CHECK_FALSE(modulus_integral_diverges(ModulusPair::power({}, g)));
    auto tab = ModulusPair::from_json(Json::parse(R"({"f":{"kind":"const","value":1},
        "h":{"kind":"power","exponent":0.5}})"));
    CHECK(modulus_integral_diverges(tab));
    auto tab_fast = ModulusPair::from_json(Json::parse(R"({"f":{"kind":"const","value":1},
        "h":{"kind":"power","exponent":0.25}})"));
    CHECK_FALSE(modulus_integral_diverges(tab_fast));
    auto tab_lin = ModulusPair::from_json(Json::parse(R"({"f":{"kind":"const","value":1},
        "h":{"kind":"power","exponent":1}})"));
    CHECK(modulus_integral_diverges(tab_lin));
}

TEST_CASE("looks_divergent") {
    CHECK(looks_divergent(1.0, 2.0, 4.0));
    CHECK(looks_divergent(3.0, 4.0, 5.0));
    CHECK_FALSE(looks_divergent(1.0, 1.001, 1.0011));
    CHECK_FALSE(looks_divergent(0.0, 0.0, 0.0));
    CHECK(looks_divergent(1.0, 2.0, std::numeric_limits<double>::infinity()));
}

TEST_CASE("check_A3A4 on a Lipschitz coefficient") {
    auto spec = spec_from(R"({"sigma":{"kind":"cos","amplitude":0.5,"offset":1.5}})");
    auto lin = ModulusPair::from_json(Json::parse(R"({"f":{"kind":"const","value":0.25},"gamma":1})"));
    auto r = check_A3A4(spec, lin, -1.0, 1.0, 20000);
    CHECK(r.verdict());
    auto quarter = ModulusPair::from_json(Json::parse(R"({"f":{"kind":"const","value":0.25},"gamma":0.25})"));
    auto q = check_A3A4(spec, quarter, -1.0, 1.0, 20000);
    CHECK_FALSE(passes(q, "A3_h_integral_diverges"));
}

TEST_CASE("check_A3A4 on sqrt|x| ^ 1 reports the inconsistent hypotheses") {
    auto spec = spec_from(R"({"sigma":{"kind":"power","exponent":0.5,"cap":1},"zero_set":{"points":[0]}})");
    auto pair = ModulusPair::from_json(Json::parse(R"({"f":{"kind":"const","value":1},"gamma":0.5})"));
    auto r = check_A3A4(spec, pair, -1.0, 1.0, 20000);
    CHECK(passes(r, "A3_h_integral_diverges"));
    CHECK(passes(r, "A4_modulus_ratio"));
    CHECK_FALSE(passes(r, "A4_zero_set_inclusion"));
    CHECK(*r.witness("A4_zero_set_inclusion") == 0.0);
    CHECK_FALSE(passes(r, "A3_f_over_sigma_L2"));
    CHECK(std::abs(*r.witness("A3_f_over_sigma_L2")) < 0.01);
}

TEST_CASE("check_A3A4 catches a failing modulus inequality") {
    auto spec = spec_from(R"({"sigma":{"kind":"step","at":0,"left":1,"right":2}})");
    auto pair = ModulusPair::from_json(Json::parse(R"({"f":{"kind":"const","value":1},"gamma":0.5})"));
    auto r = check_A3A4(spec, pair, -1.0, 1.0, 20000);
    CHECK_FALSE(passes(r, "A4_modulus_ratio"));
    CHECK(std::abs(*r.witness("A4_modulus_ratio")) < 0.5);
}

TEST_CASE("Sobolev criterion") {
    auto one = check_sobolev_condition(DiffusionSpec::constant(1.0), -1.0, 1.0, 1024, 2000);
    CHECK(one.verdict());
    auto lip = check_sobolev_condition(spec_from(R"({"sigma":{"kind":"power","exponent":1,"offset":0.5}})"), -1.0, 1.0,
                                       1024, 2000);
    CHECK(lip.verdict());
    auto step = check_sobolev_condition(
        spec_from(R"({"sigma":{"kind":"step","at":0,"left":0,"right":1},"zero_set":{"intervals":[{"lo":"-inf","hi":0,"hi_closed":false}]}})"),
        -1.0, 1.0, 1024, 2000);
    CHECK_FALSE(step.verdict());
    CHECK_FALSE(passes(step, "g_over_sigma_L2"));
    CHECK(std::abs(*step.witness("g_over_sigma_L2")) < 0.05);
}

TEST_CASE("Nakao bounded-variation check") {
    std::vector<Interval> box{Interval{-1.0, 1.0}};
    auto one = nakao_check(DiffusionSpec::constant(1.0), 1e-3, box, 1024);
    CHECK(one.verdict());
    CHECK(one.metric("tv_stable[0]")->value == 0.0);
    auto jump = nakao_check(spec_from(R"({"sigma":{"kind":"step","at":0,"left":1,"right":2}})"), 1e-3, box, 1024);
    CHECK(jump.verdict());
    CHECK(jump.metric("tv_stable[0]")->value == doctest::Approx(0.5));
    auto wild = nakao_check(spec_from(R"({"sigma":{"kind":"osc"}})"), 1e-3, box, 1024);
    CHECK_FALSE(passes(wild, "tv_stable[0]"));
    auto low = nakao_check(spec_from(R"({"sigma":{"kind":"power","exponent":1}})"), 1e-3, box, 1024);
    CHECK_FALSE(passes(low, "sigma_floor[0]"));
    CHECK(std::abs(*low.witness("sigma_floor[0]")) < 1e-3);
}

TEST_CASE("sample stats") {
    std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    auto s = sample_stats(v);
    CHECK(s.mean == 2.5);
    CHECK(s.standard_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}
