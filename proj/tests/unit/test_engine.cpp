#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "skewsim/engine.hpp"
#include "skewsim/error.hpp"
#include "skewsim/verify.hpp"

using namespace skewsim;

namespace {

DiffusionSpec spec_from(const char* text) { return DiffusionSpec::from_json(Json::parse(text)); }

double mean_terminal(const PathSet& ps) {
    double s = 0.0;
    for (int p = 0; p < ps.paths; ++p) s += ps.at(p, ps.grid.steps());
    return s / ps.paths;
}

}  // namespace

TEST_CASE("driver is deterministic with Normal(0, dt) increments") {
    TimeGrid grid(1.0, 4);
    auto a = sample_driver(1, 2, grid).materialize();
    auto b = sample_driver(1, 2, grid).materialize();
    CHECK(a == b);
    CHECK(a != sample_driver(2, 2, grid).materialize());

    TimeGrid g(1.0, 1000);
    auto d = sample_driver(11, 1000, g);
    double sum = 0.0, sq = 0.0;
    const double n = 1e6;
    for (int p = 0; p < 1000; ++p)
        for (int k = 0; k < 1000; ++k) {
            double x = d.increment(p, k);
            sum += x;
            sq += x * x;
        }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    double dt = g.dt();
    CHECK(std::abs(mean) < 4.0 * std::sqrt(dt / n));
    CHECK(std::abs(var - dt) < 4.0 * dt * std::sqrt(2.0 / n));
}

TEST_CASE("driver resource and argument checks") {
    CHECK_THROWS(sample_driver(1, 0, TimeGrid(1.0, 4)));
    CHECK_THROWS(TimeGrid(1.0, 0));
    auto big = sample_driver(1, 1 << 20, TimeGrid(1.0, 1 << 10));
    CHECK_THROWS_AS(big.materialize(), ResourceError);
}

TEST_CASE("zero measure, unit sigma reproduces the driver partial sums bitwise") {
    TimeGrid grid(1.0, 512);
    auto driver = sample_driver(1, 8, grid);
    auto ps = simulate_transform_scheme(DiffusionSpec::constant(1.0), SignedMeasure{}, 0.25, driver);
    for (int p = 0; p < 8; ++p) {
        double s = 0.25;
        for (int k = 0; k < grid.steps(); ++k) {
            s += driver.increment(p, k);
            REQUIRE(ps.at(p, k + 1) == s);
        }
    }
}

TEST_CASE("start in the zero set without mass there gives a constant path") {
    auto spec = spec_from(R"({"sigma":{"kind":"power","exponent":1},"zero_set":{"points":[0]}})");
    auto driver = sample_driver(3, 16, TimeGrid(1.0, 256));
    auto ps = simulate_transform_scheme(spec, SignedMeasure::dirac(1.0, 0.5), 0.0, driver);
    for (double v : ps.values) REQUIRE(v == 0.0);
}

TEST_CASE("skew sign law: P(X_T > 0) = 3/4 for nu = 0.5 delta_0") {
    // Y = F(X) is oscillating Brownian motion with coefficients 1 and 1/3,
    // and Y / sigma~(Y) is skew Brownian motion with p = 1 / (1 + 1/3).
    TimeGrid grid(1.0, 1024);
    auto driver = sample_driver(1, 20000, grid);
    auto ps = simulate_transform_scheme(DiffusionSpec::constant(1.0), SignedMeasure::dirac(0.0, 0.5), 0.0, driver);
    int above = 0;
    for (int p = 0; p < ps.paths; ++p) above += ps.at(p, grid.steps()) > 0.0;
    double phat = static_cast<double>(above) / ps.paths;
    double se = std::sqrt(0.75 * 0.25 / ps.paths);
    CHECK(std::abs(phat - 0.75) < 4.0 * se);
}

TEST_CASE("atom scheme with beta = 0 is plain Euler bitwise") {
    auto spec = spec_from(R"({"sigma":{"kind":"cos","amplitude":0.3,"offset":1}})");
    TimeGrid grid(1.0, 256);
    auto driver = sample_driver(5, 16, grid);
    auto flow = AtomicFlow::from_json(Json::parse(R"({"atoms":[{"a":0,"beta":0}]})"));
    auto atom = simulate_atom_scheme(spec, flow, 0.1, driver);
    auto euler = simulate_classical(spec, 0.1, driver);
    CHECK(atom.values == euler.values);
}

TEST_CASE("atom scheme tracks the transform scheme for a constant atom") {
    auto spec = DiffusionSpec::constant(1.0);
    auto nu = SignedMeasure::dirac(0.0, 0.5);
    std::vector<double> gaps;
    for (int n : {256, 1024}) {
        TimeGrid grid(1.0, n);
        auto driver = sample_driver(1, 64, grid);
        auto a = simulate_atom_scheme(spec, AtomicFlow::constant(nu), 0.0, driver);
        auto t = simulate_transform_scheme(spec, nu, 0.0, driver);
        double gap = 0.0;
        for (int p = 0; p < 64; ++p) {
            double sup = 0.0;
            for (int k = 0; k <= n; ++k) sup = std::max(sup, std::abs(a.at(p, k) - t.at(p, k)));
            gap += sup / 64;
        }
        gaps.push_back(gap);
    }
    CHECK(gaps.back() < 1e-12);
}

TEST_CASE("two atoms: atom scheme agrees with the transform scheme") {
    auto spec = DiffusionSpec::constant(1.0);
    SignedMeasure nu({{-1.0, 0.3}, {1.0, 0.3}}, {});
    TimeGrid grid(1.0, 4096);
    auto driver = sample_driver(2, 200, grid);
    auto a = simulate_atom_scheme(spec, AtomicFlow::constant(nu), 0.0, driver);
    auto t = simulate_transform_scheme(spec, nu, 0.0, driver);
    double mean_a = 0.0, mean_t = 0.0;
    double gap = 0.0;
    for (int p = 0; p < 200; ++p) {
        double sup = 0.0;
        for (int k = 0; k <= grid.steps(); ++k) sup = std::max(sup, std::abs(a.at(p, k) - t.at(p, k)));
        gap += sup / 200;
        mean_a += (a.at(p, grid.steps()) > 1.0) / 200.0;
        mean_t += (t.at(p, grid.steps()) > 1.0) / 200.0;
    }
    CHECK(gap < 1e-8);
    CHECK(mean_a == doctest::Approx(mean_t));
}

TEST_CASE("time-dependent flow validation") {
    TimeGrid grid(1.0, 64);
    auto ok = AtomicFlow::from_json(
        Json::parse(R"({"atoms":[{"a":0,"beta":{"kind":"poly","coeffs":[0.1,0.2]},"M":0.2}]})"));
    CHECK_NOTHROW(ok.validate(grid));
    auto steep = AtomicFlow::from_json(
        Json::parse(R"({"atoms":[{"a":0,"beta":{"kind":"poly","coeffs":[0.1,0.5]},"M":0.2}]})"));
    CHECK_THROWS_AS(steep.validate(grid), ConfigError);
    auto big = AtomicFlow::from_json(Json::parse(R"({"atoms":[{"a":0,"beta":1.2}]})"));
    CHECK_THROWS(big.validate(grid));
    auto close = AtomicFlow::from_json(Json::parse(R"({"atoms":[{"a":0,"beta":0.2},{"a":0.01,"beta":0.2}]})"));
    CHECK_THROWS_AS(AtomScheme(DiffusionSpec::constant(1.0), close, grid, {}), ConfigError);
}

TEST_CASE("reflected scheme") {
    TimeGrid grid(1.0, 4096);
    auto driver = sample_driver(1, 4000, grid);
    auto ps = simulate_reflected(DiffusionSpec::constant(1.0), 0.0, driver);
    for (double v : ps.values) REQUIRE(v >= 0.0);
    for (int p = 0; p < ps.paths; ++p) {
        auto k = ps.aux_path(p);
        for (int i = 1; i <= grid.steps(); ++i) REQUIRE(k[i] >= k[i - 1]);
    }
    std::vector<double> terminal;
    for (int p = 0; p < ps.paths; ++p) terminal.push_back(ps.at(p, grid.steps()));
    auto st = sample_stats(terminal);
    CHECK(std::abs(st.mean - std::sqrt(2.0 / M_PI)) < 4.0 * st.standard_error);

    auto still = simulate_reflected(DiffusionSpec::constant(0.0), 0.3, sample_driver(1, 4, TimeGrid(1.0, 64)));
    for (double v : still.values) CHECK(v == 0.3);
    for (double v : still.aux) CHECK(v == 0.0);

    auto far = simulate_reflected(DiffusionSpec::constant(1.0), 10.0, sample_driver(1, 2000, TimeGrid(1.0, 256)));
    int pushed = 0;
    for (int p = 0; p < far.paths; ++p) pushed += far.aux_path(p)[256] > 0.0;
    CHECK(pushed == 0);

    CHECK_THROWS_AS(simulate_reflected(DiffusionSpec::constant(1.0), -0.1, driver), InputError);
}

TEST_CASE("classical scheme moments") {
    TimeGrid grid(1.0, 256);
    auto driver = sample_driver(4, 20000, grid);

    auto plain = spec_from(R"({"sigma":{"kind":"const","value":2}})");
    auto ps = simulate_classical(plain, 0.0, sample_driver(4, 4, grid));
    for (int p = 0; p < 4; ++p) {
        double s = 0.0;
        for (int k = 0; k < grid.steps(); ++k) {
            s = s + 2.0 * driver.increment(p, k);
            CHECK(ps.at(p, k + 1) == doctest::Approx(s).epsilon(1e-12));
        }
    }

    auto drifted = spec_from(R"({"sigma":{"kind":"const","value":1},"drift":{"kind":"const","value":1}})");
    auto d = simulate_classical(drifted, 0.5, driver);
    std::vector<double> t;
    for (int p = 0; p < d.paths; ++p) t.push_back(d.at(p, grid.steps()));
    auto st = sample_stats(t);
    CHECK(std::abs(st.mean - 1.5) < 4.0 * st.standard_error);

    auto ou = spec_from(R"({"sigma":{"kind":"const","value":1},"drift":{"kind":"poly","coeffs":[0,-1]}})");
    auto o = simulate_classical(ou, 0.0, driver);
    double sq = 0.0, m = 0.0;
    for (int p = 0; p < o.paths; ++p) {
        double x = o.at(p, grid.steps());
        m += x;
        sq += x * x;
    }
    m /= o.paths;
    double var = sq / o.paths - m * m;
    double oracle = (1.0 - std::exp(-2.0)) / 2.0;
    CHECK(std::abs(var - oracle) < 4.0 * oracle * std::sqrt(2.0 / o.paths) + 2.0 * grid.dt());
}

TEST_CASE("ordering in the initial condition") {
    // Lipschitz sigma tilde: the Euler step y + s(y) dW is increasing in y
    auto spec = spec_from(R"({"sigma":{"kind":"cos","amplitude":0.4,"offset":1}})");
    auto driver = sample_driver(9, 64, TimeGrid(1.0, 512));
    auto lo = simulate_transform_scheme(spec, SignedMeasure{}, -0.1, driver);
    auto hi = simulate_transform_scheme(spec, SignedMeasure{}, 0.05, driver);
    for (std::size_t i = 0; i < lo.values.size(); ++i) REQUIRE(lo.values[i] <= hi.values[i]);

    // with an atom sigma tilde jumps, nearly merged paths get split by kicks of
    // size sqrt(dt) and may swap; the reversed gap shrinks like dt^(1/4)
    auto reversed = [](int steps) {
        auto d = sample_driver(9, 2000, TimeGrid(1.0, steps));
        auto nu = SignedMeasure::dirac(0.0, 0.5);
        auto a = simulate_transform_scheme(DiffusionSpec::constant(1.0), nu, -0.1, d);
        auto b = simulate_transform_scheme(DiffusionSpec::constant(1.0), nu, 0.05, d);
        double v = 0.0;
        for (int p = 0; p < a.paths; ++p) v += std::max(a.at(p, steps) - b.at(p, steps), 0.0);
        return v / a.paths;
    };
    double coarse = reversed(256), fine = reversed(16384);
    CHECK(fine < 0.5 * coarse);
}

TEST_CASE("determinism and thread independence") {
    auto spec = DiffusionSpec::constant(1.0);
    auto nu = SignedMeasure::dirac(0.0, 0.5);
    TimeGrid grid(1.0, 256);
    auto driver = sample_driver(7, 50, grid);
    SchemeOptions one, four;
    four.threads = 4;
    auto a = simulate_transform_scheme(spec, nu, 0.0, driver, one);
    auto b = simulate_transform_scheme(spec, nu, 0.0, driver, four);
    CHECK(a.values == b.values);
    CHECK(a.to_csv() == b.to_csv());
}

TEST_CASE("domain exits are absorbed and counted") {
    SchemeOptions narrow;
    narrow.x_min = -0.2;
    narrow.x_max = 0.2;
    auto driver = sample_driver(1, 100, TimeGrid(1.0, 256));
    auto ps = simulate_transform_scheme(DiffusionSpec::constant(1.0), SignedMeasure::dirac(0.0, 0.5), 0.0, driver, narrow);
    CHECK(ps.exit_count() > 90);
    for (double v : ps.values) CHECK(std::isfinite(v));
    for (double v : ps.values) CHECK(std::abs(v) <= 0.2);
}

TEST_CASE("scheme factory") {
    TimeGrid grid(1.0, 16);
    CHECK(make_scheme("reflected", DiffusionSpec::constant(1.0), {}, grid, {})->name() == "reflected");
    CHECK_THROWS_AS(make_scheme("bogus", DiffusionSpec::constant(1.0), {}, grid, {}), ConfigError);
    CHECK_THROWS_AS(make_scheme("transform", DiffusionSpec::constant(1.0), SignedMeasure::dirac(0.0, 1.5), grid, {}),
                    ConditionError);
}
