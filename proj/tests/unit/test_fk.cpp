#include <doctest.h>

#include <cmath>
#include <random>

#include "skewsim/error.hpp"
#include "skewsim/fk.hpp"

using namespace skewsim;

namespace {

const TimeFunction no_source = [](double, double) { return 0.0; };

TerminalPayoff payoff_from(const char* text) { return TerminalPayoff::from_json(Json::parse(text)); }

}  // namespace

TEST_CASE("no diffusion and no source keeps the terminal data") {
    auto grid = PdeGrid::stable(-1.0, 1.0, 40, 1.0, 1.0);
    auto sol = pde_solve([](double) { return 0.0; }, [](double y) { return std::sin(3 * y); }, no_source, grid, {0.0, 0.5});
    for (int j = 0; j < grid.cells; ++j) CHECK(sol.values[0][j] == std::sin(3 * grid.node(j)));
}

TEST_CASE("heat equation with terminal y^2") {
    auto grid = PdeGrid::stable(-6.0, 6.0, 600, 1.0, 1.0);
    auto sol = pde_solve([](double) { return 1.0; }, [](double y) { return y * y; }, no_source, grid, {0.0, 0.5});
    double worst = 0.0;
    for (int j = 0; j < grid.cells; ++j) {
        double y = grid.node(j);
        if (std::abs(y) > 1.0) continue;
        worst = std::max(worst, std::abs(sol.values[0][j] - (y * y + 1.0)));
        worst = std::max(worst, std::abs(sol.values[1][j] - (y * y + 0.5)));
    }
    CHECK(worst < 1e-3);
    CHECK(sol.at(0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("unit source gives T - s exactly") {
    auto grid = PdeGrid::stable(-1.0, 1.0, 50, 1.0, 2.0);
    auto sol = pde_solve([](double y) { return 1.0 + std::abs(y); }, [](double) { return 0.0; },
                         [](double, double) { return 1.0; }, grid, {0.0, 0.25, 0.75});
    for (std::size_t s = 0; s < sol.times.size(); ++s)
        for (double u : sol.values[s]) CHECK(u == doctest::Approx(1.0 - sol.times[s]).epsilon(1e-12));
}

TEST_CASE("CFL violation is rejected before stepping") {
    PdeGrid grid{-1.0, 1.0, 100, 1.0, 10};
    CHECK_THROWS_AS(grid.check_cfl(1.0), ConfigError);
    CHECK_THROWS_AS(pde_solve([](double) { return 1.0; }, [](double) { return 0.0; }, no_source, grid, {0.0}),
                    ConfigError);
}

TEST_CASE("scheme is monotone in the terminal data") {
    auto grid = PdeGrid::stable(-2.0, 2.0, 80, 1.0, 1.5);
    RealFunction sig = [](double y) { return 1.0 + 0.5 * std::tanh(4 * y); };
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0), bump(0.0, 0.5);
    for (int trial = 0; trial < 5; ++trial) {
        double a = u(rng), b = u(rng), c = bump(rng), at = u(rng);
        RealFunction lower = [a, b](double y) { return std::tanh(a * y + b); };
        RealFunction upper = [a, b, c, at](double y) { return std::tanh(a * y + b) + c * std::exp(-(y - at) * (y - at)); };
        auto lo = pde_solve(sig, lower, no_source, grid, {0.0});
        auto hi = pde_solve(sig, upper, no_source, grid, {0.0});
        for (int j = 0; j < grid.cells; ++j) CHECK(hi.values[0][j] >= lo.values[0][j]);
    }
}

TEST_CASE("Monte Carlo values against closed forms") {
    auto spec = DiffusionSpec::constant(1.0);
    auto square = payoff_from(R"({"f":{"kind":"poly","coeffs":[0,0,1]}})");
    auto v = mc_value(spec, {}, square, 1.0, 0.25, 0.5, 8000, 256, 1);
    CHECK(std::abs(v.estimate - (0.25 + 0.75)) < 4.0 * v.standard_error);

    auto running = payoff_from(R"({"f":{"kind":"const","value":0},"g":{"kind":"const","value":1}})");
    auto w = mc_value(spec, {}, running, 1.0, 0.25, 0.0, 1000, 256, 1);
    CHECK(w.estimate == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(w.standard_error < 1e-12);

    auto big = mc_value(spec, {}, square, 1.0, 0.0, 0.0, 32000, 256, 2);
    auto small = mc_value(spec, {}, square, 1.0, 0.0, 0.0, 8000, 256, 2);
    double ratio = small.standard_error / big.standard_error;
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("payoff bounds are validated") {
    auto p = payoff_from(R"({"f":{"kind":"poly","coeffs":[0,0,1]},"f_max":0.5})");
    CHECK_THROWS_AS(p.validate(-1.0, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(payoff_from(R"({"f":{"kind":"const","value":1},"h":1})"), ConfigError);
}

TEST_CASE("fk_compare trivial cases") {
    FkConfig c;
    c.paths = 4000;
    c.mc_steps = 256;
    c.se_multiple = 4.0;
    auto spec = DiffusionSpec::constant(1.0);
    auto running = payoff_from(R"({"f":{"kind":"const","value":0},"g":{"kind":"const","value":1}})");
    auto r = fk_compare(spec, {}, running, {{0.0, 0.0}, {0.5, 0.3}}, c);
    CHECK(r.verdict());
    for (const auto& m : r.metrics()) CHECK(m.value < 1e-9);

    auto square = payoff_from(R"({"f":{"kind":"poly","coeffs":[0,0,1]}})");
    PdeSolution fine;
    auto q = fk_compare(spec, {}, square, {{0.0, 0.0}, {0.5, 0.5}}, c, &fine);
    CHECK(q.verdict());
    CHECK(std::abs(fine.at(0.0, 0.0) - 1.0) < 1e-3);
    CHECK(fine.to_csv().rfind("s,y,u", 0) == 0);
}

TEST_CASE("fk_compare skew case with a smoothed indicator") {
    FkConfig c;
    c.paths = 4000;
    c.mc_steps = 512;
    auto payoff = payoff_from(R"({"f":{"kind":"tanh","width":0.1},"f_max":1})");
    auto r = fk_compare(DiffusionSpec::constant(1.0), SignedMeasure::dirac(0.0, 0.5), payoff,
                        {{0.0, 0.0}, {0.0, 0.6}, {0.5, -0.5}}, c);
    CHECK(r.verdict());
}

TEST_CASE("fk_compare skips probes near the boundary") {
    FkConfig c;
    c.paths = 100;
    c.mc_steps = 64;
    c.cells = 40;
    auto payoff = payoff_from(R"({"f":{"kind":"const","value":1}})");
    auto r = fk_compare(DiffusionSpec::constant(1.0), {}, payoff, {{0.0, 50.0}}, c);
    CHECK_FALSE(r.verdict());
    CHECK_FALSE(r.notes().empty());
}
