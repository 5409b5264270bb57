#include <doctest.h>

#include <cmath>
#include <random>

#include "skewsim/error.hpp"
#include "skewsim/measure.hpp"
#include "skewsim/quadrature.hpp"

using namespace skewsim;

namespace {
const double inf = std::numeric_limits<double>::infinity();
}

TEST_CASE("tv_on") {
    CHECK(tv_on(SignedMeasure::dirac(0.0, 0.5), IntervalUnion::real_line()) == 0.5);
    CHECK(tv_on(SignedMeasure{}, IntervalUnion::real_line()) == 0.0);
    // b = 1 on [0, 1], sigma = 1: density b / sigma^2
    SignedMeasure nu({}, {DensityPiece::constant(0.0, 1.0, 1.0)});
    double oracle = midpoint_rule([](double x) { return (x >= 0.0 && x < 1.0) ? 1.0 : 0.0; }, -1.0, 2.0, 300000);
    CHECK(tv_on(nu, IntervalUnion::real_line()) == doctest::Approx(oracle).epsilon(1e-5));
    CHECK(tv_on(nu, IntervalUnion::real_line()) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tv_on is additive over random partitions") {
    SignedMeasure nu({{-0.3, 0.2}, {0.7, -0.4}},
                     {DensityPiece::polynomial(-1.0, 1.0, {0.5, -1.0, 3.0}), DensityPiece::constant(1.0, 2.0, -2.0)});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.5, 2.5);
    double total = tv_on(nu, IntervalUnion::real_line());
    for (int trial = 0; trial < 50; ++trial) {
        double c = u(rng);
        double left = tv_on(nu, IntervalUnion::of({Interval{-inf, c, true, false}}));
        double right = tv_on(nu, IntervalUnion::of({Interval{c, inf, true, true}}));
        CHECK(left + right == doctest::Approx(total).epsilon(1e-10));
    }
}

TEST_CASE("continuous_cdf") {
    CHECK(continuous_cdf(SignedMeasure::dirac(0.0, 0.5), 3.0) == 0.0);
    SignedMeasure uniform({}, {DensityPiece::constant(0.0, 1.0, 1.0)});
    CHECK(continuous_cdf(uniform, 0.5) == doctest::Approx(0.5));
    SignedMeasure linear({}, {DensityPiece::polynomial(0.0, 1.0, {0.0, 2.0})});
    CHECK(continuous_cdf(linear, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("continuous_cdf is monotone and matches tv for non-negative densities") {
    SignedMeasure nu({}, {DensityPiece::polynomial(-1.0, 1.0, {1.0, 0.0, 1.0}),
                          DensityPiece::table({1.0, 1.5, 2.0}, {0.0, 3.0, 1.0})});
    double prev = -1.0;
    for (double x = -1.5; x <= 2.5; x += 0.01) {
        double c = continuous_cdf(nu, x);
        CHECK(c >= prev);
        prev = c;
    }
    double x = -0.4, y = 1.7;
    double diff = continuous_cdf(nu, y) - continuous_cdf(nu, x);
    double tv = tv_on(nu, IntervalUnion::of({Interval{x, y, false, true}}));
    CHECK(diff == doctest::Approx(tv).epsilon(1e-10));
}

TEST_CASE("continuous_cdf rejects a divergent lower tail") {
    SignedMeasure nu({}, {DensityPiece::constant(-inf, 0.0, 1.0)});
    CHECK_THROWS_AS(continuous_cdf(nu, 0.0), InputError);
}

TEST_CASE("atom_product") {
    CHECK(atom_product(SignedMeasure{}, 5.0) == 1.0);
    CHECK(atom_product(SignedMeasure::dirac(0.0, 0.5), 1.0) == doctest::Approx(1.0 / 3.0));
    SignedMeasure two({{0.0, 0.5}, {2.0, -0.5}}, {});
    CHECK(atom_product(two, 1.0) == doctest::Approx(1.0 / 3.0));
    CHECK(atom_product(two, 2.0) == doctest::Approx(1.0));
    CHECK(atom_product(two, -1e-12) == 1.0);
    CHECK_THROWS_AS(atom_product(SignedMeasure::dirac(0.0, 1.5), 1.0), ConditionError);
    CHECK(atom_product(SignedMeasure::dirac(0.0, 1.5), -1.0) == 1.0);
}

TEST_CASE("restrict") {
    ZeroSet origin({0.0}, {});
    CHECK(restrict(SignedMeasure::dirac(0.0, 0.5), origin).empty());
    CHECK(restrict(SignedMeasure::dirac(1.0, 0.5), origin) == SignedMeasure::dirac(1.0, 0.5));
    SignedMeasure nu({}, {DensityPiece::constant(0.0, 2.0, 1.0)});
    auto r = restrict(nu, ZeroSet({}, {Interval{0.0, 1.0}}));
    CHECK(tv_on(r, IntervalUnion::real_line()) == doctest::Approx(1.0));
    CHECK(r.density(0.5) == 0.0);
    CHECK(r.density(1.5) == 1.0);
    CHECK(restrict(r, ZeroSet({}, {Interval{0.0, 1.0}})) == r);
}

TEST_CASE("measure hypothesis pairs") {
    auto bad = check_measure_conditions(SignedMeasure::dirac(0.0, 1.5), ZeroSet{});
    REQUIRE_FALSE(bad.strong.passed());
    CHECK(bad.strong.find("A1")->witness == 0.0);
    CHECK(bad.weak.passed());

    auto off = check_measure_conditions(SignedMeasure::dirac(0.0, 1.5), ZeroSet({1.0}, {}));
    CHECK_FALSE(off.strong.passed());
    CHECK(off.weak.passed());

    auto inside = check_measure_conditions(SignedMeasure::dirac(0.0, 1.5), ZeroSet({0.0}, {}));
    CHECK_FALSE(inside.weak.passed());

    auto ok = check_measure_conditions(SignedMeasure::dirac(0.0, 0.5), ZeroSet{});
    CHECK(ok.strong.passed());
    CHECK(ok.weak.passed());

    SignedMeasure heavy({}, {DensityPiece::constant(0.0, inf, 1.0)});
    auto tv = check_measure_conditions(heavy, ZeroSet{});
    CHECK(tv.strong.find("A2") != nullptr);
    CHECK(check_measure_conditions(heavy, ZeroSet({}, {Interval{0.0, inf}})).weak.passed());
}

TEST_CASE("measure json validation") {
    auto nu = SignedMeasure::from_json(Json::parse(R"({"atoms":[{"a":0,"alpha":0.5}],
        "density":[{"kind":"const","lo":1,"hi":2,"data":1}]})"));
    CHECK(nu.atoms().size() == 1);
    CHECK(SignedMeasure::from_json(nu.to_json()) == nu);
    CHECK_THROWS_AS(SignedMeasure::from_json(Json::parse(R"({"atomz":[]})")), ConfigError);
    CHECK_THROWS(SignedMeasure({{0.0, 0.5}, {0.0, 0.2}}, {}));
    CHECK_THROWS(SignedMeasure({{0.0, 0.0}}, {}));
    CHECK_THROWS(SignedMeasure({}, {DensityPiece::constant(0.0, 2.0, 1.0), DensityPiece::constant(1.0, 3.0, 1.0)}));
}
