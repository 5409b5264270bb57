#include <doctest.h>

#include <cmath>

#include "skewsim/error.hpp"
#include "skewsim/verify.hpp"

using namespace skewsim;

namespace {

DiffusionSpec spec_from(const char* text) { return DiffusionSpec::from_json(Json::parse(text)); }

std::vector<double> column(const ExperimentReport& r, const std::string& label) {
    std::vector<double> out;
    for (const auto& row : r.refinement_table())
        if (row.label == label) out.push_back(row.value);
    return out;
}

}  // namespace

TEST_CASE("uniqueness: identical recursions give a zero gap") {
    UniquenessConfig c;
    c.steps = {256, 1024};
    c.paths = 50;
    c.scheme = "transform";
    c.reference = "transform";
    auto r = uniqueness_experiment(DiffusionSpec::constant(1.0), SignedMeasure{}, 0.0, c);
    for (double g : column(r, "scheme_gap_mean")) CHECK(g == 0.0);
    CHECK(r.metric("scheme_gap_final")->pass);
}

TEST_CASE("uniqueness: skew case against the atom scheme") {
    UniquenessConfig c;
    c.steps = {256, 1024, 4096};
    c.paths = 100;
    auto r = uniqueness_experiment(DiffusionSpec::constant(1.0), SignedMeasure::dirac(0.0, 0.5), 0.0, c);
    CHECK(r.metric("scheme_gap_final")->value < 1e-12);
    CHECK(r.metric("scheme_gap_monotone")->pass);
}

TEST_CASE("uniqueness: degenerate |x|^(3/4) perturbation gaps shrink with delta") {
    UniquenessConfig c;
    c.steps = {256, 1024};
    c.paths = 100;
    c.reference = "classical";
    auto spec = spec_from(R"({"sigma":{"kind":"power","exponent":0.75},"zero_set":{"points":[0]}})");
    auto r = uniqueness_experiment(spec, SignedMeasure{}, 0.0, c);
    CHECK(r.metric("perturbation_gap_shrinks")->pass);
}

TEST_CASE("uniqueness: unavailable scheme is reported") {
    UniquenessConfig c;
    c.steps = {64};
    c.paths = 4;
    c.scheme = "reflected";
    auto r = uniqueness_experiment(DiffusionSpec::constant(1.0), SignedMeasure::dirac(0.0, 0.5), 0.5, c);
    CHECK_FALSE(r.verdict());
    CHECK_FALSE(r.notes().empty());
}

TEST_CASE("continuity: Brownian flow jumps at the exceedance level") {
    ContinuityConfig c;
    c.paths = 100;
    c.steps = 256;
    c.offsets = {0.2, 0.15, 0.05, 0.0};
    auto spec = spec_from(R"({"sigma":{"kind":"const","value":1},"growth_bound":[1,1]})");
    auto r = continuity_experiment(spec, SignedMeasure{}, 0.0, c);
    auto p = column(r, "exceed_probability");
    REQUIRE(p.size() == 4);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 1.0);
    CHECK(p[2] == 0.0);
    CHECK(p[3] == 0.0);
    CHECK(r.verdict());
}

TEST_CASE("continuity: skew flow decays monotonically in the offset") {
    ContinuityConfig c;
    c.paths = 200;
    auto spec = spec_from(R"({"sigma":{"kind":"const","value":1},"growth_bound":[1,1]})");
    auto r = continuity_experiment(spec, SignedMeasure::dirac(0.0, 0.5), 0.0, c);
    CHECK(r.metric("probability_non_increasing")->pass);
    auto p = column(r, "exceed_probability");
    CHECK(p.back() < p.front());
}

TEST_CASE("continuity needs a growth bound") {
    CHECK_THROWS_AS(continuity_experiment(DiffusionSpec::constant(1.0), {}, 0.0, {}), ConfigError);
}

TEST_CASE("regularity: Brownian slope and the half-power bound") {
    RegularityConfig c;
    c.paths = 1000;
    auto r = time_regularity_experiment(DiffusionSpec::constant(1.0), SignedMeasure{}, 0.0, c);
    CHECK(r.metric("holder_half_bound")->pass);
    CHECK(r.metric("slope")->pass);
    CHECK(r.metric("slope")->value == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("regularity: sigma = 0 gives C = 0") {
    RegularityConfig c;
    c.paths = 20;
    auto r = time_regularity_experiment(DiffusionSpec::constant(0.0), SignedMeasure{}, 0.0, c);
    CHECK(r.metric("holder_half_bound")->value == 0.0);
    CHECK(r.metric("holder_half_bound")->pass);
}

TEST_CASE("regularity: skew slope within [0.9, 1.1]") {
    RegularityConfig c;
    c.paths = 1000;
    c.slope_band = std::pair{0.9, 1.1};
    auto r = time_regularity_experiment(DiffusionSpec::constant(1.0), SignedMeasure::dirac(0.0, 0.5), 0.0, c);
    CHECK(r.metric("slope")->pass);
}

TEST_CASE("localtime experiment at reduced size") {
    LocalTimeConfig c;
    c.steps = {1024, 2048, 4096};
    c.paths = 2000;
    c.residual_paths = 100;
    c.pair_paths = 50;
    c.calibration_se = 4.0;
    auto r = localtime_experiment(DiffusionSpec::constant(1.0), SignedMeasure{}, c);
    CHECK(r.metric("calibration_z")->pass);
    CHECK(r.metric("lattice_identity[ordered]")->value < 1e-12);
    auto occ = column(r, "occupation_residual[occupation]");
    REQUIRE(occ.size() == 3);
    CHECK(occ.back() < occ.front());
}

TEST_CASE("reflected experiment at reduced size") {
    ReflectedConfig c;
    c.steps = 4096;
    c.paths = 2000;
    c.pair_paths = 50;
    auto r = reflected_experiment(DiffusionSpec::constant(1.0), c);
    CHECK(r.metric("nonnegative")->pass);
    CHECK(r.metric("reflection_non_decreasing")->pass);
    CHECK(std::abs(r.metric("terminal_mean_z")->value) < 4.0);
    CHECK(r.metric("odd_power_identity[pair]")->pass);
    CHECK(r.metric("support_fraction")->pass);
    // against Y = 0 the lhs carries a bias of about 1.6 dt
    auto lhs = column(r, "odd_power_identity[zero]_lhs");
    REQUIRE(lhs.size() == 1);
    CHECK(lhs[0] > 0.0);
    CHECK(lhs[0] < 5.0 / 4096);
}

TEST_CASE("experiments are reproducible across thread counts") {
    UniquenessConfig c;
    c.steps = {256, 512};
    c.paths = 40;
    auto a = uniqueness_experiment(DiffusionSpec::constant(1.0), SignedMeasure::dirac(0.0, 0.5), 0.0, c);
    c.options.threads = 3;
    auto b = uniqueness_experiment(DiffusionSpec::constant(1.0), SignedMeasure::dirac(0.0, 0.5), 0.0, c);
    CHECK(a.refinement_csv() == b.refinement_csv());
}
