#include "skewsim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include <fftw3.h>

#include "skewsim/error.hpp"
#include "skewsim/fk.hpp"
#include "skewsim/localtime.hpp"
#include "skewsim/verify.hpp"

namespace skewsim {

namespace {

enum class Kind { number, integer, string, boolean, numbers, integers, pair, pairs, object };

struct Param {
    const char* key;
    Kind kind;
    Json fallback;  // null: optional without default
    const char* doc;
    bool required = false;
    std::vector<std::string> choices = {};
    std::optional<double> minimum = {};
};

struct Experiment {
    ExperimentInfo info;
    std::vector<Param> params;
};

Param num(const char* key, double v, const char* doc, std::optional<double> min = {}) {
    return {key, Kind::number, v, doc, false, {}, min};
}
Param integer(const char* key, long long v, const char* doc, double min = 1) {
    return {key, Kind::integer, v, doc, false, {}, min};
}
Param optional_num(const char* key, const char* doc) { return {key, Kind::number, nullptr, doc}; }

const std::vector<Experiment>& experiments() {
    static const std::vector<Experiment> table = [] {
        std::vector<Experiment> t;
        Param horizon = num("horizon", 1.0, "time horizon T", 1e-300);
        t.push_back({{"simulate", {"spec"}, "path simulation of the local-time SDE by any scheme"},
                     {horizon,
                      integer("steps", 1024, "time steps N"),
                      integer("paths", 100, "paths M"),
                      {"scheme", Kind::string, "transform", "scheme", false,
                       {"transform", "atom", "reflected", "classical"}},
                      {"flow", Kind::object, nullptr, "time-dependent atoms for the atom scheme"},
                      num("max_exit_fraction", 1e-3, "largest share of paths leaving the domain", 0.0),
                      {"field_levels", Kind::numbers, Json::array({-1.0, -0.5, 0.0, 0.5, 1.0}),
                       "levels of the local-time field written for path 0"},
                      num("field_bandwidth_exponent", 0.4, "field bandwidth eps = dt^exponent", 0.0)}});
        t.push_back({{"localtime", {"spec"}, "local-time estimators, occupation formula and lattice identities"},
                     {horizon,
                      {"steps", Kind::integers, Json::array({4096, 8192, 16384}), "grid ladder"},
                      integer("paths", 10000, "calibration paths"),
                      integer("residual_paths", 400, "paths for occupation residuals"),
                      integer("pair_paths", 200, "pairs for the lattice identities"),
                      num("bandwidth_exponent", 0.4, "eps = dt^exponent", 0.0),
                      num("level", 0.0, "level a"),
                      num("perturbation", 0.05, "start offset of the ordered pair", 0.0),
                      {"convention", Kind::string, "right", "Tanaka convention", false, {"right", "symmetric"}},
                      num("tanaka_factor", 2.0, "scale of the Tanaka residual", 0.0),
                      num("residual_tolerance", 0.05, "relative occupation residual bound", 0.0),
                      num("identity_tolerance", 0.10, "relative identity residual bound", 0.0),
                      num("calibration_se", 3.0, "calibration band in standard errors", 0.0),
                      num("consistency_tolerance", 0.05, "Tanaka versus occupation relative gap", 0.0),
                      optional_num("expected_local_time", "oracle for the mean local time")}});
        t.push_back({{"uniqueness", {"spec", "measure"}, "pathwise uniqueness under shared drivers"},
                     {horizon,
                      {"steps", Kind::integers, Json::array({1024, 4096, 16384}), "grid ladder"},
                      integer("paths", 1000, "paths"),
                      {"deltas", Kind::numbers, Json::array({1e-2, 1e-3, 1e-4}), "start perturbations"},
                      {"scheme", Kind::string, "transform", "scheme", false,
                       {"transform", "atom", "reflected", "classical"}},
                      {"reference", Kind::string, "atom", "reference scheme", false,
                       {"transform", "atom", "reflected", "classical"}},
                      num("gap_threshold", 1e-8, "largest scheme gap at the finest grid", 0.0),
                      num("rounding_floor", 1e-12, "gaps below this count as ties", 0.0),
                      num("max_exit_fraction", 1e-3, "largest share of runs leaving the domain", 0.0)}});
        t.push_back({{"conditions", {"spec", "params.modulus"}, "modulus and measure hypotheses, existence set"},
                     {{"modulus", Kind::object, nullptr, "{f, gamma | h, zero_set_f}", true},
                      num("lo", -1.0, "domain lower end"),
                      num("hi", 1.0, "domain upper end"),
                      integer("pairs", 100000, "random pairs for the modulus inequality"),
                      {"compacts", Kind::pairs, nullptr, "compacts for the existence set (default [lo, hi])"}}});
        t.push_back({{"reflected", {"spec"}, "SDE reflected at 0, odd-power identity and support"},
                     {horizon,
                      integer("steps", 16384, "time steps"),
                      integer("paths", 10000, "paths"),
                      integer("pair_paths", 400, "pairs for the identities"),
                      num("x0_pair", 0.5, "second start point", 0.0),
                      num("delta", 0.05, "support band", 1e-300),
                      integer("power_n", 1, "n in the odd power 2n + 1"),
                      num("bandwidth_exponent", 0.4, "eps = dt^exponent", 0.0),
                      num("identity_tolerance", 0.1, "relative identity residual bound", 0.0),
                      num("identity_floor", 1e-3, "scale floor of the identity", 0.0),
                      num("support_tolerance", 0.1, "largest support fraction", 0.0),
                      num("mean_se", 3.0, "terminal-mean band in standard errors", 0.0),
                      optional_num("expected_mean", "oracle for E[X_T]")}});
        t.push_back({{"fk", {"spec", "params.payoff", "params.probes"}, "Monte Carlo versus PDE value function"},
                     {horizon,
                      integer("paths", 20000, "paths per probe", 2),
                      integer("mc_steps", 1024, "time steps per path"),
                      integer("cells", 200, "coarse PDE cells", 3),
                      num("cfl", 0.9, "CFL factor", 1e-300),
                      num("x_lo", -1.0, "x-range lower end"),
                      num("x_hi", 1.0, "x-range upper end"),
                      integer("margin_cells", 10, "probes this close to the boundary are skipped", 0),
                      num("se_multiple", 3.0, "Monte Carlo band in standard errors", 0.0),
                      {"payoff", Kind::object, nullptr, "{f, g, f_max, g_max}", true},
                      {"probes", Kind::pairs, nullptr, "probe points [s, x]", true}}});
        t.push_back({{"continuity", {"spec.growth_bound"}, "continuity of the flow in the start point"},
                     {horizon,
                      integer("steps", 1024, "time steps"),
                      integer("paths", 1000, "paths"),
                      {"offsets", Kind::numbers, Json::array({0.2, 0.1, 0.05, 0.02, 0.01}), "start offsets"},
                      num("alpha", 0.25, "Holder exponent", 0.0),
                      num("epsilon_level", 0.1, "exceedance level", 1e-300),
                      num("probability_floor", 0.05, "largest probability at the smallest offset", 0.0)}});
        t.push_back({{"regularity", {"spec"}, "time regularity of the solution"},
                     {horizon,
                      integer("steps", 1024, "time steps", 2),
                      integer("paths", 2000, "paths"),
                      integer("batches", 20, "batches for the slope standard error", 2),
                      integer("start_points", 4, "start points per lag"),
                      num("expected_slope", 1.0, "expected log-log slope"),
                      num("slope_se_multiple", 4.0, "slope band in standard errors", 0.0),
                      {"slope_band", Kind::pair, nullptr, "fixed slope band [lo, hi]"}}});
        t.push_back({{"sobolev", {"spec"}, "half-derivative and maximal-function uniqueness criterion"},
                     {num("lo", -1.0, "domain lower end"),
                      num("hi", 1.0, "domain upper end"),
                      integer("resolution", 4096, "grid cells (rounded up to a power of two)", 2),
                      integer("pairs", 20000, "random pairs for the modulus bound"),
                      integer("composition_n", 1024, "periodic grid for the composition check", 4),
                      integer("composition_modes", 8, "cosine modes for the composition check"),
                      num("composition_tolerance", 1e-6, "relative composition error bound", 0.0)}});
        t.push_back({{"nakao", {"spec"}, "bounded-variation sufficient condition for uniqueness"},
                     {num("epsilon_floor", 1e-3, "lower bound for sigma", 1e-300),
                      {"compacts", Kind::pairs, Json::array({Json::array({-1.0, 1.0})}), "compacts [lo, hi]"},
                      integer("resolution", 4096, "grid cells of the coarsest level", 2)}});
        return t;
    }();
    return table;
}

const Experiment& find_experiment(const std::string& name) {
    for (const auto& e : experiments())
        if (e.info.name == name) return e;
    std::string hint;
    for (const auto& s : suggest_experiments(name)) hint += (hint.empty() ? "" : ", ") + s;
    throw ConfigError("unknown experiment '" + name + "'" + (hint.empty() ? "" : " (did you mean: " + hint + "?)"));
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

Json kind_schema(const Param& p) {
    auto number_array = [](const char* type) { return Json{{"type", "array"}, {"items", {{"type", type}}}}; };
    Json pair{{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 2}, {"maxItems", 2}};
    Json s;
    switch (p.kind) {
        case Kind::number: s = {{"type", "number"}}; break;
        case Kind::integer: s = {{"type", "integer"}}; break;
        case Kind::string: s = {{"type", "string"}}; break;
        case Kind::boolean: s = {{"type", "boolean"}}; break;
        case Kind::numbers: s = number_array("number"); break;
        case Kind::integers: s = number_array("integer"); break;
        case Kind::pair: s = pair; break;
        case Kind::pairs: s = {{"type", "array"}, {"items", pair}}; break;
        case Kind::object: s = {{"type", "object"}}; break;
    }
    if (!p.choices.empty()) s["enum"] = p.choices;
    if (p.minimum) s["minimum"] = *p.minimum;
    if (!p.fallback.is_null()) s["default"] = p.fallback;
    s["description"] = p.doc;
    return s;
}

bool is_integer(const Json& v) {
    if (v.is_number_integer()) return true;
    if (!v.is_number_float()) return false;
    double d = v.get<double>();
    return std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15;
}

bool is_pair(const Json& v) { return v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(); }

void check_value(const Param& p, const Json& v, const std::string& where) {
    auto fail = [&](const std::string& what) { throw ConfigError(where + " " + what); };
    auto check_min = [&](double d) {
        if (p.minimum && d < *p.minimum) fail("must be >= " + format_double(*p.minimum));
    };
    switch (p.kind) {
        case Kind::number:
            if (!v.is_number()) fail("must be a number");
            check_min(v.get<double>());
            break;
        case Kind::integer:
            if (!is_integer(v)) fail("must be an integer");
            check_min(v.get<double>());
            break;
        case Kind::string:
            if (!v.is_string()) fail("must be a string");
            if (!p.choices.empty() &&
                std::find(p.choices.begin(), p.choices.end(), v.get<std::string>()) == p.choices.end())
                fail("must be one of the listed choices");
            break;
        case Kind::boolean:
            if (!v.is_boolean()) fail("must be true or false");
            break;
        case Kind::numbers:
            if (!v.is_array() || v.empty()) fail("must be a non-empty array of numbers");
            for (const auto& x : v)
                if (!x.is_number()) fail("must hold numbers");
            break;
        case Kind::integers:
            if (!v.is_array() || v.empty()) fail("must be a non-empty array of integers");
            for (const auto& x : v) {
                if (!is_integer(x)) fail("must hold integers");
                check_min(x.get<double>());
            }
            break;
        case Kind::pair:
            if (!is_pair(v)) fail("must be [lo, hi]");
            break;
        case Kind::pairs:
            if (!v.is_array() || v.empty()) fail("must be a non-empty array of pairs");
            for (const auto& x : v)
                if (!is_pair(x)) fail("must hold [a, b] pairs");
            break;
        case Kind::object:
            if (!v.is_object()) fail("must be an object");
            break;
    }
}

const Json default_spec = Json{{"sigma", {{"kind", "const"}, {"value", 1.0}}}};
const Json default_domain = Json{{"x_min", -10.0}, {"x_max", 10.0}, {"resolution", 4096}};

template <class T>
T get(const Json& params, const char* key) {
    return params.at(key).get<T>();
}

SchemeOptions scheme_options(const RunConfig& c) {
    SchemeOptions o;
    o.x_min = c.domain.at("x_min").get<double>();
    o.x_max = c.domain.at("x_max").get<double>();
    o.resolution = c.domain.at("resolution").get<int>();
    o.threads = c.threads;
    return o;
}

std::vector<Interval> intervals_of(const Json& pairs) {
    std::vector<Interval> out;
    for (const auto& p : pairs) out.push_back(Interval{p[0].get<double>(), p[1].get<double>(), true, true});
    return out;
}

void add_condition_violations(ExperimentReport& report, const ConditionReport& cr, const std::string& prefix) {
    for (const auto& v : cr.violations())
        report.add_note(prefix + " violates " + v.condition + " at " + format_double(v.witness) + " (value " +
                        format_double(v.value) + ")");
    if (!cr.notes().empty()) report.add_note(prefix + ": " + cr.notes());
}

RunResult run_simulate(const RunConfig& c, const DiffusionSpec& spec, const SignedMeasure& nu) {
    const Json& p = c.params;
    TimeGrid grid(get<double>(p, "horizon"), get<int>(p, "steps"));
    auto options = scheme_options(c);
    auto driver = sample_driver(c.seed, get<int>(p, "paths"), grid);
    const auto name = get<std::string>(p, "scheme");
    std::unique_ptr<Scheme> scheme;
    if (p.contains("flow")) {
        if (name != "atom") throw ConfigError("params.flow is only used by the atom scheme");
        auto flow = AtomicFlow::from_json(p.at("flow"));
        flow.validate(grid);
        scheme = std::make_unique<AtomScheme>(spec, std::move(flow), grid, options);
    } else {
        scheme = make_scheme(name, spec, nu, grid, options);
    }
    auto paths = simulate(*scheme, c.x0, driver, c.threads, spec.hash());

    RunResult result;
    result.report = ExperimentReport("simulate", c.canonical());
    double exits = paths.exit_count();
    double fraction = exits / paths.paths;
    double limit = get<double>(p, "max_exit_fraction");
    result.report.add_metric("exit_fraction", fraction, limit, fraction <= limit);
    std::vector<double> terminal(static_cast<std::size_t>(paths.paths));
    for (int i = 0; i < paths.paths; ++i) terminal[static_cast<std::size_t>(i)] = paths.at(i, grid.steps());
    auto st = sample_stats(terminal);
    result.report.add_row("t", grid.horizon(), "terminal_mean", st.mean);
    result.report.add_row("t", grid.horizon(), "terminal_se", st.standard_error);
    result.files.push_back({"paths.csv", paths.to_csv()});
    if (!paths.aux.empty()) {
        PathSet k = paths;
        k.values = paths.aux;
        result.files.push_back({"reflection.csv", k.to_csv()});
    }
    if (const auto* ts = dynamic_cast<const TransformScheme*>(scheme.get()))
        result.files.push_back({"transform.csv", ts->transform().to_csv()});

    auto levels = p.at("field_levels").get<std::vector<double>>();
    std::sort(levels.begin(), levels.end());
    std::vector<int> steps;
    for (int q = 1; q <= 4; ++q) steps.push_back(grid.steps() * q / 4);
    LocalTimeOptions lt;
    lt.epsilon = std::pow(grid.dt(), get<double>(p, "field_bandwidth_exponent"));
    auto field = estimate_field(paths.path(0), grid, spec.sigma, levels, steps, lt);
    result.files.push_back({"localtime_field.csv", field.to_csv()});
    return result;
}

RunResult run_conditions(const RunConfig& c, const DiffusionSpec& spec, const SignedMeasure& nu) {
    const Json& p = c.params;
    double lo = get<double>(p, "lo");
    double hi = get<double>(p, "hi");
    auto pair = ModulusPair::from_json(p.at("modulus"));
    RunResult result;
    result.report = ExperimentReport("conditions", c.canonical());
    result.report.merge(check_A3A4(spec, pair, lo, hi, get<int>(p, "pairs"), c.seed), "");

    auto mc = check_measure_conditions(nu, spec.zero_set);
    int holding = (mc.strong.passed() ? 1 : 0) + (mc.weak.passed() ? 1 : 0);
    result.report.add_metric("measure_conditions", holding, 1.0, holding >= 1);
    add_condition_violations(result.report, mc.strong, "measure (strong pair)");
    add_condition_violations(result.report, mc.weak, "measure (weak pair)");
    if (holding == 0 && !mc.strong.violations().empty())
        result.report.add_witness("measure_conditions", mc.strong.violations().front().witness);

    auto compacts = p.contains("compacts") ? intervals_of(p.at("compacts")) : std::vector<Interval>{{lo, hi, true, true}};
    auto is = check_I_sigma(spec, compacts);
    result.report.add_metric("I_sigma", static_cast<double>(is.violations().size()), 0.0, is.passed());
    if (!is.passed()) result.report.add_witness("I_sigma", is.violations().front().witness);
    add_condition_violations(result.report, is, "existence set");

    auto consistency = spec.check_consistency(lo, hi);
    result.report.add_metric("spec_consistency", static_cast<double>(consistency.violations().size()), 0.0,
                             consistency.passed());
    if (!consistency.passed()) result.report.add_witness("spec_consistency", consistency.violations().front().witness);
    add_condition_violations(result.report, consistency, "spec");
    return result;
}

RunResult run_fk(const RunConfig& c, const DiffusionSpec& spec, const SignedMeasure& nu) {
    const Json& p = c.params;
    FkConfig fc;
    fc.horizon = get<double>(p, "horizon");
    fc.paths = get<int>(p, "paths");
    fc.mc_steps = get<int>(p, "mc_steps");
    fc.seed = c.seed;
    fc.cells = get<int>(p, "cells");
    fc.cfl = get<double>(p, "cfl");
    fc.x_lo = get<double>(p, "x_lo");
    fc.x_hi = get<double>(p, "x_hi");
    fc.margin_cells = get<int>(p, "margin_cells");
    fc.se_multiple = get<double>(p, "se_multiple");
    fc.options = scheme_options(c);
    auto payoff = TerminalPayoff::from_json(p.at("payoff"));
    std::vector<std::pair<double, double>> probes;
    for (const auto& pr : p.at("probes")) probes.emplace_back(pr[0].get<double>(), pr[1].get<double>());
    RunResult result;
    PdeSolution fine;
    result.report = ExperimentReport("fk", c.canonical());
    result.report.merge(fk_compare(spec, nu, payoff, probes, fc, &fine), "");
    result.files.push_back({"u.csv", fine.to_csv()});
    return result;
}

}  // namespace

const std::vector<ExperimentInfo>& list_experiments() {
    static const std::vector<ExperimentInfo> infos = [] {
        std::vector<ExperimentInfo> out;
        for (const auto& e : experiments()) out.push_back(e.info);
        return out;
    }();
    return infos;
}

std::vector<std::string> suggest_experiments(const std::string& name, std::size_t limit) {
    std::vector<std::pair<std::size_t, std::string>> scored;
    for (const auto& e : experiments()) {
        std::size_t d = edit_distance(name, e.info.name);
        bool prefix = !name.empty() && e.info.name.rfind(name, 0) == 0;
        if (prefix) d = 0;
        scored.emplace_back(d, e.info.name);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::string> out;
    for (const auto& [d, n] : scored) {
        if (out.size() >= limit) break;
        if (d <= std::max<std::size_t>(3, name.size() / 2)) out.push_back(n);
    }
    return out;
}

Json RunConfig::canonical() const {
    return Json{{"experiment", experiment}, {"spec", spec}, {"measure", measure}, {"seed", seed},
                {"domain", domain},         {"x0", x0},     {"params", params}};
}

Json config_schema() {
    Json schema{{"$schema", "https://json-schema.org/draft/2020-12/schema"},
                {"title", "skewsim run configuration"},
                {"type", "object"},
                {"additionalProperties", false},
                {"required", {"experiment"}}};
    std::vector<std::string> names;
    for (const auto& e : experiments()) names.push_back(e.info.name);
    schema["properties"] = {
        {"experiment", {{"type", "string"}, {"enum", names}}},
        {"spec",
         {{"type", "object"},
          {"description", "{sigma, zero_set, drift, growth_bound}; functions are {kind, ...} objects"},
          {"default", default_spec}}},
        {"measure", {{"type", "object"}, {"description", "{atoms: [{a, alpha}], density: [...]}"}, {"default", Json::object()}}},
        {"seed", {{"type", "integer"}, {"minimum", 0}, {"default", 1}}},
        {"threads", {{"type", "integer"}, {"minimum", 0}, {"default", 1}, {"description", "0 = hardware threads"}}},
        {"out", {{"type", "string"}, {"default", "out"}}},
        {"domain",
         {{"type", "object"},
          {"additionalProperties", false},
          {"properties",
           {{"x_min", {{"type", "number"}}}, {"x_max", {{"type", "number"}}}, {"resolution", {{"type", "integer"}}}}},
          {"default", default_domain}}},
        {"x0", {{"type", "number"}, {"default", 0.0}}},
        {"params", {{"type", "object"}}}};
    Json defs = Json::object();
    Json branches = Json::array();
    for (const auto& e : experiments()) {
        Json props = Json::object();
        Json required = Json::array();
        for (const auto& p : e.params) {
            props[p.key] = kind_schema(p);
            if (p.required) required.push_back(p.key);
        }
        std::string def = e.info.name + "_params";
        defs[def] = {{"type", "object"}, {"additionalProperties", false}, {"properties", props}};
        if (!required.empty()) defs[def]["required"] = required;
        branches.push_back({{"if", {{"properties", {{"experiment", {{"const", e.info.name}}}}}}},
                            {"then", {{"properties", {{"params", {{"$ref", "#/$defs/" + def}}}}}}}});
    }
    schema["$defs"] = defs;
    schema["allOf"] = branches;
    return schema;
}

RunConfig parse_config(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    check_keys(doc, {"experiment", "spec", "measure", "seed", "threads", "out", "domain", "x0", "params"},
               "configuration");
    if (!doc.contains("experiment") || !doc["experiment"].is_string())
        throw ConfigError("configuration needs a string 'experiment'");
    RunConfig c;
    c.experiment = doc["experiment"].get<std::string>();
    const Experiment& exp = find_experiment(c.experiment);

    c.spec = doc.value("spec", default_spec);
    c.measure = doc.value("measure", Json::object());
    if (doc.contains("seed")) {
        const auto& s = doc["seed"];
        if (!s.is_number_unsigned() && !(is_integer(s) && s.get<double>() >= 0))
            throw ConfigError("seed must be a non-negative integer");
        c.seed = s.is_number_unsigned() ? s.get<std::uint64_t>() : static_cast<std::uint64_t>(s.get<double>());
    }
    if (doc.contains("threads")) {
        if (!is_integer(doc["threads"]) || doc["threads"].get<double>() < 0)
            throw ConfigError("threads must be a non-negative integer");
        c.threads = doc["threads"].get<int>();
    }
    if (doc.contains("out")) {
        if (!doc["out"].is_string()) throw ConfigError("out must be a string");
        c.out = doc["out"].get<std::string>();
    }
    if (doc.contains("x0")) {
        if (!doc["x0"].is_number()) throw ConfigError("x0 must be a number");
        c.x0 = doc["x0"].get<double>();
    }
    c.domain = default_domain;
    if (doc.contains("domain")) {
        const auto& d = doc["domain"];
        if (!d.is_object()) throw ConfigError("domain must be an object");
        check_keys(d, {"x_min", "x_max", "resolution"}, "domain");
        for (const auto& [k, v] : d.items()) c.domain[k] = v;
    }
    if (!c.domain["x_min"].is_number() || !c.domain["x_max"].is_number() || !is_integer(c.domain["resolution"]))
        throw ConfigError("domain needs numeric x_min, x_max and an integer resolution");
    if (!(c.domain["x_min"].get<double>() < c.domain["x_max"].get<double>()) ||
        c.domain["resolution"].get<double>() < 1)
        throw ConfigError("domain needs x_min < x_max and resolution >= 1");

    const Json given = doc.value("params", Json::object());
    if (!given.is_object()) throw ConfigError("params must be an object");
    for (const auto& [key, value] : given.items()) {
        (void)value;
        bool known = std::any_of(exp.params.begin(), exp.params.end(), [&](const Param& p) { return key == p.key; });
        if (!known) throw ConfigError("unknown key 'params." + key + "' for experiment '" + c.experiment + "'");
    }
    c.params = Json::object();
    for (const auto& p : exp.params) {
        std::string where = std::string("params.") + p.key;
        if (given.contains(p.key)) {
            check_value(p, given[p.key], where);
            c.params[p.key] = given[p.key];
        } else if (p.required) {
            throw ConfigError(where + " is required for experiment '" + c.experiment + "'");
        } else if (!p.fallback.is_null()) {
            c.params[p.key] = p.fallback;
        }
    }

    // parse nested descriptions now so errors surface before any computation
    auto spec = DiffusionSpec::from_json(c.spec);
    auto nu = SignedMeasure::from_json(c.measure);
    (void)nu;
    if (c.params.contains("modulus")) (void)ModulusPair::from_json(c.params["modulus"]);
    if (c.params.contains("payoff")) (void)TerminalPayoff::from_json(c.params["payoff"]);
    if (c.params.contains("flow")) (void)AtomicFlow::from_json(c.params["flow"]);
    if (c.params.contains("convention")) (void)convention_from_string(c.params["convention"].get<std::string>());
    if (c.experiment == "continuity" && !spec.growth_bound)
        throw ConfigError("experiment 'continuity' needs spec.growth_bound");
    return c;
}

void apply_override(Json& doc, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: '" + assignment + "'");
    std::string path = assignment.substr(0, eq);
    std::string text = assignment.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    Json* node = &doc;
    std::size_t start = 0;
    while (true) {
        auto dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("override key has an empty component: '" + path + "'");
        if (!node->is_object()) throw ConfigError("override path '" + path + "' runs through a non-object");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = Json::object();
        start = dot + 1;
    }
}

RunResult run_experiment(const RunConfig& c) {
    auto spec = DiffusionSpec::from_json(c.spec);
    auto nu = SignedMeasure::from_json(c.measure);
    const Json& p = c.params;
    const std::string& name = c.experiment;
    auto options = scheme_options(c);

    if (name == "simulate") return run_simulate(c, spec, nu);
    if (name == "conditions") return run_conditions(c, spec, nu);
    if (name == "fk") return run_fk(c, spec, nu);

    RunResult result;
    result.report = ExperimentReport(name, c.canonical());
    if (name == "localtime") {
        LocalTimeConfig lc;
        lc.horizon = get<double>(p, "horizon");
        lc.steps = p.at("steps").get<std::vector<int>>();
        lc.paths = get<int>(p, "paths");
        lc.residual_paths = get<int>(p, "residual_paths");
        lc.pair_paths = get<int>(p, "pair_paths");
        lc.seed = c.seed;
        lc.bandwidth_exponent = get<double>(p, "bandwidth_exponent");
        lc.level = get<double>(p, "level");
        lc.x0 = c.x0;
        lc.perturbation = get<double>(p, "perturbation");
        lc.convention = convention_from_string(get<std::string>(p, "convention"));
        lc.tanaka_factor = get<double>(p, "tanaka_factor");
        lc.residual_tolerance = get<double>(p, "residual_tolerance");
        lc.identity_tolerance = get<double>(p, "identity_tolerance");
        lc.calibration_se = get<double>(p, "calibration_se");
        lc.consistency_tolerance = get<double>(p, "consistency_tolerance");
        if (p.contains("expected_local_time")) lc.expected_local_time = get<double>(p, "expected_local_time");
        lc.options = options;
        result.report.merge(localtime_experiment(spec, nu, lc), "");
    } else if (name == "uniqueness") {
        UniquenessConfig uc;
        uc.horizon = get<double>(p, "horizon");
        uc.steps = p.at("steps").get<std::vector<int>>();
        uc.paths = get<int>(p, "paths");
        uc.seed = c.seed;
        uc.deltas = p.at("deltas").get<std::vector<double>>();
        uc.scheme = get<std::string>(p, "scheme");
        uc.reference = get<std::string>(p, "reference");
        uc.gap_threshold = get<double>(p, "gap_threshold");
        uc.rounding_floor = get<double>(p, "rounding_floor");
        uc.max_exit_fraction = get<double>(p, "max_exit_fraction");
        uc.options = options;
        result.report.merge(uniqueness_experiment(spec, nu, c.x0, uc), "");
    } else if (name == "reflected") {
        if (!nu.empty()) throw ConfigError("the reflected experiment does not take a measure");
        ReflectedConfig rc;
        rc.horizon = get<double>(p, "horizon");
        rc.steps = get<int>(p, "steps");
        rc.paths = get<int>(p, "paths");
        rc.pair_paths = get<int>(p, "pair_paths");
        rc.seed = c.seed;
        rc.x0 = c.x0;
        rc.x0_pair = get<double>(p, "x0_pair");
        rc.delta = get<double>(p, "delta");
        rc.power_n = get<int>(p, "power_n");
        rc.bandwidth_exponent = get<double>(p, "bandwidth_exponent");
        rc.identity_tolerance = get<double>(p, "identity_tolerance");
        rc.identity_floor = get<double>(p, "identity_floor");
        rc.support_tolerance = get<double>(p, "support_tolerance");
        rc.mean_se = get<double>(p, "mean_se");
        if (p.contains("expected_mean")) rc.expected_mean = get<double>(p, "expected_mean");
        rc.threads = c.threads;
        result.report.merge(reflected_experiment(spec, rc), "");
    } else if (name == "continuity") {
        ContinuityConfig cc;
        cc.horizon = get<double>(p, "horizon");
        cc.steps = get<int>(p, "steps");
        cc.paths = get<int>(p, "paths");
        cc.seed = c.seed;
        cc.offsets = p.at("offsets").get<std::vector<double>>();
        cc.alpha = get<double>(p, "alpha");
        cc.epsilon_level = get<double>(p, "epsilon_level");
        cc.probability_floor = get<double>(p, "probability_floor");
        cc.options = options;
        result.report.merge(continuity_experiment(spec, nu, c.x0, cc), "");
    } else if (name == "regularity") {
        RegularityConfig rc;
        rc.horizon = get<double>(p, "horizon");
        rc.steps = get<int>(p, "steps");
        rc.paths = get<int>(p, "paths");
        rc.seed = c.seed;
        rc.batches = get<int>(p, "batches");
        rc.start_points = get<int>(p, "start_points");
        rc.expected_slope = get<double>(p, "expected_slope");
        rc.slope_se_multiple = get<double>(p, "slope_se_multiple");
        if (p.contains("slope_band"))
            rc.slope_band = std::pair{p["slope_band"][0].get<double>(), p["slope_band"][1].get<double>()};
        rc.options = options;
        result.report.merge(time_regularity_experiment(spec, nu, c.x0, rc), "");
    } else if (name == "sobolev") {
        result.report.merge(check_sobolev_condition(spec, get<double>(p, "lo"), get<double>(p, "hi"),
                                                    get<int>(p, "resolution"), get<int>(p, "pairs"), c.seed),
                            "");
        double err = half_derivative_composition_error(get<int>(p, "composition_n"), get<int>(p, "composition_modes"));
        double tol = get<double>(p, "composition_tolerance");
        result.report.add_metric("composition_error", err, tol, err <= tol);
    } else if (name == "nakao") {
        result.report.merge(nakao_check(spec, get<double>(p, "epsilon_floor"), intervals_of(p.at("compacts")),
                                        get<int>(p, "resolution")),
                            "");
    } else {
        throw ConfigError("experiment '" + name + "' has no runner");
    }
    return result;
}

void write_outputs(const RunConfig& config, const RunResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
    std::vector<OutputFile> files = result.files;
    files.insert(files.begin(), {"refinement.csv", result.report.refinement_csv()});
    files.insert(files.begin(), {"report.json", result.report.to_json().dump(2) + "\n"});

    Json listing = Json::array();
    for (const auto& f : files) {
        std::ofstream out(dir / f.name, std::ios::binary);
        out << f.contents;
        if (!out) throw ConfigError("cannot write '" + (dir / f.name).string() + "'");
        listing.push_back({{"name", f.name}, {"fnv1a64", hex64(hash_json(Json(f.contents)))}});
    }
    Json manifest{{"experiment", config.experiment},
                  {"config", config.canonical()},
                  {"config_hash", hex64(hash_json(config.canonical()))},
                  {"seed", config.seed},
                  {"verdict", result.report.verdict() ? "pass" : "fail"},
                  {"files", listing},
                  {"versions",
                   {{"skewsim", std::string(version_string)},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                    {"fftw", std::string(fftw_version)},
                    {"compiler", std::string(__VERSION__)}}}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
    if (!out) throw ConfigError("cannot write manifest.json");
}

}  // namespace skewsim
