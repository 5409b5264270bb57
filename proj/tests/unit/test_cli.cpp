#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "skewsim/cli.hpp"
#include "skewsim/error.hpp"

using namespace skewsim;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    Scratch() {
        dir = fs::temp_directory_path() / ("skewsim_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(dir / name) << text;
        return dir / name;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_tool(const std::string& args, const fs::path& log, const std::string& env = "") {
    std::string cmd = env + " " + std::string(SKEWSIM_EXE) + " " + args + " > " + log.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* small_uniqueness = R"({
  "experiment": "uniqueness",
  "measure": {"atoms": [{"a": 0, "alpha": 0.5}]},
  "params": {"steps": [256, 1024], "paths": 40}
})";

}  // namespace

TEST_CASE("list has ten experiments in a fixed order") {
    const auto& l = list_experiments();
    REQUIRE(l.size() == 10);
    CHECK(l.front().name == "simulate");
    CHECK(l.back().name == "nakao");
    CHECK(suggest_experiments("uniquness").front() == "uniqueness");
    CHECK(suggest_experiments("fkk").front() == "fk");
}

TEST_CASE("parse_config fills defaults and rejects unknown keys") {
    auto c = parse_config(Json::parse(R"({"experiment":"regularity"})"));
    CHECK(c.seed == 1);
    CHECK(c.params["steps"] == 1024);
    CHECK(c.domain["resolution"] == 4096);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"experiment":"regularity","colour":1})")), ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"experiment":"regularity","params":{"stepz":3}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"experiment":"regularity","params":{"steps":-3}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"experiment":"regularity","params":{"steps":1.5}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"experiment":"nope"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"experiment":"fk"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"experiment":"continuity"})")), ConfigError);
    CHECK_THROWS_AS(parse_config(Json::parse(R"({"experiment":"simulate","spec":{"sigma":{"kind":"nah"}}})")),
                    ConfigError);
}

TEST_CASE("overrides follow dotted paths") {
    Json doc = Json::parse(R"({"experiment":"simulate"})");
    apply_override(doc, "params.steps=64");
    apply_override(doc, "params.scheme=atom");
    apply_override(doc, "spec.sigma={\"kind\":\"const\",\"value\":2}");
    CHECK(doc["params"]["steps"] == 64);
    CHECK(doc["params"]["scheme"] == "atom");
    CHECK(doc["spec"]["sigma"]["value"] == 2);
    CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "params.steps.x=1"), ConfigError);
}

TEST_CASE("schema covers every experiment") {
    auto s = config_schema();
    CHECK(s["properties"]["experiment"]["enum"].size() == 10);
    CHECK(s["$defs"].contains("fk_params"));
    CHECK(s["$defs"]["fk_params"]["required"].size() == 2);
    CHECK(s["additionalProperties"] == false);
}

TEST_CASE("canonical config ignores output directory and threads") {
    auto a = parse_config(Json::parse(R"({"experiment":"nakao","out":"x","threads":1})"));
    auto b = parse_config(Json::parse(R"({"experiment":"nakao","out":"y","threads":4})"));
    CHECK(a.canonical() == b.canonical());
}

TEST_CASE("tool: valid skew uniqueness run exits 0 with outputs") {
    Scratch s;
    auto cfg = s.write("u.json", small_uniqueness);
    auto out = s.dir / "out";
    CHECK(run_tool("run --config " + cfg.string() + " --out " + out.string(), s.dir / "log") == 0);
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "refinement.csv"));
    auto manifest = Json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["seed"] == 1);
    CHECK(manifest["verdict"] == "pass");
    CHECK(manifest["files"].size() == 2);
}

TEST_CASE("tool: atom weight 1.5 with empty zero set exits 1 citing A1") {
    Scratch s;
    auto cfg = s.write("bad.json", R"({"experiment":"simulate","measure":{"atoms":[{"a":0,"alpha":1.5}]},
                                      "params":{"steps":16,"paths":2}})");
    CHECK(run_tool("run --config " + cfg.string() + " --out " + (s.dir / "o").string(), s.dir / "log") == 1);
    CHECK(slurp(s.dir / "log").find("A1") != std::string::npos);
}

TEST_CASE("tool: reruns with the same seed are byte-identical, across thread counts too") {
    Scratch s;
    auto cfg = s.write("sim.json", R"({"experiment":"simulate","measure":{"atoms":[{"a":0,"alpha":0.5}]},
                                      "params":{"steps":128,"paths":20}})");
    auto a = s.dir / "a", b = s.dir / "b", c = s.dir / "c", d = s.dir / "d";
    std::string base = "run --config " + cfg.string() + " --seed=7 ";
    REQUIRE(run_tool(base + "--out " + a.string(), s.dir / "log") == 0);
    REQUIRE(run_tool(base + "--out " + b.string(), s.dir / "log") == 0);
    REQUIRE(run_tool(base + "--threads 3 --out " + c.string(), s.dir / "log") == 0);
    for (const char* f : {"paths.csv", "transform.csv", "localtime_field.csv", "refinement.csv", "manifest.json"}) {
        CHECK(slurp(a / f) == slurp(b / f));
        CHECK(slurp(a / f) == slurp(c / f));
    }
    REQUIRE(run_tool("run --config " + cfg.string() + " --out " + d.string(), s.dir / "log", "SKEWSIM_SEED=7") == 0);
    CHECK(slurp(a / "paths.csv") == slurp(d / "paths.csv"));
    CHECK(Json::parse(slurp(a / "manifest.json"))["seed"] == 7);
}

TEST_CASE("tool: SKEWSIM_OUT and --set") {
    Scratch s;
    auto out = s.dir / "env_out";
    int code = run_tool("run --set experiment=nakao --set params.resolution=256", s.dir / "log",
                        "SKEWSIM_OUT=" + out.string());
    CHECK(code == 0);
    CHECK(fs::exists(out / "report.json"));
}

TEST_CASE("tool: failing verdict exits 2") {
    Scratch s;
    auto cfg = s.write("n.json", R"({"experiment":"nakao","spec":{"sigma":{"kind":"osc"}},
                                    "params":{"resolution":512}})");
    CHECK(run_tool("run --config " + cfg.string() + " --out " + (s.dir / "o").string(), s.dir / "log") == 2);
}

TEST_CASE("tool: config errors exit 1") {
    Scratch s;
    auto cfg = s.write("x.json", R"({"experiment":"nakao","bogus":1})");
    CHECK(run_tool("run --config " + cfg.string(), s.dir / "log") == 1);
    CHECK(slurp(s.dir / "log").find("bogus") != std::string::npos);
    auto broken = s.write("y.json", "{not json");
    CHECK(run_tool("run --config " + broken.string(), s.dir / "log") == 1);
    CHECK(run_tool("run --config " + (s.dir / "missing.json").string(), s.dir / "log") == 1);
    CHECK(run_tool("frobnicate", s.dir / "log") == 1);
}

TEST_CASE("tool: list and schema") {
    Scratch s;
    CHECK(run_tool("list", s.dir / "log") == 0);
    auto text = slurp(s.dir / "log");
    CHECK(std::count(text.begin(), text.end(), '\n') == 10);
    CHECK(run_tool("list --json", s.dir / "log") == 0);
    auto arr = Json::parse(slurp(s.dir / "log"));
    CHECK(arr.is_array());
    CHECK(arr.size() == 10);
    CHECK(run_tool("list uniquenes", s.dir / "log") != 0);
    CHECK(slurp(s.dir / "log").find("uniqueness") != std::string::npos);
    CHECK(run_tool("schema", s.dir / "log") == 0);
    CHECK(Json::parse(slurp(s.dir / "log"))["title"] == "skewsim run configuration");
}
