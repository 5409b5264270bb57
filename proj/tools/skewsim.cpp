// Command-line front end: skewsim run | list | schema

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "skewsim/cli.hpp"
#include "skewsim/error.hpp"

namespace {

using skewsim::Json;

Json read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw skewsim::ConfigError("cannot read config file '" + path + "'");
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw skewsim::ConfigError("config file '" + path + "' is not valid JSON");
    return doc;
}

void print_summary(const skewsim::RunResult& result, const std::string& out) {
    const auto& report = result.report;
    for (const auto& m : report.metrics())
        std::cout << (m.pass ? "  ok    " : "  FAIL  ") << m.label << " = " << skewsim::format_double(m.value)
                  << " (tol " << skewsim::format_double(m.tolerance) << ")\n";
    for (const auto& n : report.notes()) std::cout << "  note  " << n << "\n";
    std::cout << report.name() << ": " << (report.verdict() ? "pass" : "fail") << " -> " << out << "\n";
}

int run(const std::string& config_path, const std::vector<std::string>& sets, CLI::Option* seed_opt,
        std::uint64_t seed, CLI::Option* out_opt, const std::string& out, CLI::Option* threads_opt, int threads) {
    Json doc = config_path.empty() ? Json::object() : read_config(config_path);
    if (!doc.is_object()) throw skewsim::ConfigError("configuration must be a JSON object");
    if (const char* env = std::getenv("SKEWSIM_SEED"); env && *env) {
        Json v = Json::parse(env, nullptr, false);
        if (v.is_discarded() || !v.is_number_integer()) throw skewsim::ConfigError("SKEWSIM_SEED must be an integer");
        doc["seed"] = v;
    }
    if (const char* env = std::getenv("SKEWSIM_OUT"); env && *env) doc["out"] = env;
    for (const auto& s : sets) skewsim::apply_override(doc, s);
    if (*seed_opt) doc["seed"] = seed;
    if (*out_opt) doc["out"] = out;
    if (*threads_opt) doc["threads"] = threads;

    auto config = skewsim::parse_config(doc);
    auto result = skewsim::run_experiment(config);
    skewsim::write_outputs(config, result, config.out);
    print_summary(result, config.out);
    return skewsim::exit_status(result);
}

int list(const std::string& name, bool as_json) {
    const auto& infos = skewsim::list_experiments();
    std::vector<skewsim::ExperimentInfo> shown;
    for (const auto& e : infos)
        if (name.empty() || e.name == name) shown.push_back(e);
    if (shown.empty()) {
        std::cerr << "error: unknown experiment '" << name << "'";
        auto hints = skewsim::suggest_experiments(name);
        if (!hints.empty()) {
            std::cerr << "; did you mean:";
            for (const auto& h : hints) std::cerr << " " << h;
        }
        std::cerr << "\n";
        return 1;
    }
    if (as_json) {
        Json arr = Json::array();
        for (const auto& e : shown) arr.push_back({{"name", e.name}, {"required", e.required}, {"exercises", e.exercises}});
        std::cout << arr.dump(2) << "\n";
        return 0;
    }
    for (const auto& e : shown) {
        std::string req;
        for (const auto& r : e.required) req += (req.empty() ? "" : ", ") + r;
        std::cout << e.name << std::string(e.name.size() < 12 ? 12 - e.name.size() : 1, ' ') << e.exercises
                  << "  [needs: " << req << "]\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification of SDEs with local-time terms"};
    app.set_version_flag("--version", std::string(skewsim::version_string));
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run an experiment and write report.json, CSVs and manifest.json");
    std::string config_path;
    std::vector<std::string> sets;
    std::uint64_t seed = 1;
    std::string out;
    int threads = 1;
    run_cmd->add_option("--config", config_path, "JSON configuration file");
    auto* seed_opt = run_cmd->add_option("--seed", seed, "RNG seed (overrides SKEWSIM_SEED and the config)");
    auto* out_opt = run_cmd->add_option("--out", out, "output directory (overrides SKEWSIM_OUT and the config)");
    auto* threads_opt = run_cmd->add_option("--threads", threads, "worker threads, 0 = all cores")
                            ->check(CLI::NonNegativeNumber);
    run_cmd->add_option("--set", sets, "override a config value, key.path=value (repeatable)");

    auto* list_cmd = app.add_subcommand("list", "list the experiments");
    std::string list_name;
    bool as_json = false;
    list_cmd->add_option("name", list_name, "show one experiment");
    list_cmd->add_flag("--json", as_json, "machine-readable output");

    auto* schema_cmd = app.add_subcommand("schema", "print the JSON Schema of the config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*run_cmd) return run(config_path, sets, seed_opt, seed, out_opt, out, threads_opt, threads);
        if (*list_cmd) return list(list_name, as_json);
        if (*schema_cmd) {
            std::cout << skewsim::config_schema().dump(2) << "\n";
            return 0;
        }
    } catch (const skewsim::ConditionError& e) {
        std::cerr << "error: hypothesis " << e.condition() << " violated: " << e.what() << "\n";
        return 1;
    } catch (const skewsim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Json::exception& e) {
        std::cerr << "error: bad configuration value: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
