#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vvlab/scenario.hpp"

namespace fs = std::filesystem;
using namespace vvlab;

namespace {

constexpr double suite_budget_seconds = 600.0;

ScenarioConfig resolve(const std::string& ref) {
    const std::string prefix = "builtin:";
    if (ref.rfind(prefix, 0) == 0) return builtin_config(ref.substr(prefix.size()));
    return load_config(ref);
}

int cmd_run(const std::string& ref, const std::string& out) {
    ScenarioConfig c;
    try {
        c = resolve(ref);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    const fs::path dir = out.empty() ? fs::path("runs") / c.name : fs::path(out);
    const int code = run_and_write(c, dir, std::cerr);
    if (code == exit_ok || code == exit_assertion) std::cout << "wrote " << dir.string() << '\n';
    return code;
}

int cmd_suite(const std::string& name, const std::string& out) {
    std::vector<ScenarioConfig> configs;
    try {
        for (const auto& n : suite_names(name)) configs.push_back(builtin_config(n));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    const fs::path dir = out.empty() ? fs::path("runs") / ("suite_" + name) : fs::path(out);
    const auto start = std::chrono::steady_clock::now();
    std::vector<SuiteRow> rows;
    const int code = run_suite(configs, dir, std::cerr, &rows);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& r : rows) std::cout << r.scenario << ": exit " << r.exit_code << '\n';
    std::cout << "wrote " << (dir / "suite_summary.csv").string() << " (" << wall << " s)\n";
    if (wall > suite_budget_seconds)
        std::cerr << "warning: suite took " << wall << " s, over the " << suite_budget_seconds << " s budget\n";
    return code;
}

int cmd_defaults(const std::string& scenario) {
    try {
        std::cout << to_toml(scenario.empty() ? ScenarioConfig{} : builtin_config(scenario), true);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    return exit_ok;
}

void cmd_list_models() {
    for (const auto& f : model_families()) {
        std::cout << f.name << "  c_hyp=" << f.c_hyp << "  u*=(" << f.u_star[0] << ", " << f.u_star[1] << ")\n    "
                  << f.description << '\n';
        for (const auto& p : f.params) std::cout << "    " << p.name << " = " << p.value << "  " << p.doc << '\n';
    }
}

void cmd_list_scenarios() {
    for (const auto& s : builtin_scenarios()) std::cout << s.name << "  " << s.description << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vvlab: viscous 2x2 system experiments"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    std::string config, out, suite, scenario;
    auto* run = app.add_subcommand("run", "run one scenario (a TOML file or builtin:<name>)");
    run->add_option("config", config, "config path or builtin:<name>")->required();
    run->add_option("-o,--output", out, "output directory (default runs/<name>)");

    auto* st = app.add_subcommand("suite", "run a named suite of built-in scenarios (default, empty)");
    st->add_option("name", suite, "suite name")->required();
    st->add_option("-o,--output", out, "output directory (default runs/suite_<name>)");

    auto* def = app.add_subcommand("defaults", "print the default configuration with comments");
    def->add_option("--scenario", scenario, "print a built-in scenario instead");

    auto* lm = app.add_subcommand("list-models", "list model families and their parameters");
    auto* ls = app.add_subcommand("list-scenarios", "list built-in scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    if (*run) return cmd_run(config, out);
    if (*st) return cmd_suite(suite, out);
    if (*def) return cmd_defaults(scenario);
    if (*lm) cmd_list_models();
    if (*ls) cmd_list_scenarios();
    return exit_ok;
}
