#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "vvlab/scenario.hpp"

using namespace vvlab;
namespace fs = std::filesystem;

namespace {

struct Cli {
    int code;
    std::string err;
};

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("vvlab_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Cli cli(const std::string& args, const fs::path& dir) {
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(VVLAB_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

const char* small = R"(
name = "small"
[model]
family = "decoupled_burgers"
[grid]
x_min = -10.0
x_max = 10.0
n = 128
[solver]
t_end = 0.5
snapshots_per_unit_time = 10.0
)";

} // namespace

TEST(Config, DefaultsParse) {
    auto c = parse_config_text("");
    EXPECT_EQ(c.model.family, "coupled_burgers");
    EXPECT_EQ(c.grid.n, 1024u);
    EXPECT_EQ(c.solver.snapshots_per_unit_time, 50.0);
    EXPECT_FALSE(c.sweep.has_value());
}

TEST(Config, RejectsUnknownKeysAtEveryLevel) {
    EXPECT_THROW(parse_config_text("colour = 1"), ConfigError);
    EXPECT_THROW(parse_config_text("[solver]\nepsilom = 1.0"), ConfigError);
    EXPECT_THROW(parse_config_text("[output]\ndir = \"x\""), ConfigError);
    try {
        parse_config_text("[data]\namplitud = 0.1");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("data.amplitud"), std::string::npos);
    }
}

TEST(Config, RejectsBadValues) {
    EXPECT_THROW(parse_config_text("[data]\namplitude = 0.0"), ConfigError);
    EXPECT_THROW(parse_config_text("[data]\nfamily = \"square\""), ConfigError);
    EXPECT_THROW(parse_config_text("[model]\nfamily = \"euler\""), ConfigError);
    EXPECT_THROW(parse_config_text("[grid]\nn = 10.5"), ConfigError);
    EXPECT_THROW(parse_config_text("[solver]\nepsilon = \"one\""), ConfigError);
    EXPECT_THROW(parse_config_text("[sweep]\nepsilons = [0.1]"), ConfigError);
    EXPECT_THROW(parse_config_text("[stability]\nn_theta = 2"), ConfigError);
    EXPECT_THROW(parse_config_text("[model]\nbox = [0.0, 1.0]"), ConfigError);
    EXPECT_THROW(parse_config_text("name = "), ConfigError);
}

TEST(Config, IntegersAreAcceptedForReals) {
    auto c = parse_config_text("[solver]\nepsilon = 2\n[model.params]\na = 1");
    EXPECT_EQ(c.solver.epsilon, 2.0);
    EXPECT_EQ(c.model.params.at("a"), 1.0);
}

TEST(Config, UnknownModelParameterIsAConfigError) {
    auto c = parse_config_text("[model]\nfamily = \"linear\"\n[model.params]\nspeed = 1.0");
    EXPECT_THROW(build_model(c), ConfigError);
}

TEST(Config, TomlEchoRoundTrips) {
    for (const auto& b : builtin_scenarios()) {
        const ScenarioConfig c = builtin_config(b.name);
        const std::string text = to_toml(c);
        EXPECT_EQ(to_toml(parse_config_text(text)), text) << b.name;
        EXPECT_EQ(to_toml(parse_config_text(to_toml(c, true))), text) << b.name;
    }
}

TEST(Config, ExampleFilesMatchTheBuiltins) {
    for (const auto& b : builtin_scenarios()) {
        const fs::path p = fs::path(VVLAB_EXAMPLES_DIR) / (b.name + ".toml");
        ASSERT_TRUE(fs::exists(p)) << p;
        EXPECT_EQ(to_toml(load_config(p)), to_toml(builtin_config(b.name))) << b.name;
    }
}

TEST(Config, ScaledTHatFollowsAmplitude) {
    auto c = parse_config_text("[data]\namplitude = 0.05\n[diagnostics]\nt_hat_mode = \"scaled\"\nc4 = 2.0");
    EXPECT_DOUBLE_EQ(c.t_hat(), 100.0);
}

TEST(Builtins, EightScenariosInTheDefaultSuite) {
    EXPECT_EQ(builtin_scenarios().size(), 8u);
    EXPECT_EQ(suite_names("default").size(), 8u);
    EXPECT_TRUE(suite_names("empty").empty());
    EXPECT_THROW(suite_names("nightly"), ConfigError);
    EXPECT_THROW(builtin_config("nope"), ConfigError);
}

TEST(Data, BumpAndRiemannStayInTheBoxAndHaveAmplitude) {
    auto c = parse_config_text("[data]\nfamily = \"riemann_smoothed\"\nratio = 0.5\nedge = 0.2");
    auto m = build_model(c);
    Grid1D g(-20, 20, 400);
    auto u = initial_data(c, m, g);
    EXPECT_NEAR(u.u1[0], m.u_star[0] + 0.1, 1e-12);
    EXPECT_NEAR(u.u1[399], m.u_star[0] - 0.1, 1e-12);
    EXPECT_NEAR(u.u2[0] - u.u2[399], 0.1, 1e-12);
}

TEST(Data, ProfileDataIsAStationaryShapeOfTheRightStrength) {
    auto c = builtin_config("traveling_profile");
    auto m = build_model(c);
    Grid1D g(c.grid.x_min, c.grid.x_max, c.grid.n);
    auto u = initial_data(c, m, g);
    EXPECT_NEAR(u.u1[0] - u.u1[g.n() - 1], 0.2, 1e-3);
}

TEST(Pipeline, DecoupledBumpPassesItsChecks) {
    auto r = run_scenario(parse_config_text(small));
    EXPECT_TRUE(r.passed());
    EXPECT_LE(r.endpoint("tv_ratio_max"), 1.0 + 1e-12);
    EXPECT_EQ(r.run.snapshots.size(), 6u);
    EXPECT_NO_THROW(find_series(r.series, "energy_v"));
}

TEST(Pipeline, ValidationFailureCarriesTheWitness) {
    auto c = parse_config_text("[model]\nfamily = \"linear\"\n[model.params]\na = 0.9\nb = 1.0");
    try {
        run_scenario(c);
        FAIL();
    } catch (const ModelValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("witness"), std::string::npos);
    }
}

TEST(Pipeline, DataOutsideTheBoxIsAConfigError) {
    EXPECT_THROW(run_scenario(parse_config_text("[data]\namplitude = 0.5")), ConfigError);
}

TEST(Suite, EmptySuiteWritesHeaderOnly) {
    auto dir = scratch("empty_suite");
    std::ostringstream err;
    EXPECT_EQ(run_suite({}, dir, err), 0);
    EXPECT_EQ(slurp(dir / "suite_summary.csv"), "scenario,status,exit_code,metric,value\n");
}

TEST(Suite, BlowUpMarksTheScenarioFailed) {
    auto dir = scratch("blowup_suite");
    auto ok = parse_config_text(small);
    auto bad = ok;
    bad.name = "unstable";
    bad.solver.cfl_diff = 4.0;
    std::ostringstream err;
    std::vector<SuiteRow> rows;
    EXPECT_EQ(run_suite({ok, bad}, dir, err, &rows), exit_blowup);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].exit_code, 0);
    EXPECT_EQ(rows[1].exit_code, exit_blowup);
    EXPECT_NE(slurp(dir / "suite_summary.csv").find("unstable,failed,3"), std::string::npos);
    EXPECT_NE(err.str().find("t="), std::string::npos);
}

TEST(Cli, MissingConfigExitsFour) {
    auto dir = scratch("missing");
    auto r = cli("run " + (dir / "nope.toml").string(), dir);
    EXPECT_EQ(r.code, exit_config);
    EXPECT_NE(r.err.find("nope.toml"), std::string::npos);
}

TEST(Cli, UnknownKeyExitsFour) {
    auto dir = scratch("unknown_key");
    write(dir / "c.toml", std::string(small) + "[grid.extra]\nk = 1\n");
    EXPECT_EQ(cli("run " + (dir / "c.toml").string(), dir).code, exit_config);
}

TEST(Cli, HyperbolicityViolationExitsTwoWithWitness) {
    auto dir = scratch("chyp");
    write(dir / "c.toml", "[model]\nfamily = \"linear\"\n[model.params]\na = 1.0\nb = 1.0\n");
    auto r = cli("run " + (dir / "c.toml").string() + " -o " + (dir / "out").string(), dir);
    EXPECT_EQ(r.code, exit_validation);
    EXPECT_NE(r.err.find("witness=("), std::string::npos) << r.err;
}

TEST(Cli, BlowUpExitsThree) {
    auto dir = scratch("blowup");
    std::string text = small;
    text.replace(text.find("t_end = 0.5"), 11, "t_end = 0.5\ncfl_diff = 4.0");
    write(dir / "c.toml", text);
    auto r = cli("run " + (dir / "c.toml").string() + " -o " + (dir / "out").string(), dir);
    EXPECT_EQ(r.code, exit_blowup);
    EXPECT_NE(r.err.find("t="), std::string::npos) << r.err;
}

TEST(Cli, GoldenPathWritesTheOutputFiles) {
    auto dir = scratch("golden");
    auto r = cli("run builtin:decoupled_bump -o " + (dir / "out").string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"fields.csv", "frames.csv", "functionals.csv", "manifest.txt"})
        EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
    const std::string manifest = slurp(dir / "out" / "manifest.txt");
    EXPECT_NE(manifest.find("name = \"decoupled_bump\""), std::string::npos);
    EXPECT_NE(manifest.find("wall_time_seconds"), std::string::npos);
}

TEST(Cli, OutputsAreByteIdenticalAcrossRuns) {
    auto dir = scratch("determinism");
    write(dir / "c.toml", std::string(small) + "[diagnostics]\nprobe = false\n");
    ASSERT_EQ(cli("run " + (dir / "c.toml").string() + " -o " + (dir / "a").string(), dir).code, 0);
    ASSERT_EQ(cli("run " + (dir / "c.toml").string() + " -o " + (dir / "b").string(), dir).code, 0);
    for (const char* f : {"fields.csv", "frames.csv", "functionals.csv", "endpoints.csv"})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(Cli, EmptySuiteExitsZero) {
    auto dir = scratch("cli_empty");
    EXPECT_EQ(cli("suite empty -o " + (dir / "s").string(), dir).code, 0);
    EXPECT_TRUE(fs::exists(dir / "s" / "suite_summary.csv"));
}

TEST(Cli, DefaultsOutputIsAValidConfig) {
    auto dir = scratch("defaults");
    ASSERT_EQ(cli("defaults", dir).code, 0);
    const std::string text = slurp(dir / "stdout.txt");
    EXPECT_NE(text.find("# delta0"), std::string::npos);
    EXPECT_EQ(to_toml(parse_config_text(text)), to_toml(ScenarioConfig{}));
}

TEST(Cli, ListingsNameEveryModelAndScenario) {
    auto dir = scratch("lists");
    ASSERT_EQ(cli("list-models", dir).code, 0);
    const std::string models = slurp(dir / "stdout.txt");
    for (const auto& f : model_families()) EXPECT_NE(models.find(f.name), std::string::npos);
    ASSERT_EQ(cli("list-scenarios", dir).code, 0);
    const std::string scenarios = slurp(dir / "stdout.txt");
    for (const auto& s : builtin_scenarios()) EXPECT_NE(scenarios.find(s.name), std::string::npos);
}
