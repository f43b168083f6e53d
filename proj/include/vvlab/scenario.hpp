#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/version.hpp>
#include <tomlplusplus/toml.hpp>

#include "core.hpp"
#include "decomposition.hpp"
#include "functionals.hpp"
#include "model.hpp"
#include "reference.hpp"
#include "solver.hpp"
#include "stability.hpp"
#include "travelingwave.hpp"

namespace vvlab {

inline constexpr const char* version = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum ExitCode : int { exit_ok = 0, exit_assertion = 1, exit_validation = 2, exit_blowup = 3, exit_config = 4 };

enum class DataFamily { bump, riemann_smoothed, two_wave_collision, profile };

inline const char* to_string(DataFamily d) {
    switch (d) {
    case DataFamily::bump: return "bump";
    case DataFamily::riemann_smoothed: return "riemann_smoothed";
    case DataFamily::two_wave_collision: return "two_wave_collision";
    case DataFamily::profile: return "profile";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Configuration

struct ModelSection {
    std::string family = "coupled_burgers";
    std::map<std::string, double> params;
    std::optional<Box> box;
};

struct GridSection {
    double x_min = -20.0, x_max = 20.0;
    std::size_t n = 1024;
};

struct SolverSection {
    double epsilon = 1.0;
    double cfl_adv = 0.4;
    double cfl_diff = 0.25;
    double t_end = 4.0;
    double snapshots_per_unit_time = 50.0;
    int geometric_snapshots = 0;  // extra snapshots spaced geometrically from t_min
    double t_min = 1e-3;
    Limiter limiter = Limiter::central;
};

struct DataSection {
    DataFamily family = DataFamily::bump;
    double amplitude = 0.1;   // delta0
    double ratio = 0.8;       // amplitude of the second component relative to the first
    double width = 1.0;       // half-width of the plateau
    double edge = 1.0;        // tanh edge width
    double center = 0.0;
    double separation = 8.0;  // two_wave_collision: the second-family bump starts this far to the left
    int wave_family = 1;      // profile
};

enum class THatMode { fixed, scaled };

struct DiagnosticsSection {
    bool frames = true;
    bool functionals = true;
    std::optional<double> delta1;
    SlopeBackend s_backend = SlopeBackend::gamma;
    THatMode t_hat_mode = THatMode::fixed;
    double t_hat = 1.0;  // used when t_hat_mode = fixed
    double c4 = 1.0;     // t_hat = 1/(c4 delta0)^2 when t_hat_mode = scaled
    double decay_t0 = 0.01;
    int frame_stride = 0;  // 0: choose so that at most 21 frames are written
    int field_stride = 0;
    bool probe = false;
};

struct SweepSection {
    std::vector<double> epsilons;
    std::optional<double> t_end;
};

struct StabilitySection {
    double perturbation = 0.5;  // relative to delta0
    int n_theta = 5;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::string description;
    ModelSection model;
    GridSection grid;
    SolverSection solver;
    DataSection data;
    DiagnosticsSection diagnostics;
    std::optional<SweepSection> sweep;
    std::optional<StabilitySection> stability;

    double t_hat() const {
        return diagnostics.t_hat_mode == THatMode::fixed ? diagnostics.t_hat
                                                          : 1.0 / std::pow(diagnostics.c4 * data.amplitude, 2);
    }
};

namespace detail {

class TableReader {
public:
    TableReader(const toml::table& t, std::string path) : t_(t), path_(std::move(path)) {}

    ~TableReader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (auto&& [k, v] : t_)
            if (!seen_.count(std::string(k.str())))
                throw ConfigError("unknown key '" + where(std::string(k.str())) + "'");
    }

    void number(const std::string& key, double& out) {
        if (auto* n = get(key)) {
            if (auto d = n->value_exact<double>()) out = *d;
            else if (auto i = n->value_exact<int64_t>()) out = static_cast<double>(*i);
            else throw ConfigError("'" + where(key) + "' must be a number");
        }
    }
    void number(const std::string& key, std::optional<double>& out) {
        if (get(key)) {
            double d = 0.0;
            seen_.erase(key);
            number(key, d);
            out = d;
        }
    }
    void integer(const std::string& key, int& out) {
        if (auto* n = get(key)) {
            auto i = n->value_exact<int64_t>();
            if (!i) throw ConfigError("'" + where(key) + "' must be an integer");
            out = static_cast<int>(*i);
        }
    }
    void count(const std::string& key, std::size_t& out) {
        int i = static_cast<int>(out);
        integer(key, i);
        if (i <= 0) throw ConfigError("'" + where(key) + "' must be positive");
        out = static_cast<std::size_t>(i);
    }
    void boolean(const std::string& key, bool& out) {
        if (auto* n = get(key)) {
            auto b = n->value_exact<bool>();
            if (!b) throw ConfigError("'" + where(key) + "' must be true or false");
            out = *b;
        }
    }
    void string(const std::string& key, std::string& out) {
        if (auto* n = get(key)) {
            auto s = n->value_exact<std::string>();
            if (!s) throw ConfigError("'" + where(key) + "' must be a string");
            out = *s;
        }
    }
    template <class E>
    void choice(const std::string& key, E& out, const std::vector<std::pair<std::string, E>>& options) {
        std::string s;
        if (!get(key)) return;
        seen_.erase(key);
        string(key, s);
        for (const auto& [name, val] : options)
            if (name == s) {
                out = val;
                return;
            }
        std::string all;
        for (const auto& o : options) all += (all.empty() ? "" : ", ") + o.first;
        throw ConfigError("'" + where(key) + "' must be one of: " + all);
    }
    std::vector<double> numbers(const std::string& key) {
        std::vector<double> out;
        if (auto* n = get(key)) {
            auto* arr = n->as_array();
            if (!arr) throw ConfigError("'" + where(key) + "' must be an array of numbers");
            for (auto&& e : *arr) {
                if (auto d = e.value_exact<double>()) out.push_back(*d);
                else if (auto i = e.value_exact<int64_t>()) out.push_back(static_cast<double>(*i));
                else throw ConfigError("'" + where(key) + "' must be an array of numbers");
            }
        }
        return out;
    }
    const toml::table* table(const std::string& key) {
        if (auto* n = get(key)) {
            if (auto* t = n->as_table()) return t;
            throw ConfigError("'" + where(key) + "' must be a table");
        }
        return nullptr;
    }
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const toml::node* get(const std::string& key) {
        seen_.insert(key);
        return t_.get(key);
    }
    const toml::table& t_;
    std::string path_;
    std::set<std::string> seen_;
};

} // namespace detail

inline ScenarioConfig parse_config(const toml::table& root) {
    ScenarioConfig c;
    detail::TableReader r(root, "");
    r.string("name", c.name);
    r.string("description", c.description);
    if (auto* t = r.table("model")) {
        detail::TableReader m(*t, "model");
        m.string("family", c.model.family);
        if (auto* p = m.table("params")) {
            for (auto&& [k, v] : *p) {
                const std::string key(k.str());
                if (auto d = v.value_exact<double>()) c.model.params[key] = *d;
                else if (auto i = v.value_exact<int64_t>()) c.model.params[key] = static_cast<double>(*i);
                else throw ConfigError("'model.params." + key + "' must be a number");
            }
        }
        auto box = m.numbers("box");
        if (!box.empty()) {
            if (box.size() != 4) throw ConfigError("'model.box' must be [u1_min, u1_max, u2_min, u2_max]");
            c.model.box = Box{box[0], box[1], box[2], box[3]};
        }
    }
    if (auto* t = r.table("grid")) {
        detail::TableReader g(*t, "grid");
        g.number("x_min", c.grid.x_min);
        g.number("x_max", c.grid.x_max);
        g.count("n", c.grid.n);
    }
    if (auto* t = r.table("solver")) {
        detail::TableReader s(*t, "solver");
        s.number("epsilon", c.solver.epsilon);
        s.number("cfl_adv", c.solver.cfl_adv);
        s.number("cfl_diff", c.solver.cfl_diff);
        s.number("t_end", c.solver.t_end);
        s.number("snapshots_per_unit_time", c.solver.snapshots_per_unit_time);
        s.integer("geometric_snapshots", c.solver.geometric_snapshots);
        s.number("t_min", c.solver.t_min);
        s.choice<Limiter>("limiter", c.solver.limiter,
                          {{"central", Limiter::central}, {"rusanov_blend", Limiter::rusanov_blend}});
    }
    if (auto* t = r.table("data")) {
        detail::TableReader d(*t, "data");
        d.choice<DataFamily>("family", c.data.family,
                             {{"bump", DataFamily::bump},
                              {"riemann_smoothed", DataFamily::riemann_smoothed},
                              {"two_wave_collision", DataFamily::two_wave_collision},
                              {"profile", DataFamily::profile}});
        d.number("amplitude", c.data.amplitude);
        d.number("ratio", c.data.ratio);
        d.number("width", c.data.width);
        d.number("edge", c.data.edge);
        d.number("center", c.data.center);
        d.number("separation", c.data.separation);
        d.integer("wave_family", c.data.wave_family);
    }
    if (auto* t = r.table("diagnostics")) {
        detail::TableReader d(*t, "diagnostics");
        d.boolean("frames", c.diagnostics.frames);
        d.boolean("functionals", c.diagnostics.functionals);
        d.number("delta1", c.diagnostics.delta1);
        d.choice<SlopeBackend>("s_backend", c.diagnostics.s_backend,
                               {{"gamma", SlopeBackend::gamma}, {"ode", SlopeBackend::ode}});
        d.choice<THatMode>("t_hat_mode", c.diagnostics.t_hat_mode,
                           {{"fixed", THatMode::fixed}, {"scaled", THatMode::scaled}});
        d.number("t_hat", c.diagnostics.t_hat);
        d.number("c4", c.diagnostics.c4);
        d.number("decay_t0", c.diagnostics.decay_t0);
        d.integer("frame_stride", c.diagnostics.frame_stride);
        d.integer("field_stride", c.diagnostics.field_stride);
        d.boolean("probe", c.diagnostics.probe);
    }
    if (auto* t = r.table("sweep")) {
        detail::TableReader s(*t, "sweep");
        SweepSection sw;
        sw.epsilons = s.numbers("epsilons");
        s.number("t_end", sw.t_end);
        c.sweep = sw;
    }
    if (auto* t = r.table("stability")) {
        detail::TableReader s(*t, "stability");
        StabilitySection st;
        s.number("perturbation", st.perturbation);
        s.integer("n_theta", st.n_theta);
        c.stability = st;
    }

    // value checks
    if (!find_family(c.model.family)) throw ConfigError("model.family: unknown model family '" + c.model.family + "'");
    if (!(c.data.amplitude > 0.0)) throw ConfigError("data.amplitude (delta0) must be positive");
    if (!(c.grid.x_max > c.grid.x_min)) throw ConfigError("grid.x_max must exceed grid.x_min");
    if (c.grid.n < 8) throw ConfigError("grid.n must be at least 8");
    if (!(c.solver.epsilon > 0.0)) throw ConfigError("solver.epsilon must be positive");
    if (!(c.solver.t_end > 0.0)) throw ConfigError("solver.t_end must be positive");
    if (!(c.solver.cfl_adv > 0.0) || !(c.solver.cfl_diff > 0.0)) throw ConfigError("solver CFL numbers must be positive");
    if (!(c.solver.snapshots_per_unit_time > 0.0)) throw ConfigError("solver.snapshots_per_unit_time must be positive");
    if (c.solver.geometric_snapshots < 0) throw ConfigError("solver.geometric_snapshots must be non-negative");
    if (c.solver.geometric_snapshots > 0 && !(c.solver.t_min > 0.0 && c.solver.t_min < c.solver.t_end))
        throw ConfigError("solver.t_min must lie in (0, t_end)");
    if (!(c.data.edge > 0.0) || !(c.data.width >= 0.0)) throw ConfigError("data.edge must be positive, data.width non-negative");
    if (c.data.wave_family != 1 && c.data.wave_family != 2) throw ConfigError("data.wave_family must be 1 or 2");
    if (c.diagnostics.delta1 && !(*c.diagnostics.delta1 > 0.0)) throw ConfigError("diagnostics.delta1 must be positive");
    if (!(c.diagnostics.t_hat > 0.0) || !(c.diagnostics.c4 > 0.0)) throw ConfigError("diagnostics.t_hat and c4 must be positive");
    if (c.diagnostics.frame_stride < 0 || c.diagnostics.field_stride < 0) throw ConfigError("strides must be non-negative");
    if (c.sweep && c.sweep->epsilons.size() < 2) throw ConfigError("sweep.epsilons needs at least two values");
    if (c.stability && c.stability->n_theta < 3) throw ConfigError("stability.n_theta must be at least 3");
    if (c.stability && !(c.stability->perturbation > 0.0)) throw ConfigError("stability.perturbation must be positive");
    return c;
}

inline ScenarioConfig parse_config_text(std::string_view text, std::string_view source = "config") {
    try {
        return parse_config(toml::parse(text, source));
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " (" << e.source().begin << ")";
        throw ConfigError(os.str());
    }
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

namespace detail {

inline std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

} // namespace detail

// TOML text of a configuration; parse_config_text(to_toml(c)) reproduces c.
inline std::string to_toml(const ScenarioConfig& c, bool comments = false) {
    using detail::fmt;
    std::ostringstream os;
    auto note = [&](const char* text) { return comments ? std::string("  # ") + text : std::string(); };
    os << "name = \"" << c.name << "\"\n";
    if (!c.description.empty()) os << "description = \"" << c.description << "\"\n";
    os << "\n[model]\nfamily = \"" << c.model.family << "\"" << note("see list-models") << '\n';
    if (c.model.box)
        os << "box = [" << fmt(c.model.box->u1_min) << ", " << fmt(c.model.box->u1_max) << ", " << fmt(c.model.box->u2_min)
           << ", " << fmt(c.model.box->u2_max) << "]\n";
    if (!c.model.params.empty()) {
        os << "[model.params]\n";
        for (const auto& [k, v] : c.model.params) os << k << " = " << fmt(v) << '\n';
    }
    os << "\n[grid]\nx_min = " << fmt(c.grid.x_min) << "\nx_max = " << fmt(c.grid.x_max) << "\nn = " << c.grid.n
       << note("cells") << '\n';
    os << "\n[solver]\nepsilon = " << fmt(c.solver.epsilon) << note("viscosity scale") << "\ncfl_adv = "
       << fmt(c.solver.cfl_adv) << "\ncfl_diff = " << fmt(c.solver.cfl_diff) << "\nt_end = " << fmt(c.solver.t_end)
       << "\nsnapshots_per_unit_time = " << fmt(c.solver.snapshots_per_unit_time)
       << "\ngeometric_snapshots = " << c.solver.geometric_snapshots
       << note("extra snapshots spaced geometrically from t_min") << "\nt_min = " << fmt(c.solver.t_min)
       << "\nlimiter = \"" << to_string(c.solver.limiter) << "\"" << note("central | rusanov_blend") << '\n';
    os << "\n[data]\nfamily = \"" << to_string(c.data.family) << "\""
       << note("bump | riemann_smoothed | two_wave_collision | profile") << "\namplitude = " << fmt(c.data.amplitude)
       << note("delta0") << "\nratio = " << fmt(c.data.ratio) << note("second component relative to the first")
       << "\nwidth = " << fmt(c.data.width) << note("plateau half-width") << "\nedge = " << fmt(c.data.edge)
       << note("tanh edge width") << "\ncenter = " << fmt(c.data.center) << "\nseparation = " << fmt(c.data.separation)
       << note("two_wave_collision: offset of the second-family bump") << "\nwave_family = " << c.data.wave_family
       << note("profile: 1 or 2") << '\n';
    os << "\n[diagnostics]\nframes = " << (c.diagnostics.frames ? "true" : "false")
       << "\nfunctionals = " << (c.diagnostics.functionals ? "true" : "false");
    if (c.diagnostics.delta1) os << "\ndelta1 = " << fmt(*c.diagnostics.delta1);
    else if (comments) os << "\n# delta1 = <default from the model and delta0>";
    os << "\ns_backend = \"" << to_string(c.diagnostics.s_backend) << "\"" << note("gamma | ode")
       << "\nt_hat_mode = \"" << (c.diagnostics.t_hat_mode == THatMode::fixed ? "fixed" : "scaled") << "\""
       << note("fixed: t_hat; scaled: 1/(c4 delta0)^2") << "\nt_hat = " << fmt(c.diagnostics.t_hat)
       << "\nc4 = " << fmt(c.diagnostics.c4) << "\ndecay_t0 = " << fmt(c.diagnostics.decay_t0)
       << note("start of the decay-slope window") << "\nframe_stride = " << c.diagnostics.frame_stride
       << note("0: at most 21 frames in frames.csv") << "\nfield_stride = " << c.diagnostics.field_stride
       << "\nprobe = " << (c.diagnostics.probe ? "true" : "false") << note("time-continuity probe") << '\n';
    if (c.sweep) {
        os << "\n[sweep]\nepsilons = [";
        for (std::size_t k = 0; k < c.sweep->epsilons.size(); ++k) os << (k ? ", " : "") << fmt(c.sweep->epsilons[k]);
        os << "]\n";
        if (c.sweep->t_end) os << "t_end = " << fmt(*c.sweep->t_end) << '\n';
    } else if (comments) {
        os << "\n# [sweep]\n# epsilons = [0.4, 0.2, 0.1, 0.05]\n# t_end = <solver.t_end>\n";
    }
    if (c.stability) {
        os << "\n[stability]\nperturbation = " << fmt(c.stability->perturbation) << note("relative to delta0")
           << "\nn_theta = " << c.stability->n_theta << '\n';
    } else if (comments) {
        os << "\n# [stability]\n# perturbation = 0.5\n# n_theta = 5\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Built-in scenarios

struct BuiltinScenario {
    std::string name, description, toml;
};

inline const std::vector<BuiltinScenario>& builtin_scenarios() {
    static const std::vector<BuiltinScenario> all = {
        {"decoupled_bump", "smooth bump on the decoupled Burgers pair", R"(
name = "decoupled_bump"
[model]
family = "decoupled_burgers"
[solver]
t_end = 4.0
[data]
family = "bump"
amplitude = 0.1
)"},
        {"smooth_bump", "sharp-edged plateau on the coupled family; parabolic decay window [0.01, t_hat]", R"(
name = "smooth_bump"
[model]
family = "coupled_burgers"
[grid]
x_min = -5.0
x_max = 5.0
n = 1000
[solver]
t_end = 1.0
snapshots_per_unit_time = 20.0
geometric_snapshots = 30
t_min = 0.005
[data]
family = "bump"
amplitude = 0.1
width = 2.0
edge = 0.01
[diagnostics]
functionals = false
)"},
        {"coupled_riemann", "smoothed Riemann data on the coupled family with the time-continuity probe", R"(
name = "coupled_riemann"
[model]
family = "coupled_burgers"
[solver]
t_end = 4.0
geometric_snapshots = 20
t_min = 0.001
[data]
family = "riemann_smoothed"
amplitude = 0.1
ratio = 0.5
edge = 0.2
[diagnostics]
probe = true
)"},
        {"two_wave_collision", "a second-family bump overtaking a first-family bump", R"(
name = "two_wave_collision"
[model]
family = "coupled_burgers"
[grid]
x_min = -20.0
x_max = 20.0
n = 1024
[solver]
t_end = 12.0
snapshots_per_unit_time = 25.0
[data]
family = "two_wave_collision"
amplitude = 0.1
ratio = 1.0
width = 0.5
edge = 1.0
center = 2.0
separation = 8.0
)"},
        {"temple_bump", "bump on the family with nonconstant alpha2 and coupling in alpha2", R"(
name = "temple_bump"
[model]
family = "temple_breaking"
[solver]
t_end = 4.0
[data]
family = "bump"
amplitude = 0.1
ratio = 0.6
)"},
        {"traveling_profile", "viscous first-family shock profile placed on the grid", R"(
name = "traveling_profile"
[model]
family = "coupled_burgers"
[grid]
x_min = -120.0
x_max = 120.0
n = 1024
[solver]
t_end = 8.0
snapshots_per_unit_time = 10.0
[data]
family = "profile"
amplitude = 0.2
wave_family = 1
)"},
        {"burgers_sweep", "vanishing-viscosity sweep on smoothed Burgers shock data", R"(
name = "burgers_sweep"
[model]
family = "decoupled_burgers"
[grid]
x_min = -10.0
x_max = 10.0
n = 1600
[solver]
epsilon = 0.05
t_end = 2.0
snapshots_per_unit_time = 10.0
[data]
family = "riemann_smoothed"
amplitude = 0.25
ratio = 0.0
edge = 0.02
[diagnostics]
frames = false
functionals = false
[sweep]
epsilons = [0.4, 0.2, 0.1, 0.05]
)"},
        {"stability_pair", "homotopy stability between a bump and a perturbed bump", R"(
name = "stability_pair"
[model]
family = "coupled_burgers"
[grid]
n = 512
[solver]
t_end = 4.0
snapshots_per_unit_time = 10.0
[data]
family = "bump"
amplitude = 0.05
center = 1.0
[stability]
perturbation = 0.5
n_theta = 5
)"},
    };
    return all;
}

inline ScenarioConfig builtin_config(const std::string& name) {
    for (const auto& b : builtin_scenarios())
        if (b.name == name) {
            ScenarioConfig c = parse_config_text(b.toml, "builtin:" + name);
            c.description = b.description;
            return c;
        }
    throw ConfigError("unknown built-in scenario '" + name + "'");
}

inline std::vector<std::string> suite_names(const std::string& suite) {
    if (suite == "empty") return {};
    if (suite == "default") {
        std::vector<std::string> out;
        for (const auto& b : builtin_scenarios()) out.push_back(b.name);
        return out;
    }
    throw ConfigError("unknown suite '" + suite + "' (known: default, empty)");
}

// ---------------------------------------------------------------------------
// Pipeline

inline ModelSpec build_model(const ScenarioConfig& c) {
    ModelSpec m;
    try {
        m = make_model(c.model.family, c.model.params);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    if (c.model.box) m.box = *c.model.box;
    return m;
}

inline double plateau(double x, double half_width, double edge) {
    return 0.5 * (std::tanh((x + half_width) / edge) - std::tanh((x - half_width) / edge));
}

inline FieldPair initial_data(const ScenarioConfig& c, const ModelSpec& m, const Grid1D& g) {
    const DataSection& d = c.data;
    const State base = m.u_star;
    const double a = d.amplitude;
    switch (d.family) {
    case DataFamily::bump:
        return {Field::sample(g, [&](double x) { return base[0] + a * plateau(x - d.center, d.width, d.edge); }),
                Field::sample(g, [&](double x) { return base[1] + d.ratio * a * plateau(x - d.center, d.width, d.edge); })};
    case DataFamily::riemann_smoothed:
        // compressive jump of size 2 delta0 in u1 (and 2 ratio delta0 in u2) centred on u_star
        return {Field::sample(g, [&](double x) { return base[0] - a * std::tanh((x - d.center) / d.edge); }),
                Field::sample(g, [&](double x) { return base[1] - d.ratio * a * std::tanh((x - d.center) / d.edge); })};
    case DataFamily::two_wave_collision: {
        // first-family bump along (1, gamma(u_star)); second-family bump in u2 only, to its left
        const double gam = m.gamma(base);
        const double left = d.center - d.separation;
        return {Field::sample(g, [&](double x) { return base[0] + a * plateau(x - d.center, d.width, d.edge); }),
                Field::sample(g, [&](double x) {
                    return base[1] + gam * a * plateau(x - d.center, d.width, d.edge) +
                           d.ratio * a * plateau(x - left, d.width, d.edge);
                })};
    }
    case DataFamily::profile: {
        const Family fam = d.wave_family == 1 ? Family::one : Family::two;
        State um = base;
        um[d.wave_family - 1] += 0.5 * a;
        ShootOptions opt;
        opt.tol = 1e-12;
        const WaveProfile p = shoot_connection(m, um, fam, a, opt);
        return p.on_grid(g, d.center, 0.0);
    }
    }
    throw ConfigError("unknown data family");
}

// Second datum of the stability pair: the first plus a perturbation of size perturbation * delta0.
inline FieldPair perturbed_data(const ScenarioConfig& c, const FieldPair& u) {
    const double p = c.stability ? c.stability->perturbation : 0.5;
    const double a = c.data.amplitude;
    FieldPair v = u;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = u.grid().x(i) - c.data.center;
        v.u1[i] += p * a * std::exp(-(x + 2) * (x + 2)) * std::sin(2 * x);
        v.u2[i] -= 0.8 * p * a * std::exp(-(x - 2) * (x - 2) / 2);
    }
    return v;
}

inline std::vector<double> snapshot_times(const SolverSection& s) {
    std::vector<double> ts;
    const int n = std::max(1, static_cast<int>(std::lround(s.snapshots_per_unit_time * s.t_end)));
    for (int k = 1; k < n; ++k) ts.push_back(s.t_end * k / n);
    for (int k = 0; k < s.geometric_snapshots; ++k)
        ts.push_back(s.t_min * std::pow(s.t_end / s.t_min, static_cast<double>(k) / s.geometric_snapshots));
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

inline SolverConfig solver_config(const ScenarioConfig& c, bool companions) {
    SolverConfig s;
    s.epsilon = c.solver.epsilon;
    s.cfl_adv = c.solver.cfl_adv;
    s.cfl_diff = c.solver.cfl_diff;
    s.t_end = c.solver.t_end;
    s.limiter = c.solver.limiter;
    s.snapshot_times = snapshot_times(c.solver);
    s.companion_steps = companions;
    return s;
}

struct Check {
    std::string name;
    double value, limit;
    bool upper;  // value <= limit when true, value >= limit otherwise
    bool passed() const { return upper ? value <= limit : value >= limit; }
};

struct ScenarioResult {
    ScenarioConfig config;
    ModelSpec model;
    ValidationReport validation;
    double delta1 = 0.0, t_hat = 0.0;
    SolveRun run;
    std::optional<FrameSeries> frames;
    std::vector<FunctionalSeries> series;
    std::optional<SweepResult> sweep;
    std::optional<ContinuityFit> probe;
    std::optional<StabilityReport> stability;
    std::optional<HhatDiagnostics> hhat;
    std::vector<std::pair<std::string, double>> endpoints;
    std::vector<Check> checks;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed(); });
    }
    double endpoint(const std::string& key) const {
        for (const auto& [k, v] : endpoints)
            if (k == key) return v;
        throw std::out_of_range("no endpoint '" + key + "'");
    }
};

// log-log slope of an instantaneous series over t0 <= t <= t1
inline double decay_slope(const FunctionalSeries& s, double t0, double t1) {
    std::vector<double> ts, vs;
    for (const auto& p : s.samples)
        if (p.t >= t0 * (1 - 1e-12) && p.t <= t1 * (1 + 1e-12)) ts.push_back(p.t), vs.push_back(p.value);
    return loglog_slope(ts, vs);
}

inline ScenarioResult run_scenario(const ScenarioConfig& c) {
    ScenarioResult r;
    r.config = c;
    r.model = build_model(c);
    r.validation = validate(r.model);
    if (!r.validation.passed) throw ModelValidationError(r.validation.summary());
    const ModelSpec& m = r.model;

    const Grid1D g(c.grid.x_min, c.grid.x_max, c.grid.n);
    FieldPair u0;
    try {
        u0 = initial_data(c, m, g);
    } catch (const std::runtime_error& e) {
        throw ConfigError(std::string("initial data: ") + e.what());
    }
    for (std::size_t i = 0; i < u0.size(); ++i)
        if (!m.box.contains({u0.u1[i], u0.u2[i]}))
            throw ConfigError("initial data leaves the validation box at x=" + detail::fmt(g.x(i)));

    r.delta1 = c.diagnostics.delta1 ? *c.diagnostics.delta1 : default_delta1(m, c.data.amplitude);
    r.t_hat = c.t_hat();
    const bool want_frames = c.diagnostics.frames || c.diagnostics.functionals;
    r.run = solve(m, u0, solver_config(c, c.diagnostics.functionals));

    auto add = [&](const std::string& k, double v) { r.endpoints.emplace_back(k, v); };
    add("delta0", c.data.amplitude);
    add("delta1", r.delta1);
    add("t_hat", r.t_hat);
    add("kappa_first", r.validation.kappa_first);
    add("kappa_second", r.validation.kappa_second);
    add("min_gap", r.validation.min_gap);

    // BV bound
    const double tv0 = total_variation(u0);
    double tv_ratio = 0.0;
    for (const auto& s : r.run.snapshots) tv_ratio = std::max(tv_ratio, tv0 > 0.0 ? total_variation(s.u) / tv0 : 0.0);
    add("tv0", tv0);
    add("tv_ratio_max", tv_ratio);
    r.checks.push_back({"bv_bound", tv_ratio, 1.5, true});

    // derivative norms for every snapshot
    FunctionalSeries uxx{"uxx_l1", SeriesKind::instantaneous, {}}, uxxx{"uxxx_l1", SeriesKind::instantaneous, {}};
    for (const auto& s : r.run.snapshots) {
        uxx.push(s.t, integral_l1(d2_dx2(s.u.u1)) + integral_l1(d2_dx2(s.u.u2)));
        uxxx.push(s.t, integral_l1(d_dx(d2_dx2(s.u.u1))) + integral_l1(d_dx(d2_dx2(s.u.u2))));
    }
    add("uxx_decay_slope", decay_slope(uxx, c.diagnostics.decay_t0, r.t_hat));
    add("uxxx_decay_slope", decay_slope(uxxx, c.diagnostics.decay_t0, r.t_hat));
    add("uxx_sup_after_t_hat", uxx.sup_from(r.t_hat));
    add("uxxx_sup_after_t_hat", uxxx.sup_from(r.t_hat));

    if (want_frames) {
        DecompOptions opt;
        opt.delta1 = r.delta1;
        opt.backend = c.diagnostics.s_backend;
        try {
            r.frames = compute_frames(r.run, CutoffTheta(r.delta1), opt);
        } catch (const NeighbourhoodError& e) {
            throw ConfigError(std::string("diagnostics: ") + e.what());
        }
    }
    if (c.diagnostics.functionals) {
        const FrameSeries& fs = *r.frames;
        r.series = basic_series(fs, m, c.solver.epsilon);
        for (auto& s : interaction_integrals(fs, m, r.delta1)) r.series.push_back(std::move(s));
        r.series.push_back(energy_term(fs, m, CutoffThetaHat(r.delta1), EnergyVariable::v));

        const double area = area_slack(find_series(r.series, "area_v1_w1"), find_series(r.series, "area_dissipation"));
        const double length = length_growth_rate(find_series(r.series, "length"));
        const ChainCheck chain = estim2_chain(fs, m, r.delta1, c.solver.epsilon);
        const TransversalCheck tr = transversal_bound(fs, m);
        add("area_slack", area);
        add("length_growth", length);
        add("chain_lhs", chain.lhs);
        add("chain_rhs", chain.rhs);
        add("transversal_lhs", tr.lhs);
        add("transversal_rhs", tr.rhs);
        add("phi2_total", find_series(r.series, "phi2").back());
        double s_sup = 0.0;
        for (const auto& f : fs.frames) s_sup = std::max(s_sup, sup_norm(f.s));
        add("kappa1_sup_s", s_sup);
        r.checks.push_back({"area_functional", area, 0.05, true});
        r.checks.push_back({"length_functional", length, 1e-4, true});
        r.checks.push_back({"second_derivative_chain", chain.lhs / chain.rhs, 1.10, true});
        if (c.data.family == DataFamily::two_wave_collision)
            r.checks.push_back({"transversal_interaction", tr.slack(), 0.0, false});
    }
    if (c.diagnostics.probe) {
        r.probe = time_continuity_probe(r.run, c.solver.epsilon);
        add("probe_L_a", r.probe->L_a);
        add("probe_L_b", r.probe->L_b);
        r.checks.push_back({"probe_bound", r.probe->worst_violation, 1e-10 * std::max(1.0, tv0), true});
    }
    if (c.sweep) {
        r.sweep = epsilon_sweep(m, u0, c.sweep->epsilons, c.sweep->t_end.value_or(c.solver.t_end),
                                solver_config(c, false));
        add("sweep_fitted_rate", r.sweep->fitted_rate);
        add("sweep_inviscid_gap_min_eps", r.sweep->inviscid_gaps.back().gap);
        r.checks.push_back({"sweep_pairwise_decreasing", r.sweep->pairwise_strictly_decreasing() ? 1.0 : 0.0, 1.0, false});
    }
    if (c.stability) {
        const FieldPair v0 = perturbed_data(c, u0);
        StabilityOptions sopt;
        sopt.delta1 = r.delta1;
        sopt.decomp.backend = c.diagnostics.s_backend;
        r.stability = homotopy_stability(m, u0, v0, c.stability->n_theta, solver_config(c, false), sopt);
        add("stability_L", r.stability->measured_L);
        add("stability_direct_ratio", r.stability->direct_ratio);
        add("stability_homotopy_slack", r.stability->homotopy_slack);
        add("stability_h1_growth", r.stability->h1_growth);
        r.checks.push_back({"stability_L", r.stability->measured_L, 3.0, true});
        r.checks.push_back({"stability_homotopy_bound", r.stability->homotopy_slack, -0.02, false});
        r.checks.push_back({"stability_h1_nonincreasing", r.stability->h1_growth, 1e-6, true});

        auto [base, lin] = solve_with_tangent(m, u0, u0 - v0, solver_config(c, true));
        DecompOptions dop;
        dop.delta1 = r.delta1;
        dop.backend = c.diagnostics.s_backend;
        r.hhat = hhat_diagnostics(base, lin, m, r.delta1, dop);
        add("identity_residual_over_dx2", r.hhat->max_scaled_identity());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::vector<std::size_t> strided(std::size_t count, int stride) {
    std::size_t k = stride > 0 ? static_cast<std::size_t>(stride) : std::max<std::size_t>(1, (count + 19) / 20);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < count; i += k) idx.push_back(i);
    if (count > 0 && idx.back() != count - 1) idx.push_back(count - 1);
    return idx;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    os << std::setprecision(17);
    return os;
}

} // namespace detail

inline void write_outputs(const ScenarioResult& r, const std::filesystem::path& dir, double wall_seconds) {
    std::filesystem::create_directories(dir);
    {
        auto os = detail::open_out(dir / "fields.csv");
        os << "t,x,u1,u2\n";
        for (std::size_t k : detail::strided(r.run.snapshots.size(), r.config.diagnostics.field_stride)) {
            const auto& s = r.run.snapshots[k];
            for (std::size_t i = 0; i < s.u.size(); ++i)
                os << s.t << ',' << s.u.grid().x(i) << ',' << s.u.u1[i] << ',' << s.u.u2[i] << '\n';
        }
    }
    if (r.frames) {
        auto os = detail::open_out(dir / "frames.csv");
        bool header = true;
        for (std::size_t k : detail::strided(r.frames->frames.size(), r.config.diagnostics.frame_stride)) {
            r.frames->frames[k].write_csv(os, header);
            header = false;
        }
    }
    {
        auto os = detail::open_out(dir / "functionals.csv");
        std::vector<FunctionalSeries> all = r.series;
        if (r.hhat)
            for (const auto& s : r.hhat->series) all.push_back(s);
        write_series_csv(os, all);
    }
    if (r.sweep) {
        auto os = detail::open_out(dir / "sweep.csv");
        r.sweep->write_csv(os);
    }
    if (r.probe) {
        auto os = detail::open_out(dir / "probe.csv");
        os << "L_a,L_b,pairs,worst_violation\n"
           << r.probe->L_a << ',' << r.probe->L_b << ',' << r.probe->pairs << ',' << r.probe->worst_violation << '\n';
    }
    if (r.stability) {
        auto os = detail::open_out(dir / "stability.csv");
        r.stability->write_csv(os);
    }
    if (r.hhat) {
        auto os = detail::open_out(dir / "identity_residual.csv");
        r.hhat->write_identity_csv(os);
    }
    {
        auto os = detail::open_out(dir / "endpoints.csv");
        os << "name,value\n";
        for (const auto& [k, v] : r.endpoints) os << k << ',' << v << '\n';
        os << "\ncheck,value,limit,passed\n";
        for (const auto& c : r.checks) os << c.name << ',' << c.value << ',' << c.limit << ',' << (c.passed() ? 1 : 0) << '\n';
    }
    {
        auto os = detail::open_out(dir / "manifest.txt");
        os << "vvlab " << version << "\ncompiler " << __VERSION__ << "\nboost " << BOOST_LIB_VERSION << "\ntoml++ "
           << TOML_LIB_MAJOR << '.' << TOML_LIB_MINOR << '.' << TOML_LIB_PATCH << '\n';
        os << std::setprecision(6) << "wall_time_seconds " << wall_seconds << '\n';
        os << "snapshots " << r.run.snapshots.size() << "\nsteps " << r.run.step_log.size() << '\n';
        os << r.validation.summary() << "\n\n# configuration\n" << to_toml(r.config);
    }
}

// Runs one scenario and writes its outputs; returns the exit code and prints diagnostics to err.
inline int run_and_write(const ScenarioConfig& c, const std::filesystem::path& dir, std::ostream& err,
                         ScenarioResult* out = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    try {
        ScenarioResult r = run_scenario(c);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_outputs(r, dir, wall);
        int code = exit_ok;
        for (const auto& ch : r.checks)
            if (!ch.passed()) {
                err << c.name << ": check " << ch.name << " failed: " << ch.value << (ch.upper ? " > " : " < ")
                    << ch.limit << '\n';
                code = exit_assertion;
            }
        if (out) *out = std::move(r);
        return code;
    } catch (const ConfigError& e) {
        err << c.name << ": config error: " << e.what() << '\n';
        return exit_config;
    } catch (const ModelValidationError& e) {
        err << c.name << ": " << e.what() << '\n';
        return exit_validation;
    } catch (const BlowUp& e) {
        err << c.name << ": " << e.what() << '\n';
        return exit_blowup;
    }
}

struct SuiteRow {
    std::string scenario;
    int exit_code;
    std::vector<std::pair<std::string, double>> endpoints;
    std::vector<Check> checks;
};

inline void write_suite_summary(std::ostream& os, const std::vector<SuiteRow>& rows) {
    os << std::setprecision(17) << "scenario,status,exit_code,metric,value\n";
    for (const auto& row : rows) {
        const char* status = row.exit_code == exit_ok ? "passed" : "failed";
        os << row.scenario << ',' << status << ',' << row.exit_code << ",,\n";
        for (const auto& [k, v] : row.endpoints) os << row.scenario << ',' << status << ',' << row.exit_code << ',' << k << ',' << v << '\n';
        for (const auto& c : row.checks)
            os << row.scenario << ',' << status << ',' << row.exit_code << ",check:" << c.name << ',' << c.value << '\n';
    }
}

// Runs the scenarios in order; the exit code is the largest scenario exit code.
inline int run_suite(const std::vector<ScenarioConfig>& scenarios, const std::filesystem::path& dir, std::ostream& err,
                     std::vector<SuiteRow>* rows_out = nullptr) {
    std::filesystem::create_directories(dir);
    std::vector<SuiteRow> rows;
    int code = exit_ok;
    for (const auto& c : scenarios) {
        ScenarioResult r;
        const int rc = run_and_write(c, dir / c.name, err, &r);
        rows.push_back({c.name, rc, rc == exit_ok || rc == exit_assertion ? r.endpoints : decltype(r.endpoints){},
                        rc == exit_ok || rc == exit_assertion ? r.checks : std::vector<Check>{}});
        code = std::max(code, rc);
    }
    auto os = detail::open_out(dir / "suite_summary.csv");
    write_suite_summary(os, rows);
    if (rows_out) *rows_out = std::move(rows);
    return code;
}

} // namespace vvlab
