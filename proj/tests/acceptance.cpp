#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vvlab/scenario.hpp"

using namespace vvlab;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), s);
    std::fflush(stdout);
}

std::string str(const std::vector<std::pair<std::string, double>>& kv) {
    std::ostringstream os;
    os.precision(4);
    for (std::size_t k = 0; k < kv.size(); ++k) os << (k ? ", " : "") << kv[k].first << '=' << kv[k].second;
    return os.str();
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

// The eight built-in scenarios, run once and shared by the suite-wide criteria.
const std::map<std::string, ScenarioResult>& suite() {
    static const std::map<std::string, ScenarioResult> results = [] {
        std::map<std::string, ScenarioResult> out;
        for (const auto& name : suite_names("default")) out.emplace(name, run_scenario(builtin_config(name)));
        return out;
    }();
    return results;
}

Outcome commutation() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    int states = 0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& fam : model_families()) {
        const ModelSpec m = make_model(fam.name);
        std::uniform_real_distribution<double> U1(m.box.u1_min, m.box.u1_max), U2(m.box.u2_min, m.box.u2_max);
        for (int k = 0; k < 1000; ++k, ++states) {
            auto [A, B] = matrices_AB(m, {U1(rng), U2(rng)});
            worst = std::max(worst, commutator_ratio(A, B));
        }
    }
    const double per_family = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() /
                              static_cast<double>(model_families().size());
    return {worst <= 1e-10 && per_family < 1.0,
            str({{"states", states}, {"max_ratio", worst}, {"seconds_per_family", per_family}})};
}

Outcome parabolic_decay() {
    const ScenarioResult& r = suite().at("smooth_bump");
    const double a = r.endpoint("uxx_decay_slope"), b = r.endpoint("uxxx_decay_slope");
    return {within(a, -0.65, -0.35) && within(b, -1.3, -0.7), str({{"uxx_slope", a}, {"uxxx_slope", b}})};
}

// Smoothed u1 jump from +delta0 to -delta0 observed after t_hat = 1/delta0^2. The edge scales like 1/delta0,
// so the data of the two runs are rescalings of each other. The coupling emits a second-family wave that
// travels right at speed about 1.1; the grid extends far enough that it stays inside until t_end.
ScenarioConfig corollary_config(double delta0) {
    ScenarioConfig c = parse_config_text(R"(
name = "corollary"
[model]
family = "coupled_burgers"
[solver]
snapshots_per_unit_time = 0.25
[data]
family = "riemann_smoothed"
ratio = 0.0
[diagnostics]
frames = false
functionals = false
t_hat_mode = "scaled"
c4 = 1.0
)");
    c.data.amplitude = delta0;
    c.data.edge = 0.1 / delta0;
    c.solver.t_end = 2.0 * c.t_hat();
    c.grid.x_min = -150.0;
    c.grid.x_max = 150.0 + 1.3 * c.solver.t_end;
    c.grid.n = static_cast<std::size_t>(std::lround((c.grid.x_max - c.grid.x_min) / 0.3));
    return c;
}

Outcome corollary_scalings() {
    const ScenarioResult big = run_scenario(corollary_config(0.1)), small = run_scenario(corollary_config(0.05));
    const double f2 = big.endpoint("uxx_sup_after_t_hat") / small.endpoint("uxx_sup_after_t_hat");
    const double f3 = big.endpoint("uxxx_sup_after_t_hat") / small.endpoint("uxxx_sup_after_t_hat");
    return {within(f2, 3.2, 4.8) && within(f3, 6.0, 12.0), str({{"uxx_factor", f2}, {"uxxx_factor", f3}})};
}

Outcome bv_bound() {
    double worst = 0.0;
    std::string at;
    for (const auto& [name, r] : suite())
        if (r.endpoint("tv_ratio_max") >= worst) worst = r.endpoint("tv_ratio_max"), at = name;
    return {worst <= 1.5, str({{"max_tv_ratio", worst}}) + " (" + at + ")"};
}

// worst value of an endpoint over the suite scenarios that computed it
std::pair<double, std::string> suite_max(const std::string& key) {
    double worst = -std::numeric_limits<double>::infinity();
    std::string at;
    for (const auto& [name, r] : suite())
        for (const auto& [k, v] : r.endpoints)
            if (k == key && v > worst) worst = v, at = name;
    return {worst, at};
}

Outcome area_criterion() {
    const auto [worst, at] = suite_max("area_slack");
    return {worst <= 0.05, str({{"max_slack_over_A0", worst}}) + " (" + at + ")"};
}

Outcome identity_and_chain() {
    double exact = 0.0;
    for (const char* name : {"coupled_burgers", "temple_breaking"}) {
        const ModelSpec m = make_model(name);
        Grid1D g(-10, 10, 256);
        const Field u1 = Field::sample(g, [](double x) { return 0.1 * std::exp(-x * x / 2) * std::cos(x); });
        exact = std::max(exact, sup_norm(identity_residual_exact(m, u1)));
    }
    double ratio = 0.0;
    std::string at;
    for (const auto& [name, r] : suite())
        for (const auto& c : r.checks)
            if (c.name == "second_derivative_chain" && c.value >= ratio) ratio = c.value, at = name;
    return {exact <= 1e-10 && ratio <= 1.10,
            str({{"exact_field_residual", exact}, {"max_chain_lhs_over_rhs", ratio}}) + " (" + at + ")"};
}

Outcome length_criterion() {
    const auto [worst, at] = suite_max("length_growth");
    return {worst <= 1e-4, str({{"max_growth_rate_over_L0", worst}}) + " (" + at + ")"};
}

Outcome transversal_interaction() {
    const ScenarioResult& r = suite().at("two_wave_collision");
    const double lhs = r.endpoint("transversal_lhs"), rhs = r.endpoint("transversal_rhs");
    return {rhs - lhs >= 0.0, str({{"lhs", lhs}, {"rhs", rhs}, {"c1", r.model.c_hyp}})};
}

double phi2_total(const std::string& family, double delta0, std::size_t n) {
    ScenarioConfig c = parse_config_text(R"(
[grid]
x_min = -12.0
x_max = 12.0
[solver]
t_end = 1.0
snapshots_per_unit_time = 10.0
[data]
family = "bump"
)");
    c.model.family = family;
    c.grid.n = n;
    c.data.amplitude = delta0;
    return run_scenario(c).endpoint("phi2_total");
}

Outcome source_integrability() {
    const double big = phi2_total("coupled_burgers", 0.1, 512), small = phi2_total("coupled_burgers", 0.05, 512);
    const double coarse = phi2_total("decoupled_burgers", 0.1, 256), fine = phi2_total("decoupled_burgers", 0.1, 512);
    const double factor = big / small, refinement = coarse / fine;
    return {within(factor, 3.2, 4.8) && refinement >= 3.0,
            str({{"coupled_factor", factor}, {"decoupled_refinement_ratio", refinement}, {"decoupled_over_coupled", fine / big}})};
}

Outcome stability() {
    const ScenarioResult& r = suite().at("stability_pair");
    ScenarioConfig c = builtin_config("stability_pair");
    c.name = "stability_temple";
    c.model.family = "temple_breaking";
    const ScenarioResult t = run_scenario(c);
    double L = 0.0, slack = 1.0, growth = 0.0;
    for (const ScenarioResult* s : {&r, &t}) {
        L = std::max(L, s->stability->measured_L);
        slack = std::min(slack, s->stability->homotopy_slack);
        growth = std::max(growth, s->stability->h1_growth);
    }
    return {L <= 3.0 && slack >= -0.02 && growth <= 1e-6,
            str({{"max_L", L}, {"min_homotopy_slack", slack}, {"max_h1_growth_rate", growth}})};
}

// The square-root term of the bound is only forced by data that are discontinuous on the scale sqrt(eps t),
// so this criterion uses the Riemann scenario with a jump inside one cell.
Outcome time_continuity() {
    ScenarioConfig c = builtin_config("coupled_riemann");
    c.data.edge = 0.01;
    c.solver.t_min = 0.01;
    c.diagnostics.frames = c.diagnostics.functionals = false;
    const ScenarioResult r = run_scenario(c);
    c.solver.epsilon /= 4.0;
    const ScenarioResult q = run_scenario(c);
    const double lb = r.probe->L_b, lb4 = q.probe->L_b;
    const bool finite = std::isfinite(r.probe->L_a) && std::isfinite(lb) && std::isfinite(q.probe->L_a) && std::isfinite(lb4);
    return {finite && within(lb4 / lb, 0.7, 1.4),
            str({{"L_a", r.probe->L_a}, {"L_b", lb}, {"L_a_eps/4", q.probe->L_a}, {"L_b_eps/4", lb4}, {"L_b_factor", lb4 / lb}})};
}

Outcome vanishing_viscosity() {
    const ScenarioResult& r = suite().at("burgers_sweep");
    const SweepResult& s = *r.sweep;
    const double eps_min = s.epsilons.back(), tv = r.endpoint("tv0");
    const double gap = s.inviscid_gaps.back().gap, bound = 10.0 * std::sqrt(eps_min) * tv;
    return {s.pairwise_strictly_decreasing() && gap <= bound,
            str({{"pairwise_0", s.pairwise_gaps[0].gap},
                 {"pairwise_1", s.pairwise_gaps[1].gap},
                 {"pairwise_2", s.pairwise_gaps[2].gap},
                 {"inviscid_gap", gap},
                 {"bound", bound},
                 {"fitted_rate", s.fitted_rate}})};
}

Outcome center_manifold() {
    const ModelSpec m = make_model("coupled_burgers");
    const ProbeReport a = manifold_probe(m, 10, 0.05, 0.1), b = manifold_probe(m, 10, 0.025, 0.1);
    const double ratio = a.fitted_C / b.fitted_C;
    const double zero = std::max(a.zero_slice_max, b.zero_slice_max);
    return {std::isfinite(a.fitted_C) && a.fitted_C > 0.0 && within(ratio, 0.5, 2.0) && zero <= 1e-10,
            str({{"C_r0.05", a.fitted_C}, {"C_r0.025", b.fitted_C}, {"ratio", ratio}, {"zero_slice_max", zero}})};
}

// L1 distance between the evolved profile and its translate at t = 0.5, over (dx^2 + tol) t
double profile_tracking(std::size_t n, double tol) {
    const ModelSpec m = make_model("coupled_burgers");
    ShootOptions opt;
    opt.tol = tol;
    const WaveProfile p = shoot_connection(m, {0.05, 0.1}, Family::one, 0.1, opt);
    const Grid1D g(-60, 60, n);
    SolverConfig cfg;
    cfg.t_end = 0.5;
    const SolveRun run = solve(m, p.on_grid(g), cfg);
    const double err = l1_distance(run.final_state(), p.on_grid(g, 0.0, cfg.t_end));
    return err / ((g.dx() * g.dx() + tol) * cfg.t_end);
}

Outcome traveling_wave() {
    const ModelSpec m = make_model("decoupled_burgers");
    const double a = 0.2, tol = 1e-12;
    const WaveProfile p = integrate_profile(m, {{0.0, 0.0}, {-0.5 * a * a, 0.0}, 0.0}, 40.0, tol);
    double closed = 0.0;
    for (const auto& s : p.samples) closed = std::max(closed, std::abs(s.u[0] - burgers_viscous_shock(a, s.xi)));
    const double c1 = profile_tracking(512, 1e-10), c2 = profile_tracking(1024, 1e-10);
    return {closed <= 1e-9 && c1 <= 5.0 && c2 <= 5.0,
            str({{"closed_form_max_error", closed}, {"tracking_C_n512", c1}, {"tracking_C_n1024", c2}})};
}

} // namespace

int main() {
    report("commutation", commutation);
    report("parabolic_decay", parabolic_decay);
    report("corollary_scalings", corollary_scalings);
    report("bv_bound", bv_bound);
    report("area_functional", area_criterion);
    report("identity", identity_and_chain);
    report("length_functional", length_criterion);
    report("transversal_interaction", transversal_interaction);
    report("source_integrability", source_integrability);
    report("stability", stability);
    report("time_continuity", time_continuity);
    report("vanishing_viscosity", vanishing_viscosity);
    report("center_manifold", center_manifold);
    report("traveling_wave", traveling_wave);
    std::printf("%d of 14 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
