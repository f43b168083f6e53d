#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "decomposition.hpp"
#include "functionals.hpp"
#include "model.hpp"
#include "reference.hpp"
#include "solver.hpp"

namespace vvlab {

struct StabilityRow {
    double theta, t, norm_h, norm_h1, norm_h2;
};

struct StabilityReport {
    std::vector<double> thetas;
    std::vector<StabilityRow> rows;  // theta-major, then time
    double data_distance = 0.0;      // |ubar - vbar|_1
    double measured_L = 0.0;         // max over theta, t of |h(t)| / |h(0)|
    double direct_ratio = 0.0;       // max over t of |u(t) - v(t)| / |ubar - vbar|
    // min over t of (int_0^1 |h^theta(t)| dtheta - |u(t) - v(t)|) / |ubar - vbar|
    double homotopy_slack = 0.0;
    // max over theta and adjacent snapshots of (|h1(t')| - |h1(t)|) / (t' - t) / |h1(0)|
    double h1_growth = 0.0;

    bool homotopy_bound_holds(double rel_tol) const { return homotopy_slack >= -rel_tol; }

    void write_csv(std::ostream& os) const {
        os << std::setprecision(17) << "theta,t,norm_h,norm_h1,norm_h2\n";
        for (const auto& r : rows)
            os << r.theta << ',' << r.t << ',' << r.norm_h << ',' << r.norm_h1 << ',' << r.norm_h2 << '\n';
    }
};

struct StabilityOptions {
    double delta1 = 0.05;
    DecompOptions decomp;
};

namespace detail {

struct ThetaRun {
    std::vector<double> t, norm_h, norm_h1, norm_h2;
    std::vector<FieldPair> base;
};

inline ThetaRun theta_run(const ModelSpec& m, const FieldPair& u0, const FieldPair& h0, const SolverConfig& cfg,
                          const StabilityOptions& opt) {
    SolverConfig c = cfg;
    c.companion_steps = false;
    auto [base, lin] = solve_with_tangent(m, u0, h0, c);
    const CutoffTheta theta(opt.delta1);
    DecompOptions dop = opt.decomp;
    dop.epsilon = c.epsilon;
    ThetaRun out;
    for (std::size_t k = 0; k < base.snapshots.size(); ++k) {
        const FieldPair& h = lin.snapshots[k].u;
        DecompFrame f = compute_frame(base.snapshots[k].u, m, theta, dop, base.snapshots[k].t);
        attach_linearization(f, h, m, c.epsilon);
        out.t.push_back(base.snapshots[k].t);
        out.norm_h.push_back(integral_l1(h));
        out.norm_h1.push_back(integral_l1(*f.h1));
        out.norm_h2.push_back(integral_l1(*f.h2));
        out.base.push_back(base.snapshots[k].u);
    }
    return out;
}

} // namespace detail

// Homotopy ubar^theta = theta ubar + (1 - theta) vbar on a uniform theta grid, with the first variation
// h(0) = ubar - vbar solved along each base flow.
inline StabilityReport homotopy_stability(const ModelSpec& m, const FieldPair& ubar, const FieldPair& vbar, int n_theta,
                                          const SolverConfig& cfg, const StabilityOptions& opt = {}) {
    if (n_theta < 3) throw std::invalid_argument("homotopy_stability: n_theta must be at least 3");
    ubar.u1.check(vbar.u1);
    const FieldPair h0 = ubar - vbar;
    std::vector<std::future<detail::ThetaRun>> jobs;
    StabilityReport rep;
    for (int k = 0; k < n_theta; ++k) {
        const double th = static_cast<double>(k) / (n_theta - 1);
        rep.thetas.push_back(th);
        FieldPair u0 = ubar;
        for (std::size_t i = 0; i < u0.size(); ++i) {
            u0.u1[i] = th * ubar.u1[i] + (1.0 - th) * vbar.u1[i];
            u0.u2[i] = th * ubar.u2[i] + (1.0 - th) * vbar.u2[i];
        }
        jobs.push_back(std::async(std::launch::async, [&m, u0, &h0, &cfg, &opt] {
            return detail::theta_run(m, u0, h0, cfg, opt);
        }));
    }
    std::vector<detail::ThetaRun> runs;
    for (auto& j : jobs) runs.push_back(j.get());

    rep.data_distance = integral_l1(h0);
    const double d0 = rep.data_distance;
    auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
    rep.homotopy_slack = std::numeric_limits<double>::infinity();
    const std::size_t nt = runs.front().t.size();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& r = runs[k];
        for (std::size_t j = 0; j < nt; ++j) {
            rep.rows.push_back({rep.thetas[k], r.t[j], r.norm_h[j], r.norm_h1[j], r.norm_h2[j]});
            rep.measured_L = std::max(rep.measured_L, ratio(r.norm_h[j], r.norm_h[0]));
            if (j > 0)
                rep.h1_growth = std::max(rep.h1_growth, ratio((r.norm_h1[j] - r.norm_h1[j - 1]) / (r.t[j] - r.t[j - 1]),
                                                              r.norm_h1[0]));
        }
    }
    for (std::size_t j = 0; j < nt; ++j) {
        const double direct = l1_distance(runs.back().base[j], runs.front().base[j]);
        double integral = 0.0;
        for (std::size_t k = 0; k + 1 < runs.size(); ++k)
            integral += 0.5 * (rep.thetas[k + 1] - rep.thetas[k]) * (runs[k].norm_h[j] + runs[k + 1].norm_h[j]);
        rep.direct_ratio = std::max(rep.direct_ratio, ratio(direct, d0));
        rep.homotopy_slack = std::min(rep.homotopy_slack, d0 > 0.0 ? (integral - direct) / d0 : 0.0);
    }
    return rep;
}

struct IdentityResidualRow {
    double t, l1, scaled;  // scaled = l1 / dx^2
};

struct HhatDiagnostics {
    std::vector<FunctionalSeries> series;
    std::vector<IdentityResidualRow> identity;

    double max_scaled_identity() const {
        double c = 0.0;
        for (const auto& r : identity) c = std::max(c, r.scaled);
        return c;
    }

    void write_identity_csv(std::ostream& os) const {
        os << std::setprecision(17) << "t,residual_l1,residual_over_dx2\n";
        for (const auto& r : identity) os << r.t << ',' << r.l1 << ',' << r.scaled << '\n';
    }
};

// Cumulative interaction integrals of the first variation along a frame series that carries h.
inline HhatDiagnostics hhat_diagnostics(const FrameSeries& fs, const ModelSpec& m, double delta1, double epsilon) {
    for (const auto& f : fs.frames)
        if (!f.hhat1) throw std::invalid_argument("hhat_diagnostics: frames carry no linearization");
    const auto ts = fs.times();
    auto wedge = [](const Field& a, const Field& b, int order) {
        // integral of |a^(order) b - a b^(order)|
        Field ad = d_dx(a), bd = d_dx(b);
        if (order == 2) ad = d_dx(ad), bd = d_dx(bd);
        return integral_l1(zip([](double p, double q, double r, double s) { return p * q - r * s; }, ad, b, a, bd));
    };
    struct Term {
        const char* name;
        std::function<double(const DecompFrame&)> fn;
    };
    const std::vector<Term> terms = {
        {"h1x_v1_wedge", [&](const DecompFrame& f) { return wedge(*f.h1, f.v1, 1); }},
        {"h1x_w1_wedge", [&](const DecompFrame& f) { return wedge(*f.h1, f.w1, 1); }},
        {"hhat1x_v1_wedge", [&](const DecompFrame& f) { return wedge(*f.hhat1, f.v1, 1); }},
        {"h1xx_v1_wedge", [&](const DecompFrame& f) { return wedge(*f.h1, f.v1, 2); }},
        {"h1xx_w1_wedge", [&](const DecompFrame& f) { return wedge(*f.h1, f.w1, 2); }},
    };
    HhatDiagnostics out;
    for (const auto& term : terms) out.series.push_back(cumulate(term.name, ts, detail::per_frame(fs, term.fn)));
    out.series.push_back(energy_term(fs, m, CutoffThetaHat(delta1), EnergyVariable::h));
    FunctionalSeries norm{"h1_l1", SeriesKind::instantaneous, {}};
    for (const auto& f : fs.frames) {
        norm.push(f.t, integral_l1(*f.h1));
        const double dx = f.grid().dx();
        const double r = integral_l1(h_identity_residual(f, m, epsilon));
        out.identity.push_back({f.t, r, r / (dx * dx)});
    }
    out.series.push_back(std::move(norm));
    return out;
}

inline HhatDiagnostics hhat_diagnostics(const SolveRun& base, const SolveRun& h_run, const ModelSpec& m,
                                        double delta1, DecompOptions opt = {}) {
    if (base.snapshots.size() != h_run.snapshots.size())
        throw std::invalid_argument("hhat_diagnostics: base and linearized runs are not aligned");
    for (std::size_t k = 0; k < base.snapshots.size(); ++k)
        if (base.snapshots[k].t != h_run.snapshots[k].t)
            throw std::invalid_argument("hhat_diagnostics: snapshot times differ");
    const FrameSeries fs = compute_frames(base, CutoffTheta(delta1), opt, &h_run);
    return hhat_diagnostics(fs, m, delta1, base.config.epsilon);
}

} // namespace vvlab
