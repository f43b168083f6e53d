#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "model.hpp"

namespace vvlab {

enum class Limiter { central, rusanov_blend };

inline const char* to_string(Limiter l) { return l == Limiter::central ? "central" : "rusanov_blend"; }

struct SolverConfig {
    double epsilon = 1.0;
    double cfl_adv = 0.4;
    double cfl_diff = 0.25;
    double t_end = 1.0;
    std::vector<double> snapshot_times;  // empty: only t=0 and t_end
    Limiter limiter = Limiter::central;
    // also store the state one extra step after every snapshot (for time-derivative residuals)
    bool companion_steps = false;
};

struct BlowUp : std::runtime_error {
    double t;
    BlowUp(const std::string& msg, double time) : std::runtime_error(msg), t(time) {}
};

struct Snapshot {
    double t = 0.0;
    FieldPair u;
    // state at t + companion_dt, when requested
    std::optional<FieldPair> companion;
    double companion_dt = 0.0;
};

struct StepRecord {
    double t, dt, max_lambda, max_alpha;
};

struct SolveRun {
    ModelSpec model;
    Grid1D grid;
    SolverConfig config;
    std::vector<Snapshot> snapshots;
    std::vector<StepRecord> step_log;

    std::vector<double> times() const {
        std::vector<double> t;
        for (const auto& s : snapshots) t.push_back(s.t);
        return t;
    }
    const FieldPair& final_state() const { return snapshots.back().u; }
};

namespace detail {

inline State at(const FieldPair& u, std::size_t i) { return {u.u1[i], u.u2[i]}; }

inline double max_wave_speed(const ModelSpec& m, const State& u) {
    return std::max(std::abs(m.lambda1(u)), std::abs(m.lambda2(u)));
}

// Semi-discrete right-hand side; end cells are frozen (zero rate).
inline FieldPair rhs(const ModelSpec& m, const FieldPair& u, double eps, Limiter lim) {
    const std::size_t n = u.size();
    const double dx = u.grid().dx();
    std::vector<State> F(n);
    for (std::size_t i = 0; i < n; ++i) F[i] = m.flux(at(u, i));

    // face fluxes: convective minus viscous
    std::vector<State> face(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const State a = at(u, i), b = at(u, i + 1);
        State hflux{0.5 * (F[i][0] + F[i + 1][0]), 0.5 * (F[i][1] + F[i + 1][1])};
        const State du{b[0] - a[0], b[1] - a[1]};
        if (lim == Limiter::rusanov_blend) {
            const double s = std::max(max_wave_speed(m, a), max_wave_speed(m, b));
            hflux[0] -= 0.5 * s * du[0];
            hflux[1] -= 0.5 * s * du[1];
        }
        const State mid{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
        const Mat2 B = m.B_unchecked(mid);
        face[i] = {hflux[0] - eps * B[0][0] * du[0] / dx,
                   hflux[1] - eps * (B[1][0] * du[0] + B[1][1] * du[1]) / dx};
    }
    FieldPair r(u.grid());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        r.u1[i] = -(face[i][0] - face[i - 1][0]) / dx;
        r.u2[i] = -(face[i][1] - face[i - 1][1]) / dx;
    }
    return r;
}

// Exact linearisation of rhs() at u applied to h.
inline FieldPair rhs_tangent(const ModelSpec& m, const FieldPair& u, const FieldPair& h, double eps, Limiter lim) {
    const std::size_t n = u.size();
    const double dx = u.grid().dx();
    std::vector<State> AH(n);
    for (std::size_t i = 0; i < n; ++i) {
        const State s = at(u, i);
        const Mat2 A = m.A_unchecked(s);
        AH[i] = {A[0][0] * h.u1[i], A[1][0] * h.u1[i] + A[1][1] * h.u2[i]};
    }
    std::vector<State> face(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const State a = at(u, i), b = at(u, i + 1);
        const State ha = at(h, i), hb = at(h, i + 1);
        State hflux{0.5 * (AH[i][0] + AH[i + 1][0]), 0.5 * (AH[i][1] + AH[i + 1][1])};
        const State du{b[0] - a[0], b[1] - a[1]};
        const State dh{hb[0] - ha[0], hb[1] - ha[1]};
        if (lim == Limiter::rusanov_blend) {
            // s = max over the four candidate speeds; differentiate the active one
            struct Cand { double speed; double dspeed; };
            auto cands = [&](const State& w, const State& hw) {
                const double l1 = m.lambda1(w), l2 = m.lambda2(w);
                const double dl1 = m.f.d11(w[0], 0.0) * hw[0];
                const double dl2 = m.g.d12(w[0], w[1]) * hw[0] + m.g.d22(w[0], w[1]) * hw[1];
                return std::array<Cand, 2>{Cand{std::abs(l1), (l1 >= 0 ? 1.0 : -1.0) * dl1},
                                           Cand{std::abs(l2), (l2 >= 0 ? 1.0 : -1.0) * dl2}};
            };
            const auto ca = cands(a, ha), cb = cands(b, hb);
            Cand best = ca[0];
            for (const Cand& c : {ca[1], cb[0], cb[1]})
                if (c.speed > best.speed) best = c;
            hflux[0] -= 0.5 * (best.speed * dh[0] + best.dspeed * du[0]);
            hflux[1] -= 0.5 * (best.speed * dh[1] + best.dspeed * du[1]);
        }
        const State mid{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
        const State hmid{0.5 * (ha[0] + hb[0]), 0.5 * (ha[1] + hb[1])};
        const Mat2 B = m.B_unchecked(mid);
        const Mat2 dB = m.dB(mid, hmid);
        face[i] = {hflux[0] - eps * (B[0][0] * dh[0] + dB[0][0] * du[0]) / dx,
                   hflux[1] - eps * (B[1][0] * dh[0] + B[1][1] * dh[1] + dB[1][0] * du[0] + dB[1][1] * du[1]) / dx};
    }
    FieldPair r(u.grid());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        r.u1[i] = -(face[i][0] - face[i - 1][0]) / dx;
        r.u2[i] = -(face[i][1] - face[i - 1][1]) / dx;
    }
    return r;
}

inline void axpy(FieldPair& y, double a, const FieldPair& x) {
    for (std::size_t i = 0; i < y.size(); ++i) {
        y.u1[i] += a * x.u1[i];
        y.u2[i] += a * x.u2[i];
    }
}

inline void check_state(const ModelSpec& m, const FieldPair& u, double t) {
    for (std::size_t i = 0; i < u.size(); ++i) {
        const State s = at(u, i);
        if (!std::isfinite(s[0]) || !std::isfinite(s[1])) {
            std::ostringstream os;
            os << "blow-up at t=" << t << ": non-finite value in cell " << i;
            throw BlowUp(os.str(), t);
        }
        if (!m.box.contains(s)) {
            std::ostringstream os;
            os.precision(10);
            os << "blow-up at t=" << t << ": state (" << s[0] << ", " << s[1] << ") in cell " << i
               << " left the validation box";
            throw BlowUp(os.str(), t);
        }
    }
}

inline void check_finite(const FieldPair& h, double t) {
    if (!h.finite()) {
        std::ostringstream os;
        os << "blow-up at t=" << t << ": non-finite linearized value";
        throw BlowUp(os.str(), t);
    }
}

struct StepBounds {
    double max_lambda = 0.0, max_alpha = 0.0;
};

inline StepBounds step_bounds(const ModelSpec& m, const FieldPair& u) {
    StepBounds b;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const State s = at(u, i);
        b.max_lambda = std::max(b.max_lambda, max_wave_speed(m, s));
        b.max_alpha = std::max({b.max_alpha, m.a1(s), m.a2(s)});
    }
    return b;
}

inline double stable_dt(const SolverConfig& cfg, double dx, const StepBounds& b) {
    double dt = cfg.cfl_diff * dx * dx / (cfg.epsilon * b.max_alpha);
    if (b.max_lambda > 0.0) dt = std::min(dt, cfg.cfl_adv * dx / b.max_lambda);
    return dt;
}

} // namespace detail

// One SSP-RK2 step. Throws BlowUp if the result is not finite or leaves the box.
inline FieldPair step(const FieldPair& u, const ModelSpec& m, double eps, double dt,
                      Limiter lim = Limiter::central, double t = 0.0) {
    FieldPair u1 = u;
    detail::axpy(u1, dt, detail::rhs(m, u, eps, lim));
    detail::check_state(m, u1, t + dt);
    FieldPair u2 = u1;
    detail::axpy(u2, dt, detail::rhs(m, u1, eps, lim));
    FieldPair out = u;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.u1[i] = 0.5 * (u.u1[i] + u2.u1[i]);
        out.u2[i] = 0.5 * (u.u2[i] + u2.u2[i]);
    }
    detail::check_state(m, out, t + dt);
    return out;
}

// Tangent of step(): returns (u_next, h_next).
inline std::pair<FieldPair, FieldPair> step_tangent(const FieldPair& u, const FieldPair& h, const ModelSpec& m,
                                                     double eps, double dt, Limiter lim, double t) {
    FieldPair u1 = u, h1 = h;
    detail::axpy(u1, dt, detail::rhs(m, u, eps, lim));
    detail::axpy(h1, dt, detail::rhs_tangent(m, u, h, eps, lim));
    detail::check_state(m, u1, t + dt);
    FieldPair u2 = u1, h2 = h1;
    detail::axpy(u2, dt, detail::rhs(m, u1, eps, lim));
    detail::axpy(h2, dt, detail::rhs_tangent(m, u1, h1, eps, lim));
    FieldPair uo = u, ho = h;
    for (std::size_t i = 0; i < uo.size(); ++i) {
        uo.u1[i] = 0.5 * (u.u1[i] + u2.u1[i]);
        uo.u2[i] = 0.5 * (u.u2[i] + u2.u2[i]);
        ho.u1[i] = 0.5 * (h.u1[i] + h2.u1[i]);
        ho.u2[i] = 0.5 * (h.u2[i] + h2.u2[i]);
    }
    detail::check_state(m, uo, t + dt);
    detail::check_finite(ho, t + dt);
    return {std::move(uo), std::move(ho)};
}

namespace detail {

inline std::vector<double> snapshot_schedule(const SolverConfig& cfg) {
    std::vector<double> ts = cfg.snapshot_times;
    ts.push_back(0.0);
    ts.push_back(cfg.t_end);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    ts.erase(std::remove_if(ts.begin(), ts.end(), [&](double t) { return t < 0.0 || t > cfg.t_end; }), ts.end());
    return ts;
}

// Drives the time loop. `advance(dt, t)` performs one step; `record(t)` stores a snapshot;
// `companion(dt, t)` stores the extra step when requested.
template <class Bounds, class Advance, class Record>
void time_loop(const SolverConfig& cfg, double dx, Bounds&& bounds, Advance&& advance, Record&& record,
               std::vector<StepRecord>& log) {
    const std::vector<double> ts = snapshot_schedule(cfg);
    double t = 0.0;
    std::size_t next = 0;
    while (next < ts.size() && ts[next] <= 0.0) record(0.0, bounds()), ++next;
    while (next < ts.size()) {
        const StepBounds b = bounds();
        double dt = stable_dt(cfg, dx, b);
        if (!(dt > 0.0) || !std::isfinite(dt)) throw BlowUp("non-positive time step", t);
        bool hit = false;
        if (t + dt >= ts[next] - 1e-14 * std::max(1.0, ts[next])) {
            dt = ts[next] - t;
            hit = true;
        }
        if (dt > 0.0) {
            advance(dt, t);
            log.push_back({t, dt, b.max_lambda, b.max_alpha});
        }
        t = hit ? ts[next] : t + dt;
        if (hit) record(t, bounds()), ++next;
    }
}

} // namespace detail

inline SolveRun solve(const ModelSpec& m, const FieldPair& u0, const SolverConfig& cfg) {
    SolveRun run{m, u0.grid(), cfg, {}, {}};
    detail::check_state(m, u0, 0.0);
    FieldPair u = u0;
    const double dx = u0.grid().dx();
    detail::time_loop(
        cfg, dx, [&] { return detail::step_bounds(m, u); },
        [&](double dt, double t) { u = step(u, m, cfg.epsilon, dt, cfg.limiter, t); },
        [&](double t, const detail::StepBounds& b) {
            Snapshot s{t, u, std::nullopt, 0.0};
            if (cfg.companion_steps) {
                s.companion_dt = detail::stable_dt(cfg, dx, b);
                s.companion = step(u, m, cfg.epsilon, s.companion_dt, cfg.limiter, t);
            }
            run.snapshots.push_back(std::move(s));
        },
        run.step_log);
    return run;
}

// Solves base and first variation together; both runs share the dt sequence.
inline std::pair<SolveRun, SolveRun> solve_with_tangent(const ModelSpec& m, const FieldPair& u0, const FieldPair& h0,
                                                        const SolverConfig& cfg) {
    u0.u1.check(h0.u1);
    SolveRun base{m, u0.grid(), cfg, {}, {}};
    SolveRun lin{m, u0.grid(), cfg, {}, {}};
    detail::check_state(m, u0, 0.0);
    FieldPair u = u0, h = h0;
    const double dx = u0.grid().dx();
    detail::time_loop(
        cfg, dx, [&] { return detail::step_bounds(m, u); },
        [&](double dt, double t) {
            auto [un, hn] = step_tangent(u, h, m, cfg.epsilon, dt, cfg.limiter, t);
            u = std::move(un);
            h = std::move(hn);
        },
        [&](double t, const detail::StepBounds& b) {
            Snapshot su{t, u, std::nullopt, 0.0}, sh{t, h, std::nullopt, 0.0};
            if (cfg.companion_steps) {
                su.companion_dt = sh.companion_dt = detail::stable_dt(cfg, dx, b);
                auto [uc, hc] = step_tangent(u, h, m, cfg.epsilon, su.companion_dt, cfg.limiter, t);
                su.companion = std::move(uc);
                sh.companion = std::move(hc);
            }
            base.snapshots.push_back(std::move(su));
            lin.snapshots.push_back(std::move(sh));
        },
        base.step_log);
    lin.step_log = base.step_log;
    return {std::move(base), std::move(lin)};
}

// Integrates the first-variation equation along `base`, re-simulating the base in
// lockstep with its recorded dt sequence.
inline SolveRun solve_linearized(const ModelSpec& m, const SolveRun& base, const FieldPair& h0) {
    if (base.snapshots.empty()) throw std::invalid_argument("solve_linearized: empty base run");
    if (!(base.grid == h0.grid())) throw std::invalid_argument("solve_linearized: base/h grid mismatch");
    const SolverConfig& cfg = base.config;
    SolveRun lin{m, base.grid, cfg, {}, base.step_log};
    FieldPair u = base.snapshots.front().u, h = h0;
    const double dx = base.grid.dx();
    std::size_t snap = 0;
    auto record = [&](double t) {
        Snapshot s{t, h, std::nullopt, 0.0};
        const Snapshot& bs = base.snapshots[snap];
        if (bs.companion) {
            s.companion_dt = bs.companion_dt;
            s.companion = step_tangent(u, h, m, cfg.epsilon, bs.companion_dt, cfg.limiter, t).second;
        }
        lin.snapshots.push_back(std::move(s));
        ++snap;
    };
    (void)dx;
    double t = 0.0;
    record(0.0);
    for (const StepRecord& r : base.step_log) {
        auto [un, hn] = step_tangent(u, h, m, cfg.epsilon, r.dt, cfg.limiter, r.t);
        u = std::move(un);
        h = std::move(hn);
        t = r.t + r.dt;
        while (snap < base.snapshots.size() && std::abs(base.snapshots[snap].t - t) <= 1e-12 * std::max(1.0, t))
            record(base.snapshots[snap].t);
    }
    return lin;
}

} // namespace vvlab
