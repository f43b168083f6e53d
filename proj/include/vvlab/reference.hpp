#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "core.hpp"
#include "model.hpp"
#include "solver.hpp"

namespace vvlab {

// First-order Rusanov (local Lax-Friedrichs) finite volumes for u_t + F(u)_x = 0 with forward Euler
// in time. End cells are frozen, as in the viscous solver.
inline FieldPair solve_inviscid(const ModelSpec& m, const FieldPair& u0, double t_end, double cfl = 0.45) {
    if (!(t_end >= 0.0)) throw std::invalid_argument("solve_inviscid: t_end must be non-negative");
    detail::check_state(m, u0, 0.0);
    const std::size_t n = u0.size();
    const double dx = u0.grid().dx();
    FieldPair u = u0;
    std::vector<State> F(n), face(n - 1);
    std::vector<double> speed(n);
    double t = 0.0;
    while (t < t_end) {
        double smax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const State s = detail::at(u, i);
            F[i] = m.flux(s);
            speed[i] = detail::max_wave_speed(m, s);
            smax = std::max(smax, speed[i]);
        }
        if (smax == 0.0) break;  // every flux difference vanishes
        double dt = cfl * dx / smax;
        if (t + dt >= t_end) dt = t_end - t;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double s = std::max(speed[i], speed[i + 1]);
            face[i] = {0.5 * (F[i][0] + F[i + 1][0]) - 0.5 * s * (u.u1[i + 1] - u.u1[i]),
                       0.5 * (F[i][1] + F[i + 1][1]) - 0.5 * s * (u.u2[i + 1] - u.u2[i])};
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            u.u1[i] -= dt / dx * (face[i][0] - face[i - 1][0]);
            u.u2[i] -= dt / dx * (face[i][1] - face[i - 1][1]);
        }
        t += dt;
        detail::check_state(m, u, t);
    }
    return u;
}

inline double l1_distance(const FieldPair& a, const FieldPair& b) {
    a.u1.check(b.u1);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.u1[i] - b.u1[i]) + std::abs(a.u2[i] - b.u2[i]);
    return s * a.grid().dx();
}

// Least-squares slope of log y against log x over the positive entries.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int k = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly, ++k;
    }
    if (k < 2) return std::numeric_limits<double>::quiet_NaN();
    const double den = k * sxx - sx * sx;
    return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (k * sxy - sx * sy) / den;
}

struct EpsGap {
    double eps, gap;
};

struct SweepResult {
    std::vector<double> epsilons;  // decreasing
    std::vector<EpsGap> pairwise_gaps;  // (eps, |u^eps - u^{eps/2}|)
    std::vector<EpsGap> inviscid_gaps;  // (eps, |u^eps - u_ref|)
    double fitted_rate = std::numeric_limits<double>::quiet_NaN();
    std::vector<FieldPair> finals;
    FieldPair reference;

    bool pairwise_strictly_decreasing() const {
        for (std::size_t k = 1; k < pairwise_gaps.size(); ++k)
            if (!(pairwise_gaps[k].gap < pairwise_gaps[k - 1].gap)) return false;
        return !pairwise_gaps.empty();
    }

    void write_csv(std::ostream& os) const {
        os << std::setprecision(17) << "eps,pairwise_gap,inviscid_gap\n";
        for (std::size_t k = 0; k < epsilons.size(); ++k) {
            os << epsilons[k] << ',';
            if (k < pairwise_gaps.size()) os << pairwise_gaps[k].gap;
            os << ',' << inviscid_gaps[k].gap << '\n';
        }
        os << "# fitted_rate," << fitted_rate << '\n';
    }
};

// Solves once per epsilon on the grid of u0 and compares consecutive solutions and the inviscid reference at
// t_end. The fitted rate is the log-log slope of the inviscid gap against epsilon.
inline SweepResult epsilon_sweep(const ModelSpec& m, const FieldPair& u0, std::vector<double> eps_list, double t_end,
                                 SolverConfig base = {}) {
    if (eps_list.size() < 2) throw std::invalid_argument("epsilon_sweep: need at least two epsilons");
    std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
    for (std::size_t k = 1; k < eps_list.size(); ++k)
        if (std::abs(eps_list[k - 1] / eps_list[k] - 2.0) > 1e-9)
            throw std::invalid_argument("epsilon_sweep: epsilons must form a halving chain");
    if (u0.grid().dx() > eps_list.back() / 4.0 * (1.0 + 1e-12))
        throw std::invalid_argument("epsilon_sweep: grid does not resolve the smallest epsilon (need dx <= eps/4)");

    base.t_end = t_end;
    base.snapshot_times.clear();
    base.companion_steps = false;
    std::vector<std::future<FieldPair>> jobs;
    for (double eps : eps_list) {
        SolverConfig cfg = base;
        cfg.epsilon = eps;
        jobs.push_back(std::async(std::launch::async, [&m, &u0, cfg] { return solve(m, u0, cfg).final_state(); }));
    }
    auto ref = std::async(std::launch::async, [&] { return solve_inviscid(m, u0, t_end); });

    SweepResult r;
    r.epsilons = eps_list;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        try {
            r.finals.push_back(jobs[k].get());
        } catch (const BlowUp& e) {
            for (std::size_t j = k + 1; j < jobs.size(); ++j) jobs[j].wait();
            ref.wait();
            std::ostringstream os;
            os << "epsilon=" << eps_list[k] << ": " << e.what();
            throw BlowUp(os.str(), e.t);
        }
    }
    r.reference = ref.get();
    std::vector<double> ig;
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (k + 1 < eps_list.size()) r.pairwise_gaps.push_back({eps_list[k], l1_distance(r.finals[k], r.finals[k + 1])});
        r.inviscid_gaps.push_back({eps_list[k], l1_distance(r.finals[k], r.reference)});
        ig.push_back(r.inviscid_gaps.back().gap);
    }
    r.fitted_rate = loglog_slope(eps_list, ig);
    return r;
}

struct ContinuityFit {
    double L_a = 0.0, L_b = 0.0;
    std::size_t pairs = 0;
    double worst_violation = 0.0;  // max over pairs of |u(t)-u(s)| - bound; <= 0 up to rounding
};

// Smallest (L_a, L_b) >= 0, in the sense of minimal L_a + L_b, with
// |u(t) - u(s)|_1 <= L_a |t - s| + L_b sqrt(eps) |sqrt t - sqrt s| on every snapshot pair.
inline ContinuityFit time_continuity_probe(const SolveRun& run, double eps, std::size_t min_snapshots = 20) {
    if (run.snapshots.size() < min_snapshots)
        throw std::invalid_argument("time_continuity_probe: need at least " + std::to_string(min_snapshots) +
                                    " snapshots, have " + std::to_string(run.snapshots.size()));
    struct Pair {
        double a, b, d;
    };
    std::vector<Pair> ps;
    const auto& sn = run.snapshots;
    for (std::size_t i = 0; i < sn.size(); ++i)
        for (std::size_t j = i + 1; j < sn.size(); ++j) {
            const double a = std::abs(sn[j].t - sn[i].t);
            const double b = std::sqrt(eps) * std::abs(std::sqrt(sn[j].t) - std::sqrt(sn[i].t));
            ps.push_back({a, b, l1_distance(sn[i].u, sn[j].u)});
        }
    ContinuityFit fit;
    fit.pairs = ps.size();
    // for fixed L_a the least admissible L_b is a maximum of affine functions, so L_a + L_b(L_a) is convex
    auto lb_for = [&](double la) {
        double lb = 0.0;
        for (const auto& p : ps) {
            const double need = p.d - la * p.a;
            if (need <= 0.0) continue;
            lb = p.b > 0.0 ? std::max(lb, need / p.b) : std::numeric_limits<double>::infinity();
        }
        return lb;
    };
    double hi = 0.0;
    for (const auto& p : ps)
        if (p.a > 0.0) hi = std::max(hi, p.d / p.a);
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (m1 + lb_for(m1) <= m2 + lb_for(m2))
            hi = m2;
        else
            lo = m1;
    }
    fit.L_a = 0.5 * (lo + hi);
    fit.L_b = lb_for(fit.L_a);
    fit.worst_violation = -std::numeric_limits<double>::infinity();
    for (const auto& p : ps) fit.worst_violation = std::max(fit.worst_violation, p.d - fit.L_a * p.a - fit.L_b * p.b);
    return fit;
}

// Snapshot times 0 < t_1 < ... < t_end: a geometric cluster from t_min and a uniform tail.
inline std::vector<double> clustered_times(double t_end, double t_min, int n_geometric, int n_uniform) {
    std::vector<double> ts;
    for (int k = 0; k < n_geometric; ++k) ts.push_back(t_min * std::pow(t_end / t_min, static_cast<double>(k) / n_geometric));
    for (int k = 1; k <= n_uniform; ++k) ts.push_back(t_end * k / n_uniform);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

} // namespace vvlab
