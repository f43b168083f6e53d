#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "core.hpp"
#include "model.hpp"

namespace vvlab {

enum class Family { one, two };

inline const char* to_string(Family f) { return f == Family::one ? "one" : "two"; }

struct ProfileODEState {
    State u{};
    State v{};
    double sigma = 0.0;
};

struct ProfileSample {
    double xi;
    State u, v;
};

struct WaveProfile {
    double sigma = 0.0;
    Family family = Family::one;
    State u_minus{}, u_plus{};
    std::vector<ProfileSample> samples;  // xi increasing
    bool left_box = false;               // integration stopped at the validation box
    // max over samples of |B(u)v - (F(u) - F(u_ref) - sigma (u - u_ref))|, the integrated form of the profile equation
    double first_integral_residual = 0.0;

    double xi_min() const { return samples.front().xi; }
    double xi_max() const { return samples.back().xi; }

    // cubic Hermite interpolation in xi using U and U' = v; constant extension outside the samples
    State u_at(double xi) const {
        if (samples.empty()) return u_minus;
        if (xi <= samples.front().xi) return samples.front().u;
        if (xi >= samples.back().xi) return samples.back().u;
        auto it = std::upper_bound(samples.begin(), samples.end(), xi,
                                   [](double x, const ProfileSample& s) { return x < s.xi; });
        const ProfileSample& b = *it;
        const ProfileSample& a = *(it - 1);
        const double h = b.xi - a.xi, t = (xi - a.xi) / h;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        State out;
        for (int k = 0; k < 2; ++k) out[k] = h00 * a.u[k] + h10 * h * a.v[k] + h01 * b.u[k] + h11 * h * b.v[k];
        return out;
    }

    // the profile placed on a grid, centred at x0 and advected by sigma*t
    FieldPair on_grid(const Grid1D& g, double x0 = 0.0, double t = 0.0) const {
        FieldPair u(g);
        for (std::size_t i = 0; i < g.n(); ++i) {
            const State s = u_at(g.x(i) - x0 - sigma * t);
            u.u1[i] = s[0];
            u.u2[i] = s[1];
        }
        return u;
    }

    void write_csv(std::ostream& os) const {
        os << "xi,u1,u2,v1,v2\n" << std::setprecision(17);
        for (const auto& s : samples) os << s.xi << ',' << s.u[0] << ',' << s.u[1] << ',' << s.v[0] << ',' << s.v[1] << '\n';
    }
};

struct ProfileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

using OdeVec = std::array<double, 4>;

// u' = v, v' = B^{-1}[(A - sigma) v - (DB(u)[v]) v]
inline OdeVec profile_rhs(const ModelSpec& m, const OdeVec& y, double sigma) {
    const State u{y[0], y[1]}, v{y[2], y[3]};
    const Mat2 A = m.A_unchecked(u), B = m.B_unchecked(u), dB = m.dB(u, v);
    const double r0 = (A[0][0] - sigma) * v[0] - dB[0][0] * v[0];
    const double r1 = A[1][0] * v[0] + (A[1][1] - sigma) * v[1] - dB[1][0] * v[0] - dB[1][1] * v[1];
    // B is lower triangular
    const double w0 = r0 / B[0][0];
    const double w1 = (r1 - B[1][0] * w0) / B[1][1];
    return {v[0], v[1], w0, w1};
}

// v = B(u)^{-1}(F(u) - F(u_ref) - sigma (u - u_ref)), the first integral through u_ref
inline State first_integral_v(const ModelSpec& m, const State& u, const State& u_ref, double sigma) {
    const State F = m.flux(u), Fr = m.flux(u_ref);
    const double q0 = F[0] - Fr[0] - sigma * (u[0] - u_ref[0]);
    const double q1 = F[1] - Fr[1] - sigma * (u[1] - u_ref[1]);
    const Mat2 B = m.B_unchecked(u);
    const double v0 = q0 / B[0][0];
    return {v0, (q1 - B[1][0] * v0) / B[1][1]};
}

struct IntegrationResult {
    std::vector<ProfileSample> samples;  // in integration order
    bool left_box = false;
};

// Adaptive Dormand-Prince integration of the profile ODE over xi in [0, span] (span may be negative).
// `stop` is consulted after every accepted step.
template <class Stop>
IntegrationResult integrate(const ModelSpec& m, const ProfileODEState& s0, double span, double tol, Stop&& stop,
                            std::size_t max_steps = 200000) {
    namespace odeint = boost::numeric::odeint;
    IntegrationResult res;
    OdeVec y{s0.u[0], s0.u[1], s0.v[0], s0.v[1]};
    res.samples.push_back({0.0, s0.u, s0.v});
    if (span == 0.0) return res;
    auto sys = [&](const OdeVec& x, OdeVec& dxdt, double) { dxdt = profile_rhs(m, x, s0.sigma); };
    auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<OdeVec>());
    const double dir = span > 0 ? 1.0 : -1.0;
    double xi = 0.0;
    double h = dir * std::min(std::abs(span), 0.01);
    const double h_min = 1e-12 * std::max(1.0, std::abs(span));
    for (std::size_t k = 0; k < max_steps && dir * (span - xi) > 0.0; ++k) {
        if (dir * (xi + h - span) > 0.0) h = span - xi;
        const OdeVec y_prev = y;
        const double xi_prev = xi;
        if (stepper.try_step(sys, y, xi, h) == odeint::fail) {
            if (std::abs(h) < h_min) throw ProfileError("profile integration: step-size underflow");
            continue;
        }
        const State u{y[0], y[1]};
        if (!std::isfinite(y[0]) || !std::isfinite(y[1]) || !std::isfinite(y[2]) || !std::isfinite(y[3]))
            throw ProfileError("profile integration: non-finite state");
        if (!m.box.contains(u)) {
            y = y_prev;
            xi = xi_prev;
            res.left_box = true;
            break;
        }
        res.samples.push_back({xi, u, {y[2], y[3]}});
        if (stop(res.samples.back())) break;
    }
    return res;
}

} // namespace detail

// Integrates the profile ODE from s0 over xi in [0, xi_span] (negative spans integrate backwards).
inline WaveProfile integrate_profile(const ModelSpec& m, const ProfileODEState& s0, double xi_span, double tol) {
    m.require_admissible(s0.u);
    auto r = detail::integrate(m, s0, xi_span, tol, [](const ProfileSample&) { return false; });
    WaveProfile p;
    p.sigma = s0.sigma;
    p.left_box = r.left_box;
    if (xi_span < 0) std::reverse(r.samples.begin(), r.samples.end());
    p.samples = std::move(r.samples);
    p.u_minus = p.samples.front().u;
    p.u_plus = p.samples.back().u;
    return p;
}

struct ShootOptions {
    double tol = 1e-10;       // integrator tolerance
    double end_tol = 1e-8;    // |u - u_end| at which the far end counts as reached
    double xi_limit = 5000.0;
    int max_iterations = 50;  // Hugoniot solve
};

// Right state on the Hugoniot locus of the given family at the given strength, and the shock speed.
inline std::pair<State, double> hugoniot_state(const ModelSpec& m, const State& um, Family fam, double strength,
                                               int max_iterations = 50) {
    if (fam == Family::one) {
        const double curv = m.f.d11(um[0], 0.0);
        if (curv == 0.0) throw ProfileError("shoot_connection: first family is linearly degenerate at u_minus");
        const double u1p = um[0] - (curv > 0 ? strength : -strength);
        const double sigma = (m.f(u1p, 0.0) - m.f(um[0], 0.0)) / (u1p - um[0]);
        // second component: g(u1p, u2) - g(um) = sigma (u2 - um2), Newton from the r1 direction
        const double gm = m.g(um[0], um[1]);
        double u2 = um[1] + m.gamma(um) * (u1p - um[0]);
        for (int it = 0; it < max_iterations; ++it) {
            const double G = m.g(u1p, u2) - gm - sigma * (u2 - um[1]);
            const double dG = m.g.d2(u1p, u2) - sigma;
            const double step = G / dG;
            u2 -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(u2))) return {{u1p, u2}, sigma};
        }
        throw ProfileError("shoot_connection: Hugoniot solve did not converge in " + std::to_string(max_iterations) +
                           " iterations");
    }
    const double curv = m.g.d22(um[0], um[1]);
    if (curv == 0.0) throw ProfileError("shoot_connection: second family is linearly degenerate at u_minus");
    const double u2p = um[1] - (curv > 0 ? strength : -strength);
    const double sigma = (m.g(um[0], u2p) - m.g(um[0], um[1])) / (u2p - um[1]);
    return {{um[0], u2p}, sigma};
}

// Heteroclinic profile from u_minus to the Hugoniot state at distance `strength`.
// The orbit is traced from the saddle end along its one-dimensional invariant direction:
// backwards from u_plus for the first family, forwards from u_minus for the second.
inline WaveProfile shoot_connection(const ModelSpec& m, const State& u_minus, Family fam, double strength,
                                    const ShootOptions& opt = {}) {
    m.require_admissible(u_minus);
    WaveProfile p;
    p.family = fam;
    p.u_minus = u_minus;
    if (strength == 0.0) {
        p.sigma = fam == Family::one ? m.lambda1(u_minus) : m.lambda2(u_minus);
        p.u_plus = u_minus;
        p.samples = {{-1.0, u_minus, {0, 0}}, {0.0, u_minus, {0, 0}}, {1.0, u_minus, {0, 0}}};
        return p;
    }
    auto [u_plus, sigma] = hugoniot_state(m, u_minus, fam, strength, opt.max_iterations);
    m.require_admissible(u_plus);
    p.sigma = sigma;
    p.u_plus = u_plus;

    const State saddle = fam == Family::one ? u_plus : u_minus;
    const State target = fam == Family::one ? u_minus : u_plus;
    const double alpha = fam == Family::one ? m.a1(saddle) : m.a2(saddle);
    const double lam = fam == Family::one ? m.lambda1(saddle) : m.lambda2(saddle);
    const double mu = (lam - sigma) / alpha;  // < 0 at u_plus (family one), > 0 at u_minus (family two)
    const State r = fam == Family::one ? State{1.0, m.gamma(saddle)} : State{0.0, 1.0};
    const int comp = fam == Family::one ? 0 : 1;
    const double toward = target[comp] > saddle[comp] ? 1.0 : -1.0;
    const double eta = 1e-9 * strength;
    ProfileODEState s0;
    s0.sigma = sigma;
    s0.u = {saddle[0] + toward * eta * r[0], saddle[1] + toward * eta * r[1]};
    s0.v = detail::first_integral_v(m, s0.u, saddle, sigma);
    if (fam == Family::two) s0.v[0] = 0.0;
    (void)mu;

    const double span = fam == Family::one ? -opt.xi_limit : opt.xi_limit;
    auto dist = [&](const State& u) { return std::max(std::abs(u[0] - target[0]), std::abs(u[1] - target[1])); };
    auto r_int = detail::integrate(m, s0, span, opt.tol, [&](const ProfileSample& s) { return dist(s.u) <= opt.end_tol; });
    if (r_int.left_box) throw ProfileError("shoot_connection: orbit left the validation box");
    if (dist(r_int.samples.back().u) > 1e-6)
        throw ProfileError("shoot_connection: orbit did not reach the far state (miss " +
                           std::to_string(dist(r_int.samples.back().u)) + ")");
    if (fam == Family::one) std::reverse(r_int.samples.begin(), r_int.samples.end());
    // centre: xi = 0 where the varying component crosses the midpoint
    const double mid = 0.5 * (u_minus[comp] + u_plus[comp]);
    double shift = 0.0;
    for (std::size_t k = 0; k + 1 < r_int.samples.size(); ++k) {
        const double a = r_int.samples[k].u[comp] - mid, b = r_int.samples[k + 1].u[comp] - mid;
        if ((a <= 0 && b >= 0) || (a >= 0 && b <= 0)) {
            const double t = a == b ? 0.0 : a / (a - b);
            shift = r_int.samples[k].xi + t * (r_int.samples[k + 1].xi - r_int.samples[k].xi);
            break;
        }
    }
    for (auto& s : r_int.samples) s.xi -= shift;
    p.samples = std::move(r_int.samples);
    for (const auto& s : p.samples) {
        const State q = detail::first_integral_v(m, s.u, saddle, sigma);
        const Mat2 B = m.B_unchecked(s.u);
        const double e0 = B[0][0] * (s.v[0] - q[0]);
        const double e1 = B[1][0] * (s.v[0] - q[0]) + B[1][1] * (s.v[1] - q[1]);
        p.first_integral_residual = std::max({p.first_integral_residual, std::abs(e0), std::abs(e1)});
    }
    return p;
}

// Closed-form viscous Burgers shock u = -a tanh(a xi / 2) (alpha = 1, f = u^2/2).
inline double burgers_viscous_shock(double a, double xi) { return -a * std::tanh(0.5 * a * xi); }

// ---------------------------------------------------------------------------
// Centre manifold of the first family

struct ManifoldOptions {
    double arc_decays = 8.0;  // arc length in units of 1/mu2
    double max_arc = 50.0;
    double tol = 1e-12;       // integrator tolerance
    int max_iterations = 40;  // outer fixed point on the end condition
    double fixed_point_tol = 1e-10;
};

struct ManifoldError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Forward orbit from (u, v1 (1, s)) over the arc; returns the end state.
inline std::optional<OdeVec> shoot_arc(const ModelSpec& m, const State& u, double v1, double s, double sigma,
                                       double arc, double tol) {
    ProfileODEState s0{u, {v1, v1 * s}, sigma};
    auto r = integrate(m, s0, arc, tol, [](const ProfileSample&) { return false; });
    if (r.left_box) return std::nullopt;
    const auto& e = r.samples.back();
    return OdeVec{e.u[0], e.u[1], e.v[0], e.v[1]};
}

} // namespace detail

// Slope s = U2'/U1' of the first-family centre manifold through (u, v1, sigma).
// Orbits off the manifold separate at rate mu2 = (lambda2 - sigma)/alpha2, so the slope whose
// forward orbit ends on the current manifold estimate is accurate to a factor exp(-mu2 * arc).
// The end condition uses s = gamma + c v1 with c taken from the previous iterate.
inline double center_manifold_slope(const ModelSpec& m, const State& u, double v1, double sigma,
                                    const ManifoldOptions& opt = {}) {
    const double g0 = m.gamma(u);
    if (v1 == 0.0) return g0;
    const double mu2 = (m.lambda2(u) - sigma) / m.a2(u);
    if (!(mu2 > 0.0)) throw ManifoldError("centre manifold: sigma not below lambda2");
    double arc = std::min(opt.max_arc, opt.arc_decays / mu2);

    double c = 0.0;  // first-order coefficient of the end condition
    double s_prev = std::numeric_limits<double>::quiet_NaN();
    for (int outer = 0; outer < opt.max_iterations; ++outer) {
        auto miss = [&](double s) -> std::optional<double> {
            auto e = detail::shoot_arc(m, u, v1, s, sigma, arc, opt.tol);
            if (!e) return std::nullopt;
            const State ue{(*e)[0], (*e)[1]};
            return (*e)[3] - (m.gamma(ue) + c * (*e)[2]) * (*e)[2];
        };
        // secant on the end condition; it is nearly linear in s
        double sa = std::isnan(s_prev) ? g0 : s_prev;
        double sb = sa + 1e-6;
        std::optional<double> fa, fb;
        for (int shrink = 0; shrink < 8; ++shrink) {
            fa = miss(sa);
            fb = miss(sb);
            if (fa && fb) break;
            arc *= 0.5;
        }
        if (!fa || !fb) throw ManifoldError("centre manifold: orbit leaves the validation box");
        double s = sb;
        for (int it = 0; it < 30; ++it) {
            if (*fb == *fa) break;
            s = sb - *fb * (sb - sa) / (*fb - *fa);
            if (std::abs(s - sb) <= 1e-15 * std::max(1.0, std::abs(s))) break;
            sa = sb;
            fa = fb;
            sb = s;
            fb = miss(sb);
            if (!fb) throw ManifoldError("centre manifold: orbit leaves the validation box");
        }
        const double c_new = (s - g0) / v1;
        if (!std::isnan(s_prev) && std::abs(s - s_prev) <= opt.fixed_point_tol * std::max(1.0, std::abs(s))) return s;
        s_prev = s;
        c = c_new;
    }
    throw ManifoldError("centre manifold: slope did not reach a fixed point in " +
                        std::to_string(opt.max_iterations) + " iterations");
}

struct ProbeSample {
    State u;
    double v1, sigma, psi2, bound_ratio;
};

struct ProbeReport {
    double radius = 0.0;
    double fitted_C = 0.0;         // max |psi2| / |v1|
    double sigma_derivative_C = 0.0;  // max |d psi2 / d sigma| / |v1|
    double zero_slice_max = 0.0;   // max |psi2| on v1 = 0
    std::size_t worst_index = 0;
    std::vector<ProbeSample> samples;

    void write_csv(std::ostream& os) const {
        os << "index,u1,u2,v1,sigma,psi2,bound_ratio\n" << std::setprecision(17);
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const auto& s = samples[k];
            os << k << ',' << s.u[0] << ',' << s.u[1] << ',' << s.v1 << ',' << s.sigma << ',' << s.psi2 << ','
               << s.bound_ratio << '\n';
        }
    }
};

// Samples an n x n x n lattice of (u1, v1, sigma) with |u1 - u1*| <= radius, |v1| <= radius and
// |sigma - lambda1(u*)| <= 2 delta1; u2 cycles through u2* - radius, u2*, u2* + radius.
inline ProbeReport manifold_probe(const ModelSpec& m, int n_samples, double radius, double delta1,
                                  const ManifoldOptions& opt = {}) {
    if (n_samples < 10) throw std::invalid_argument("manifold_probe: need at least 10 samples per axis");
    ProbeReport rep;
    rep.radius = radius;
    const State us = m.u_star;
    const double l1 = m.lambda1(us);
    auto axis = [&](int k, double half) { return -half + 2.0 * half * k / (n_samples - 1); };
    const double dsig = 1e-4 * delta1;
    for (int i = 0; i < n_samples; ++i)
        for (int j = 0; j < n_samples; ++j)
            for (int k = 0; k < n_samples; ++k) {
                const State u{us[0] + axis(i, radius), us[1] + radius * ((i + j + k) % 3 - 1)};
                const double v1 = axis(j, radius);
                const double sigma = l1 + axis(k, 2.0 * delta1);
                const double psi2 = center_manifold_slope(m, u, v1, sigma, opt) - m.gamma(u);
                ProbeSample ps{u, v1, sigma, psi2, 0.0};
                if (v1 != 0.0) {
                    ps.bound_ratio = std::abs(psi2) / std::abs(v1);
                    if (ps.bound_ratio > rep.fitted_C) {
                        rep.fitted_C = ps.bound_ratio;
                        rep.worst_index = rep.samples.size();
                    }
                    const double sp = center_manifold_slope(m, u, v1, sigma + dsig, opt);
                    const double sm = center_manifold_slope(m, u, v1, sigma - dsig, opt);
                    rep.sigma_derivative_C =
                        std::max(rep.sigma_derivative_C, std::abs((sp - sm) / (2 * dsig)) / std::abs(v1));
                }
                rep.samples.push_back(ps);
            }
    // the v1 = 0 slice explicitly
    for (int i = 0; i < n_samples; ++i) {
        const State u{us[0] + axis(i, radius), us[1] - 0.5 * radius};
        const double sigma = l1 + axis(i, 2.0 * delta1);
        const double psi2 = center_manifold_slope(m, u, 0.0, sigma, opt) - m.gamma(u);
        rep.zero_slice_max = std::max(rep.zero_slice_max, std::abs(psi2));
        rep.samples.push_back({u, 0.0, sigma, psi2, 0.0});
    }
    return rep;
}

} // namespace vvlab
