#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "jet.hpp"
#include "model.hpp"
#include "solver.hpp"
#include "travelingwave.hpp"

namespace vvlab {

// ---------------------------------------------------------------------------
// Cutoffs

struct CutoffBounds {
    double max_value = 0.0, max_d1 = 0.0, max_d2 = 0.0;
};

// Odd saturating cutoff: theta(x) = x on |x| <= delta1, 0 on |x| >= 3 delta1.
// On the transition, with s = (|x| - delta1) / (2 delta1), theta = delta1 p(s) where
// p = 1 + 2s - 9s^2 + 8s^3 - 2s^4 is the Hermite cubic for (p, p') = (1, 2) at 0 and (0, 0) at 1
// plus -2 s^2 (1-s)^2, which brings max |theta'| down to exactly 1.
class CutoffTheta {
public:
    explicit CutoffTheta(double delta1) : d_(delta1) {
        if (!(delta1 > 0.0)) throw std::invalid_argument("CutoffTheta: delta1 must be positive");
        const CutoffBounds b = sampled_bounds();
        if (b.max_value > 2.0 * d_ || b.max_d1 > 1.0 + 1e-12 || b.max_d2 > 16.0 / d_)
            throw std::logic_error("CutoffTheta: sampled bounds violated");
    }

    double delta1() const { return d_; }

    double operator()(double x) const {
        const double a = std::abs(x);
        if (a <= d_) return x;
        if (a >= 3.0 * d_) return 0.0;
        return std::copysign(d_ * p(s_of(a)), x);
    }
    double d1(double x) const {
        const double a = std::abs(x);
        if (a <= d_) return 1.0;
        if (a >= 3.0 * d_) return 0.0;
        return 0.5 * dp(s_of(a));
    }
    // one-sided at the joins |x| = delta1, 3 delta1 (theta is C^1 there)
    double d2(double x) const {
        const double a = std::abs(x);
        if (a <= d_ || a >= 3.0 * d_) return 0.0;
        return (x < 0.0 ? -1.0 : 1.0) * ddp(s_of(a)) / (4.0 * d_);
    }

    CutoffBounds sampled_bounds(int samples = 200001) const {
        CutoffBounds b;
        for (int k = 0; k < samples; ++k) {
            const double x = -4.0 * d_ + 8.0 * d_ * k / (samples - 1);
            b.max_value = std::max(b.max_value, std::abs((*this)(x)));
            b.max_d1 = std::max(b.max_d1, std::abs(d1(x)));
            b.max_d2 = std::max(b.max_d2, std::abs(d2(x)));
        }
        return b;
    }

private:
    double s_of(double a) const { return (a - d_) / (2.0 * d_); }
    static double p(double s) { return 1.0 + s * (2.0 + s * (-9.0 + s * (8.0 - 2.0 * s))); }
    static double dp(double s) { return 2.0 + s * (-18.0 + s * (24.0 - 8.0 * s)); }
    static double ddp(double s) { return -18.0 + s * (48.0 - 24.0 * s); }

    double d_;
};

// Even step: 0 on |x| <= 3 delta1 / 5, 1 on |x| >= 4 delta1 / 5, quintic smoothstep between.
class CutoffThetaHat {
public:
    explicit CutoffThetaHat(double delta1) : d_(delta1) {
        if (!(delta1 > 0.0)) throw std::invalid_argument("CutoffThetaHat: delta1 must be positive");
    }

    double delta1() const { return d_; }
    double inner() const { return 0.6 * d_; }
    double outer() const { return 0.8 * d_; }

    double operator()(double x) const {
        const double a = std::abs(x);
        if (a <= inner()) return 0.0;
        if (a >= outer()) return 1.0;
        const double s = (a - inner()) / (outer() - inner());
        return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
    }
    double d1(double x) const {
        const double a = std::abs(x);
        if (a <= inner() || a >= outer()) return 0.0;
        const double w = outer() - inner();
        const double s = (a - inner()) / w;
        return std::copysign(30.0 * s * s * (1.0 - s) * (1.0 - s) / w, x);
    }
    double d2(double x) const {
        const double a = std::abs(x);
        if (a <= inner() || a >= outer()) return 0.0;
        const double w = outer() - inner();
        const double s = (a - inner()) / w;
        return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (w * w);
    }

    // returns delta1 |theta'| and delta1^2 |theta''| maxima
    CutoffBounds sampled_bounds(int samples = 200001) const {
        CutoffBounds b;
        for (int k = 0; k < samples; ++k) {
            const double x = -d_ + 2.0 * d_ * k / (samples - 1);
            b.max_value = std::max(b.max_value, std::abs((*this)(x)));
            b.max_d1 = std::max(b.max_d1, d_ * std::abs(d1(x)));
            b.max_d2 = std::max(b.max_d2, d_ * d_ * std::abs(d2(x)));
        }
        return b;
    }

private:
    double d_;
};

// delta1 = max(10 sup|lambda1'| delta0 + 2 delta0 sup|alpha1'|, 0.05)
inline double default_delta1(const ModelSpec& m, double delta0) {
    const FirstFamilySlopes s = first_family_slopes(m);
    return std::max(10.0 * s.dlambda1 * delta0 + 2.0 * delta0 * s.dalpha1, 0.05);
}

// ---------------------------------------------------------------------------
// Frames

enum class SlopeBackend { gamma, ode };

inline const char* to_string(SlopeBackend b) { return b == SlopeBackend::gamma ? "gamma" : "ode"; }

struct DecompOptions {
    double delta1 = 0.05;
    SlopeBackend backend = SlopeBackend::gamma;
    double epsilon = 1.0;       // viscosity scale of the run; the viscous coefficients enter as epsilon * alpha
    double nbhd_radius = 0.05;  // centre-manifold neighbourhood for the ode backend
    ManifoldOptions manifold;
};

struct DecompFrame {
    double t = 0.0;
    FieldPair u;
    Field v1, v2, w1, z1, sigma1, s;
    Field lambda_t1;  // lambda1 - epsilon alpha1' v1
    std::optional<Field> h1, h2, hhat1;
    std::optional<Field> phi2;

    const Grid1D& grid() const { return u.grid(); }
    bool has_h() const { return h1.has_value(); }

    void write_csv(std::ostream& os, bool header = true) const {
        if (header) os << "t,x,v1,v2,w1,z1,sigma1" << (has_h() ? ",h1,h2,hhat1" : "") << '\n';
        os << std::setprecision(17);
        for (std::size_t i = 0; i < v1.size(); ++i) {
            os << t << ',' << grid().x(i) << ',' << v1[i] << ',' << v2[i] << ',' << w1[i] << ',' << z1[i] << ','
               << sigma1[i];
            if (has_h()) os << ',' << (*h1)[i] << ',' << (*h2)[i] << ',' << (*hhat1)[i];
            os << '\n';
        }
    }
};

struct NeighbourhoodError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Centre-manifold slope s(u, v1, sigma); v1 is the spatial gradient of the run (the profile
// variable is epsilon v1).
inline double s_eval(const ModelSpec& m, const State& u, double v1, double sigma, SlopeBackend backend,
                     const DecompOptions& opt = {}) {
    const State& us = m.u_star;
    const double r = opt.nbhd_radius;
    const double l1 = m.lambda1(us);
    if (std::abs(u[0] - us[0]) > r || std::abs(u[1] - us[1]) > r || std::abs(opt.epsilon * v1) > r ||
        std::abs(sigma - l1) > 2.0 * opt.delta1 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os.precision(10);
        os << "s_eval: (u=(" << u[0] << ", " << u[1] << "), v1=" << v1 << ", sigma=" << sigma
           << ") outside the centre-manifold neighbourhood";
        throw NeighbourhoodError(os.str());
    }
    if (backend == SlopeBackend::gamma || v1 == 0.0) return m.gamma(u);
    return center_manifold_slope(m, u, opt.epsilon * v1, sigma, opt.manifold);
}

// sigma1 = lambda1(u*) + theta(-w~1 / v1), w~1 = w1 + lambda1(u*) v1; saturates to lambda1(u*)
// wherever |w~1| >= 3 delta1 |v1|, including v1 = 0.
inline double local_speed(double w1, double v1, double lambda_star, const CutoffTheta& theta) {
    const double wt = w1 + lambda_star * v1;
    if (std::abs(wt) >= 3.0 * theta.delta1() * std::abs(v1)) return lambda_star;
    return lambda_star + theta(-wt / v1);
}

inline DecompFrame compute_frame(const FieldPair& u, const ModelSpec& m, const CutoffTheta& theta,
                                 const DecompOptions& opt = {}, double t = 0.0) {
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) m.require_admissible({u.u1[i], u.u2[i]});
    const double eps = opt.epsilon;
    const double lstar = m.lambda1(m.u_star);
    DecompFrame fr;
    fr.t = t;
    fr.u = u;
    fr.v1 = d_dx(u.u1);
    const Field a1 = zip([&](double x) { return eps * m.a1({x, 0.0}); }, u.u1);
    fr.lambda_t1 = zip([&](double x, double v) { return m.lambda1({x, 0.0}) - eps * m.da1({x, 0.0}) * v; }, u.u1, fr.v1);
    fr.w1 = zip([](double a, double dv, double lt, double v) { return a * dv - lt * v; }, a1, d_dx(fr.v1), fr.lambda_t1,
                fr.v1);
    fr.z1 = zip([](double a, double dw, double lt, double w) { return a * dw - lt * w; }, a1, d_dx(fr.w1), fr.lambda_t1,
                fr.w1);
    fr.sigma1 = zip([&](double w, double v) { return local_speed(w, v, lstar, theta); }, fr.w1, fr.v1);
    fr.s = Field(u.grid());
    for (std::size_t i = 0; i < n; ++i) {
        const State ui{u.u1[i], u.u2[i]};
        fr.s[i] = opt.backend == SlopeBackend::gamma ? m.gamma(ui)
                                                     : s_eval(m, ui, fr.v1[i], fr.sigma1[i], opt.backend, opt);
    }
    fr.v2 = zip([](double du2, double s, double v) { return du2 - s * v; }, d_dx(u.u2), fr.s, fr.v1);
    return fr;
}

// h = h1 r~1 + h2 r2 with the base frame's slope, and h^1 = alpha1 h1_x - lambda~1 h1.
inline void attach_linearization(DecompFrame& fr, const FieldPair& h, const ModelSpec& m, double epsilon = 1.0);

inline Field compute_hhat(const DecompFrame& hframe, const ModelSpec& m, double epsilon = 1.0) {
    if (!hframe.h1) throw std::invalid_argument("compute_hhat: frame carries no h1");
    const Field& h1 = *hframe.h1;
    return zip([&](double x, double dh, double lt, double h) { return epsilon * m.a1({x, 0.0}) * dh - lt * h; },
               hframe.u.u1, d_dx(h1), hframe.lambda_t1, h1);
}

inline void attach_linearization(DecompFrame& fr, const FieldPair& h, const ModelSpec& m, double epsilon) {
    fr.u.u1.check(h.u1);
    fr.h1 = h.u1;
    fr.h2 = zip([](double hh2, double s, double hh1) { return hh2 - s * hh1; }, h.u2, fr.s, h.u1);
    fr.hhat1 = compute_hhat(fr, m, epsilon);
}

// ---------------------------------------------------------------------------
// Residuals of the parabolic equations, evaluated between a frame and its companion

namespace detail {

inline void check_pair(const DecompFrame& a, const DecompFrame& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("frame pair: grid mismatch");
    if (!(b.t > a.t)) throw std::invalid_argument("frame pair: second frame must be later");
}

// q_t + (c q)_x - (a q_x)_x with the spatial part averaged over both frames
inline Field transport_residual(const Field& q0, const Field& q1, const Field& c0, const Field& c1, const Field& a0,
                                const Field& a1, double dt) {
    auto spatial = [](const Field& q, const Field& c, const Field& a) {
        return d_dx(zip([](double cc, double qq) { return cc * qq; }, c, q)) -
               d_dx(zip([](double aa, double dq) { return aa * dq; }, a, d_dx(q)));
    };
    const Field s0 = spatial(q0, c0, a0), s1 = spatial(q1, c1, a1);
    return zip([dt](double x0, double x1, double p0, double p1) { return (x1 - x0) / dt + 0.5 * (p0 + p1); }, q0, q1,
               s0, s1);
}

inline Field alpha1_field(const DecompFrame& f, const ModelSpec& m, double eps) {
    return zip([&](double x) { return eps * m.a1({x, 0.0}); }, f.u.u1);
}

} // namespace detail

namespace detail {

// transport speed lambda~2 = lambda2 - (r2 . alpha2) v2 and diffusion alpha2 of the second family
inline std::pair<Field, Field> second_family_coeffs(const DecompFrame& f, const ModelSpec& m, double epsilon) {
    Field c(f.grid()), a(f.grid());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const State u{f.u.u1[i], f.u.u2[i]};
        c[i] = m.lambda2(u) - epsilon * m.da2_r2(u) * f.v2[i];
        a[i] = epsilon * m.a2(u);
    }
    return {c, a};
}

} // namespace detail

// phi2 := v2_t + (lambda~2 v2)_x - (alpha2 v2_x)_x
inline Field phi2_residual(const DecompFrame& f0, const DecompFrame& f1, const ModelSpec& m, double epsilon = 1.0) {
    detail::check_pair(f0, f1);
    const auto [c0, a0] = detail::second_family_coeffs(f0, m, epsilon);
    const auto [c1, a1] = detail::second_family_coeffs(f1, m, epsilon);
    return detail::transport_residual(f0.v2, f1.v2, c0, c1, a0, a1, f1.t - f0.t);
}

// forcing of the h2 equation: h2_t + (lambda~2 h2)_x - (alpha2 h2_x)_x
inline Field h2_forcing_residual(const DecompFrame& f0, const DecompFrame& f1, const ModelSpec& m,
                                 double epsilon = 1.0) {
    detail::check_pair(f0, f1);
    if (!f0.h2 || !f1.h2) throw std::invalid_argument("h2_forcing_residual: frames carry no h2");
    const auto [c0, a0] = detail::second_family_coeffs(f0, m, epsilon);
    const auto [c1, a1] = detail::second_family_coeffs(f1, m, epsilon);
    return detail::transport_residual(*f0.h2, *f1.h2, c0, c1, a0, a1, f1.t - f0.t);
}

// residual of v1_t + (lambda~1 v1)_x - (alpha1 v1_x)_x = 0
inline Field v1_residual(const DecompFrame& f0, const DecompFrame& f1, const ModelSpec& m, double epsilon = 1.0) {
    detail::check_pair(f0, f1);
    return detail::transport_residual(f0.v1, f1.v1, f0.lambda_t1, f1.lambda_t1, detail::alpha1_field(f0, m, epsilon),
                                      detail::alpha1_field(f1, m, epsilon), f1.t - f0.t);
}

// residual of w1_t + (lambda~1 w1)_x - (alpha1 w1_x)_x = 0
inline Field w1_residual(const DecompFrame& f0, const DecompFrame& f1, const ModelSpec& m, double epsilon = 1.0) {
    detail::check_pair(f0, f1);
    return detail::transport_residual(f0.w1, f1.w1, f0.lambda_t1, f1.lambda_t1, detail::alpha1_field(f0, m, epsilon),
                                      detail::alpha1_field(f1, m, epsilon), f1.t - f0.t);
}

// residual of h1_t + (lambda~1 h1)_x - (alpha1 h1_x)_x = 0
inline Field h1_residual(const DecompFrame& f0, const DecompFrame& f1, const ModelSpec& m, double epsilon = 1.0) {
    detail::check_pair(f0, f1);
    if (!f0.h1 || !f1.h1) throw std::invalid_argument("h1_residual: frames carry no h1");
    return detail::transport_residual(*f0.h1, *f1.h1, f0.lambda_t1, f1.lambda_t1, detail::alpha1_field(f0, m, epsilon),
                                      detail::alpha1_field(f1, m, epsilon), f1.t - f0.t);
}

// Forcing of the h^1 equation:
// -a1'(v1 h^_x - v1_x h^) + a1 (l1' - v1 a1'')(v1 h1_x - v1_x h1) + a1'(w1_x h1 - w1 h1_x) + 2 l~1 a1'(h1 v1_x - h1_x v1)
inline Field hhat_forcing(const DecompFrame& f, const ModelSpec& m, double epsilon = 1.0) {
    if (!f.hhat1) throw std::invalid_argument("hhat_forcing: frame carries no hhat1");
    const Field& h = *f.h1;
    const Field& hh = *f.hhat1;
    const Field hx = d_dx(h), hhx = d_dx(hh), vx = d_dx(f.v1), wx = d_dx(f.w1);
    Field out(f.grid());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const State u{f.u.u1[i], 0.0};
        const double a = epsilon * m.a1(u), ap = epsilon * m.da1(u), app = epsilon * m.dda1(u);
        const double v = f.v1[i], w = f.w1[i], lt = f.lambda_t1[i];
        out[i] = -ap * (v * hhx[i] - vx[i] * hh[i]) + a * (m.dlambda1(u) - v * app) * (v * hx[i] - vx[i] * h[i]) +
                 ap * (wx[i] * h[i] - w * hx[i]) + 2.0 * lt * ap * (h[i] * vx[i] - hx[i] * v);
    }
    return out;
}

// residual of h^1_t + (lambda~1 h^1)_x - (alpha1 h^1_x)_x - forcing
inline Field hhat_residual(const DecompFrame& f0, const DecompFrame& f1, const ModelSpec& m, double epsilon = 1.0) {
    detail::check_pair(f0, f1);
    if (!f0.hhat1 || !f1.hhat1) throw std::invalid_argument("hhat_residual: frames carry no hhat1");
    Field r = detail::transport_residual(*f0.hhat1, *f1.hhat1, f0.lambda_t1, f1.lambda_t1,
                                         detail::alpha1_field(f0, m, epsilon), detail::alpha1_field(f1, m, epsilon),
                                         f1.t - f0.t);
    const Field g0 = hhat_forcing(f0, m, epsilon), g1 = hhat_forcing(f1, m, epsilon);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= 0.5 * (g0[i] + g1[i]);
    return r;
}

// ---------------------------------------------------------------------------
// Source classes

// One field per class; the ratio-gradient class v1^2 ((w~1/v1)_x)^2 is evaluated as
// (w~1_x v1 - w~1 v1_x)^2 / v1^2 on {|w~1| <= 3 delta1 |v1|, v1 != 0} and 0 elsewhere.
inline std::map<std::string, Field> source_bounds(const DecompFrame& f, const ModelSpec& m, double delta1) {
    const double lstar = m.lambda1(m.u_star);
    const Field v1x = d_dx(f.v1), v1xx = d_dx(v1x), w1x = d_dx(f.w1), w1xx = d_dx(w1x), v2x = d_dx(f.v2);
    std::map<std::string, Field> out;
    out["v1x_w1_plus_sigma_v1"] =
        zip([](double vx, double w, double s, double v) { return vx * (w + s * v); }, v1x, f.w1, f.sigma1, f.v1);
    out["w1_v1x_minus_w1x_v1"] = zip([](double w, double vx, double wx, double v) { return w * vx - wx * v; }, f.w1, v1x,
                                     w1x, f.v1);
    out["ratio_gradient"] = zip(
        [&](double w, double wx, double v, double vx) {
            const double wt = w + lstar * v, wtx = wx + lstar * vx;
            if (v == 0.0 || std::abs(wt) > 3.0 * delta1 * std::abs(v)) return 0.0;
            const double num = wtx * v - wt * vx;
            return num * num / (v * v);
        },
        f.w1, w1x, f.v1, v1x);
    out["v1_v2"] = zip([](double a, double b) { return a * b; }, f.v1, f.v2);
    out["v1x_v2"] = zip([](double a, double b) { return a * b; }, v1x, f.v2);
    out["v2x_v1"] = zip([](double a, double b) { return a * b; }, v2x, f.v1);
    out["w1xx_v1_minus_v1xx_w1"] =
        zip([](double wxx, double v, double vxx, double w) { return wxx * v - vxx * w; }, w1xx, f.v1, v1xx, f.w1);
    return out;
}

// ---------------------------------------------------------------------------
// The z1 identity
//   z1_x v1 - v1_x z1 = alpha1 (w1_xx v1 - w1 v1_xx) + (alpha1' v1 - 2 lambda~1)(w1_x v1 - v1_x w1)

// Residual at one point from a jet of u1 (derivatives up to order 4); exact up to rounding.
inline double identity_residual(const ModelSpec& m, const Jet<4>& u1, double epsilon = 1.0) {
    using J = Jet<4>;
    const J zero(0.0);
    const J a = epsilon * m.alpha1(u1, zero);
    const J ap = epsilon * m.alpha1.derivative(1, 0)(u1, zero);
    const J lam = m.f.derivative(1, 0)(u1, zero);
    const J v = u1.dx();
    const J lt = lam - ap * v;
    const J w = a * v.dx() - lt * v;
    const J z = a * w.dx() - lt * w;
    const J lhs = z.dx() * v - v.dx() * z;
    const J rhs = a * (w.dx().dx() * v - w * v.dx().dx()) + (ap * v - 2.0 * lt) * (w.dx() * v - v.dx() * w);
    return (lhs - rhs).value();
}

// Pointwise jet residual with derivatives D^k u1 from repeated d_dx.
inline Field identity_residual_exact(const ModelSpec& m, const Field& u1, double epsilon = 1.0) {
    const Field d1 = d_dx(u1), d2 = d_dx(d1), d3 = d_dx(d2), d4 = d_dx(d3);
    Field r(u1.grid());
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = identity_residual(m, Jet<4>::from_derivatives({u1[i], d1[i], d2[i], d3[i], d4[i]}), epsilon);
    return r;
}

// The same identity with the frame's discrete fields; O(dx^2) on smooth data.
inline Field identity_residual_frame(const DecompFrame& f, const ModelSpec& m, double epsilon = 1.0) {
    const Field v1x = d_dx(f.v1), v1xx = d_dx(v1x), w1x = d_dx(f.w1), w1xx = d_dx(w1x), z1x = d_dx(f.z1);
    Field r(f.grid());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const State u{f.u.u1[i], 0.0};
        const double a = epsilon * m.a1(u), ap = epsilon * m.da1(u);
        const double v = f.v1[i], w = f.w1[i], lt = f.lambda_t1[i];
        const double lhs = z1x[i] * v - v1x[i] * f.z1[i];
        const double rhs = a * (w1xx[i] * v - w * v1xx[i]) + (ap * v - 2.0 * lt) * (w1x[i] * v - v1x[i] * w);
        r[i] = lhs - rhs;
    }
    return r;
}

// h1_xx v1 - h1 v1_xx = [(h^_x v1 - h^ v1_x) + (h1_x w1 - h1 w1_x)] / alpha1 + (2 l~1 - alpha1' v1)/alpha1 (h1_x v1 - h1 v1_x)
inline Field h_identity_residual(const DecompFrame& f, const ModelSpec& m, double epsilon = 1.0) {
    if (!f.hhat1) throw std::invalid_argument("h_identity_residual: frame carries no hhat1");
    const Field& h = *f.h1;
    const Field& hh = *f.hhat1;
    const Field hx = d_dx(h), hxx = d_dx(hx), hhx = d_dx(hh), vx = d_dx(f.v1), vxx = d_dx(vx), wx = d_dx(f.w1);
    Field r(f.grid());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const State u{f.u.u1[i], 0.0};
        const double a = epsilon * m.a1(u), ap = epsilon * m.da1(u);
        const double v = f.v1[i], w = f.w1[i], lt = f.lambda_t1[i];
        const double lhs = hxx[i] * v - h[i] * vxx[i];
        const double rhs = ((hhx[i] * v - hh[i] * vx[i]) + (hx[i] * w - h[i] * wx[i])) / a +
                           (2.0 * lt - ap * v) / a * (hx[i] * v - h[i] * vx[i]);
        r[i] = lhs - rhs;
    }
    return r;
}

// Frames for every snapshot of a run. When the run recorded companion steps, each frame also
// carries phi2 and the companion frame is kept for the other residuals.
struct FrameSeries {
    std::vector<DecompFrame> frames;
    std::vector<std::optional<DecompFrame>> companions;

    std::vector<double> times() const {
        std::vector<double> ts;
        for (const auto& f : frames) ts.push_back(f.t);
        return ts;
    }
};

// `opt.epsilon` is taken from the run. `h_run`, when given, is the first variation along `run`.
inline FrameSeries compute_frames(const SolveRun& run, const CutoffTheta& theta, DecompOptions opt = {},
                                  const SolveRun* h_run = nullptr) {
    opt.epsilon = run.config.epsilon;
    if (h_run && h_run->snapshots.size() != run.snapshots.size())
        throw std::invalid_argument("compute_frames: base and linearized runs are not aligned");
    FrameSeries out;
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
        const Snapshot& sn = run.snapshots[k];
        DecompFrame f = compute_frame(sn.u, run.model, theta, opt, sn.t);
        if (h_run) attach_linearization(f, h_run->snapshots[k].u, run.model, opt.epsilon);
        std::optional<DecompFrame> comp;
        if (sn.companion) {
            comp = compute_frame(*sn.companion, run.model, theta, opt, sn.t + sn.companion_dt);
            if (h_run) {
                const Snapshot& hs = h_run->snapshots[k];
                if (!hs.companion) throw std::invalid_argument("compute_frames: linearized run lacks companions");
                attach_linearization(*comp, *hs.companion, run.model, opt.epsilon);
            }
            f.phi2 = phi2_residual(f, *comp, run.model, opt.epsilon);
        }
        out.frames.push_back(std::move(f));
        out.companions.push_back(std::move(comp));
    }
    return out;
}

inline void write_frames_csv(std::ostream& os, const FrameSeries& fs) {
    for (std::size_t k = 0; k < fs.frames.size(); ++k) fs.frames[k].write_csv(os, k == 0);
}

} // namespace vvlab
