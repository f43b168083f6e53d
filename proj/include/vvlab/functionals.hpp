#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "decomposition.hpp"
#include "model.hpp"

namespace vvlab {

enum class SeriesKind { instantaneous, cumulative };

inline const char* to_string(SeriesKind k) { return k == SeriesKind::instantaneous ? "instantaneous" : "cumulative"; }

struct SeriesSample {
    double t, value;
};

struct FunctionalSeries {
    std::string name;
    SeriesKind kind = SeriesKind::instantaneous;
    std::vector<SeriesSample> samples;

    void push(double t, double value) {
        if (!samples.empty() && !(t > samples.back().t))
            throw std::invalid_argument("FunctionalSeries '" + name + "': times must be strictly increasing");
        samples.push_back({t, value});
    }
    double front() const { return samples.front().value; }
    double back() const { return samples.back().value; }
    double max() const {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& s : samples) m = std::max(m, s.value);
        return m;
    }
    // largest value over samples with t >= t0
    double sup_from(double t0) const {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& s : samples)
            if (s.t >= t0) m = std::max(m, s.value);
        return m;
    }
};

inline void write_series_csv(std::ostream& os, const std::vector<FunctionalSeries>& all, bool header = true) {
    if (header) os << "name,t,value\n";
    os << std::setprecision(17);
    for (const auto& s : all)
        for (const auto& p : s.samples) os << s.name << ',' << p.t << ',' << p.value << '\n';
}

inline const FunctionalSeries& find_series(const std::vector<FunctionalSeries>& all, const std::string& name) {
    for (const auto& s : all)
        if (s.name == name) return s;
    throw std::invalid_argument("no functional series named '" + name + "'");
}

// Cumulative trapezoid integral of an instantaneous series.
inline FunctionalSeries cumulate(const std::string& name, const std::vector<double>& ts, const std::vector<double>& vals) {
    if (ts.size() != vals.size()) throw std::invalid_argument("cumulate: length mismatch");
    FunctionalSeries out{name, SeriesKind::cumulative, {}};
    double acc = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        if (k > 0) acc += 0.5 * (ts[k] - ts[k - 1]) * (vals[k] + vals[k - 1]);
        out.push(ts[k], acc);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scalar functionals

// A = 1/2 double integral over x < y of |z1(x) z2(y) - z1(y) z2(x)|
inline double area_functional(const Field& z1, const Field& z2) { return double_integral_wedge(z1, z2); }

// L = integral of sqrt(v1^2 + w1^2), midpoint rule
inline double length_functional(const Field& v1, const Field& w1) {
    v1.check(w1);
    double s = 0.0;
    for (std::size_t i = 0; i < v1.size(); ++i) s += std::hypot(v1[i], w1[i]);
    return s * v1.grid().dx();
}

// ---------------------------------------------------------------------------
// Series over frames

namespace detail {

inline std::vector<double> per_frame(const FrameSeries& fs, const std::function<double(const DecompFrame&)>& fn) {
    std::vector<double> out;
    out.reserve(fs.frames.size());
    for (const auto& f : fs.frames) out.push_back(fn(f));
    return out;
}

inline double wedge_l1(const Field& a, const Field& b) {
    // integral of |a_x b - a b_x|
    const Field ax = d_dx(a), bx = d_dx(b);
    return integral_l1(zip([](double p, double q, double r, double s) { return p * q - r * s; }, ax, b, a, bx));
}

} // namespace detail

// Cumulative time integrals of the interaction terms. Names:
//   v1_v2, v1x_v2, v2x_v1, w1x_v1_wedge, z1x_v1_wedge, w1xx_v1_wedge, ratio_gradient, v1x_w1_plus_sigma_v1
inline std::vector<FunctionalSeries> interaction_integrals(const FrameSeries& fs, const ModelSpec& m, double delta1) {
    const std::vector<double> ts = fs.times();
    std::vector<std::pair<std::string, std::string>> classes = {
        {"v1_v2", "v1_v2"},
        {"v1x_v2", "v1x_v2"},
        {"v2x_v1", "v2x_v1"},
        {"w1x_v1_wedge", "w1_v1x_minus_w1x_v1"},
        {"w1xx_v1_wedge", "w1xx_v1_minus_v1xx_w1"},
        {"ratio_gradient", "ratio_gradient"},
        {"v1x_w1_plus_sigma_v1", "v1x_w1_plus_sigma_v1"},
    };
    std::vector<std::vector<double>> vals(classes.size());
    std::vector<double> zw;
    for (const auto& f : fs.frames) {
        const auto src = source_bounds(f, m, delta1);
        for (std::size_t c = 0; c < classes.size(); ++c) vals[c].push_back(integral_l1(src.at(classes[c].second)));
        zw.push_back(detail::wedge_l1(f.z1, f.v1));
    }
    std::vector<FunctionalSeries> out;
    for (std::size_t c = 0; c < classes.size(); ++c) out.push_back(cumulate(classes[c].first, ts, vals[c]));
    out.push_back(cumulate("z1x_v1_wedge", ts, zw));
    return out;
}

enum class EnergyVariable { v, h };

// Cumulative integral of thetahat(ratio) (d_x q)^2 with q = v1 (ratio w~1/v1) or q = h1 (ratio
// (h^1 + lambda1(u*) h1)/h1). thetahat is taken as 1 wherever |num| >= (4 delta1/5)|den|, including den = 0.
inline FunctionalSeries energy_term(const FrameSeries& fs, const ModelSpec& m, const CutoffThetaHat& th,
                                    EnergyVariable which) {
    const double ls = m.lambda1(m.u_star);
    auto integrand = [&](const DecompFrame& f) {
        if (which == EnergyVariable::h && !f.hhat1) throw std::invalid_argument("energy_term: frames carry no h1");
        const Field& q = which == EnergyVariable::v ? f.v1 : *f.h1;
        const Field& p = which == EnergyVariable::v ? f.w1 : *f.hhat1;
        const Field qx = d_dx(q);
        double s = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const double num = p[i] + ls * q[i], den = q[i];
            const double weight = std::abs(num) >= th.outer() * std::abs(den) ? 1.0 : th(num / den);
            s += weight * qx[i] * qx[i];
        }
        return s * q.grid().dx();
    };
    return cumulate(which == EnergyVariable::v ? "energy_v" : "energy_h", fs.times(), detail::per_frame(fs, integrand));
}

// Instantaneous functionals of the run, plus the cumulative dissipation of the area functional.
inline std::vector<FunctionalSeries> basic_series(const FrameSeries& fs, const ModelSpec& m, double epsilon) {
    const std::vector<double> ts = fs.times();
    std::vector<FunctionalSeries> out;
    auto inst = [&](const std::string& name, const std::function<double(const DecompFrame&)>& fn) {
        FunctionalSeries s{name, SeriesKind::instantaneous, {}};
        for (const auto& f : fs.frames) s.push(f.t, fn(f));
        out.push_back(std::move(s));
    };
    inst("total_variation", [](const DecompFrame& f) { return total_variation(f.u); });
    inst("uxx_l1", [](const DecompFrame& f) { return integral_l1(d2_dx2(f.u.u1)) + integral_l1(d2_dx2(f.u.u2)); });
    inst("uxxx_l1", [](const DecompFrame& f) {
        return integral_l1(d_dx(d2_dx2(f.u.u1))) + integral_l1(d_dx(d2_dx2(f.u.u2)));
    });
    inst("v1_l1", [](const DecompFrame& f) { return integral_l1(f.v1); });
    inst("v2_l1", [](const DecompFrame& f) { return integral_l1(f.v2); });
    inst("w1_l1", [](const DecompFrame& f) { return integral_l1(f.w1); });
    inst("area_v1_w1", [](const DecompFrame& f) { return area_functional(f.v1, f.w1); });
    inst("length", [](const DecompFrame& f) { return length_functional(f.v1, f.w1); });
    // integral of alpha1 |v1_x w1 - w1_x v1|
    out.push_back(cumulate("area_dissipation", ts, detail::per_frame(fs, [&](const DecompFrame& f) {
                               const Field v1x = d_dx(f.v1), w1x = d_dx(f.w1);
                               double s = 0.0;
                               for (std::size_t i = 0; i < v1x.size(); ++i)
                                   s += epsilon * m.a1({f.u.u1[i], f.u.u2[i]}) * std::abs(v1x[i] * f.w1[i] - w1x[i] * f.v1[i]);
                               return s * f.grid().dx();
                           })));
    bool have_phi2 = !fs.frames.empty();
    for (const auto& f : fs.frames) have_phi2 = have_phi2 && f.phi2.has_value();
    if (have_phi2)
        out.push_back(cumulate("phi2", ts, detail::per_frame(fs, [](const DecompFrame& f) { return integral_l1(*f.phi2); })));
    return out;
}

// ---------------------------------------------------------------------------
// Checks built from the series

// max over adjacent snapshot pairs of A(t') - A(t) + int_t^t' int alpha1 |v1x w1 - w1x v1|, relative to A(0)
inline double area_slack(const FunctionalSeries& area, const FunctionalSeries& dissipation) {
    const double a0 = area.front();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < area.samples.size(); ++k) {
        const double inc = area.samples[k + 1].value - area.samples[k].value;
        const double diss = dissipation.samples[k + 1].value - dissipation.samples[k].value;
        worst = std::max(worst, a0 > 0.0 ? (inc + diss) / a0 : inc + diss);
    }
    return worst;
}

// max over adjacent pairs of (L(t') - L(t)) / (t' - t), relative to L(0)
inline double length_growth_rate(const FunctionalSeries& length) {
    const double l0 = length.front();
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < length.samples.size(); ++k) {
        const auto& a = length.samples[k];
        const auto& b = length.samples[k + 1];
        worst = std::max(worst, (b.value - a.value) / (b.t - a.t) / (l0 > 0.0 ? l0 : 1.0));
    }
    return worst;
}

struct ChainCheck {
    double lhs = 0.0, rhs = 0.0;  // cumulative endpoints
    double c1_min = 0.0, coeff_sup = 0.0;
    bool holds(double tol) const { return lhs <= rhs * (1.0 + tol); }
};

// int int |w1xx v1 - w1 v1xx| <= (1/min alpha1) [int int |z1x v1 - z1 v1x| + sup|2 l~1 - alpha1' v1| int int |w1x v1 - v1x w1|]
inline ChainCheck estim2_chain(const FrameSeries& fs, const ModelSpec& m, double delta1, double epsilon) {
    const auto ii = interaction_integrals(fs, m, delta1);
    ChainCheck c;
    c.c1_min = std::numeric_limits<double>::infinity();
    for (const auto& f : fs.frames)
        for (std::size_t i = 0; i < f.v1.size(); ++i) {
            const State u{f.u.u1[i], f.u.u2[i]};
            c.c1_min = std::min(c.c1_min, epsilon * m.a1(u));
            c.coeff_sup = std::max(c.coeff_sup, std::abs(2.0 * f.lambda_t1[i] - epsilon * m.da1(u) * f.v1[i]));
        }
    c.lhs = find_series(ii, "w1xx_v1_wedge").back();
    c.rhs = (find_series(ii, "z1x_v1_wedge").back() + c.coeff_sup * find_series(ii, "w1x_v1_wedge").back()) / c.c1_min;
    return c;
}

struct TransversalCheck {
    double lhs = 0.0;  // int int |v1 v2|
    double rhs = 0.0;  // (1/c1)(|v1(0)| + int int |phi1|)(|v2(0)| + int int |phi2|), phi1 = 0
    double slack() const { return rhs - lhs; }
};

inline TransversalCheck transversal_bound(const FrameSeries& fs, const ModelSpec& m) {
    if (fs.frames.empty() || !fs.frames.front().phi2) throw std::invalid_argument("transversal_bound: frames need phi2");
    const auto ts = fs.times();
    TransversalCheck c;
    c.lhs = cumulate("", ts, detail::per_frame(fs, [](const DecompFrame& f) {
                return integral_l1(zip([](double a, double b) { return a * b; }, f.v1, f.v2));
            })).back();
    const double phi2 = cumulate("", ts, detail::per_frame(fs, [](const DecompFrame& f) { return integral_l1(*f.phi2); })).back();
    c.rhs = integral_l1(fs.frames.front().v1) * (integral_l1(fs.frames.front().v2) + phi2) / m.c_hyp;
    return c;
}

} // namespace vvlab
