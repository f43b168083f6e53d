#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "polynomial.hpp"

namespace vvlab {

using State = std::array<double, 2>;
using Mat2 = std::array<std::array<double, 2>, 2>;

// Raised when a state leaves the validation box; the solver maps it to a blow-up.
struct DomainError : std::runtime_error {
    State witness;
    DomainError(const std::string& msg, State u) : std::runtime_error(msg), witness(u) {}
};

struct Box {
    double u1_min = -0.3, u1_max = 0.3, u2_min = -0.3, u2_max = 0.3;
    bool contains(const State& u) const {
        return u[0] >= u1_min && u[0] <= u1_max && u[1] >= u2_min && u[1] <= u2_max;
    }
};

inline Mat2 matmul(const Mat2& a, const Mat2& b) {
    Mat2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return c;
}

inline double max_abs(const Mat2& a) {
    return std::max({std::abs(a[0][0]), std::abs(a[0][1]), std::abs(a[1][0]), std::abs(a[1][1])});
}

struct EigenFrame {
    double lambda1 = 0.0, lambda2 = 0.0, gamma = 0.0;
    State r1{1.0, 0.0}, r2{0.0, 1.0};
    Mat2 P{}, P_inv{};
};

struct ModelSpec {
    std::string family;
    Poly2 f, g, alpha1, alpha2;
    State u_star{0.0, 0.0};
    double c_hyp = 0.0;
    double c1 = 0.0, M = 0.0;
    Box box;

    void require_admissible(const State& u) const {
        if (!box.contains(u)) {
            std::ostringstream os;
            os.precision(10);
            os << "state (" << u[0] << ", " << u[1] << ") outside validation box";
            throw DomainError(os.str(), u);
        }
    }

    // eigenvalues and coefficients; none of these check the box (hot path)
    double lambda1(const State& u) const { return f.d1(u[0], 0.0); }
    double lambda2(const State& u) const { return g.d2(u[0], u[1]); }
    double dlambda1(const State& u) const { return f.d11(u[0], 0.0); }
    double a1(const State& u) const { return alpha1(u[0], 0.0); }
    double a2(const State& u) const { return alpha2(u[0], u[1]); }
    double da1(const State& u) const { return alpha1.d1(u[0], 0.0); }
    double dda1(const State& u) const { return alpha1.d11(u[0], 0.0); }
    // derivative of alpha2 along r2 = (0,1)
    double da2_r2(const State& u) const { return alpha2.d2(u[0], u[1]); }

    double gamma(const State& u) const {
        return g.d1(u[0], u[1]) / (lambda1(u) - lambda2(u));
    }

    // gradient of gamma
    State dgamma(const State& u) const {
        const double gap = lambda1(u) - lambda2(u);
        const double g1 = g.d1(u[0], u[1]);
        const double dgap1 = f.d11(u[0], 0.0) - g.d12(u[0], u[1]);
        const double dgap2 = -g.d22(u[0], u[1]);
        return {(g.d11(u[0], u[1]) * gap - g1 * dgap1) / (gap * gap),
                (g.d12(u[0], u[1]) * gap - g1 * dgap2) / (gap * gap)};
    }

    double beta_unchecked(const State& u) const { return (a1(u) - a2(u)) * gamma(u); }

    State flux(const State& u) const { return {f(u[0], 0.0), g(u[0], u[1])}; }

    Mat2 A_unchecked(const State& u) const {
        return {{{lambda1(u), 0.0}, {g.d1(u[0], u[1]), lambda2(u)}}};
    }
    Mat2 B_unchecked(const State& u) const {
        return {{{a1(u), 0.0}, {beta_unchecked(u), a2(u)}}};
    }

    // directional derivative DB(u)[h]
    Mat2 dB(const State& u, const State& h) const {
        const double d_a1 = da1(u) * h[0];
        const double d_a2 = alpha2.d1(u[0], u[1]) * h[0] + alpha2.d2(u[0], u[1]) * h[1];
        const State dg = dgamma(u);
        const double d_gamma = dg[0] * h[0] + dg[1] * h[1];
        const double d_beta = (d_a1 - d_a2) * gamma(u) + (a1(u) - a2(u)) * d_gamma;
        return {{{d_a1, 0.0}, {d_beta, d_a2}}};
    }
};

inline double derive_beta(const ModelSpec& m, const State& u) {
    m.require_admissible(u);
    return m.beta_unchecked(u);
}

struct ABPair {
    Mat2 A, B;
};

inline ABPair matrices_AB(const ModelSpec& m, const State& u) {
    m.require_admissible(u);
    return {m.A_unchecked(u), m.B_unchecked(u)};
}

inline double commutator_norm(const Mat2& A, const Mat2& B) {
    const Mat2 ab = matmul(A, B), ba = matmul(B, A);
    Mat2 d{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) d[i][j] = ab[i][j] - ba[i][j];
    return max_abs(d);
}

// commutator scaled by the acceptance bound 1 + |A||B|
inline double commutator_ratio(const Mat2& A, const Mat2& B) {
    return commutator_norm(A, B) / (1.0 + max_abs(A) * max_abs(B));
}

inline EigenFrame eigen_frame(const ModelSpec& m, const State& u) {
    m.require_admissible(u);
    EigenFrame e;
    e.lambda1 = m.lambda1(u);
    e.lambda2 = m.lambda2(u);
    e.gamma = m.gamma(u);
    e.r1 = {1.0, e.gamma};
    e.r2 = {0.0, 1.0};
    e.P = {{{1.0, 0.0}, {-e.gamma, 1.0}}};
    e.P_inv = {{{1.0, 0.0}, {e.gamma, 1.0}}};
    return e;
}

struct Violation {
    std::string predicate;
    State witness{};
    double value = 0.0;
};

struct ValidationReport {
    bool passed = true;
    double min_gap = std::numeric_limits<double>::infinity();
    State min_gap_at{};
    double alpha1_min = std::numeric_limits<double>::infinity(), alpha1_max = -std::numeric_limits<double>::infinity();
    double alpha2_min = std::numeric_limits<double>::infinity(), alpha2_max = -std::numeric_limits<double>::infinity();
    double max_commutator_ratio = 0.0;
    // suprema over the box of first and second partial derivatives of f, g, alpha1, alpha2
    double kappa_first = 0.0, kappa_second = 0.0;
    std::vector<Violation> violations;

    std::string summary() const {
        std::ostringstream os;
        os.precision(10);
        os << (passed ? "model validation passed" : "model validation FAILED") << "; min(lambda2-lambda1)=" << min_gap
           << " at (" << min_gap_at[0] << ", " << min_gap_at[1] << ")"
           << "; alpha1 in [" << alpha1_min << ", " << alpha1_max << "]"
           << "; alpha2 in [" << alpha2_min << ", " << alpha2_max << "]"
           << "; max commutator ratio=" << max_commutator_ratio;
        for (const auto& v : violations)
            os << "\n  violated: " << v.predicate << " witness=(" << v.witness[0] << ", " << v.witness[1]
               << ") value=" << v.value;
        return os.str();
    }
};

inline ValidationReport validate(const ModelSpec& m, int lattice = 64) {
    ValidationReport r;
    constexpr double rel = 1e-12;
    auto fail = [&](const std::string& what, const State& u, double val) {
        r.passed = false;
        for (const auto& v : r.violations)
            if (v.predicate == what) return;
        r.violations.push_back({what, u, val});
    };

    if (m.f.depends_on_u2()) fail("f must depend on u1 only", m.u_star, 0.0);
    if (m.alpha1.depends_on_u2()) fail("alpha1 must depend on u1 only", m.u_star, 0.0);
    if (!(m.c_hyp > 0.0)) fail("c_hyp > 0", m.u_star, m.c_hyp);
    if (!(m.c1 > 0.0) || !(m.M >= m.c1)) fail("0 < c1 <= M", m.u_star, m.c1);
    if (!m.box.contains(m.u_star)) fail("u_star inside validation box", m.u_star, 0.0);

    const Box& b = m.box;
    for (int i = 0; i < lattice; ++i)
        for (int j = 0; j < lattice; ++j) {
            const State u{b.u1_min + (b.u1_max - b.u1_min) * i / (lattice - 1),
                          b.u2_min + (b.u2_max - b.u2_min) * j / (lattice - 1)};
            const double gap = m.lambda2(u) - m.lambda1(u);
            if (gap < r.min_gap) { r.min_gap = gap; r.min_gap_at = u; }
            if (gap < m.c_hyp * (1.0 - rel)) fail("strict hyperbolicity lambda2-lambda1 >= c_hyp", u, gap);
            const double a1 = m.a1(u), a2 = m.a2(u);
            r.alpha1_min = std::min(r.alpha1_min, a1);
            r.alpha1_max = std::max(r.alpha1_max, a1);
            r.alpha2_min = std::min(r.alpha2_min, a2);
            r.alpha2_max = std::max(r.alpha2_max, a2);
            if (a1 < m.c1 * (1.0 - rel) || a1 > m.M * (1.0 + rel)) fail("c1 <= alpha1 <= M", u, a1);
            if (a2 < m.c1 * (1.0 - rel) || a2 > m.M * (1.0 + rel)) fail("c1 <= alpha2 <= M", u, a2);
            if (gap != 0.0) {
                const double c = commutator_ratio(m.A_unchecked(u), m.B_unchecked(u));
                r.max_commutator_ratio = std::max(r.max_commutator_ratio, c);
                if (c > 1e-10) fail("commutator AB-BA within 1e-10(1+|A||B|)", u, c);
            }
            for (const Poly2* p : {&m.f, &m.g, &m.alpha1, &m.alpha2}) {
                r.kappa_first = std::max({r.kappa_first, std::abs(p->d1(u[0], u[1])), std::abs(p->d2(u[0], u[1]))});
                r.kappa_second = std::max({r.kappa_second, std::abs(p->d11(u[0], u[1])),
                                           std::abs(p->d12(u[0], u[1])), std::abs(p->d22(u[0], u[1]))});
            }
        }
    return r;
}

// sup over the box lattice of |lambda1'| and |alpha1'|, used for the default delta1
struct FirstFamilySlopes {
    double dlambda1 = 0.0, dalpha1 = 0.0;
};

inline FirstFamilySlopes first_family_slopes(const ModelSpec& m, int samples = 257) {
    FirstFamilySlopes s;
    for (int i = 0; i < samples; ++i) {
        const double u1 = m.box.u1_min + (m.box.u1_max - m.box.u1_min) * i / (samples - 1);
        s.dlambda1 = std::max(s.dlambda1, std::abs(m.f.d11(u1, 0.0)));
        s.dalpha1 = std::max(s.dalpha1, std::abs(m.alpha1.d1(u1, 0.0)));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Built-in families

struct FamilyParam {
    std::string name;
    double value;
    std::string doc;
};

struct FamilyInfo {
    std::string name;
    std::string description;
    std::vector<FamilyParam> params;
    // hypothesis constants valid for the default parameters on the default box
    double c_hyp, c1, M;
    std::function<void(ModelSpec&, const std::map<std::string, double>&)> build;
    State u_star{0.0, 0.0};
};

inline const std::vector<FamilyInfo>& model_families() {
    static const std::vector<FamilyInfo> families = {
        {"decoupled_burgers",
         "f = u1^2/2, g = c2*u2 + u2^2/2, alpha1 = a1_0 + a1_2*u1^2, alpha2 = a2_0 + a2_2*u2^2 (no coupling)",
         {{"c2", 1.0, "linear part of the second flux"},
          {"a1_0", 1.0, "constant part of alpha1"},
          {"a1_2", 0.0, "quadratic part of alpha1"},
          {"a2_0", 1.0, "constant part of alpha2"},
          {"a2_2", 0.0, "quadratic part of alpha2 (in u2)"}},
         0.4, 1.0, 1.0,
         [](ModelSpec& m, const std::map<std::string, double>& p) {
             m.f = Poly2::in_u1({0.0, 0.0, 0.5});
             m.g = Poly2::in_u2({0.0, p.at("c2"), 0.5});
             m.alpha1 = Poly2::in_u1({p.at("a1_0"), 0.0, p.at("a1_2")});
             m.alpha2 = Poly2::in_u2({p.at("a2_0"), 0.0, p.at("a2_2")});
         }},
        {"coupled_burgers",
         "f = u1^2/2, g = c2*u2 + u2^2/2 + k*u1*u2, alpha1 = a1_0 + a1_2*u1^2, alpha2 = a2_0",
         {{"c2", 1.0, "linear part of the second flux"},
          {"k", 1.0, "coupling coefficient of u1*u2 in g"},
          {"a1_0", 1.0, "constant part of alpha1"},
          {"a1_2", 0.25, "quadratic part of alpha1"},
          {"a2_0", 1.0, "alpha2 (constant)"}},
         0.7, 1.0, 1.0225,
         [](ModelSpec& m, const std::map<std::string, double>& p) {
             m.f = Poly2::in_u1({0.0, 0.0, 0.5});
             m.g = Poly2({{0.0, p.at("c2"), 0.5}, {0.0, p.at("k")}});
             m.alpha1 = Poly2::in_u1({p.at("a1_0"), 0.0, p.at("a1_2")});
             m.alpha2 = Poly2::constant(p.at("a2_0"));
         },
         // off the invariant line u2 = 0, on which the centre-manifold slope equals gamma exactly
         {0.0, 0.1}},
        {"temple_breaking",
         "f = u1^2/2 + f3*u1^3/6, g = c2*u2 + u2^2/2 + k*u1*u2 + m*u1^2*u2/2, "
         "alpha1 = 1 + a1_1*u1 + a1_2*u1^2, alpha2 = a2_0 + a2_11*u1*u2 + a2_2*u2^2",
         {{"f3", 0.5, "cubic part of f"},
          {"c2", 1.2, "linear part of the second flux"},
          {"k", 0.5, "coefficient of u1*u2 in g"},
          {"m", 1.0, "coefficient of u1^2*u2/2 in g"},
          {"a1_1", 0.5, "linear part of alpha1"},
          {"a1_2", 0.25, "quadratic part of alpha1"},
          {"a2_0", 0.8, "constant part of alpha2"},
          {"a2_11", 0.3, "coefficient of u1*u2 in alpha2"},
          {"a2_2", 0.2, "coefficient of u2^2 in alpha2"}},
         0.75, 0.75, 1.2,
         [](ModelSpec& m, const std::map<std::string, double>& p) {
             m.f = Poly2::in_u1({0.0, 0.0, 0.5, p.at("f3") / 6.0});
             m.g = Poly2({{0.0, p.at("c2"), 0.5}, {0.0, p.at("k")}, {0.0, p.at("m") / 2.0}});
             m.alpha1 = Poly2::in_u1({1.0, p.at("a1_1"), p.at("a1_2")});
             m.alpha2 = Poly2({{p.at("a2_0"), 0.0, p.at("a2_2")}, {0.0, p.at("a2_11")}});
         }},
        {"linear",
         "f = a*u1, g = b*u2, alpha1 = alpha2 = 1",
         {{"a", 0.25, "speed of the first family"}, {"b", 1.0, "speed of the second family"}},
         0.75, 1.0, 1.0,
         [](ModelSpec& m, const std::map<std::string, double>& p) {
             m.f = Poly2::in_u1({0.0, p.at("a")});
             m.g = Poly2::in_u2({0.0, p.at("b")});
             m.alpha1 = Poly2::constant(1.0);
             m.alpha2 = Poly2::constant(1.0);
         }},
    };
    return families;
}

inline const FamilyInfo* find_family(const std::string& name) {
    for (const auto& f : model_families())
        if (f.name == name) return &f;
    return nullptr;
}

// Builds a family with parameter overrides; unknown names throw std::invalid_argument.
inline ModelSpec make_model(const std::string& family, const std::map<std::string, double>& overrides = {}) {
    const FamilyInfo* info = find_family(family);
    if (!info) throw std::invalid_argument("unknown model family '" + family + "'");
    std::map<std::string, double> p;
    for (const auto& fp : info->params) p[fp.name] = fp.value;
    for (const auto& [k, v] : overrides) {
        if (!p.count(k)) throw std::invalid_argument("model family '" + family + "' has no parameter '" + k + "'");
        p[k] = v;
    }
    ModelSpec m;
    m.family = family;
    m.c_hyp = info->c_hyp;
    m.c1 = info->c1;
    m.M = info->M;
    m.u_star = info->u_star;
    info->build(m, p);
    return m;
}

} // namespace vvlab
