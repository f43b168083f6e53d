#include <gtest/gtest.h>

#include <random>

#include "vvlab/model.hpp"

using namespace vvlab;

namespace {

State random_state(const Box& b, std::mt19937& rng) {
    std::uniform_real_distribution<double> U1(b.u1_min, b.u1_max), U2(b.u2_min, b.u2_max);
    return {U1(rng), U2(rng)};
}

} // namespace

TEST(Poly2, DerivativesMatchFiniteDifferences) {
    Poly2 p({{0.3, -1.0, 0.5}, {2.0, 0.7}, {0.0, 0.0, 1.5}, {-0.4}});
    const double h = 1e-5;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    for (int k = 0; k < 50; ++k) {
        const double a = U(rng), b = U(rng);
        auto rel = [](double x, double y) { return std::abs(x - y) / (1.0 + std::abs(y)); };
        EXPECT_LE(rel(p.d1(a, b), (p(a + h, b) - p(a - h, b)) / (2 * h)), 1e-6);
        EXPECT_LE(rel(p.d2(a, b), (p(a, b + h) - p(a, b - h)) / (2 * h)), 1e-6);
        EXPECT_LE(rel(p.d11(a, b), (p.d1(a + h, b) - p.d1(a - h, b)) / (2 * h)), 1e-6);
        EXPECT_LE(rel(p.d12(a, b), (p.d1(a, b + h) - p.d1(a, b - h)) / (2 * h)), 1e-6);
        EXPECT_LE(rel(p.d22(a, b), (p.d2(a, b + h) - p.d2(a, b - h)) / (2 * h)), 1e-6);
    }
}

TEST(Poly2, JetCompositionMatchesDerivatives) {
    Poly2 p({{0.0, 1.0, 0.5}, {0.2, 1.0}, {0.0, 0.0, 0.3}});
    // along the line (u1, u2) = (x, 2x): d/dx p = p1 + 2 p2
    const double x = 0.17;
    auto j = p(Jet<3>::variable(x), 2.0 * Jet<3>::variable(x));
    EXPECT_NEAR(j.value(), p(x, 2 * x), 1e-15);
    EXPECT_NEAR(j.derivative(1), p.d1(x, 2 * x) + 2 * p.d2(x, 2 * x), 1e-14);
    EXPECT_NEAR(j.derivative(2), p.d11(x, 2 * x) + 4 * p.d12(x, 2 * x) + 4 * p.d22(x, 2 * x), 1e-13);
}

TEST(Beta, VanishesForScalarViscosityOrDecoupledFlux) {
    auto dec = make_model("decoupled_burgers", {{"a1_2", 1.0}});
    EXPECT_EQ(derive_beta(dec, {0.1, -0.2}), 0.0);
    auto lin = make_model("linear");
    EXPECT_EQ(derive_beta(lin, {0.2, 0.2}), 0.0);
    auto cb = make_model("coupled_burgers", {{"a1_2", 0.0}});
    EXPECT_EQ(derive_beta(cb, {0.2, 0.1}), 0.0);
}

TEST(Beta, CoupledBurgersReferenceValue) {
    auto m = make_model("coupled_burgers");
    // gamma = 0.2 / (0.1 - 1.3) = -1/6, beta = 0.0025 * gamma
    EXPECT_NEAR(m.gamma({0.1, 0.2}), -1.0 / 6.0, 1e-15);
    EXPECT_NEAR(derive_beta(m, {0.1, 0.2}), -0.0025 / 6.0, 1e-17);
    EXPECT_THROW(derive_beta(m, {0.5, 0.0}), DomainError);
}

TEST(Matrices, CommuteOnRandomStates) {
    std::mt19937 rng(5);
    for (const auto& fam : model_families()) {
        auto m = make_model(fam.name);
        for (int k = 0; k < 100; ++k) {
            auto [A, B] = matrices_AB(m, random_state(m.box, rng));
            EXPECT_LE(commutator_ratio(A, B), 1e-10) << fam.name;
        }
    }
}

TEST(Matrices, DecoupledCommutatorIsExactlyZero) {
    auto m = make_model("decoupled_burgers", {{"a1_2", 0.5}, {"a2_2", 2.0}});
    auto [A, B] = matrices_AB(m, {0.13, -0.21});
    EXPECT_EQ(A[1][0], 0.0);
    EXPECT_EQ(B[1][0], 0.0);
    EXPECT_EQ(commutator_norm(A, B), 0.0);
}

TEST(Matrices, PerturbedBetaBreaksCommutation) {
    auto m = make_model("temple_breaking");
    const State u{0.1, -0.05};
    auto [A, B] = matrices_AB(m, u);
    B[1][0] += 1e-3;
    EXPECT_GT(commutator_norm(A, B), 1e-5);
}

TEST(EigenFrame, DiagonalisesBothMatrices) {
    std::mt19937 rng(9);
    for (const auto& fam : model_families()) {
        auto m = make_model(fam.name);
        for (int k = 0; k < 50; ++k) {
            const State u = random_state(m.box, rng);
            auto e = eigen_frame(m, u);
            auto [A, B] = matrices_AB(m, u);
            Mat2 DA = matmul(matmul(e.P, A), e.P_inv), DB = matmul(matmul(e.P, B), e.P_inv);
            EXPECT_NEAR(DA[0][1], 0.0, 1e-12);
            EXPECT_NEAR(DA[1][0], 0.0, 1e-12);
            EXPECT_NEAR(DA[0][0], e.lambda1, 1e-12);
            EXPECT_NEAR(DA[1][1], e.lambda2, 1e-12);
            EXPECT_NEAR(DB[1][0], 0.0, 1e-12);
            EXPECT_NEAR(DB[0][0], m.a1(u), 1e-12);
            EXPECT_NEAR(DB[1][1], m.a2(u), 1e-12);
            Mat2 I = matmul(e.P, e.P_inv);
            EXPECT_EQ(I[0][0], 1.0);
            EXPECT_EQ(I[1][0], 0.0);
            // A r_i = lambda_i r_i, B r_i = alpha_i r_i
            EXPECT_NEAR(A[1][0] * e.r1[0] + A[1][1] * e.r1[1], e.lambda1 * e.r1[1], 1e-12);
            EXPECT_NEAR(B[1][0] * e.r1[0] + B[1][1] * e.r1[1], m.a1(u) * e.r1[1], 1e-12);
        }
    }
}

TEST(EigenFrame, ReferenceValues) {
    auto m = make_model("coupled_burgers");
    auto e = eigen_frame(m, {0.1, 0.2});
    EXPECT_NEAR(e.lambda1, 0.1, 1e-15);
    EXPECT_NEAR(e.lambda2, 1.3, 1e-15);
    EXPECT_NEAR(e.gamma, -1.0 / 6.0, 1e-15);
    auto d = eigen_frame(make_model("decoupled_burgers"), {0.1, 0.2});
    EXPECT_EQ(d.gamma, 0.0);
    EXPECT_EQ(d.P[1][0], 0.0);
}

TEST(DirectionalDerivativeOfB, MatchesFiniteDifference) {
    auto m = make_model("temple_breaking");
    const State u{0.05, -0.1}, h{0.3, -0.7};
    const double d = 1e-6;
    Mat2 Bp = m.B_unchecked({u[0] + d * h[0], u[1] + d * h[1]});
    Mat2 Bm = m.B_unchecked({u[0] - d * h[0], u[1] - d * h[1]});
    Mat2 dB = m.dB(u, h);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_NEAR(dB[i][j], (Bp[i][j] - Bm[i][j]) / (2 * d), 1e-8);
}

TEST(Validate, BuiltInsPass) {
    for (const auto& fam : model_families()) {
        auto r = validate(make_model(fam.name));
        EXPECT_TRUE(r.passed) << fam.name << ": " << r.summary();
    }
    auto r = validate(make_model("coupled_burgers"));
    EXPECT_NEAR(r.min_gap, 0.7, 1e-12);
    EXPECT_NEAR(r.min_gap_at[1], -0.3, 1e-12);
    auto lin = validate(make_model("linear"));
    EXPECT_EQ(lin.alpha1_min, 1.0);
    EXPECT_EQ(lin.alpha2_max, 1.0);
}

TEST(Validate, ReportsHyperbolicityWitness) {
    // lambda2 - lambda1 = c2 + u2 - u1 vanishes inside the box when c2 = 0.2
    auto m = make_model("decoupled_burgers", {{"c2", 0.2}});
    auto r = validate(m);
    EXPECT_FALSE(r.passed);
    ASSERT_FALSE(r.violations.empty());
    const auto& v = r.violations.front();
    EXPECT_NE(v.predicate.find("hyperbolicity"), std::string::npos);
    EXPECT_LT(v.value, m.c_hyp);
    EXPECT_NEAR(m.lambda2(v.witness) - m.lambda1(v.witness), v.value, 1e-15);
}

TEST(Validate, ReportsViscosityBounds) {
    auto m = make_model("coupled_burgers");
    m.M = 1.0;
    auto r = validate(m);
    EXPECT_FALSE(r.passed);
    EXPECT_NE(r.summary().find("alpha1"), std::string::npos);
}

TEST(Families, UnknownNamesThrow) {
    EXPECT_THROW(make_model("nope"), std::invalid_argument);
    EXPECT_THROW(make_model("linear", {{"zz", 1.0}}), std::invalid_argument);
}
