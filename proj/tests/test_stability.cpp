#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "vvlab/stability.hpp"

using namespace vvlab;

namespace {

FieldPair bumps(const Grid1D& g, double a1, double a2, double shift = 0.0) {
    return {Field::sample(g, [=](double x) { return a1 * std::exp(-(x - shift) * (x - shift) / 2.0); }),
            Field::sample(g, [=](double x) { return a2 * std::exp(-(x + shift) * (x + shift) / 3.0); })};
}

SolverConfig uniform_config(double t_end, int snapshots, bool companions = false) {
    SolverConfig cfg;
    cfg.t_end = t_end;
    cfg.companion_steps = companions;
    for (int k = 1; k < snapshots; ++k) cfg.snapshot_times.push_back(t_end * k / snapshots);
    return cfg;
}

// data of size delta0 and a perturbation of the same size with a different shape
std::pair<FieldPair, FieldPair> perturbation_pair(const Grid1D& g, double delta0) {
    FieldPair u = bumps(g, delta0, 0.8 * delta0, 1.0);
    FieldPair v = u;
    for (std::size_t i = 0; i < g.n(); ++i) {
        const double x = g.x(i);
        v.u1[i] += 0.5 * delta0 * std::exp(-(x + 2) * (x + 2)) * std::sin(2 * x);
        v.u2[i] -= 0.4 * delta0 * std::exp(-(x - 2) * (x - 2) / 2);
    }
    return {u, v};
}

const FunctionalSeries& series(const HhatDiagnostics& d, const std::string& name) { return find_series(d.series, name); }

} // namespace

TEST(Homotopy, IdenticalDataGivesZeroEverywhere) {
    auto m = make_model("coupled_burgers");
    Grid1D g(-10, 10, 200);
    auto u = bumps(g, 0.05, 0.05);
    auto rep = homotopy_stability(m, u, u, 3, uniform_config(1.0, 5));
    EXPECT_EQ(rep.measured_L, 0.0);
    EXPECT_EQ(rep.direct_ratio, 0.0);
    EXPECT_EQ(rep.homotopy_slack, 0.0);
    EXPECT_TRUE(rep.homotopy_bound_holds(0.0));
    for (const auto& r : rep.rows) EXPECT_EQ(r.norm_h, 0.0);
}

TEST(Homotopy, NeedsThreeThetaPoints) {
    auto m = make_model("linear");
    Grid1D g(-1, 1, 16);
    FieldPair u(g);
    EXPECT_THROW(homotopy_stability(m, u, u, 2, uniform_config(0.1, 1)), std::invalid_argument);
}

TEST(Homotopy, LinearModelIntegralEqualsDirectDistance) {
    // h solves the same linear equation as u - v, so both sides of the homotopy bound coincide
    auto m = make_model("linear");
    Grid1D g(-10, 10, 200);
    auto [u, v] = perturbation_pair(g, 0.05);
    auto rep = homotopy_stability(m, u, v, 3, uniform_config(2.0, 10));
    EXPECT_NEAR(rep.homotopy_slack, 0.0, 1e-12);
    EXPECT_LE(rep.measured_L, 1.0 + 1e-12);
}

TEST(Homotopy, NearTranslatesContractInL1) {
    auto m = make_model("coupled_burgers");
    Grid1D g(-20, 20, 400);
    FieldPair u = bumps(g, 0.05, 0.04, 1.0);
    FieldPair v = u;
    for (std::size_t i = 0; i < g.n(); ++i) {
        const double x = g.x(i) - g.dx();
        v.u1[i] = 0.05 * std::exp(-(x - 1) * (x - 1) / 2.0);
        v.u2[i] = 0.04 * std::exp(-(x + 1) * (x + 1) / 3.0);
    }
    auto rep = homotopy_stability(m, u, v, 3, uniform_config(4.0, 20));
    EXPECT_LE(rep.direct_ratio, 1.1);
}

TEST(Homotopy, GenericPerturbationIsLipschitzStable) {
    auto m = make_model("coupled_burgers");
    Grid1D g(-20, 20, 512);
    auto [u, v] = perturbation_pair(g, 0.05);
    StabilityOptions opt;
    opt.delta1 = default_delta1(m, 0.05);
    auto rep = homotopy_stability(m, u, v, 5, uniform_config(4.0, 40), opt);
    EXPECT_LE(rep.measured_L, 3.0);
    EXPECT_TRUE(rep.homotopy_bound_holds(0.02)) << rep.homotopy_slack;
    EXPECT_LE(rep.h1_growth, 1e-6);
    EXPECT_GT(rep.direct_ratio, 0.0);
    EXPECT_EQ(rep.rows.size(), 5u * 41u);
}

TEST(Homotopy, CsvHasOneRowPerThetaAndTime) {
    StabilityReport rep;
    rep.rows = {{0.0, 0.0, 1.0, 0.5, 0.25}, {1.0, 2.0, 0.5, 0.25, 0.125}};
    std::ostringstream os;
    rep.write_csv(os);
    EXPECT_EQ(os.str(), "theta,t,norm_h,norm_h1,norm_h2\n0,0,1,0.5,0.25\n1,2,0.5,0.25,0.125\n");
}

TEST(Hhat, ZeroVariationGivesZeroSeries) {
    auto m = make_model("coupled_burgers");
    Grid1D g(-10, 10, 200);
    auto u = bumps(g, 0.05, 0.05);
    auto [base, lin] = solve_with_tangent(m, u, FieldPair(g), uniform_config(1.0, 5, true));
    auto d = hhat_diagnostics(base, lin, m, 0.05);
    for (const auto& s : d.series)
        for (const auto& p : s.samples) EXPECT_EQ(p.value, 0.0) << s.name;
    EXPECT_EQ(d.max_scaled_identity(), 0.0);
}

TEST(Hhat, TranslationModeReproducesFirstFamilySeries) {
    auto m = make_model("coupled_burgers");
    Grid1D g(-20, 20, 1024);
    auto u = bumps(g, 0.1, 0.08, 1.0);
    const FieldPair h0{d_dx(u.u1), d_dx(u.u2)};
    auto [base, lin] = solve_with_tangent(m, u, h0, uniform_config(2.0, 40));
    const double d1 = 0.05;
    const FrameSeries fs = compute_frames(base, CutoffTheta(d1), {}, &lin);
    auto d = hhat_diagnostics(fs, m, d1, 1.0);
    auto ii = interaction_integrals(fs, m, d1);
    // h1 = v1 and h^1 = w1 in this mode
    const double a = find_series(ii, "w1x_v1_wedge").back();
    EXPECT_NEAR(series(d, "h1x_w1_wedge").back(), a, 0.01 * a);
    EXPECT_NEAR(series(d, "hhat1x_v1_wedge").back(), a, 0.01 * a);
    const double b = find_series(ii, "w1xx_v1_wedge").back();
    EXPECT_NEAR(series(d, "h1xx_w1_wedge").back(), b, 0.02 * b);
    EXPECT_LE(series(d, "h1x_v1_wedge").back(), 0.01 * a);
}

TEST(Hhat, CumulativeEndpointsScaleQuadratically) {
    auto m = make_model("coupled_burgers");
    Grid1D g(-20, 20, 512);
    auto endpoint = [&](double delta0) {
        auto [u, v] = perturbation_pair(g, delta0);
        auto [base, lin] = solve_with_tangent(m, u, u - v, uniform_config(2.0, 40));
        return hhat_diagnostics(base, lin, m, 0.05);
    };
    auto big = endpoint(0.1), small = endpoint(0.05);
    for (const char* name : {"h1x_v1_wedge", "h1x_w1_wedge", "hhat1x_v1_wedge", "h1xx_v1_wedge"}) {
        const double factor = series(big, name).back() / series(small, name).back();
        EXPECT_GE(factor, 3.2) << name;
        EXPECT_LE(factor, 4.8) << name;
    }
}

TEST(Hhat, IdentityResidualIsSecondOrder) {
    auto m = make_model("temple_breaking");
    auto scaled = [&](std::size_t n) {
        Grid1D g(-20, 20, n);
        auto [u, v] = perturbation_pair(g, 0.05);
        auto [base, lin] = solve_with_tangent(m, u, u - v, uniform_config(1.0, 4));
        return hhat_diagnostics(base, lin, m, 0.05);
    };
    auto coarse = scaled(400), fine = scaled(800);
    const double c1 = coarse.max_scaled_identity(), c2 = fine.max_scaled_identity();
    EXPECT_GT(c1, 0.0);
    EXPECT_LE(c2, 1.5 * c1);
    EXPECT_GE(c2, 0.5 * c1);
    std::ostringstream os;
    fine.write_identity_csv(os);
    EXPECT_EQ(os.str().substr(0, 33), "t,residual_l1,residual_over_dx2\n0");
}

TEST(Hhat, RejectsMisalignedRuns) {
    auto m = make_model("linear");
    Grid1D g(-5, 5, 64);
    auto u = bumps(g, 0.05, 0.05);
    auto base = solve(m, u, uniform_config(1.0, 4));
    auto other = solve(m, u, uniform_config(1.0, 3));
    EXPECT_THROW(hhat_diagnostics(base, other, m, 0.05), std::invalid_argument);
}
