#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <mblz/reference_lz.hpp>

using namespace mblz;

namespace {

// Fixed-step RK4 on the single-site onsite equations, written directly
// from the equations of motion with zero hopping and no trap.
std::array<complex, 2> single_site_rk4(complex px, complex py, double u, const SweepSchedule& s) {
    const complex mi(0.0, -1.0);
    const double c = 2.0 * u / 3.0;
    auto f = [&](double t, complex a, complex b) {
        const double d = s.detuning(t);
        const complex da = mi * (d * a + u * std::norm(a) * a + c * std::norm(b) * a + c * b * b * std::conj(a));
        const complex db = mi * (-d * b + u * std::norm(b) * b + c * std::norm(a) * b + c * a * a * std::conj(b));
        return std::array<complex, 2>{da, db};
    };
    const long n = s.total_steps();
    const int sub = 4;
    const double h = s.dt / sub;
    for (long k = 0; k < n * sub; ++k) {
        const double t = s.start_time() + k * h;
        const auto k1 = f(t, px, py);
        const auto k2 = f(t + h / 2, px + h / 2 * k1[0], py + h / 2 * k1[1]);
        const auto k3 = f(t + h / 2, px + h / 2 * k2[0], py + h / 2 * k2[1]);
        const auto k4 = f(t + h, px + h * k3[0], py + h * k3[1]);
        px += h / 6 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        py += h / 6 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    return {px, py};
}

}  // namespace

TEST(LzFormula, AnalyticValues) {
    EXPECT_NEAR(lz_analytic(1.0, 2.0 * std::numbers::pi), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(adiabaticity(0.5, 1.0), 0.5 * std::numbers::pi, 1e-15);
    EXPECT_THROW(lz_analytic(1.0, 0.0), std::invalid_argument);
}

TEST(LzIntegrate, MatchesFormulaOverRegimes) {
    for (double big_lambda : {0.05, 0.25, 1.0, 2.0, 4.0, 8.0})
        for (double rate : {2.0 * std::numbers::pi, 0.01}) {
            const double u = std::sqrt(big_lambda * rate / (2.0 * std::numbers::pi));
            const LzResult r = lz_integrate(two_level_defaults(u, rate));
            EXPECT_NEAR(r.p_numeric, std::exp(-big_lambda), 5e-6) << big_lambda << " " << rate;
            EXPECT_NEAR(r.lambda_parameter, big_lambda, 1e-12);
            EXPECT_LT(r.norm_error, 1e-12);
            EXPECT_TRUE(r.warnings.empty());
        }
}

TEST(LzIntegrate, DiabaticReadoutCarriesEndpointOscillation) {
    TwoLevelConfig c = two_level_defaults(1.0, 2.0 * std::numbers::pi);
    c.adiabatic_frame = false;
    const LzResult r = lz_integrate(c);
    EXPECT_EQ(r.p_numeric, r.p_diabatic);
    EXPECT_NEAR(r.p_numeric, std::exp(-1.0), 1e-2);
}

TEST(LzIntegrate, UncoupledLevelsNeverTransfer) {
    const LzResult r = lz_integrate(two_level_defaults(0.0, 1.0));
    EXPECT_NEAR(r.p_numeric, 1.0, 1e-15);
    EXPECT_NEAR(r.p_analytic, 1.0, 1e-15);
}

TEST(LzIntegrate, TrajectoryAndWarnings) {
    TwoLevelConfig c = two_level_defaults(0.5, 1.0);
    c.record_stride = 1000;
    const LzResult r = lz_integrate(c);
    ASSERT_GT(r.trajectory.size(), 2u);
    for (std::size_t i = 0; i < r.trajectory.size(); ++i)
        EXPECT_NEAR(r.trajectory.channel("p_x")[i] + r.trajectory.channel("p_y")[i], 1.0, 1e-12);
    c.t_i = -5.0;
    c.t_f = 5.0;
    c.record_stride = 0;
    EXPECT_FALSE(lz_integrate(c).warnings.empty());
}

TEST(LzIntegrate, RejectsBadConfigs) {
    TwoLevelConfig c;
    c.lambda = 0.0;
    EXPECT_THROW(lz_integrate(c), std::invalid_argument);
    c = TwoLevelConfig{};
    c.t_i = 1.0;
    EXPECT_THROW(lz_integrate(c), std::invalid_argument);
    c = TwoLevelConfig{};
    c.dt = 1.0;
    EXPECT_THROW(lz_integrate(c), std::invalid_argument);
    c = TwoLevelConfig{};
    c.coupling = -1.0;
    EXPECT_THROW(lz_integrate(c), std::invalid_argument);
}

TEST(SingleSite, ZeroSeedIsFrozen) {
    ModelParams p;
    p.t1 = p.t2 = 0.0;
    const SweepSchedule s{1e-4, -10.0, 10.0, 0.1, 0.0, 0.0};
    const SingleSiteResult r = single_site_nonlinear(p, s, 0.0);
    EXPECT_TRUE(r.frozen);
    EXPECT_FALSE(r.diagnostic.empty());
    EXPECT_NEAR(r.final_imbalance, 1.0, 1e-12);
}

TEST(SingleSite, MatchesRungeKuttaOracle) {
    ModelParams p;
    p.t1 = p.t2 = 0.0;
    p.U = 0.38;
    const SweepSchedule s{2e-3, -20.0, 20.0, 0.0025, 5.0, 5.0};
    const double f = 0.05;
    const SingleSiteResult r = single_site_nonlinear(p, s, f, 400);
    EXPECT_FALSE(r.frozen);
    EXPECT_LT(r.norm_error, 1e-12);
    const auto o = single_site_rk4(std::sqrt(1.0 / (1.0 + f)), std::sqrt(f / (1.0 + f)), p.U, s);
    EXPECT_NEAR(r.final_imbalance, std::norm(o[0]) - std::norm(o[1]), 1e-6);
    EXPECT_NEAR(r.trajectory.channel("z").front(), (1.0 - f) / (1.0 + f), 1e-14);
}

TEST(SingleSite, RequiresZeroHopping) {
    const ModelParams p;
    EXPECT_THROW(single_site_nonlinear(p, SweepSchedule{}, 0.01), std::invalid_argument);
    ModelParams q;
    q.t1 = q.t2 = 0.0;
    EXPECT_THROW(single_site_nonlinear(q, SweepSchedule{}, 1.5), std::invalid_argument);
}
