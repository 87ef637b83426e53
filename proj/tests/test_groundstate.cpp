#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <mblz/groundstate.hpp>

#include "support.hpp"

using namespace mblz;
using testing_support::small_params;

namespace {

// Lowest eigenvalue of the non-interacting two-orbital lattice Hamiltonian,
// assembled as a dense matrix.
double linear_ground_energy(const ModelParams& p, double d) {
    const int nx = p.nx, ny = p.ny, n = nx * ny;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    auto idx = [&](int ix, int iy) { return ((iy + ny) % ny) * nx + (ix + nx) % nx; };
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            const int i = idx(ix, iy);
            const double x = std::numbers::pi * (ix - nx / 2), y = std::numbers::pi * (iy - ny / 2);
            const double v = 0.5 * p.omega * p.omega * (x * x + y * y);
            h(i, i) += v + d;
            h(n + i, n + i) += v - d;
            for (int s : {-1, 1}) {
                h(i, idx(ix + s, iy)) += -p.t1;
                h(i, idx(ix, iy + s)) += -p.t2;
                h(n + i, n + idx(ix + s, iy)) += -p.t2;
                h(n + i, n + idx(ix, iy + s)) += -p.t1;
            }
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    return es.eigenvalues()(0);
}

GroundConfig quick(double d) {
    GroundConfig c;
    c.detuning = d;
    c.dt = 0.2;
    c.dt_min = 0.05;
    c.tol_state = 1e-10;
    c.tol_energy = 1e-12;
    return c;
}

}  // namespace

TEST(Ground, LinearLimitMatchesDenseDiagonalization) {
    ModelParams p = small_params(6, 0.15);
    p.U = 0.0;
    for (double d : {-0.01, 0.0, 0.02}) {
        GroundConfig c = quick(d);
        c.dt_min = 0.0125;
        const GroundResult r = find_ground(c, p);
        const double e0 = linear_ground_energy(p, d);
        EXPECT_TRUE(r.report.converged);
        EXPECT_NEAR(r.report.energy, e0, 2e-5 * std::abs(e0)) << "d = " << d;
        EXPECT_NEAR(r.report.chemical_potential, e0, 2e-5 * std::abs(e0));
    }
}

TEST(Ground, InteractingStateIsStationaryAndDescends) {
    const ModelParams p = small_params(16, 0.05);
    const GroundResult r = find_ground(quick(-0.02), p);
    EXPECT_TRUE(r.report.converged);
    EXPECT_LT(r.report.residual, 1e-4);
    EXPECT_LE(r.report.max_energy_rise, 1e-12);
    EXPECT_NEAR(r.field.norm(), 1.0, 1e-13);
}

TEST(Ground, StrongDetuningPolarizesAndMirrors) {
    const ModelParams p = small_params(16, 0.05);
    const GroundResult a = find_ground(quick(-0.02), p);
    const GroundResult b = find_ground(quick(0.02), p);
    EXPECT_GT(imbalance(a.field).z_tot, 0.99);
    EXPECT_LT(imbalance(b.field).z_tot, -0.99);
    EXPECT_NEAR(a.report.energy, b.report.energy, 1e-9);
    const SpinorField m = mirror(a.field);
    double worst = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < m.sites(); ++i) {
        worst = std::max(worst, std::abs(std::norm(m.psi_y[i]) - std::norm(b.field.psi_y[i])));
        peak = std::max(peak, std::norm(b.field.psi_y[i]));
    }
    EXPECT_LT(worst / peak, 1e-5);
}

TEST(Ground, NonConvergenceIsReported) {
    const ModelParams p = small_params(8);
    GroundConfig c = quick(0.0);
    c.max_steps = 5;
    const GroundResult r = find_ground(c, p);
    EXPECT_FALSE(r.report.converged);
    EXPECT_EQ(r.report.steps, 5);
}

TEST(Ground, ProvidedStartAndValidation) {
    const ModelParams p = small_params(8);
    EXPECT_THROW(find_ground(quick(0.0), p, SpinorField(6, 6)), std::invalid_argument);
    GroundConfig c = quick(0.0);
    c.dt_min = 1.0;
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = quick(0.0);
    c.tol_energy = 0.0;
    EXPECT_THROW(find_ground(c, p), std::invalid_argument);
    std::mt19937_64 rng(1);
    EXPECT_THROW(initial_field(InitKind::provided, p, rng), std::invalid_argument);
}

TEST(Ground, InitialFieldIsNormalizedAndSeeded) {
    const ModelParams p = small_params(12);
    std::mt19937_64 r1(3), r2(3);
    const SpinorField a = initial_field(InitKind::random_phase_gaussian, p, r1);
    const SpinorField b = initial_field(InitKind::random_phase_gaussian, p, r2);
    EXPECT_EQ(a, b);
    EXPECT_NEAR(a.norm(), 1.0, 1e-14);
    std::mt19937_64 r3(3);
    EXPECT_NEAR(initial_field(InitKind::gaussian, p, r3).norm(), 1.0, 1e-14);
}

TEST(GroundScan, ThreadCountDoesNotChangeResults) {
    const ModelParams p = small_params(8, 0.08);
    const std::vector<double> ds{-0.01, 0.0, 0.01};
    const auto a = ground_scan(ds, p, quick(0.0), false, 1);
    const auto b = ground_scan(ds, p, quick(0.0), false, 3);
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].field, b[i].field);
        EXPECT_EQ(a[i].energy, b[i].energy);
    }
    EXPECT_GT(a[0].z_tot, a[2].z_tot);
}

TEST(GroundScan, WarmStartReachesTheSameStates) {
    const ModelParams p = small_params(8, 0.08);
    const std::vector<double> ds{-0.02, -0.01};
    const auto cold = ground_scan(ds, p, quick(0.0), false, 1);
    const auto warm = ground_scan(ds, p, quick(0.0), true, 1);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_NEAR(cold[i].energy, warm[i].energy, 1e-9);
        EXPECT_NEAR(cold[i].z_tot, warm[i].z_tot, 1e-5);
    }
    EXPECT_THROW(ground_scan({0.01, -0.01}, p, quick(0.0), false), std::invalid_argument);
}

TEST(Ground, ConvergedStateIsStationaryInRealTime) {
    const ModelParams p = small_params(16, 0.05);
    const GroundResult r = find_ground(quick(-0.02), p);
    ASSERT_TRUE(r.report.converged);
    // Pre-hold at detuning -0.02 for 10 time units.
    const SweepSchedule hold{0.02, -1.0, 1.0, 0.05, 10.0, 0.0};
    SplitStepper st(p, StepperConfig{hold.dt, TimeMode::real, NonlinearUpdate::midpoint});
    SpinorField f = r.field;
    for (long k = 0; k < 200; ++k) st.step(f, hold.time_at(k), hold);
    complex overlap = 0.0;
    for (std::size_t i = 0; i < f.sites(); ++i)
        overlap += std::conj(r.field.psi_x[i]) * f.psi_x[i] + std::conj(r.field.psi_y[i]) * f.psi_y[i];
    EXPECT_GE(std::abs(overlap), 1.0 - 1e-6);
}
