#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include <mblz/propagator.hpp>

#include "support.hpp"

using namespace mblz;
using testing_support::random_field;
using testing_support::small_params;

namespace {

// Truncated Taylor series of exp(c H), adequate for |c| ||H|| of order one.
Matrix2 expm_series(const Matrix2& h, complex c) {
    Matrix2 result, term;
    result(0, 0) = result(1, 1) = 1.0;
    term = result;
    for (int n = 1; n < 60; ++n) {
        Matrix2 next;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) next(i, j) = (term(i, 0) * h(0, j) + term(i, 1) * h(1, j)) * c / double(n);
        term = next;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) result(i, j) += term(i, j);
    }
    return result;
}

Matrix2 random_hermitian(std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix2 h;
    h(0, 0) = g(rng);
    h(1, 1) = g(rng);
    h(0, 1) = complex(g(rng), g(rng));
    h(1, 0) = std::conj(h(0, 1));
    return h;
}

SpinorField propagate(SpinorField f, const ModelParams& p, double dt, long n, double detuning) {
    SplitStepper s(p, {dt, TimeMode::real, NonlinearUpdate::midpoint});
    for (long k = 0; k < n; ++k) s.step(f, detuning);
    return f;
}

}  // namespace

TEST(Expm, UnitaryMatchesSeries) {
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 50; ++rep) {
        const Matrix2 h = random_hermitian(rng);
        const double tau = 0.3 * (rep % 5 + 1);
        const Matrix2 a = expm_unitary(h, tau);
        const Matrix2 b = expm_series(h, complex(0.0, -tau));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(a(i, j) - b(i, j)), 0.0, 1e-13);
        // U^dagger U = 1
        const Matrix2 ad = a.adjoint();
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const complex s = ad(i, 0) * a(0, j) + ad(i, 1) * a(1, j);
                EXPECT_NEAR(std::abs(s - (i == j ? 1.0 : 0.0)), 0.0, 1e-14);
            }
    }
}

TEST(Expm, ContractiveMatchesSeries) {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const Matrix2 h = random_hermitian(rng);
        const Matrix2 a = expm_contractive(h, 0.7);
        const Matrix2 b = expm_series(h, complex(-0.7, 0.0));
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(a(i, j) - b(i, j)), 0.0, 1e-12 * std::max(1.0, std::abs(b(i, j))));
    }
    Matrix2 zero;
    const Matrix2 id = expm_unitary(zero, 1.0);
    EXPECT_EQ(id(0, 0), complex(1.0));
    EXPECT_EQ(id(0, 1), complex(0.0));
}

TEST(SplitStepper, ConservesNorm) {
    const ModelParams p = small_params(16, 0.05);
    const SpinorField f0 = random_field(16, 16, 1);
    const SpinorField f = propagate(f0, p, 0.05, 2000, 0.01);
    EXPECT_NEAR(f.norm(), 1.0, 1e-12);
}

TEST(SplitStepper, FreePlaneWaveIsExact) {
    ModelParams p = small_params(8, 0.0);
    p.U = 0.0;
    const double kx = 2.0 * std::numbers::pi * 3 / 8, ky = 2.0 * std::numbers::pi * 1 / 8;
    SpinorField f(8, 8);
    for (int iy = 0; iy < 8; ++iy)
        for (int ix = 0; ix < 8; ++ix) {
            f.psi_x(ix, iy) = std::polar(0.1, kx * ix + ky * iy);
            f.psi_y(ix, iy) = std::polar(0.05, kx * ix + ky * iy);
        }
    const double d = 0.02, dt = 0.1;
    const long n = 500;
    const SpinorField g = propagate(f, p, dt, n, d);
    const double t = dt * n;
    const complex px = std::polar(1.0, -(dispersion(kx, ky, Orbital::x, p) + d) * t);
    const complex py = std::polar(1.0, -(dispersion(kx, ky, Orbital::y, p) - d) * t);
    for (std::size_t i = 0; i < f.sites(); ++i) {
        EXPECT_NEAR(std::abs(g.psi_x[i] - px * f.psi_x[i]), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(g.psi_y[i] - py * f.psi_y[i]), 0.0, 1e-12);
    }
}

TEST(SplitStepper, MirrorCovariance) {
    const ModelParams p = small_params(10, 0.08);
    const SpinorField f = random_field(10, 10, 9, 5.0);
    const SpinorField a = mirror(propagate(f, p, 0.05, 100, 0.01));
    const SpinorField b = propagate(mirror(f), p, 0.05, 100, -0.01);
    EXPECT_LT(max_abs_diff(a, b), 1e-12);
}

TEST(SplitStepper, GlobalPhaseCovariance) {
    const ModelParams p = small_params(8, 0.08);
    SpinorField f = random_field(8, 8, 19, 5.0);
    const SpinorField a = propagate(f, p, 0.05, 100, 0.0);
    const complex ph = std::polar(1.0, 1.1);
    for (std::size_t i = 0; i < f.sites(); ++i) {
        f.psi_x[i] *= ph;
        f.psi_y[i] *= ph;
    }
    const SpinorField b = propagate(f, p, 0.05, 100, 0.0);
    for (std::size_t i = 0; i < f.sites(); ++i) {
        EXPECT_NEAR(std::abs(a.psi_x[i] * ph - b.psi_x[i]), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(a.psi_y[i] * ph - b.psi_y[i]), 0.0, 1e-12);
    }
}

TEST(SplitStepper, SecondOrderInTimeStep) {
    const ModelParams p = small_params(8, 0.1);
    const SpinorField f = random_field(8, 8, 3, 10.0);
    const double t = 4.0;
    const SpinorField ref = propagate(f, p, 0.2 / 64, 64 * 20, 0.01);
    const double e1 = max_abs_diff(propagate(f, p, 0.2, 20, 0.01), ref);
    const double e2 = max_abs_diff(propagate(f, p, 0.1, 40, 0.01), ref);
    const double e4 = max_abs_diff(propagate(f, p, 0.05, 80, 0.01), ref);
    EXPECT_GT(e1 / e2, 3.5);
    EXPECT_GT(e2 / e4, 3.5);
    EXPECT_LT(e1 / e2, 4.5);
    (void)t;
}

TEST(SplitStepper, AgreesWithRungeKutta) {
    const ModelParams p = small_params(8, 0.1);
    const SpinorField f0 = random_field(8, 8, 17, 4.0);
    SweepSchedule sched{1e-3, -10.0, 10.0, 0.01, 0.0, 0.0};
    SpinorField a = f0, b = f0;
    SplitStepper s(p, {sched.dt, TimeMode::real, NonlinearUpdate::midpoint});
    const auto det = [&](double t) { return sched.detuning(t); };
    for (long k = 0; k < 200; ++k) {
        const double t = sched.time_at(k);
        s.step(a, t, sched);
        b = step_rk4(b, t, sched.dt, det, p);
    }
    EXPECT_LT(max_abs_diff(a, b), 1e-6);
}

TEST(SplitStepper, FrozenAndMidpointAgreeAtSmallSteps) {
    const ModelParams p = small_params(8, 0.1);
    const SpinorField f = random_field(8, 8, 23, 4.0);
    SplitStepper a(p, {0.002, TimeMode::real, NonlinearUpdate::frozen});
    SplitStepper b(p, {0.002, TimeMode::real, NonlinearUpdate::midpoint});
    SpinorField fa = f, fb = f;
    for (int k = 0; k < 100; ++k) {
        a.step(fa, 0.0);
        b.step(fb, 0.0);
    }
    EXPECT_LT(max_abs_diff(fa, fb), 1e-6);
}

TEST(SplitStepper, MidpointSampling) {
    const ModelParams p = small_params(6);
    const SweepSchedule sched{2e-3, -5.0, 5.0, 0.1, 0.0, 0.0};
    SpinorField a = random_field(6, 6, 2), b = a;
    SplitStepper s1(p, {0.1, TimeMode::real, NonlinearUpdate::midpoint});
    SplitStepper s2(p, {0.1, TimeMode::real, NonlinearUpdate::midpoint});
    s1.step(a, -1.0, sched);
    s2.step(b, sched.detuning(-0.95));
    EXPECT_EQ(a, b);
}

TEST(SplitStepper, ImaginaryGrowthOfZeroModeIsExact) {
    ModelParams p = small_params(8, 0.0);
    p.U = 0.0;
    SpinorField f(8, 8);
    for (std::size_t i = 0; i < f.sites(); ++i) f.psi_x[i] = 1.0 / 8.0;
    SplitStepper s(p, {0.1, TimeMode::imaginary, NonlinearUpdate::midpoint});
    const double g = s.step_imaginary(f, 0.0);
    const double eps = dispersion(0.0, 0.0, Orbital::x, p);
    EXPECT_NEAR(g, std::exp(-2.0 * eps * 0.1), 1e-13);
    EXPECT_NEAR(f.norm(), 1.0, 1e-14);
}

TEST(SplitStepper, ImaginaryTimeLowersEnergy) {
    const ModelParams p = small_params(12, 0.1);
    SpinorField f = random_field(12, 12, 8);
    SplitStepper s(p, {0.05, TimeMode::imaginary, NonlinearUpdate::midpoint});
    double e = energy_functional(f, 0.0, p);
    for (int k = 0; k < 200; ++k) {
        s.step_imaginary(f, 0.0);
        const double e2 = energy_functional(f, 0.0, p);
        EXPECT_LE(e2, e + 1e-14);
        e = e2;
    }
}

TEST(SplitStepper, ModeAndStepErrors) {
    const ModelParams p = small_params(4);
    SplitStepper real(p, {0.1, TimeMode::real, NonlinearUpdate::midpoint});
    SpinorField f = random_field(4, 4, 1);
    EXPECT_THROW(real.step_imaginary(f, 0.0), std::logic_error);
    EXPECT_THROW(SplitStepper(p, {0.0, TimeMode::real, NonlinearUpdate::midpoint}), std::invalid_argument);
    f.psi_x[3] = std::numeric_limits<double>::quiet_NaN();
    real.set_step_index(41);
    try {
        real.step(f, 0.0);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_EQ(e.step(), 41);
    }
    SplitStepper imag(p, {0.1, TimeMode::imaginary, NonlinearUpdate::midpoint});
    SpinorField zero(4, 4);
    EXPECT_THROW(imag.step_imaginary(zero, 0.0), NumericalError);
}

TEST(SplitStepper, BitwiseDeterministic) {
    const ModelParams p = small_params(16, 0.05);
    const SpinorField f = random_field(16, 16, 77);
    EXPECT_EQ(propagate(f, p, 0.05, 50, 0.001), propagate(f, p, 0.05, 50, 0.001));
}

TEST(Evolve, ObserverAndCheckpointCadence) {
    const ModelParams p = small_params(4);
    const SweepSchedule sched{1e-3, 0.0, 1.0, 0.1, 0.0, 0.0};
    SplitStepper s(p, {0.1, TimeMode::real, NonlinearUpdate::midpoint});
    std::vector<long> seen, ckpt;
    EvolveOptions o;
    o.observers.push_back({3, [&](long k, double, const SpinorField&) { seen.push_back(k); }});
    o.checkpoint_every = 4;
    o.on_checkpoint = [&](long k, double, const SpinorField&) { ckpt.push_back(k); };
    const auto r = evolve(random_field(4, 4, 1), sched, s, o);
    EXPECT_EQ(r.steps, 10);
    EXPECT_EQ(seen, (std::vector<long>{0, 3, 6, 9, 10}));
    EXPECT_EQ(ckpt, (std::vector<long>{4, 8}));
    EXPECT_NEAR(r.t_end, 1.0, 1e-15);
}

TEST(Evolve, RestartFromCheckpointIsBitwiseIdentical) {
    const ModelParams p = small_params(8, 0.1);
    const SweepSchedule sched{1e-3, -3.0, 3.0, 0.05, 1.0, 1.0};
    SplitStepper s(p, {0.05, TimeMode::real, NonlinearUpdate::midpoint});
    SpinorField at_ckpt;
    EvolveOptions o;
    o.checkpoint_every = 50;
    o.on_checkpoint = [&](long k, double, const SpinorField& f) {
        if (k == 50) at_ckpt = f;
    };
    const auto full = evolve(random_field(8, 8, 5, 3.0), sched, s, o);
    SplitStepper s2(p, {0.05, TimeMode::real, NonlinearUpdate::midpoint});
    EvolveOptions o2;
    o2.start_step = 50;
    const auto resumed = evolve(at_ckpt, sched, s2, o2);
    EXPECT_EQ(full.field, resumed.field);
}

TEST(Evolve, RejectsMismatchedStep) {
    const ModelParams p = small_params(4);
    const SweepSchedule sched{1e-3, 0.0, 1.0, 0.1, 0.0, 0.0};
    SplitStepper s(p, {0.05, TimeMode::real, NonlinearUpdate::midpoint});
    EXPECT_THROW(evolve(random_field(4, 4, 1), sched, s), std::invalid_argument);
}
