#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <mblz/observables.hpp>

#include "support.hpp"

using namespace mblz;
using testing_support::gaussian_field;
using testing_support::random_field;

namespace {

ObservableSeries uniform_series(std::size_t n, double dt, const std::function<double(double)>& fx,
                                const std::function<double(double)>& fy) {
    ObservableSeries s({"q_x2", "q_y2", "f_y"});
    for (std::size_t i = 0; i < n; ++i) {
        const double t = 10.0 + i * dt;
        s.append(t, {fx(t), fy(t), fx(t)});
    }
    return s;
}

}  // namespace

TEST(Series, AppendValidation) {
    ObservableSeries s({"a", "b"});
    s.append(0.0, {1.0, 2.0});
    EXPECT_THROW(s.append(1.0, {1.0}), std::invalid_argument);
    EXPECT_THROW(s.append(0.0, {1.0, 2.0}), std::invalid_argument);
    EXPECT_THROW(s.channel("c"), std::out_of_range);
    EXPECT_TRUE(s.has("b"));
    EXPECT_EQ(s.channel("b").front(), 2.0);
}

TEST(Imbalance, TotalsAndIntrinsicExcitation) {
    const SpinorField f = gaussian_field(12, 12, 2.0, 0.25);
    const Imbalance im = imbalance(f);
    EXPECT_NEAR(im.z_tot, 0.75 / 1.25, 1e-14);
    EXPECT_DOUBLE_EQ(intrinsic_excitation(1.0), 0.0);
    EXPECT_DOUBLE_EQ(intrinsic_excitation(-1.0), 1.0);
    EXPECT_NEAR(intrinsic_excitation(0.948), 0.026, 1e-15);
    EXPECT_THROW(intrinsic_excitation(1.1), std::invalid_argument);
    EXPECT_THROW(intrinsic_excitation(std::nan("")), std::invalid_argument);
}

TEST(Widths, MatchDirectMoments) {
    SpinorField f(10, 8);
    for (std::size_t i = 0; i < f.sites(); ++i) {
        const auto s = f.psi_x.site(i);
        f.psi_x[i] = std::exp(-0.1 * (s.jx - 1) * (s.jx - 1) - 0.3 * s.jy * s.jy);
        f.psi_y[i] = 0.5 * std::exp(-0.2 * s.jx * s.jx - 0.05 * s.jy * s.jy);
    }
    for (Orbital o : {Orbital::x, Orbital::y}) {
        const auto& g = f.component(o);
        double w = 0.0, mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto s = g.site(i);
            w += std::norm(g[i]);
            mx += std::norm(g[i]) * s.x();
            my += std::norm(g[i]) * s.y();
        }
        mx /= w;
        my /= w;
        double vx = 0.0, vy = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto s = g.site(i);
            vx += std::norm(g[i]) * (s.x() - mx) * (s.x() - mx);
            vy += std::norm(g[i]) * (s.y() - my) * (s.y() - my);
        }
        const Widths ws = widths(f, o);
        EXPECT_NEAR(ws.x2, vx / w, 1e-12 * vx / w);
        EXPECT_NEAR(ws.y2, vy / w, 1e-12 * vy / w);
    }
    const Widths wy = widths(f, Orbital::y);
    EXPECT_NEAR(squeezing(f), wy.y2 / wy.x2, 1e-14);
}

TEST(Widths, EmptyAndDegenerateClouds) {
    SpinorField f(6, 6);
    f.psi_x[0] = 1.0;
    EXPECT_THROW(widths(f, Orbital::y), EmptyOrbitalError);
    // p_y confined to one column: zero x-width.
    for (int iy = 0; iy < 6; ++iy) f.psi_y(3, iy) = 0.3;
    EXPECT_THROW(squeezing(f), DegenerateWidthError);
}

TEST(Bloch, LengthEqualsOccupation) {
    const SpinorField f = random_field(9, 7, 31, 4.0);
    const BlochField b = bloch_field(f);
    const Grid<double> q = total_density(f);
    for (std::size_t i = 0; i < f.sites(); ++i) {
        const double len2 = b.jx_field[i] * b.jx_field[i] + b.jy_field[i] * b.jy_field[i] + b.jz_field[i] * b.jz_field[i];
        EXPECT_NEAR(std::sqrt(len2), q[i], 1e-12 * std::max(1.0, q[i]));
    }
}

TEST(EdgeGuard, RatioOfBoundaryToPeak) {
    const SpinorField tight = gaussian_field(32, 32, 2.0);
    EXPECT_LT(edge_density_ratio(tight), edge_guard_threshold);
    const SpinorField wide = gaussian_field(32, 32, 12.0);
    EXPECT_GT(edge_density_ratio(wide), edge_guard_threshold);
    EXPECT_EQ(edge_density_ratio(SpinorField(4, 4)), 0.0);
}

TEST(SqueezeVariance, ConstantSinusoidAndErrors) {
    const auto flat = uniform_series(100, 1.0, [](double) { return 1.7; }, [](double) { return 0.0; });
    EXPECT_EQ(squeeze_variance(flat, 50.0), 0.0);
    const double a = 0.3, period = 37.0;
    const auto sine = uniform_series(
        20000, 0.5, [&](double t) { return 2.0 + a * std::sin(2.0 * std::numbers::pi * t / period); },
        [](double) { return 0.0; });
    EXPECT_NEAR(squeeze_variance(sine, 9000.0) / (a * a / 2.0), 1.0, 0.02);
    EXPECT_THROW(squeeze_variance(flat, 500.0), std::invalid_argument);
    EXPECT_THROW(squeeze_variance(flat, 3.0), std::invalid_argument);
    EXPECT_THROW(squeeze_variance(ObservableSeries({"f_y"}), 1.0), std::invalid_argument);
}

TEST(SqueezeVariance, MatchesTwoPassOracle) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(5.0, 0.1);
    ObservableSeries s({"f_y"});
    std::vector<double> v;
    for (int i = 0; i < 500; ++i) {
        v.push_back(g(rng));
        s.append(i, {v.back()});
    }
    std::vector<double> w(v.end() - 101, v.end());
    double m = 0.0;
    for (double x : w) m += x;
    m /= w.size();
    double var = 0.0;
    for (double x : w) var += (x - m) * (x - m);
    var /= (w.size() - 1);
    EXPECT_NEAR(squeeze_variance(s, 100.0), var, 1e-14);
}

TEST(Spectrum, MatchesDirectSum) {
    const std::size_t n = 96;
    const double dt = 2.0;
    const auto s = uniform_series(
        n, dt, [](double t) { return std::sin(0.05 * t) + 0.2 * std::cos(0.31 * t); },
        [](double t) { return std::exp(-0.001 * t); });
    for (Taper taper : {Taper::none, Taper::hann}) {
        SpectrumOptions o;
        o.taper = taper;
        const SpectrumResult r = spectrum(s, o);
        ASSERT_EQ(r.nu.size(), n);
        for (std::size_t k = 0; k < n; ++k) {
            complex direct = 0.0;
            for (std::size_t j = 0; j < n; ++j) direct += r.signal_x[j] * std::polar(1.0, r.nu[k] * j * dt);
            direct /= double(n);
            EXPECT_NEAR(std::abs(direct - r.s_x[k]), 0.0, 1e-13);
        }
        EXPECT_TRUE(std::is_sorted(r.nu.begin(), r.nu.end()));
    }
}

TEST(Spectrum, HermitianSymmetryAndParseval) {
    const std::size_t n = 128;
    const auto s = uniform_series(
        n, 0.7, [](double t) { return std::cos(0.9 * t) + 0.1 * t; }, [](double t) { return std::sin(0.2 * t); });
    SpectrumOptions o;
    o.taper = Taper::none;
    const SpectrumResult r = spectrum(s, o);
    const long half = n / 2;
    for (long k = 1; k < half; ++k) {
        const complex a = r.s_x[half + k], b = r.s_x[half - k];
        EXPECT_NEAR(std::abs(a - std::conj(b)), 0.0, 1e-12);
    }
    double lhs = 0.0, rhs = 0.0;
    for (double x : r.signal_x) lhs += x * x * r.sample_dt;
    for (const auto& c : r.s_x) rhs += std::norm(c);
    EXPECT_NEAR(lhs, n * r.sample_dt * rhs, 1e-10 * lhs);
    // Detrending removes the zero-frequency bin.
    EXPECT_NEAR(std::abs(r.s_x[half]), 0.0, 1e-13);
}

TEST(Spectrum, CosinePeakLocalizes) {
    const std::size_t n = 400;
    const double dt = 5.0;
    for (double nu0 : {0.0072, 0.0128, 0.0004 * 10.0}) {
        const auto s = uniform_series(
            n, dt, [&](double t) { return std::cos(nu0 * t); }, [&](double t) { return std::cos(nu0 * t + 1.0); });
        const SpectrumResult r = spectrum(s);
        const double dnu = r.nu[1] - r.nu[0];
        std::size_t best = 0;
        for (std::size_t k = 0; k < n; ++k)
            if (r.nu[k] > 0 && std::abs(r.s_x[k]) > std::abs(r.s_x[best])) best = k;
        EXPECT_LE(std::abs(r.nu[best] - nu0), dnu) << nu0;
    }
}

TEST(Spectrum, WindowingAndErrors) {
    const auto s = uniform_series(
        100, 1.0, [](double t) { return std::cos(t); }, [](double t) { return std::sin(t); });
    SpectrumOptions o;
    o.window_start = 60.0;
    o.window_length = 20.0;
    const SpectrumResult r = spectrum(s, o);
    EXPECT_EQ(r.window.samples, 21u);
    EXPECT_DOUBLE_EQ(r.window.start, 60.0);
    o.window_start = 500.0;
    EXPECT_THROW(spectrum(s, o), std::invalid_argument);
    ObservableSeries bad({"q_x2", "q_y2"});
    bad.append(0.0, {1.0, 1.0});
    bad.append(1.0, {1.0, 1.0});
    bad.append(2.5, {1.0, 1.0});
    EXPECT_THROW(spectrum(bad), std::invalid_argument);
}
