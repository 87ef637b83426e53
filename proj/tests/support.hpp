#pragma once

#include <cmath>
#include <complex>
#include <random>

#include <mblz/types.hpp>

namespace testing_support {

using mblz::complex;

inline mblz::SpinorField random_field(int nx, int ny, std::uint64_t seed, double norm = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    mblz::SpinorField f(nx, ny);
    for (std::size_t i = 0; i < f.sites(); ++i) {
        f.psi_x[i] = {g(rng), g(rng)};
        f.psi_y[i] = {g(rng), g(rng)};
    }
    f.normalize();
    f.scale(std::sqrt(norm));
    return f;
}

// Gaussian cloud centered in the lattice, unit total norm, y-fraction `fy`.
inline mblz::SpinorField gaussian_field(int nx, int ny, double width, double fy = 0.0) {
    mblz::SpinorField f(nx, ny);
    for (std::size_t i = 0; i < f.sites(); ++i) {
        const auto s = f.psi_x.site(i);
        const double a = std::exp(-(s.jx * s.jx + s.jy * s.jy) / (2.0 * width * width));
        f.psi_x[i] = a;
        f.psi_y[i] = std::sqrt(fy) * a * complex(std::cos(0.3 * s.jx), std::sin(0.3 * s.jx));
    }
    f.normalize();
    return f;
}

inline mblz::ModelParams small_params(int n, double omega = 0.05) {
    mblz::ModelParams p;
    p.nx = n;
    p.ny = n;
    p.omega = omega;
    return p;
}

}  // namespace testing_support
