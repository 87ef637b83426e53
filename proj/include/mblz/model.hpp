#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <utility>

#include "errors.hpp"
#include "types.hpp"

namespace mblz {

/// Single-particle band energy of the given orbital under periodic boundaries.
inline double dispersion(double kx, double ky, Orbital orbital, const ModelParams& p) {
    if (orbital == Orbital::x) return -2.0 * p.t1 * std::cos(kx) - 2.0 * p.t2 * std::cos(ky);
    return -2.0 * p.t2 * std::cos(kx) - 2.0 * p.t1 * std::cos(ky);
}

inline double trap_potential(SiteIndex site, const ModelParams& p) {
    const double x = site.x();
    const double y = site.y();
    return 0.5 * p.omega * p.omega * (x * x + y * y);
}

/// Dense complex 2x2 matrix acting on the onsite spinor (psi_x, psi_y).
struct Matrix2 {
    std::array<std::array<complex, 2>, 2> m{};

    complex& operator()(int r, int c) { return m[r][c]; }
    const complex& operator()(int r, int c) const { return m[r][c]; }

    std::array<complex, 2> apply(complex a, complex b) const {
        return {m[0][0] * a + m[0][1] * b, m[1][0] * a + m[1][1] * b};
    }
    Matrix2 adjoint() const {
        Matrix2 r;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) r.m[i][j] = std::conj(m[j][i]);
        return r;
    }
};

/// Frozen-nonlinearity onsite Hamiltonian. Acting on (psi_x, psi_y) it gives
/// the onsite part of the equations of motion, including the conjugate
/// coupling (2U/3) psi_y^2 psi_x^*.
inline Matrix2 onsite_matrix(complex psi_x, complex psi_y, double detuning, double v_trap, const ModelParams& p) {
    const double nx = std::norm(psi_x);
    const double ny = std::norm(psi_y);
    const double cross = 2.0 * p.U / 3.0;
    Matrix2 h;
    h(0, 0) = v_trap + detuning + p.U * nx + cross * ny;
    h(1, 1) = v_trap - detuning + p.U * ny + cross * nx;
    h(0, 1) = cross * std::conj(psi_x) * psi_y;
    h(1, 0) = std::conj(h(0, 1));
    return h;
}

enum class Boundary { periodic, open };

namespace detail {

inline int wrap(int i, int n) { return (i % n + n) % n; }

// Sum of the two neighbors of (ix, iy) along x and along y.
inline std::pair<complex, complex> neighbor_sums(const Grid<complex>& g, int ix, int iy) {
    const int nx = g.nx();
    const int ny = g.ny();
    const complex along_x = g(wrap(ix + 1, nx), iy) + g(wrap(ix - 1, nx), iy);
    const complex along_y = g(ix, wrap(iy + 1, ny)) + g(ix, wrap(iy - 1, ny));
    return {along_x, along_y};
}

}  // namespace detail

/// Grid of trap energies, identical for both orbitals.
inline Grid<double> trap_grid(const ModelParams& p) {
    Grid<double> v(p.nx, p.ny);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = trap_potential(v.site(i), p);
    return v;
}

/// Classical energy functional H_0 + H_dd + H_oc with onsite energies
/// E_x = +detuning, E_y = -detuning.
inline double energy_functional(const SpinorField& f, double detuning, const ModelParams& p,
                                Boundary boundary = Boundary::periodic) {
    if (boundary != Boundary::periodic)
        throw BoundaryError("energy_functional: only periodic boundaries match the spectral propagator");
    const int nx = f.nx();
    const complex total = csum_over(f.sites(), [&](std::size_t i) {
        const int ix = static_cast<int>(i % nx);
        const int iy = static_cast<int>(i / nx);
        const complex px = f.psi_x[i];
        const complex py = f.psi_y[i];
        const auto [xx, xy] = detail::neighbor_sums(f.psi_x, ix, iy);
        const auto [yx, yy] = detail::neighbor_sums(f.psi_y, ix, iy);
        const complex hop = std::conj(px) * (-p.t1 * xx - p.t2 * xy) + std::conj(py) * (-p.t2 * yx - p.t1 * yy);
        const double dx = std::norm(px);
        const double dy = std::norm(py);
        const double v = trap_potential(f.psi_x.site(i), p);
        const double local = (v + detuning) * dx + (v - detuning) * dy + 0.5 * p.U * (dx * dx + dy * dy) +
                             2.0 * p.U / 3.0 * dx * dy;
        const complex oc = std::conj(px) * py;
        const double exchange = p.U / 3.0 * 2.0 * (oc * oc).real();
        return hop + complex(local + exchange, 0.0);
    });
    if (std::abs(total.imag()) >= 1e-12)
        throw Error("energy_functional: imaginary residue " + std::to_string(total.imag()));
    return total.real();
}

inline Grid<double> total_density(const SpinorField& f) {
    Grid<double> q(f.nx(), f.ny());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::norm(f.psi_x[i]) + std::norm(f.psi_y[i]);
    return q;
}

/// Right-hand side of the discrete Gross-Pitaevskii equations, i d(psi)/dt,
/// evaluated term by term in real space.
inline SpinorField eom_rhs(const SpinorField& f, double detuning, const ModelParams& p) {
    SpinorField out(f.nx(), f.ny());
    const double c = 2.0 * p.U / 3.0;
    for (int iy = 0; iy < f.ny(); ++iy)
        for (int ix = 0; ix < f.nx(); ++ix) {
            const std::size_t i = f.psi_x.offset(ix, iy);
            const complex px = f.psi_x[i];
            const complex py = f.psi_y[i];
            const auto [xx, xy] = detail::neighbor_sums(f.psi_x, ix, iy);
            const auto [yx, yy] = detail::neighbor_sums(f.psi_y, ix, iy);
            const double v = trap_potential(f.psi_x.site(i), p);
            out.psi_x[i] = -p.t1 * xx - p.t2 * xy + v * px + detuning * px +
                           p.U * std::norm(px) * px + c * std::norm(py) * px + c * py * py * std::conj(px);
            out.psi_y[i] = -p.t1 * yy - p.t2 * yx + v * py - detuning * py +
                           p.U * std::norm(py) * py + c * std::norm(px) * py + c * px * px * std::conj(py);
        }
    return out;
}

}  // namespace mblz
