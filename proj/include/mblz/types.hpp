#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mblz {

using complex = std::complex<double>;

enum class Orbital { x, y };

inline Orbital other(Orbital o) { return o == Orbital::x ? Orbital::y : Orbital::x; }

// Fixed-order pairwise reduction. The split points depend only on the range
// length, so results never depend on how the caller schedules work.
template <class F>
auto pairwise_sum(std::size_t begin, std::size_t end, const F& term) -> decltype(term(begin)) {
    using R = decltype(term(begin));
    const std::size_t n = end - begin;
    if (n <= 8) {
        R acc{};
        for (std::size_t i = begin; i < end; ++i) acc += term(i);
        return acc;
    }
    const std::size_t mid = begin + n / 2;
    return pairwise_sum(begin, mid, term) + pairwise_sum(mid, end, term);
}

template <class F>
double sum_over(std::size_t n, const F& term) {
    return pairwise_sum(0, n, term);
}

template <class F>
complex csum_over(std::size_t n, const F& term) {
    return pairwise_sum(0, n, term);
}

/// Tight-binding parameters in recoil units.
///
/// t1 is the hopping of an orbital along its own node direction (t_xx = t_yy),
/// t2 the hopping transverse to it (t_xy = t_yx). The interaction U = U_xx
/// parametrizes every onsite term; U_xy = U/3 in the harmonic approximation.
struct ModelParams {
    double t1 = -0.09;
    double t2 = 0.0045;
    double U = 0.38;
    double omega = 0.003;
    int nx = 128;
    int ny = 128;

    std::size_t sites() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
};

/// Throws std::invalid_argument on hard violations and returns soft
/// physical-regime warnings.
inline std::vector<std::string> validate(const ModelParams& p) {
    if (!(p.U >= 0.0)) throw std::invalid_argument("ModelParams: U >= 0 required (repulsive interaction)");
    if (!(p.omega >= 0.0)) throw std::invalid_argument("ModelParams: omega >= 0 required");
    if (p.nx < 2 || p.ny < 2) throw std::invalid_argument("ModelParams: nx, ny >= 2 required");
    if (!std::isfinite(p.t1) || !std::isfinite(p.t2)) throw std::invalid_argument("ModelParams: hopping must be finite");
    std::vector<std::string> warnings;
    if (std::abs(p.t1) <= std::abs(p.t2))
        warnings.emplace_back("hopping anisotropy |t1| > |t2| violated; p-band regime not represented");
    if (p.t1 != 0.0 && p.t2 != 0.0 && std::signbit(p.t1) == std::signbit(p.t2))
        warnings.emplace_back("t1 and t2 share a sign; p-band orbitals have opposite-sign hoppings");
    return warnings;
}

/// Centered site coordinates; jx in [-nx/2, nx/2 - 1].
struct SiteIndex {
    int jx = 0;
    int jy = 0;

    double x() const { return std::numbers::pi * jx; }
    double y() const { return std::numbers::pi * jy; }
};

/// Row-major nx-by-ny grid, rows are jy. Storage offset = iy * nx + ix with
/// ix = jx + nx/2.
template <class T>
class Grid {
public:
    Grid() = default;
    Grid(int nx, int ny, T fill = T{}) : nx_(nx), ny_(ny), data_(static_cast<std::size_t>(nx) * ny, fill) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    std::size_t size() const { return data_.size(); }

    std::size_t offset(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx_ + ix; }
    T& operator()(int ix, int iy) { return data_[offset(ix, iy)]; }
    const T& operator()(int ix, int iy) const { return data_[offset(ix, iy)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    SiteIndex site(std::size_t i) const {
        const int ix = static_cast<int>(i % nx_);
        const int iy = static_cast<int>(i / nx_);
        return {ix - nx_ / 2, iy - ny_ / 2};
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }

    bool operator==(const Grid&) const = default;

private:
    int nx_ = 0;
    int ny_ = 0;
    std::vector<T> data_;
};

/// The mean-field order parameter: coherent-state amplitudes of both orbitals.
struct SpinorField {
    Grid<complex> psi_x;
    Grid<complex> psi_y;

    SpinorField() = default;
    SpinorField(int nx, int ny) : psi_x(nx, ny), psi_y(nx, ny) {}

    int nx() const { return psi_x.nx(); }
    int ny() const { return psi_x.ny(); }
    std::size_t sites() const { return psi_x.size(); }

    Grid<complex>& component(Orbital o) { return o == Orbital::x ? psi_x : psi_y; }
    const Grid<complex>& component(Orbital o) const { return o == Orbital::x ? psi_x : psi_y; }

    double orbital_norm(Orbital o) const {
        const auto& g = component(o);
        return sum_over(g.size(), [&](std::size_t i) { return std::norm(g[i]); });
    }
    double norm() const {
        return sum_over(sites(), [&](std::size_t i) { return std::norm(psi_x[i]) + std::norm(psi_y[i]); });
    }
    void scale(double s) {
        for (std::size_t i = 0; i < sites(); ++i) {
            psi_x[i] *= s;
            psi_y[i] *= s;
        }
    }
    void normalize() {
        const double n = norm();
        if (n > 0.0) scale(1.0 / std::sqrt(n));
    }
    bool finite() const {
        for (std::size_t i = 0; i < sites(); ++i) {
            if (!std::isfinite(psi_x[i].real()) || !std::isfinite(psi_x[i].imag()) ||
                !std::isfinite(psi_y[i].real()) || !std::isfinite(psi_y[i].imag()))
                return false;
        }
        return true;
    }

    bool operator==(const SpinorField&) const = default;
};

/// Linear detuning ramp. The x-orbital onsite energy is +detuning(t), the
/// y-orbital one -detuning(t); detuning is frozen outside [t_i, t_f].
struct SweepSchedule {
    double lambda = 1e-5;
    double t_i = -100.0;
    double t_f = 100.0;
    double dt = 0.05;
    double hold_pre = 0.0;
    double hold_post = 0.0;

    double detuning(double t) const { return lambda * std::clamp(t, t_i, t_f); }
    double start_time() const { return t_i - hold_pre; }
    double end_time() const { return t_f + hold_post; }
    long total_steps() const { return std::lround((end_time() - start_time()) / dt); }
    double time_at(long step) const { return start_time() + static_cast<double>(step) * dt; }
};

inline void validate(const SweepSchedule& s) {
    if (!(s.lambda > 0.0)) throw std::invalid_argument("SweepSchedule: lambda > 0 required");
    if (!(s.t_i < s.t_f)) throw std::invalid_argument("SweepSchedule: t_i < t_f required");
    if (!(s.dt > 0.0)) throw std::invalid_argument("SweepSchedule: dt > 0 required");
    if (s.hold_pre < 0.0 || s.hold_post < 0.0) throw std::invalid_argument("SweepSchedule: hold durations >= 0 required");
}

/// Per-site Bloch vector (J_x, J_y, J_z).
struct BlochField {
    Grid<double> jx_field;
    Grid<double> jy_field;
    Grid<double> jz_field;
};

/// Orbital swap combined with the lattice transpose jx <-> jy. Requires a
/// square lattice.
inline SpinorField mirror(const SpinorField& f) {
    if (f.nx() != f.ny()) throw std::invalid_argument("mirror: square lattice required");
    SpinorField out(f.nx(), f.ny());
    for (int iy = 0; iy < f.ny(); ++iy)
        for (int ix = 0; ix < f.nx(); ++ix) {
            out.psi_x(iy, ix) = f.psi_y(ix, iy);
            out.psi_y(iy, ix) = f.psi_x(ix, iy);
        }
    return out;
}

inline double max_abs_diff(const SpinorField& a, const SpinorField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.sites(); ++i) {
        m = std::max(m, std::abs(a.psi_x[i] - b.psi_x[i]));
        m = std::max(m, std::abs(a.psi_y[i] - b.psi_y[i]));
    }
    return m;
}

}  // namespace mblz
