#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "model.hpp"
#include "types.hpp"

namespace mblz {

/// Time-stamped scalar records. Channels keep insertion order.
class ObservableSeries {
public:
    ObservableSeries() = default;
    explicit ObservableSeries(std::vector<std::string> names) : names_(std::move(names)), data_(names_.size()) {}

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<double>& times() const { return times_; }
    std::size_t size() const { return times_.size(); }
    bool empty() const { return times_.empty(); }

    void append(double t, std::span<const double> values) {
        if (values.size() != names_.size())
            throw std::invalid_argument("ObservableSeries: expected " + std::to_string(names_.size()) +
                                        " channel values, got " + std::to_string(values.size()));
        if (!times_.empty() && !(t > times_.back()))
            throw std::invalid_argument("ObservableSeries: times must be strictly increasing");
        times_.push_back(t);
        for (std::size_t c = 0; c < values.size(); ++c) data_[c].push_back(values[c]);
    }
    void append(double t, std::initializer_list<double> values) { append(t, std::span<const double>(values.begin(), values.size())); }

    bool has(const std::string& name) const { return std::find(names_.begin(), names_.end(), name) != names_.end(); }
    const std::vector<double>& channel(const std::string& name) const {
        const auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw std::out_of_range("ObservableSeries: no channel '" + name + "'");
        return data_[static_cast<std::size_t>(it - names_.begin())];
    }
    const std::vector<double>& channel(std::size_t c) const { return data_.at(c); }

    bool operator==(const ObservableSeries&) const = default;

private:
    std::vector<std::string> names_;
    std::vector<double> times_;
    std::vector<std::vector<double>> data_;
};

/// Channels recorded by the sweep driver.
inline std::vector<std::string> standard_channels() {
    return {"z_tot", "energy", "x2_x", "y2_x", "x2_y", "y2_y", "f_y", "q_x2", "q_y2"};
}

struct Imbalance {
    double z_tot = 0.0;
    Grid<double> z_site;
};

inline Imbalance imbalance(const SpinorField& f) {
    Imbalance r{0.0, Grid<double>(f.nx(), f.ny())};
    for (std::size_t i = 0; i < f.sites(); ++i) r.z_site[i] = std::norm(f.psi_x[i]) - std::norm(f.psi_y[i]);
    r.z_tot = sum_over(f.sites(), [&](std::size_t i) { return r.z_site[i]; });
    return r;
}

/// (1 - z)/2 for an imbalance z in [-1, 1].
inline double intrinsic_excitation(double z) {
    if (!(z >= -1.0 - 1e-12 && z <= 1.0 + 1e-12))
        throw std::invalid_argument("intrinsic_excitation: imbalance outside [-1, 1]: " + std::to_string(z));
    return std::clamp(0.5 * (1.0 - z), 0.0, 1.0);
}

struct Widths {
    double x2 = 0.0;  // position variance along x
    double y2 = 0.0;  // position variance along y
};

/// Position variances of a non-negative weight distribution on the lattice,
/// with sites at pi times the centered index.
inline Widths weighted_widths(const Grid<double>& w) {
    const std::size_t n = w.size();
    const double total = sum_over(n, [&](std::size_t i) { return w[i]; });
    if (!(total > 1e-12)) throw EmptyOrbitalError("widths: distribution norm below 1e-12");
    const double mx = sum_over(n, [&](std::size_t i) { return w[i] * w.site(i).x(); }) / total;
    const double my = sum_over(n, [&](std::size_t i) { return w[i] * w.site(i).y(); }) / total;
    const double vx = sum_over(n, [&](std::size_t i) {
        const double d = w.site(i).x() - mx;
        return w[i] * d * d;
    });
    const double vy = sum_over(n, [&](std::size_t i) {
        const double d = w.site(i).y() - my;
        return w[i] * d * d;
    });
    return {std::max(0.0, vx / total), std::max(0.0, vy / total)};
}

inline Grid<double> orbital_density(const SpinorField& f, Orbital o) {
    const auto& g = f.component(o);
    Grid<double> d(g.nx(), g.ny());
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = std::norm(g[i]);
    return d;
}

/// Widths of the selected orbital's distribution |psi_alpha|^2.
inline Widths widths(const SpinorField& f, Orbital o) {
    try {
        return weighted_widths(orbital_density(f, o));
    } catch (const EmptyOrbitalError&) {
        throw EmptyOrbitalError(std::string("widths: orbital ") + (o == Orbital::x ? "x" : "y") + " is empty");
    }
}

/// Widths of the full distribution Q_j.
inline Widths density_widths(const SpinorField& f) { return weighted_widths(total_density(f)); }

/// F_y: ratio of the y- to x-variance of the p_y cloud. F_y > 1 means the p_y
/// distribution is elongated along y.
inline double squeezing(const SpinorField& f) {
    const Widths w = widths(f, Orbital::y);
    if (!(w.x2 > 0.0)) throw DegenerateWidthError("squeezing: p_y cloud has zero width along x");
    return w.y2 / w.x2;
}

/// Sample variance of the f_y channel over the trailing window ending at the
/// last sample.
inline double squeeze_variance(const ObservableSeries& s, double window, const std::string& channel = "f_y") {
    if (s.empty()) throw std::invalid_argument("squeeze_variance: empty series");
    const auto& t = s.times();
    const auto& v = s.channel(channel);
    const double t_end = t.back();
    if (!(window > 0.0) || t_end - window < t.front() - 1e-9 * std::max(1.0, std::abs(t.front())))
        throw std::invalid_argument("squeeze_variance: window exceeds the series span");
    const double t_start = t_end - window;
    std::vector<double> w;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t_start) w.push_back(v[i]);
    if (w.size() < 8) throw std::invalid_argument("squeeze_variance: fewer than 8 samples in window");
    // Shifted two-sum: exactly zero for constant input.
    const double ref = w.front();
    const double s1 = sum_over(w.size(), [&](std::size_t i) { return w[i] - ref; });
    const double s2 = sum_over(w.size(), [&](std::size_t i) { return (w[i] - ref) * (w[i] - ref); });
    const double n = static_cast<double>(w.size());
    return std::max(0.0, (s2 - s1 * s1 / n) / (n - 1.0));
}

inline BlochField bloch_field(const SpinorField& f) {
    BlochField b{Grid<double>(f.nx(), f.ny()), Grid<double>(f.nx(), f.ny()), Grid<double>(f.nx(), f.ny())};
    for (std::size_t i = 0; i < f.sites(); ++i) {
        const complex c = std::conj(f.psi_x[i]) * f.psi_y[i];
        b.jx_field[i] = 2.0 * c.real();
        b.jy_field[i] = 2.0 * c.imag();
        b.jz_field[i] = std::norm(f.psi_x[i]) - std::norm(f.psi_y[i]);
    }
    return b;
}

/// Largest density on the outermost rows/columns relative to the peak
/// density. Periodic boundaries are trusted while this stays below 1e-8.
inline double edge_density_ratio(const SpinorField& f) {
    const Grid<double> q = total_density(f);
    double peak = 0.0;
    double edge = 0.0;
    for (int iy = 0; iy < q.ny(); ++iy)
        for (int ix = 0; ix < q.nx(); ++ix) {
            const double v = q(ix, iy);
            peak = std::max(peak, v);
            if (ix == 0 || iy == 0 || ix == q.nx() - 1 || iy == q.ny() - 1) edge = std::max(edge, v);
        }
    return peak > 0.0 ? edge / peak : 0.0;
}

inline constexpr double edge_guard_threshold = 1e-8;

enum class Taper { none, hann };

struct SpectrumOptions {
    Taper taper = Taper::hann;
    bool detrend = true;
    double window_start = -std::numeric_limits<double>::infinity();
    double window_length = std::numeric_limits<double>::infinity();
};

struct SpectrumWindow {
    double start = 0.0;
    double length = 0.0;
    std::size_t samples = 0;
    Taper taper = Taper::hann;
    bool detrend = true;
};

/// Frequency grid in increasing order with amplitudes for the x and y widths.
struct SpectrumResult {
    std::vector<double> nu;
    std::vector<complex> s_x;
    std::vector<complex> s_y;
    SpectrumWindow window;
    // Signal values actually transformed (after detrend and taper), per axis.
    std::vector<double> signal_x;
    std::vector<double> signal_y;
    double sample_dt = 0.0;
};

namespace detail {

struct Transform {
    std::vector<double> nu;
    std::vector<complex> amp;
    std::vector<double> signal;
};

// S_k = (1/N) sum_n x_n exp(+i nu_k n dt), nu_k = 2 pi k / (N dt), k ordered
// from -floor(N/2) to ceil(N/2) - 1.
inline Transform dft(std::vector<double> x, double dt, Taper taper, bool detrend) {
    const std::size_t n = x.size();
    if (detrend) {
        const double mean = sum_over(n, [&](std::size_t i) { return x[i]; }) / n;
        for (auto& v : x) v -= mean;
    }
    if (taper == Taper::hann)
        for (std::size_t i = 0; i < n; ++i) x[i] *= 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n));
    std::vector<complex> buf(x.begin(), x.end());
    FftPlan plan(static_cast<int>(n), 1);
    plan.backward(buf.data());
    Transform out;
    out.signal = std::move(x);
    const long half = static_cast<long>(n / 2);
    for (long k = -half; k < static_cast<long>(n) - half; ++k) {
        const std::size_t bin = static_cast<std::size_t>((k + static_cast<long>(n)) % static_cast<long>(n));
        out.nu.push_back(2.0 * std::numbers::pi * k / (n * dt));
        out.amp.push_back(buf[bin] / static_cast<double>(n));
    }
    return out;
}

}  // namespace detail

/// Spectra of the x- and y-widths of Q_j (channels q_x2, q_y2) over the
/// samples inside the requested window.
inline SpectrumResult spectrum(const ObservableSeries& s, const SpectrumOptions& opts = {},
                               const std::string& x_channel = "q_x2", const std::string& y_channel = "q_y2") {
    const auto& t = s.times();
    const auto& ax = s.channel(x_channel);
    const auto& ay = s.channel(y_channel);
    std::vector<double> tw, xw, yw;
    const double stop = std::isinf(opts.window_length) ? opts.window_length : opts.window_start + opts.window_length;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= opts.window_start && t[i] <= stop) {
            tw.push_back(t[i]);
            xw.push_back(ax[i]);
            yw.push_back(ay[i]);
        }
    if (tw.size() < 2) throw std::invalid_argument("spectrum: fewer than two samples in window");
    const double dt = (tw.back() - tw.front()) / static_cast<double>(tw.size() - 1);
    for (std::size_t i = 1; i < tw.size(); ++i)
        if (std::abs((tw[i] - tw[i - 1]) - dt) > 1e-6 * dt)
            throw std::invalid_argument("spectrum: non-uniform sampling");
    auto tx = detail::dft(std::move(xw), dt, opts.taper, opts.detrend);
    auto ty = detail::dft(std::move(yw), dt, opts.taper, opts.detrend);
    SpectrumResult r;
    r.nu = std::move(tx.nu);
    r.s_x = std::move(tx.amp);
    r.s_y = std::move(ty.amp);
    r.signal_x = std::move(tx.signal);
    r.signal_y = std::move(ty.signal);
    r.sample_dt = dt;
    r.window = {tw.front(), tw.back() - tw.front() + dt, tw.size(), opts.taper, opts.detrend};
    return r;
}

}  // namespace mblz
