#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "types.hpp"

namespace mblz {

struct ParamPreset {
    std::string name;
    double t1 = 0.0;
    double t2 = 0.0;
    double U = 0.0;
    double omega = 0.0;
    int nx = 0;
    int ny = 0;
    // Sweep endpoints |lambda t_i| = |lambda t_f| suited to this preset.
    double endpoint_detuning = 1e-3;
    std::string note;

    ModelParams params() const { return {t1, t2, U, omega, nx, ny}; }
};

inline std::span<const ParamPreset> presets() {
    static const std::vector<ParamPreset> table = {
        {"paper-V17", -0.09, 0.0045, 0.38, 0.003, 128, 128, 1e-3,
         "lattice depth 17 recoil energies, harmonic trap omega = 0.003"},
        {"desk-32", -0.09, 0.0045, 0.38, 0.04, 32, 32, 2e-2,
         "32 x 32 lattice with a tighter trap; same hopping and interaction"},
    };
    return table;
}

inline std::optional<ParamPreset> find_preset(std::string_view name) {
    const auto all = presets();
    const auto it = std::find_if(all.begin(), all.end(), [&](const ParamPreset& p) { return p.name == name; });
    if (it == all.end()) return std::nullopt;
    return *it;
}

struct InteractionRatios {
    double xx_over_xy = 0.0;    // U_xx / U_xy
    double xx_over_pair = 0.0;  // U_xx / U_pair, pair exchange psi_x^2 <-> psi_y^2
};

/// Onsite interaction ratios for harmonic-oscillator p orbitals,
/// w_x ~ x exp(-(x^2 + y^2) / 2), w_y ~ y exp(-(x^2 + y^2) / 2), from a
/// trapezoid quadrature (spectrally accurate for Gaussian integrands).
inline InteractionRatios harmonic_interaction_ratios(int points = 801, double half_width = 8.0) {
    const double h = 2.0 * half_width / (points - 1);
    double m0 = 0.0, m2 = 0.0, m4 = 0.0;  // moments of exp(-2 s^2)
    for (int k = 0; k < points; ++k) {
        const double s = -half_width + k * h;
        const double w = std::exp(-2.0 * s * s) * ((k == 0 || k == points - 1) ? 0.5 : 1.0);
        m0 += w;
        m2 += w * s * s;
        m4 += w * s * s * s * s;
    }
    const double uxx = m4 * m0;   // integral of w_x^4
    const double uxy = m2 * m2;   // integral of w_x^2 w_y^2
    const double pair = m2 * m2;  // integral of (w_x w_y)^2, identical for real orbitals
    return {uxx / uxy, uxx / pair};
}

}  // namespace mblz
