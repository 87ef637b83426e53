#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"
#include "observables.hpp"
#include "propagator.hpp"
#include "types.hpp"

namespace mblz {

inline double adiabaticity(double coupling, double lambda) {
    return 2.0 * std::numbers::pi * coupling * coupling / lambda;
}

/// Survival probability in the initial diabatic state after a full linear
/// crossing: exp(-Lambda), Lambda = 2 pi U^2 / lambda. Here U is the linear
/// two-level coupling, not the lattice interaction.
inline double lz_analytic(double coupling, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lz_analytic: lambda > 0 required");
    return std::exp(-adiabaticity(coupling, lambda));
}

/// Two-level crossing with diabatic energies +-lambda t / 2 and constant
/// coupling U, so that the diabatic gap closes at rate lambda.
struct TwoLevelConfig {
    double coupling = 1.0;
    double lambda = 2.0 * std::numbers::pi;
    double t_i = -200.0;
    double t_f = 200.0;
    double dt = 1e-3;
    complex psi_x0 = 1.0;
    complex psi_y0 = 0.0;
    long record_stride = 0;  // 0 disables trajectory recording
    // Prepare and read out in the instantaneous eigenbasis. The initial
    // diabatic amplitudes are mapped onto the adiabatic states they connect
    // to, and the survival is read as the weight on the adiabatic state that
    // continues the initial diabatic one. This removes the slowly decaying
    // finite-endpoint oscillations of the bare diabatic populations.
    bool adiabatic_frame = true;
};

/// Eigenvectors of [[a, U], [U, -a]]: first the upper, then the lower state.
inline std::array<std::array<complex, 2>, 2> adiabatic_states(double a, double coupling) {
    const double theta = 0.5 * std::atan2(coupling, a);
    const double c = std::cos(theta), s = std::sin(theta);
    return {{{complex(c), complex(s)}, {complex(-s), complex(c)}}};
}

/// Endpoints and step chosen so the endpoint and step errors stay near 1e-6.
/// The step count is about 5e4 max(1, U)^2 whatever lambda is.
inline TwoLevelConfig two_level_defaults(double coupling, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("two_level_defaults: lambda > 0 required");
    TwoLevelConfig c;
    c.coupling = coupling;
    c.lambda = lambda;
    const double span = 100.0 * std::max(1.0, coupling) / std::sqrt(lambda);
    c.t_i = -span;
    c.t_f = span;
    c.dt = 0.2 / std::max(0.5 * lambda * span, coupling);
    return c;
}

struct LzResult {
    double p_numeric = 0.0;  // survival in the initial diabatic state
    double p_diabatic = 0.0;  // bare |psi_x(t_f)|^2
    double p_analytic = 0.0;
    double lambda_parameter = 0.0;
    double norm_error = 0.0;
    std::vector<std::string> warnings;
    ObservableSeries trajectory{{"p_x", "p_y"}};
};

inline LzResult lz_integrate(const TwoLevelConfig& cfg) {
    if (!(cfg.lambda > 0.0)) throw std::invalid_argument("lz_integrate: lambda > 0 required");
    if (!(cfg.coupling >= 0.0)) throw std::invalid_argument("lz_integrate: coupling >= 0 required");
    if (!(cfg.t_i < 0.0 && cfg.t_f > 0.0)) throw std::invalid_argument("lz_integrate: t_i < 0 < t_f required");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("lz_integrate: dt > 0 required");
    const double tmax = std::max(-cfg.t_i, cfg.t_f);
    if (cfg.dt * std::max(cfg.lambda * tmax, cfg.coupling) > 0.5)
        throw std::invalid_argument("lz_integrate: step unstable, dt * max(|lambda t|, U) > 0.5");

    LzResult r;
    r.lambda_parameter = adiabaticity(cfg.coupling, cfg.lambda);
    r.p_analytic = lz_analytic(cfg.coupling, cfg.lambda);
    const double needed = 20.0 * std::max(1.0, cfg.coupling) / std::sqrt(cfg.lambda);
    if (-cfg.t_i < needed || cfg.t_f < needed)
        r.warnings.push_back("endpoints closer than 20 max(1,U)/sqrt(lambda); asymptotic decoupling not reached");

    const long n = std::lround((cfg.t_f - cfg.t_i) / cfg.dt);
    const double dt = (cfg.t_f - cfg.t_i) / static_cast<double>(n);
    complex px = cfg.psi_x0;
    complex py = cfg.psi_y0;
    if (cfg.adiabatic_frame) {
        // At t_i < 0 the x diabatic state is the lower adiabatic one.
        const auto st = adiabatic_states(0.5 * cfg.lambda * cfg.t_i, cfg.coupling);
        const complex cx = px, cy = py;
        px = cx * st[1][0] + cy * st[0][0];
        py = cx * st[1][1] + cy * st[0][1];
    }
    const double n0 = std::norm(px) + std::norm(py);
    Matrix2 h;
    h(0, 1) = cfg.coupling;
    h(1, 0) = cfg.coupling;
    for (long k = 0; k < n; ++k) {
        const double t = cfg.t_i + k * dt;
        if (cfg.record_stride > 0 && k % cfg.record_stride == 0) r.trajectory.append(t, {std::norm(px), std::norm(py)});
        const double half_detuning = 0.5 * cfg.lambda * (t + 0.5 * dt);
        h(0, 0) = half_detuning;
        h(1, 1) = -half_detuning;
        const auto next = expm_unitary(h, dt).apply(px, py);
        px = next[0];
        py = next[1];
    }
    if (cfg.record_stride > 0) r.trajectory.append(cfg.t_f, {std::norm(px), std::norm(py)});
    r.p_diabatic = std::norm(px);
    if (cfg.adiabatic_frame) {
        // At t_f > 0 the x diabatic state has become the upper adiabatic one.
        const auto st = adiabatic_states(0.5 * cfg.lambda * cfg.t_f, cfg.coupling);
        r.p_numeric = std::norm(std::conj(st[0][0]) * px + std::conj(st[0][1]) * py);
    } else {
        r.p_numeric = r.p_diabatic;
    }
    r.norm_error = std::abs(std::norm(px) + std::norm(py) - n0);
    return r;
}

struct SingleSiteResult {
    ObservableSeries trajectory{{"z"}};
    double final_imbalance = 0.0;
    double norm_error = 0.0;
    bool frozen = false;
    std::string diagnostic;
};

/// One isolated site under the onsite equations of motion (t1 = t2 = 0),
/// started from a pure p_x occupation seeded with a p_y fraction. The only
/// inter-orbital coupling is the conjugate term, proportional to psi_y^2.
inline SingleSiteResult single_site_nonlinear(const ModelParams& params, const SweepSchedule& schedule,
                                              double seed_fraction, long record_stride = 1) {
    if (params.t1 != 0.0 || params.t2 != 0.0)
        throw std::invalid_argument("single_site_nonlinear: t1 = t2 = 0 required");
    validate(schedule);
    if (!(seed_fraction >= 0.0 && seed_fraction < 1.0))
        throw std::invalid_argument("single_site_nonlinear: 0 <= seed_fraction < 1 required");
    SingleSiteResult r;
    if (seed_fraction == 0.0) {
        r.frozen = true;
        r.diagnostic = "frozen dynamics: p_y empty, the orbital-changing coupling vanishes identically";
    }
    complex px = std::sqrt(1.0 / (1.0 + seed_fraction));
    complex py = std::sqrt(seed_fraction / (1.0 + seed_fraction));
    const long n = schedule.total_steps();
    const long stride = std::max<long>(1, record_stride);
    for (long k = 0; k < n; ++k) {
        if (k % stride == 0) r.trajectory.append(schedule.time_at(k), {std::norm(px) - std::norm(py)});
        const double d = schedule.detuning(schedule.time_at(k) + 0.5 * schedule.dt);
        const auto next = onsite_step_real(px, py, d, 0.0, params, schedule.dt, NonlinearUpdate::midpoint);
        px = next[0];
        py = next[1];
    }
    r.trajectory.append(schedule.time_at(n), {std::norm(px) - std::norm(py)});
    r.final_imbalance = std::norm(px) - std::norm(py);
    r.norm_error = std::abs(std::norm(px) + std::norm(py) - 1.0);
    return r;
}

}  // namespace mblz
