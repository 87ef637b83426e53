#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "model.hpp"
#include "observables.hpp"
#include "propagator.hpp"
#include "types.hpp"

namespace mblz {

enum class InitKind { gaussian, random_phase_gaussian, provided };

struct GroundConfig {
    double detuning = 0.0;
    double tol_energy = 1e-10;
    double tol_state = 1e-9;
    long max_steps = 2'000'000;
    InitKind init = InitKind::random_phase_gaussian;
    std::uint64_t rng_seed = 1;
    double dt = 0.5;
    // Converged stages halve dt until it reaches dt_min.
    double dt_min = 0.25;
    int patience = 10;
    NonlinearUpdate nonlinearity_update = NonlinearUpdate::midpoint;
};

inline void validate(const GroundConfig& c) {
    if (!(c.tol_energy > 0.0) || !(c.tol_state > 0.0)) throw std::invalid_argument("GroundConfig: tolerances > 0 required");
    if (!(c.dt > 0.0) || !(c.dt_min > 0.0) || c.dt_min > c.dt)
        throw std::invalid_argument("GroundConfig: 0 < dt_min <= dt required");
    if (c.max_steps <= 0 || c.patience <= 0) throw std::invalid_argument("GroundConfig: max_steps, patience > 0 required");
}

/// Envelope width in site units used to seed the solver.
inline double initial_width(const ModelParams& p) {
    const double cap = 0.25 * std::min(p.nx, p.ny);
    if (p.omega <= 0.0) return cap;
    return std::min(std::sqrt(2.0 / p.omega), cap);
}

/// Isotropic Gaussian on both orbitals, optionally with independent uniform
/// onsite phases drawn from the seeded generator. Unit norm.
inline SpinorField initial_field(InitKind kind, const ModelParams& p, std::mt19937_64& rng) {
    if (kind == InitKind::provided) throw std::invalid_argument("initial_field: provided init needs a field");
    SpinorField f(p.nx, p.ny);
    const double w = initial_width(p);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < f.sites(); ++i) {
        const SiteIndex s = f.psi_x.site(i);
        const double r2 = static_cast<double>(s.jx) * s.jx + static_cast<double>(s.jy) * s.jy;
        const double a = std::exp(-r2 / (2.0 * w * w));
        if (kind == InitKind::random_phase_gaussian) {
            const double px = phase(rng);
            const double py = phase(rng);
            f.psi_x[i] = std::polar(a, px);
            f.psi_y[i] = std::polar(a, py);
        } else {
            f.psi_x[i] = a;
            f.psi_y[i] = a;
        }
    }
    f.normalize();
    return f;
}

struct GroundReport {
    long steps = 0;
    bool converged = false;
    double energy = 0.0;
    double chemical_potential = 0.0;
    double residual = 0.0;
    double final_dt = 0.0;
    // Largest per-step energy increase seen (relative), for monotonicity checks.
    double max_energy_rise = 0.0;
};

struct GroundResult {
    SpinorField field;
    GroundReport report;
};

/// mu = <psi|H_eff psi> and ||H_eff psi - mu psi|| for a unit-norm field.
inline std::pair<double, double> stationarity(const SpinorField& f, double detuning, const ModelParams& p) {
    const SpinorField h = eom_rhs(f, detuning, p);
    const double mu = csum_over(f.sites(), [&](std::size_t i) {
                          return std::conj(f.psi_x[i]) * h.psi_x[i] + std::conj(f.psi_y[i]) * h.psi_y[i];
                      }).real();
    const double r2 = sum_over(f.sites(), [&](std::size_t i) {
        return std::norm(h.psi_x[i] - mu * f.psi_x[i]) + std::norm(h.psi_y[i] - mu * f.psi_y[i]);
    });
    return {mu, std::sqrt(r2)};
}

/// Imaginary-time relaxation at fixed detuning. Non-convergence is reported,
/// not thrown; the last iterate is returned.
inline GroundResult find_ground(const GroundConfig& cfg, const ModelParams& params,
                                std::optional<SpinorField> provided = std::nullopt) {
    validate(cfg);
    validate(params);
    SpinorField f;
    if (provided) {
        f = std::move(*provided);
        if (f.nx() != params.nx || f.ny() != params.ny) throw std::invalid_argument("find_ground: field shape mismatch");
        f.normalize();
    } else {
        std::mt19937_64 rng(cfg.rng_seed);
        f = initial_field(cfg.init == InitKind::provided ? InitKind::random_phase_gaussian : cfg.init, params, rng);
    }

    StepperConfig sc{cfg.dt, TimeMode::imaginary, cfg.nonlinearity_update};
    SplitStepper stepper(params, sc);
    GroundReport rep;
    double dt = cfg.dt;
    double energy = energy_functional(f, cfg.detuning, params);
    int streak = 0;
    SpinorField prev = f;
    for (long k = 0; k < cfg.max_steps; ++k) {
        prev = f;
        stepper.step_imaginary(f, cfg.detuning);
        const double e = energy_functional(f, cfg.detuning, params);
        const double scale = std::max(std::abs(e), 1e-12);
        rep.max_energy_rise = std::max(rep.max_energy_rise, (e - energy) / scale);
        const bool energy_ok = std::abs(e - energy) / scale < cfg.tol_energy;
        const bool state_ok = max_abs_diff(f, prev) < cfg.tol_state;
        energy = e;
        rep.steps = k + 1;
        streak = (energy_ok && state_ok) ? streak + 1 : 0;
        if (streak >= cfg.patience) {
            if (dt * 0.5 >= cfg.dt_min * (1.0 - 1e-12)) {
                dt *= 0.5;
                stepper.set_dt(dt);
                streak = 0;
            } else {
                rep.converged = true;
                break;
            }
        }
    }
    rep.energy = energy;
    rep.final_dt = dt;
    std::tie(rep.chemical_potential, rep.residual) = stationarity(f, cfg.detuning, params);
    return {std::move(f), rep};
}

struct GroundScanPoint {
    double detuning = 0.0;
    double z_tot = 0.0;
    double energy = 0.0;
    bool converged = false;
    long steps = 0;
    Widths widths_x;
    Widths widths_y;
    SpinorField field;
};

inline GroundScanPoint summarize(double detuning, GroundResult&& r) {
    GroundScanPoint pt;
    pt.detuning = detuning;
    pt.z_tot = imbalance(r.field).z_tot;
    pt.energy = r.report.energy;
    pt.converged = r.report.converged;
    pt.steps = r.report.steps;
    if (r.field.orbital_norm(Orbital::x) > 1e-12) pt.widths_x = widths(r.field, Orbital::x);
    if (r.field.orbital_norm(Orbital::y) > 1e-12) pt.widths_y = widths(r.field, Orbital::y);
    pt.field = std::move(r.field);
    return pt;
}

/// Ground states over a sorted detuning list. Warm starts seed each solve with
/// the previous solution and run sequentially; cold starts are independent
/// and may use up to `threads` workers.
inline std::vector<GroundScanPoint> ground_scan(const std::vector<double>& detunings, const ModelParams& params,
                                                const GroundConfig& base, bool warm_start, int threads = 1) {
    if (!std::is_sorted(detunings.begin(), detunings.end()))
        throw std::invalid_argument("ground_scan: detunings must be sorted");
    std::vector<GroundScanPoint> out(detunings.size());
    if (warm_start) {
        std::optional<SpinorField> seed;
        for (std::size_t i = 0; i < detunings.size(); ++i) {
            GroundConfig c = base;
            c.detuning = detunings[i];
            out[i] = summarize(detunings[i], find_ground(c, params, seed));
            seed = out[i].field;
        }
        return out;
    }
    auto solve = [&](std::size_t i) {
        GroundConfig c = base;
        c.detuning = detunings[i];
        out[i] = summarize(detunings[i], find_ground(c, params));
    };
    const std::size_t workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1) {
        for (std::size_t i = 0; i < detunings.size(); ++i) solve(i);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < detunings.size(); i += workers) solve(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace mblz
