#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "groundstate.hpp"
#include "model.hpp"
#include "observables.hpp"
#include "propagator.hpp"
#include "types.hpp"

namespace mblz {

enum class SeedPhase { aligned, random };

/// Sets the p_y amplitude to sqrt(fraction) times the local p_x amplitude at
/// every site and restores the input norm. For a pure-x input the result has
/// Z_tot = (1 - fraction)/(1 + fraction).
inline SpinorField seed_initial(const SpinorField& ground, double fraction, SeedPhase rule = SeedPhase::aligned,
                                std::mt19937_64* rng = nullptr, std::vector<std::string>* warnings = nullptr) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("seed_initial: 0 <= fraction < 1 required");
    if (fraction == 0.0) return ground;
    if (rule == SeedPhase::random && rng == nullptr) throw std::invalid_argument("seed_initial: random phase rule needs a generator");
    if (warnings) {
        const double z = imbalance(ground).z_tot / std::max(ground.norm(), 1e-300);
        if (z <= 0.9) warnings->push_back("seed_initial: ground state is not x-dominant (Z_tot = " + std::to_string(z) + ")");
    }
    SpinorField f = ground;
    const double amp = std::sqrt(fraction);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < f.sites(); ++i) {
        const complex px = f.psi_x[i];
        complex py = amp * px;
        if (rule == SeedPhase::random) py = std::polar(amp * std::abs(px), phase(*rng));
        f.psi_y[i] = py;
    }
    // Global rescale keeps |psi_y|^2 / |psi_x|^2 = fraction at every site,
    // so a fully polarized ground state gives Z_tot = (1 - f) / (1 + f).
    const double n = f.norm();
    if (n > 0.0) f.scale(std::sqrt(ground.norm() / n));
    return f;
}

/// Schedule whose endpoints sit at the requested detunings.
inline SweepSchedule schedule_for(double lambda, double detuning_start, double detuning_end, double dt, double hold_pre,
                                  double hold_post) {
    if (!(lambda > 0.0)) throw std::invalid_argument("schedule_for: lambda > 0 required");
    SweepSchedule s{lambda, detuning_start / lambda, detuning_end / lambda, dt, hold_pre, hold_post};
    validate(s);
    return s;
}

struct Snapshot {
    double time = 0.0;
    long step = 0;
    SpinorField field;
};

/// State needed to continue an interrupted run.
struct ResumeState {
    long step = 0;
    SpinorField field;
    ObservableSeries series;
    double z_initial = 0.0;
    std::optional<double> z_at_tf;
    double max_edge_ratio = 0.0;
    std::vector<Snapshot> snapshots;
    std::vector<std::string> warnings;
    GroundReport ground;
    std::string rng_state;  // textual mt19937_64 state after preparation
};

struct SweepRunConfig {
    ModelParams params;
    SweepSchedule schedule;
    GroundConfig ground;
    double seed_fraction = 0.01;
    SeedPhase seed_phase = SeedPhase::aligned;
    std::uint64_t rng_seed = 1;
    long observe_stride = 20;
    std::vector<double> snapshot_times;
    long checkpoint_every = 0;
    // Receives the full resumable state at every checkpoint.
    std::function<void(const ResumeState&)> on_checkpoint;
};

inline void validate(const SweepRunConfig& c) {
    validate(c.params);
    validate(c.schedule);
    if (!(c.seed_fraction >= 0.0 && c.seed_fraction < 1.0))
        throw std::invalid_argument("SweepRunConfig: 0 <= seed_fraction < 1 required");
    if (c.observe_stride <= 0) throw std::invalid_argument("SweepRunConfig: observe_stride > 0 required");
}

/// Trailing window used for the squeezing variance.
inline double squeeze_window(const SweepSchedule& s) { return std::min(2000.0, 0.25 * s.hold_post); }

// Period of the slowest vibrational mode of interest (nu = 4e-4).
inline constexpr double slowest_mode_period = 2.0 * std::numbers::pi / 4e-4;

struct RunResult {
    SpinorField final_field;
    ObservableSeries series{standard_channels()};
    std::vector<Snapshot> snapshots;
    double z_initial = 0.0;
    double z_at_tf = 0.0;
    double p_iex = 0.0;
    double delta_f_y = std::numeric_limits<double>::quiet_NaN();
    double squeeze_window = 0.0;
    bool window_under_resolved = true;
    double max_edge_ratio = 0.0;
    bool accepted = true;
    GroundReport ground;
    std::vector<std::string> warnings;
};

/// Intrinsic excitation of a finished sweep. The run starts in p_x and ends
/// with p_y energetically favored, so the imbalance is oriented towards the
/// target orbital before applying (1 - z)/2: full transfer gives 0, no
/// transfer gives the initial p_x fraction.
inline double sweep_intrinsic_excitation(double z_tot_at_tf) { return intrinsic_excitation(-z_tot_at_tf); }

inline std::vector<double> observe_channels(const SpinorField& f, double detuning, const ModelParams& p) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> v(9, nan);
    v[0] = imbalance(f).z_tot;
    v[1] = energy_functional(f, detuning, p);
    if (f.orbital_norm(Orbital::x) > 1e-12) {
        const Widths w = widths(f, Orbital::x);
        v[2] = w.x2;
        v[3] = w.y2;
    }
    if (f.orbital_norm(Orbital::y) > 1e-12) {
        const Widths w = widths(f, Orbital::y);
        v[4] = w.x2;
        v[5] = w.y2;
        if (w.x2 > 0.0) v[6] = w.y2 / w.x2;
    }
    const Widths q = density_widths(f);
    v[7] = q.x2;
    v[8] = q.y2;
    return v;
}

/// Ground state at the initial detuning, p_y seeding, sweep and post-sweep
/// hold. Passing a ResumeState skips preparation and continues from it.
inline RunResult run_sweep(const SweepRunConfig& cfg, std::optional<ResumeState> resume = std::nullopt) {
    validate(cfg);
    const SweepSchedule& sched = cfg.schedule;
    RunResult out;
    ResumeState state;
    if (resume) {
        state = std::move(*resume);
        if (state.field.nx() != cfg.params.nx || state.field.ny() != cfg.params.ny)
            throw std::invalid_argument("run_sweep: resume field shape mismatch");
    } else {
        GroundConfig g = cfg.ground;
        g.detuning = sched.detuning(sched.t_i);
        GroundResult gr = find_ground(g, cfg.params);
        state.ground = gr.report;
        if (!gr.report.converged) state.warnings.push_back("ground state did not converge");
        std::mt19937_64 rng(cfg.rng_seed);
        state.field = seed_initial(gr.field, cfg.seed_fraction, cfg.seed_phase, &rng, &state.warnings);
        state.z_initial = imbalance(state.field).z_tot;
        state.step = 0;
        std::ostringstream rs;
        rs << rng;
        state.rng_state = rs.str();
        state.series = ObservableSeries(standard_channels());
    }

    const long n = sched.total_steps();
    long step_tf = 0;
    while (step_tf < n && sched.time_at(step_tf) < sched.t_f - 1e-9 * sched.dt) ++step_tf;

    std::vector<std::pair<long, double>> snap_steps;
    for (double ts : cfg.snapshot_times) {
        long k = 0;
        while (k < n && sched.time_at(k) < ts - 1e-9 * sched.dt) ++k;
        snap_steps.emplace_back(k, ts);
    }

    // Only multiples of the stride, so the series stays uniformly sampled.
    auto record = [&](long k, double t, const SpinorField& f) {
        if (k % cfg.observe_stride != 0) return;
        const double ratio = edge_density_ratio(f);
        state.max_edge_ratio = std::max(state.max_edge_ratio, ratio);
        const auto values = observe_channels(f, sched.detuning(t), cfg.params);
        if (std::abs(values[0]) > f.norm() * (1.0 + 1e-12)) throw Error("imbalance exceeds the norm");
        state.series.append(t, values);
    };
    auto markers = [&](long k, double t, const SpinorField& f) {
        if (k == step_tf) state.z_at_tf = imbalance(f).z_tot;
        for (const auto& [ks, ts] : snap_steps)
            if (k == ks) state.snapshots.push_back({t, k, f});
    };

    SplitStepper stepper(cfg.params, StepperConfig{sched.dt, TimeMode::real, NonlinearUpdate::midpoint});
    EvolveOptions opts;
    opts.start_step = state.step;
    opts.observers.push_back({cfg.observe_stride, record});
    opts.observers.push_back({1, markers});
    opts.checkpoint_every = cfg.checkpoint_every;
    if (cfg.on_checkpoint) {
        opts.on_checkpoint = [&](long k, double, const SpinorField& f) {
            const double ratio = edge_density_ratio(f);
            state.max_edge_ratio = std::max(state.max_edge_ratio, ratio);
            ResumeState snap = state;
            snap.step = k;
            snap.field = f;
            cfg.on_checkpoint(snap);
        };
    }
    EvolveResult ev = evolve(std::move(state.field), sched, stepper, opts);

    out.final_field = std::move(ev.field);
    out.series = std::move(state.series);
    out.snapshots = std::move(state.snapshots);
    out.z_initial = state.z_initial;
    out.ground = state.ground;
    out.z_at_tf = state.z_at_tf.value_or(imbalance(out.final_field).z_tot);
    out.p_iex = sweep_intrinsic_excitation(std::clamp(out.z_at_tf, -1.0, 1.0));
    out.max_edge_ratio = state.max_edge_ratio;
    out.accepted = out.max_edge_ratio <= edge_guard_threshold;
    out.warnings = std::move(state.warnings);
    if (!out.accepted)
        out.warnings.push_back("edge density " + std::to_string(out.max_edge_ratio) +
                               " of peak exceeds the periodic-boundary guard");
    out.squeeze_window = squeeze_window(sched);
    out.window_under_resolved = out.squeeze_window < slowest_mode_period;
    if (out.squeeze_window > 0.0) {
        try {
            out.delta_f_y = squeeze_variance(out.series, out.squeeze_window);
        } catch (const std::invalid_argument& e) {
            out.warnings.push_back(std::string("delta F_y unavailable: ") + e.what());
        }
    } else {
        out.warnings.push_back("delta F_y unavailable: no post-sweep hold");
    }
    return out;
}

struct PolyFit {
    int degree = 0;
    std::vector<double> coefficients;  // in powers of log10(lambda), lowest first
    std::vector<double> residuals;
};

/// Least-squares polynomial in log10(lambda).
inline PolyFit polynomial_fit(const std::vector<double>& lambdas, const std::vector<double>& values, int degree) {
    if (lambdas.size() != values.size() || lambdas.size() < static_cast<std::size_t>(degree + 1))
        throw std::invalid_argument("polynomial_fit: need at least degree + 1 points");
    const auto n = static_cast<Eigen::Index>(lambdas.size());
    Eigen::MatrixXd a(n, degree + 1);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = std::log10(lambdas[static_cast<std::size_t>(i)]);
        double p = 1.0;
        for (int d = 0; d <= degree; ++d) {
            a(i, d) = p;
            p *= x;
        }
        b(i) = values[static_cast<std::size_t>(i)];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd r = b - a * c;
    PolyFit fit;
    fit.degree = degree;
    fit.coefficients.assign(c.data(), c.data() + c.size());
    fit.residuals.assign(r.data(), r.data() + r.size());
    return fit;
}

struct VelocityRow {
    double lambda = 0.0;
    double p_iex = std::numeric_limits<double>::quiet_NaN();
    double delta_f_y = std::numeric_limits<double>::quiet_NaN();
    double z_at_tf = std::numeric_limits<double>::quiet_NaN();
    double f_y_final = std::numeric_limits<double>::quiet_NaN();
    bool accepted = false;
    std::string error;
};

struct VelocityScan {
    std::vector<VelocityRow> rows;
    std::optional<PolyFit> p_iex_fit;
    std::optional<PolyFit> delta_f_y_fit;
};

struct ScanEndpoints {
    double detuning_start = -1e-3;
    double detuning_end = 1e-3;
};

/// Independent sweeps, one per velocity. The template's schedule supplies dt
/// and hold durations; endpoints follow the requested detunings. Failures are
/// recorded per row.
inline VelocityScan velocity_scan(const SweepRunConfig& base, const ScanEndpoints& ends, std::vector<double> lambdas,
                                  int threads = 1) {
    for (double l : lambdas)
        if (!(l > 0.0)) throw std::invalid_argument("velocity_scan: lambda > 0 required");
    std::sort(lambdas.begin(), lambdas.end());
    VelocityScan scan;
    scan.rows.resize(lambdas.size());
    auto job = [&](std::size_t i) {
        VelocityRow& row = scan.rows[i];
        row.lambda = lambdas[i];
        try {
            SweepRunConfig c = base;
            c.on_checkpoint = nullptr;
            c.checkpoint_every = 0;
            c.schedule = schedule_for(lambdas[i], ends.detuning_start, ends.detuning_end, base.schedule.dt,
                                      base.schedule.hold_pre, base.schedule.hold_post);
            const RunResult r = run_sweep(c);
            row.p_iex = r.p_iex;
            row.delta_f_y = r.delta_f_y;
            row.z_at_tf = r.z_at_tf;
            row.f_y_final = r.series.channel("f_y").back();
            row.accepted = r.accepted;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    };
    const std::size_t workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1) {
        for (std::size_t i = 0; i < lambdas.size(); ++i) job(i);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < lambdas.size(); i += workers) job(i);
            });
        for (auto& t : pool) t.join();
    }
    std::vector<double> ls, ps, fs;
    for (const auto& r : scan.rows)
        if (r.error.empty() && std::isfinite(r.p_iex) && std::isfinite(r.delta_f_y)) {
            ls.push_back(r.lambda);
            ps.push_back(r.p_iex);
            fs.push_back(r.delta_f_y);
        }
    if (ls.size() >= 6) {
        scan.p_iex_fit = polynomial_fit(ls, ps, 5);
        scan.delta_f_y_fit = polynomial_fit(ls, fs, 5);
    }
    return scan;
}

}  // namespace mblz
