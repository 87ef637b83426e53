#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "errors.hpp"
#include "fft.hpp"
#include "model.hpp"
#include "types.hpp"

namespace mblz {

enum class TimeMode { real, imaginary };
enum class NonlinearUpdate { frozen, midpoint };

struct StepperConfig {
    double dt = 0.05;
    TimeMode mode = TimeMode::real;
    NonlinearUpdate nonlinearity_update = NonlinearUpdate::midpoint;
};

/// exp(-i H tau) for Hermitian H, closed form via the Pauli decomposition
/// H = a0 + a.sigma.
inline Matrix2 expm_unitary(const Matrix2& h, double tau) {
    const double a0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
    const double az = 0.5 * (h(0, 0).real() - h(1, 1).real());
    const complex off = h(0, 1);
    const double r = std::sqrt(az * az + std::norm(off));
    const double c = std::cos(r * tau);
    const double s = r > 0.0 ? std::sin(r * tau) / r : tau;
    const complex phase = std::polar(1.0, -a0 * tau);
    const complex mi(0.0, -1.0);
    Matrix2 u;
    u(0, 0) = phase * (c + mi * s * az);
    u(1, 1) = phase * (c - mi * s * az);
    u(0, 1) = phase * (mi * s * off);
    u(1, 0) = phase * (mi * s * std::conj(off));
    return u;
}

/// exp(-H tau) for Hermitian H.
inline Matrix2 expm_contractive(const Matrix2& h, double tau) {
    const double a0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
    const double az = 0.5 * (h(0, 0).real() - h(1, 1).real());
    const complex off = h(0, 1);
    const double r = std::sqrt(az * az + std::norm(off));
    const double c = std::cosh(r * tau);
    const double s = r > 0.0 ? std::sinh(r * tau) / r : tau;
    const double scale = std::exp(-a0 * tau);
    Matrix2 u;
    u(0, 0) = scale * (c - s * az);
    u(1, 1) = scale * (c + s * az);
    u(0, 1) = -scale * s * off;
    u(1, 0) = -scale * s * std::conj(off);
    return u;
}

/// Onsite real-time update of one site over dt. In midpoint mode the
/// nonlinear matrix is re-evaluated once from a provisional half step.
inline std::array<complex, 2> onsite_step_real(complex px, complex py, double detuning, double v_trap,
                                               const ModelParams& p, double dt, NonlinearUpdate update) {
    Matrix2 h = onsite_matrix(px, py, detuning, v_trap, p);
    if (update == NonlinearUpdate::midpoint) {
        const auto mid = expm_unitary(h, 0.5 * dt).apply(px, py);
        h = onsite_matrix(mid[0], mid[1], detuning, v_trap, p);
    }
    return expm_unitary(h, dt).apply(px, py);
}

inline std::array<complex, 2> onsite_step_imaginary(complex px, complex py, double detuning, double v_trap,
                                                    const ModelParams& p, double dt, NonlinearUpdate update) {
    Matrix2 h = onsite_matrix(px, py, detuning, v_trap, p);
    if (update == NonlinearUpdate::midpoint) {
        auto mid = expm_contractive(h, 0.5 * dt).apply(px, py);
        // Predictor keeps the site occupation; only the onsite direction is re-estimated.
        const double before = std::norm(px) + std::norm(py);
        const double after = std::norm(mid[0]) + std::norm(mid[1]);
        if (after > 0.0) {
            const double s = std::sqrt(before / after);
            mid[0] *= s;
            mid[1] *= s;
        }
        h = onsite_matrix(mid[0], mid[1], detuning, v_trap, p);
    }
    return expm_contractive(h, dt).apply(px, py);
}

/// Strang-split spectral stepper: half kinetic step in quasimomentum space,
/// full onsite 2x2 step, half kinetic step. Owns its FFT plan and phase
/// tables; one stepper per thread.
class SplitStepper {
public:
    SplitStepper(const ModelParams& params, StepperConfig cfg)
        : params_(params), cfg_(cfg), plan_(std::make_unique<FftPlan>(params.nx, params.ny)), trap_(trap_grid(params)) {
        validate(params_);
        if (!(cfg_.dt > 0.0)) throw std::invalid_argument("StepperConfig: dt > 0 required");
        build_tables();
    }

    const ModelParams& params() const { return params_; }
    const StepperConfig& config() const { return cfg_; }

    void set_dt(double dt) {
        if (!(dt > 0.0)) throw std::invalid_argument("StepperConfig: dt > 0 required");
        cfg_.dt = dt;
        build_tables();
    }

    // Index reported in diagnostics; the driver keeps it equal to the global step.
    void set_step_index(long i) { step_index_ = i; }
    long step_index() const { return step_index_; }

    /// One real-time step at constant detuning.
    void step(SpinorField& f, double detuning) {
        require_mode(TimeMode::real);
        kinetic(f);
        onsite_real(f, detuning);
        kinetic(f);
        check_finite(f);
        ++step_index_;
    }

    /// One real-time step from t to t + dt; the detuning is sampled at the
    /// step midpoint.
    void step(SpinorField& f, double t, const SweepSchedule& schedule) { step(f, schedule.detuning(t + 0.5 * cfg_.dt)); }

    /// One imaginary-time step. The field leaves with unit norm; the return
    /// value is the norm it would have had without renormalization.
    double step_imaginary(SpinorField& f, double detuning) {
        require_mode(TimeMode::imaginary);
        double growth = 1.0;
        kinetic(f);
        growth *= renormalize(f);
        onsite_imaginary(f, detuning);
        growth *= renormalize(f);
        kinetic(f);
        growth *= renormalize(f);
        check_finite(f);
        ++step_index_;
        return growth;
    }

private:
    void require_mode(TimeMode m) const {
        if (cfg_.mode != m) throw std::logic_error("SplitStepper: step called in the wrong time mode");
    }

    void build_tables() {
        const int nx = params_.nx;
        const int ny = params_.ny;
        const double inv_n = 1.0 / static_cast<double>(params_.sites());
        const double half = 0.5 * cfg_.dt;
        kin_x_.assign(params_.sites(), complex{});
        kin_y_.assign(params_.sites(), complex{});
        for (int my = 0; my < ny; ++my)
            for (int mx = 0; mx < nx; ++mx) {
                const double kx = bin_momentum(mx, nx);
                const double ky = bin_momentum(my, ny);
                const std::size_t i = static_cast<std::size_t>(my) * nx + mx;
                const double ex = dispersion(kx, ky, Orbital::x, params_);
                const double ey = dispersion(kx, ky, Orbital::y, params_);
                if (cfg_.mode == TimeMode::real) {
                    kin_x_[i] = std::polar(inv_n, -ex * half);
                    kin_y_[i] = std::polar(inv_n, -ey * half);
                } else {
                    kin_x_[i] = inv_n * std::exp(-ex * half);
                    kin_y_[i] = inv_n * std::exp(-ey * half);
                }
            }
    }

    void kinetic(SpinorField& f) const {
        apply_kinetic(f.psi_x, kin_x_);
        apply_kinetic(f.psi_y, kin_y_);
    }

    void apply_kinetic(Grid<complex>& g, const std::vector<complex>& factors) const {
        plan_->forward(g.data());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= factors[i];
        plan_->backward(g.data());
    }

    void onsite_real(SpinorField& f, double detuning) const {
        for (std::size_t i = 0; i < f.sites(); ++i) {
            const auto out = onsite_step_real(f.psi_x[i], f.psi_y[i], detuning, trap_[i], params_, cfg_.dt,
                                              cfg_.nonlinearity_update);
            f.psi_x[i] = out[0];
            f.psi_y[i] = out[1];
        }
    }

    void onsite_imaginary(SpinorField& f, double detuning) const {
        for (std::size_t i = 0; i < f.sites(); ++i) {
            const auto out = onsite_step_imaginary(f.psi_x[i], f.psi_y[i], detuning, trap_[i], params_, cfg_.dt,
                                                   cfg_.nonlinearity_update);
            f.psi_x[i] = out[0];
            f.psi_y[i] = out[1];
        }
    }

    double renormalize(SpinorField& f) const {
        const double n = f.norm();
        if (!(n >= 1e-300)) throw NumericalError("imaginary-time underflow: norm " + std::to_string(n), step_index_);
        f.scale(1.0 / std::sqrt(n));
        return n;
    }

    void check_finite(const SpinorField& f) const {
        if (!f.finite()) throw NumericalError("non-finite field", step_index_);
    }

    ModelParams params_;
    StepperConfig cfg_;
    std::unique_ptr<FftPlan> plan_;
    Grid<double> trap_;
    std::vector<complex> kin_x_;
    std::vector<complex> kin_y_;
    long step_index_ = 0;
};

/// Classical fourth-order Runge-Kutta step of the full equations of motion.
/// Verification oracle only; it does not conserve the norm exactly.
inline SpinorField step_rk4(const SpinorField& f, double t, double dt, const std::function<double(double)>& detuning,
                            const ModelParams& p) {
    const complex mi(0.0, -1.0);
    auto deriv = [&](const SpinorField& s, double time) {
        SpinorField d = eom_rhs(s, detuning(time), p);
        for (std::size_t i = 0; i < d.sites(); ++i) {
            d.psi_x[i] *= mi;
            d.psi_y[i] *= mi;
        }
        return d;
    };
    auto axpy = [](const SpinorField& base, const SpinorField& k, double h) {
        SpinorField r = base;
        for (std::size_t i = 0; i < r.sites(); ++i) {
            r.psi_x[i] += h * k.psi_x[i];
            r.psi_y[i] += h * k.psi_y[i];
        }
        return r;
    };
    const SpinorField k1 = deriv(f, t);
    const SpinorField k2 = deriv(axpy(f, k1, 0.5 * dt), t + 0.5 * dt);
    const SpinorField k3 = deriv(axpy(f, k2, 0.5 * dt), t + 0.5 * dt);
    const SpinorField k4 = deriv(axpy(f, k3, dt), t + dt);
    SpinorField out = f;
    for (std::size_t i = 0; i < out.sites(); ++i) {
        out.psi_x[i] += dt / 6.0 * (k1.psi_x[i] + 2.0 * k2.psi_x[i] + 2.0 * k3.psi_x[i] + k4.psi_x[i]);
        out.psi_y[i] += dt / 6.0 * (k1.psi_y[i] + 2.0 * k2.psi_y[i] + 2.0 * k3.psi_y[i] + k4.psi_y[i]);
    }
    if (!out.finite()) throw NumericalError("non-finite field in RK4 step", 0);
    return out;
}

using FieldCallback = std::function<void(long step, double t, const SpinorField&)>;

struct Observer {
    long stride = 1;
    FieldCallback fn;
};

struct EvolveOptions {
    std::vector<Observer> observers;
    long checkpoint_every = 0;
    FieldCallback on_checkpoint;
    // Step the incoming field corresponds to; observations at this step are
    // assumed to have been made already when start_step > 0.
    long start_step = 0;
};

struct EvolveResult {
    SpinorField field;
    long steps = 0;
    double t_end = 0.0;
};

/// Runs the pre-hold, the linear sweep and the post-hold in one pass; the
/// holds fall out of the clamped detuning. Observation is read-only.
inline EvolveResult evolve(SpinorField field, const SweepSchedule& schedule, SplitStepper& stepper,
                           const EvolveOptions& opts = {}) {
    validate(schedule);
    if (std::abs(stepper.config().dt - schedule.dt) > 1e-15 * schedule.dt)
        throw std::invalid_argument("evolve: stepper dt differs from schedule dt");
    const long n = schedule.total_steps();
    if (opts.start_step < 0 || opts.start_step > n) throw std::invalid_argument("evolve: start_step out of range");

    auto observe = [&](long k) {
        for (const auto& o : opts.observers)
            if (o.fn && (k % o.stride == 0 || k == n)) o.fn(k, schedule.time_at(k), field);
    };
    if (opts.start_step == 0) observe(0);
    stepper.set_step_index(opts.start_step);
    for (long k = opts.start_step; k < n; ++k) {
        stepper.step(field, schedule.time_at(k), schedule);
        const long next = k + 1;
        observe(next);
        if (opts.checkpoint_every > 0 && opts.on_checkpoint && next % opts.checkpoint_every == 0 && next < n)
            opts.on_checkpoint(next, schedule.time_at(next), field);
    }
    return {std::move(field), n, schedule.time_at(n)};
}

}  // namespace mblz
