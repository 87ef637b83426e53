#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <stdexcept>

#include "types.hpp"

namespace mblz {

namespace detail {
// FFTW planning is not thread-safe; execution is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// In-place unnormalized complex FFT over a row-major ny-by-nx grid, or a 1D
/// transform when ny == 1. Plans use FFTW_ESTIMATE so they are reproducible.
class FftPlan {
public:
    FftPlan(int nx, int ny) : nx_(nx), ny_(ny) {
        std::lock_guard lock(detail::fftw_planner_mutex());
        auto* buf = fftw_alloc_complex(static_cast<std::size_t>(nx) * ny);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        if (ny == 1) {
            forward_ = fftw_plan_dft_1d(nx, buf, buf, FFTW_FORWARD, flags);
            backward_ = fftw_plan_dft_1d(nx, buf, buf, FFTW_BACKWARD, flags);
        } else {
            forward_ = fftw_plan_dft_2d(ny, nx, buf, buf, FFTW_FORWARD, flags);
            backward_ = fftw_plan_dft_2d(ny, nx, buf, buf, FFTW_BACKWARD, flags);
        }
        fftw_free(buf);
        if (!forward_ || !backward_) throw std::runtime_error("FftPlan: planning failed");
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;
    ~FftPlan() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    void forward(complex* data) const { fftw_execute_dft(forward_, as_fftw(data), as_fftw(data)); }
    void backward(complex* data) const { fftw_execute_dft(backward_, as_fftw(data), as_fftw(data)); }

    int nx() const { return nx_; }
    int ny() const { return ny_; }

private:
    static fftw_complex* as_fftw(complex* p) { return reinterpret_cast<fftw_complex*>(p); }

    int nx_;
    int ny_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

/// Quasimomentum of FFT bin m on an n-site ring, mapped into [-pi, pi).
inline double bin_momentum(int m, int n) {
    const int shifted = m < (n + 1) / 2 ? m : m - n;
    double k = 2.0 * std::numbers::pi * shifted / n;
    if (k >= std::numbers::pi) k -= 2.0 * std::numbers::pi;
    return k;
}

}  // namespace mblz
