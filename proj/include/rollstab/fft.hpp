#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace rollstab {

namespace detail {
// FFTW planning is not thread-safe; execution on distinct arrays is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

/// Unnormalised real-to-half-complex transform of fixed length, backed by FFTW.
class RealFft {
  public:
    explicit RealFft(std::size_t n) : n_(n) {
        std::lock_guard lock(detail::fftw_planner_mutex());
        auto* in = fftw_alloc_real(n);
        auto* out = fftw_alloc_complex(n / 2 + 1);
        const auto flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, flags);
        inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), out, in, flags);
        fftw_free(in);
        fftw_free(out);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;
    ~RealFft() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }

    std::size_t size() const { return n_; }
    std::size_t n_coeffs() const { return n_ / 2 + 1; }

    /// out[k] = sum_j in[j] exp(-2 pi i j k / n), k = 0..n/2
    void forward(std::span<const double> in, std::span<std::complex<double>> out) const {
        fftw_execute_dft_r2c(fwd_, const_cast<double*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
    }

    /// Inverse of forward() scaled by n (FFTW convention). `in` is left untouched.
    void inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
        std::vector<std::complex<double>> scratch(in.begin(), in.end());
        fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
    }

    /// Shared instance per length.
    static const RealFft& of_size(std::size_t n) {
        static std::mutex cache_mutex;
        static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
        std::lock_guard lock(cache_mutex);
        auto& slot = cache[n];
        if (!slot) slot = std::make_unique<RealFft>(n);
        return *slot;
    }

  private:
    std::size_t n_;
    fftw_plan fwd_{};
    fftw_plan inv_{};
};

/// Unnormalised 2-D complex transform over an (rows x cols) periodic array.
class ComplexFft2d {
  public:
    ComplexFft2d(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
        std::lock_guard lock(detail::fftw_planner_mutex());
        auto* buf = fftw_alloc_complex(rows * cols);
        const auto flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, FFTW_FORWARD, flags);
        inv_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), buf, buf, FFTW_BACKWARD, flags);
        fftw_free(buf);
    }
    ComplexFft2d(const ComplexFft2d&) = delete;
    ComplexFft2d& operator=(const ComplexFft2d&) = delete;
    ~ComplexFft2d() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }

    void forward(std::span<std::complex<double>> data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(fwd_, p, p);
    }
    void inverse(std::span<std::complex<double>> data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(inv_, p, p);
    }

  private:
    std::size_t rows_, cols_;
    fftw_plan fwd_{};
    fftw_plan inv_{};
};

}  // namespace rollstab
