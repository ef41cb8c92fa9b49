#pragma once

// Thin RAII layer over FFTW3.
//
// Plans are always created with FFTW_ESTIMATE: measured plans may pick a
// different algorithm from run to run, which would break bit-exact
// reproducibility of the pipeline outputs.

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "pact/core.hpp"

namespace pact::fft {

namespace detail {

// FFTW's planner is not thread-safe; execution with new-array calls is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept {
    if (p) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(p);
    }
  }
};

using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

inline fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// Real-to-complex transform of a fixed length n; output has n/2 + 1 bins.
/// Forward sign convention: X_m = sum_j x_j exp(-2 pi i j m / n).
class RealForward {
 public:
  explicit RealForward(std::size_t n) : n_(n) {
    std::vector<double> in(n);
    std::vector<Complex> out(n / 2 + 1);
    std::lock_guard lock(detail::planner_mutex());
    plan_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), detail::as_fftw(out.data()),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT));
    if (!plan_) throw Error("FFTW failed to create an r2c plan");
  }

  std::size_t size() const noexcept { return n_; }

  /// Safe to call concurrently; `in` may be overwritten.
  void execute(std::span<double> in, std::span<Complex> out) const {
    fftw_execute_dft_r2c(plan_.get(), in.data(), detail::as_fftw(out.data()));
  }

 private:
  std::size_t n_;
  detail::PlanHandle plan_;
};

/// In-place multidimensional complex transform (row-major, last axis fastest).
class ComplexND {
 public:
  ComplexND(std::span<const std::size_t> shape, int sign) {
    std::vector<int> dims(shape.begin(), shape.end());
    std::size_t total = 1;
    for (auto s : shape) total *= s;
    std::vector<Complex> buf(total);
    std::lock_guard lock(detail::planner_mutex());
    plan_.reset(fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), detail::as_fftw(buf.data()),
                              detail::as_fftw(buf.data()), sign, FFTW_ESTIMATE | FFTW_UNALIGNED));
    if (!plan_) throw Error("FFTW failed to create a complex plan");
  }

  void execute(std::span<Complex> data) const {
    fftw_execute_dft(plan_.get(), detail::as_fftw(data.data()), detail::as_fftw(data.data()));
  }

 private:
  detail::PlanHandle plan_;
};

/// Forward transform, exp(-i ...) kernel, unnormalized.
inline void forward_inplace(std::span<Complex> data, std::span<const std::size_t> shape) {
  ComplexND(shape, FFTW_FORWARD).execute(data);
}

/// Backward transform, exp(+i ...) kernel, unnormalized.
inline void backward_inplace(std::span<Complex> data, std::span<const std::size_t> shape) {
  ComplexND(shape, FFTW_BACKWARD).execute(data);
}

/// Signed DFT frequency index of bin `i` in an unshifted length-n transform.
inline long signed_bin(std::size_t i, std::size_t n) {
  const long li = static_cast<long>(i);
  return li <= static_cast<long>((n - 1) / 2) ? li : li - static_cast<long>(n);
}

}  // namespace pact::fft
