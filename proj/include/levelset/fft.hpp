#pragma once

// Thin RAII layer over FFTW's 2-D real transforms. Plans are created under a
// global lock (FFTW's planner is not reentrant) and cached per thread.

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>

namespace levelset::fft {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Square n x n real <-> half-complex transform pair with owned buffers.
/// Both directions are unnormalized: backward(forward(x)) == n*n*x.
class RealPlan2d {
 public:
  explicit RealPlan2d(int n) : n_(n), half_(n / 2 + 1) {
    real_ = fftw_alloc_real(static_cast<size_t>(n) * n);
    spec_ = fftw_alloc_complex(static_cast<size_t>(n) * half_);
    std::lock_guard lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(n, n, real_, spec_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_2d(n, n, spec_, real_, FFTW_ESTIMATE);
  }
  RealPlan2d(const RealPlan2d&) = delete;
  RealPlan2d& operator=(const RealPlan2d&) = delete;
  ~RealPlan2d() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  int size() const { return n_; }
  int half() const { return half_; }

  std::span<double> real() { return {real_, static_cast<size_t>(n_) * n_}; }
  std::span<std::complex<double>> spectrum() {
    return {reinterpret_cast<std::complex<double>*>(spec_), static_cast<size_t>(n_) * half_};
  }

  /// real() -> spectrum(), e^{-i...} convention.
  void forward() { fftw_execute(fwd_); }
  /// spectrum() -> real(), e^{+i...} convention; clobbers spectrum().
  void backward() { fftw_execute(bwd_); }

 private:
  int n_;
  int half_;
  double* real_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

/// Per-thread plan for an n x n grid. Callers must not hold the reference
/// across calls that may request a different slot of the same size.
inline RealPlan2d& workspace(int n, int slot = 0) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<RealPlan2d>> cache;
  auto& entry = cache[{n, slot}];
  if (!entry) entry = std::make_unique<RealPlan2d>(n);
  return *entry;
}

}  // namespace levelset::fft
