#pragma once

// Thin RAII layer over FFTW: an aligned allocator and an in-place plan pair.
// Plans are created with FFTW_ESTIMATE so the chosen algorithm, and hence
// every rounding, is reproducible run to run.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <new>
#include <vector>

namespace kerrbeam::twa {

template <class T>
struct FftwAllocator {
  using value_type = T;

  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}  // NOLINT(google-explicit-constructor)

  T* allocate(std::size_t n) {
    if (n == 0) return nullptr;
    void* p = fftw_malloc(n * sizeof(T));
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept {
    return true;
  }
};

using cplx = std::complex<double>;
using Field = std::vector<cplx, FftwAllocator<cplx>>;

/// Unnormalised in-place forward/backward transforms of a fixed length.
/// Executes on any Field of that length (all Fields share fftw_malloc alignment).
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    Field scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (forward_ == nullptr || backward_ == nullptr) throw std::bad_alloc();
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t size() const { return n_; }
  void forward(Field& f) const { fftw_execute_dft(forward_, raw(f), raw(f)); }
  void backward(Field& f) const { fftw_execute_dft(backward_, raw(f), raw(f)); }

 private:
  // the FFTW planner is not re-entrant
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }
  static fftw_complex* raw(Field& f) { return reinterpret_cast<fftw_complex*>(f.data()); }

  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace kerrbeam::twa
