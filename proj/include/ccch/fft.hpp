#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>

#include "ccch/errors.hpp"

namespace ccch::fft {

using cplx = std::complex<double>;

/// Forward/backward complex DFT plans for one transform length. Plans are
/// created once per length and shared; FFTW execution on caller-supplied
/// buffers is thread-safe, planning is not (guarded by the cache mutex).
class Plan {
 public:
  explicit Plan(std::size_t n) : n_(n) {
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    const int len = static_cast<int>(n);
    constexpr unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_1d(len, in, out, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_1d(len, in, out, FFTW_BACKWARD, flags);
    fftw_free(in);
    fftw_free(out);
    if (forward_ == nullptr || backward_ == nullptr) {
      throw NumericError("FFTW failed to create a plan");
    }
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  std::size_t size() const { return n_; }

  /// Unnormalized forward transform, out-of-place.
  void forward(std::span<const cplx> in, std::span<cplx> out) const {
    execute(forward_, in, out);
  }

  /// Backward transform scaled by 1/n, out-of-place.
  void inverse(std::span<const cplx> in, std::span<cplx> out) const {
    execute(backward_, in, out);
    const double s = 1.0 / static_cast<double>(n_);
    for (auto& v : out) v *= s;
  }

 private:
  void execute(fftw_plan p, std::span<const cplx> in, std::span<cplx> out) const {
    if (in.size() != n_ || out.size() != n_) throw ContractError("FFT length mismatch");
    if (static_cast<const void*>(in.data()) == static_cast<const void*>(out.data())) {
      throw ContractError("FFT plans are out-of-place");
    }
    // NOLINTNEXTLINE(cppcoreguidelines-pro-type-const-cast)
    auto* src = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data()));
    auto* dst = reinterpret_cast<fftw_complex*>(out.data());
    fftw_execute_dft(p, src, dst);
  }

  std::size_t n_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

inline const Plan& plan_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<Plan>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<Plan>(n);
  return *slot;
}

}  // namespace ccch::fft
