#include "fiberlab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace fiberlab {

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// FFTW planning is not thread-safe; execution with new-array execute is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }

  PlanPair get(std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const int len = static_cast<int>(n);
    PlanPair p;
    p.forward = fftw_plan_dft_1d(len, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.inverse = fftw_plan_dft_1d(len, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p.forward == nullptr || p.inverse == nullptr) throw std::runtime_error("fftw planning failed");
    plans_.emplace(n, p);
    return p;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void fft_forward(std::span<cplx> data) {
  if (data.empty()) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(cache().get(data.size()).forward, buf, buf);
}

void fft_inverse(std::span<cplx> data) {
  if (data.empty()) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(cache().get(data.size()).inverse, buf, buf);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

SpectralGrid::SpectralGrid(std::size_t n, double sample_rate)
    : omega_(n), delta_omega_(2.0 * kPi * sample_rate / static_cast<double>(n)) {
  const auto first_negative = static_cast<std::ptrdiff_t>((n + 1) / 2);
  for (std::size_t k = 0; k < n; ++k) {
    auto idx = static_cast<std::ptrdiff_t>(k);
    if (idx >= first_negative) idx -= static_cast<std::ptrdiff_t>(n);
    omega_[k] = delta_omega_ * static_cast<double>(idx);
  }
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace fiberlab
