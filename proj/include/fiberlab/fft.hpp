#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fiberlab/signal.hpp"

namespace fiberlab {

/// In-place forward DFT, X[k] = sum_n x[n] exp(-j 2 pi k n / N). Unnormalized.
void fft_forward(std::span<cplx> data);
/// In-place inverse DFT including the 1/N factor.
void fft_inverse(std::span<cplx> data);

/// Angular frequencies of an n-point DFT at the given sample rate.
///
/// Bins are kept in natural DFT order (0, 1, ..., n/2-1, -n/2, ..., -1),
/// i.e. not fftshift-ed; delta_omega = 2 pi fs / n.
class SpectralGrid {
 public:
  SpectralGrid(std::size_t n, double sample_rate);

  std::size_t size() const { return omega_.size(); }
  double delta_omega() const { return delta_omega_; }
  double operator[](std::size_t k) const { return omega_[k]; }
  const std::vector<double>& omega() const { return omega_; }

 private:
  std::vector<double> omega_;
  double delta_omega_;
};

std::size_t next_pow2(std::size_t n);
bool is_pow2(std::size_t n);

}  // namespace fiberlab
