#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fiberlab/signal.hpp"

namespace fiberlab {

struct PmdSegment {
  int span = 0;
  int segment = 0;
  double theta = 0.0;  // rad, [0, 2 pi)
  double phi = 0.0;    // rad, [0, 2 pi)
  double dgd = 0.0;    // s
};

/// One random fiber draw: a rotation and a DGD per SSFM segment.
struct PmdRealization {
  int n_spans = 0;
  int steps_per_span = 0;
  std::vector<PmdSegment> segments;  // span-major

  const PmdSegment& at(int span, int segment) const {
    return segments[static_cast<std::size_t>(span * steps_per_span + segment)];
  }

  /// All rotations and delays zero.
  static PmdRealization identity(const SystemParams& params);

  /// One line per segment: span segment theta phi dgd.
  void write(std::ostream& os) const;
  static PmdRealization read(std::istream& is);
  void save(const std::string& path) const;
  static PmdRealization load(const std::string& path);
};

/// theta, phi ~ U[0, 2 pi), dgd ~ N(0, pmd_coef * sqrt(delta)) per segment.
PmdRealization draw_pmd(const SystemParams& params, std::uint64_t seed);

/// Loss and dispersion over `delta` metres:
/// q(w) *= exp(-alpha/2 delta + j beta2/2 w^2 delta).
DualPolWaveform linear_step(const DualPolWaveform& w, double delta, const SystemParams& params);

/// Applies J(w) = R(theta, phi) D(w; dgd) to (X, Y) in the frequency domain.
DualPolWaveform pmd_step(const DualPolWaveform& w, const PmdSegment& seg);

/// Kerr phase, q_x *= exp(j gamma delta (|q_x|^2 + 2/3 |q_y|^2)), and the same with x, y swapped.
DualPolWaveform nonlinear_step(const DualPolWaveform& w, double delta, const SystemParams& params);

/// Power gain exp(alpha * span_length) of an EDFA that exactly offsets one span.
double edfa_gain(const SystemParams& params);

/// Total ASE power per polarization, n_sp h nu (G - 1) F_s with n_sp = 10^(NF/10) / 2.
double ase_power_per_pol(const SystemParams& params, double sample_rate);

/// EDFA gain plus circular Gaussian ASE (when params.ase_enabled).
/// `substream` selects an independent noise draw (one per span).
DualPolWaveform edfa(const DualPolWaveform& w, const SystemParams& params, std::uint64_t seed,
                     std::uint64_t substream = 0);

/// One span of K = steps_per_span segments (linear, PMD, nonlinear), no EDFA.
DualPolWaveform propagate_span(const DualPolWaveform& w, const SystemParams& params, const PmdRealization& pmd,
                               int span);

/// Full link: each span followed by an EDFA.
DualPolWaveform propagate(const DualPolWaveform& w, const SystemParams& params, const PmdRealization& pmd,
                          std::uint64_t seed);

}  // namespace fiberlab
