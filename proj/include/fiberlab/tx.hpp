#pragma once

#include <cstdint>
#include <vector>

#include "fiberlab/rng.hpp"
#include "fiberlab/signal.hpp"

namespace fiberlab {

/// Amplitude scale of the unit-energy 16-QAM grid, 1/sqrt(10).
double qam16_scale();

/// The 16 constellation points indexed by their 4-bit label (MSB first).
const std::vector<cplx>& qam16_points();

/// Deterministic pseudo-random bits from `stream` of `seed`.
Bits generate_bits(std::uint64_t seed, std::size_t n, Stream stream = Stream::kBitsX);

/// Gray-mapped 16-QAM. Bits b0 b1 select the I level and b2 b3 the Q level,
/// each via 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3, scaled by 1/sqrt(10).
CVec map_16qam(const Bits& bits);

/// Nearest-point hard decision followed by the inverse Gray table.
/// Points exactly on a decision boundary resolve toward the lower level.
Bits demap_16qam_hard(const CVec& symbols);

/// Hard decision to the nearest constellation point.
cplx decide_16qam(cplx s);

/// Root-raised-cosine FIR, symmetric with unit tap energy.
struct RrcFilter {
  double rolloff = 0.25;
  int span_symbols = 32;
  int sps = 1;
  std::vector<double> taps;

  static RrcFilter make(double rolloff, int span_symbols, int sps);
  std::size_t center() const { return taps.size() / 2; }
};

/// Zero-insertion upsampling followed by linear convolution with the RRC taps.
/// Output has len(syms) * sps samples with symbol i centered on sample i*sps.
CVec pulse_shape(const CVec& syms, const RrcFilter& filt);

struct PhaseNoiseParams {
  double linewidth = 0.0;        // Hz
  double sample_interval = 0.0;  // s
  std::uint64_t seed = 0;
};

/// Wiener phase walk, phi_0 = 0, increments N(0, 2 pi linewidth T_s).
std::vector<double> phase_noise_walk(const PhaseNoiseParams& p, std::size_t n);

/// Rotates both polarizations by exp(j * sign * phi_n).
DualPolWaveform rotate_phase(const DualPolWaveform& w, const std::vector<double>& phases, double sign = 1.0);

/// Laser phase noise, one realization shared by both polarizations.
DualPolWaveform apply_phase_noise(const DualPolWaveform& w, const PhaseNoiseParams& p);

/// Scales the waveform so measure_power equals dbm_to_watts(p_dbm).
DualPolWaveform set_launch_power(const DualPolWaveform& w, double p_dbm);

/// Random dual-polarization frame: bits from the kBitsX / kBitsY streams.
SymbolFrame make_symbol_frame(std::uint64_t seed, std::size_t n_symbols, double baud_rate);

}  // namespace fiberlab
