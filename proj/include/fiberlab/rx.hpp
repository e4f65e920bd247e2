#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fiberlab/signal.hpp"
#include "fiberlab/tx.hpp"

namespace fiberlab {

/// Symbol-rate (or fixed-rate) sample streams of both polarizations.
struct SymbolStreams {
  CVec x;
  CVec y;
  std::size_t size() const { return x.size(); }
};

/// Ideal (brick-wall) resampling in the frequency domain.
/// out_size must relate to w.size() by the ratio of the rates.
DualPolWaveform resample(const DualPolWaveform& w, double target_rate);

/// Inverts the accumulated dispersion of `total_length` metres in one shot:
/// q(w) *= exp(-j beta2/2 w^2 L).
DualPolWaveform cd_compensate(const DualPolWaveform& w, const SystemParams& params, double total_length);

/// Digital backpropagation: spans in reverse, each as gain removal followed by
/// `steps_per_span` inverse segments (Kerr phase with -gamma, then loss and
/// dispersion with flipped signs). PMD is not inverted.
DualPolWaveform dbp(const DualPolWaveform& w, const SystemParams& params, int steps_per_span);

/// Centered RRC filtering at the waveform's own rate (output length unchanged).
DualPolWaveform matched_filter(const DualPolWaveform& w, const RrcFilter& filt);

/// Matched filter, then one sample per symbol at instants i * sps_in.
/// With sps_in == 1 the input samples pass through unchanged.
SymbolStreams matched_filter_downsample(const DualPolWaveform& w, const RrcFilter& filt, int sps_in);

/// Ring powers |s|^2 of unit-energy 16-QAM: {0.2, 1.0, 1.8}.
const std::vector<double>& qam16_ring_powers();

/// 2x2 butterfly FIR of a T/2-spaced MIMO equalizer.
struct EqualizerState {
  CVec h_xx;
  CVec h_xy;
  CVec h_yx;
  CVec h_yy;
  double mu = 1e-3;

  /// Single unit center tap on h_xx and h_yy.
  static EqualizerState centered(std::size_t n_taps, double mu);
  std::size_t n_taps() const { return h_xx.size(); }
};

class EqualizerDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RdeResult {
  SymbolStreams out;
  EqualizerState state;
};

/// Blind butterfly equalizer on a 2-SpS input. The first `cma_symbols` outputs
/// adapt with the constant-modulus error, the rest with the radius-directed
/// error e = R^2_nearest - |y|^2. Taps update as h += mu e y conj(u).
/// Throws EqualizerDiverged if the output power exceeds 10x the input power.
RdeResult rde_mimo(const DualPolWaveform& w, EqualizerState state, std::size_t cma_symbols);

struct CpeOptions {
  int test_angles = 32;
  int window = 64;
  /// Known leading symbols used to fix the absolute phase quadrant.
  /// Empty means pilotless operation.
  CVec pilots;
};

struct CpeResult {
  CVec symbols;
  std::vector<double> phase;
};

/// Blind phase search over test angles in [0, pi/2), unwrapped for continuity and
/// anchored to the pilots, followed by a decision-directed maximum-likelihood
/// refinement over the same sliding window.
CpeResult cpe_two_stage(const CVec& symbols, const CpeOptions& opts);

/// Result of matching equalizer outputs to the transmitted pilot preamble.
struct PilotAlignment {
  bool swapped = false;
  int lag = 0;
};

/// Finds the polarization assignment and symbol lag (|lag| <= max_lag) that best
/// matches `streams` to the known pilots starting at `pilot_start`.
PilotAlignment find_pilot_alignment(const SymbolStreams& streams, const CVec& pilots_x, const CVec& pilots_y,
                                    std::size_t pilot_start, int max_lag);
SymbolStreams apply_alignment(const SymbolStreams& streams, const PilotAlignment& a);

/// Half-width of the window in samples, floor(memory * sps + (sps - 1) / 2).
int window_half_width(int memory, int sps);

/// Neural-network training or evaluation data.
///
/// Each input is a (2(2M+1)) x 2 row-major matrix: rows interleave Re and Im
/// of the samples i*sps - M ... i*sps + M, column 0 holds x and column 1 y.
/// Each target is (Re s_x, Im s_x, Re s_y, Im s_y) of symbol i.
struct WindowedDataset {
  int half_width = 0;  // M
  int sps = 1;
  std::vector<double> inputs;
  std::vector<double> targets;
  std::vector<std::size_t> symbol_index;

  std::size_t rows() const { return static_cast<std::size_t>(2 * (2 * half_width + 1)); }
  std::size_t input_size() const { return rows() * 2; }
  std::size_t size() const { return symbol_index.size(); }
  const double* input(std::size_t i) const { return inputs.data() + i * input_size(); }
  const double* target(std::size_t i) const { return targets.data() + i * 4; }

  /// Samples [begin, end) as a new dataset.
  WindowedDataset slice(std::size_t begin, std::size_t end) const;
};

/// One window per target symbol i in [first, last) that has full context;
/// symbols without M samples on both sides are skipped.
WindowedDataset extract_windows(const SymbolStreams& streams, const CVec& targets_x, const CVec& targets_y,
                                int memory, int sps, std::size_t first = 0,
                                std::size_t last = static_cast<std::size_t>(-1));

}  // namespace fiberlab
