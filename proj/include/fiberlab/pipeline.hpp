#pragma once

#include <cstdint>

#include "fiberlab/channel.hpp"
#include "fiberlab/rx.hpp"
#include "fiberlab/signal.hpp"
#include "fiberlab/tx.hpp"

namespace fiberlab {

/// Receiver DSP knobs shared by both receiver modes.
struct DspOptions {
  int rrc_span = 64;                 // symbols
  std::size_t rde_taps = 25;
  double rde_mu = 1e-3;
  std::size_t cma_symbols = 10000;
  int cpe_angles = 32;
  int cpe_window = 64;
  std::size_t pilot_symbols = 256;   // 0 runs CPE without an anchor
  std::size_t edge_symbols = 128;    // trimmed at both frame ends
  int max_lag = 16;
};

/// One transmitted frame. Symbols [edge, edge + pilots) double as the pilot
/// preamble; [edge + pilots, n - edge) is the payload scored for BER.
struct LinkFrame {
  SymbolFrame symbols;
  DualPolWaveform tx;          // launched field, zero-padded
  std::size_t lead_samples = 0;  // forward-rate offset of symbol 0
  std::size_t n_symbols = 0;
  std::size_t pilot_begin = 0;
  std::size_t payload_begin = 0;
  std::size_t payload_end = 0;
};

/// Symbol count needed on each side so linear CD spreading stays inside the guard.
std::size_t dispersion_guard_symbols(const SystemParams& params);

LinkFrame make_frame(const SystemParams& params, const DspOptions& dsp, std::size_t payload_symbols,
                     std::uint64_t seed, double power_dbm);

/// Resamples to the receiver rate, undoes CD (or runs DBP with `dbp_steps`
/// steps per span when positive) and crops the frame: symbol i sits at
/// sample i * sps_rx.
DualPolWaveform rx_front_end(const DualPolWaveform& received, const LinkFrame& frame, const SystemParams& params,
                             int dbp_steps = 0);

/// Matched filter, two-pass CMA/RDE, pilot alignment and CPE. Output symbol
/// i is the estimate of transmitted symbol i.
SymbolStreams linear_chain(const DualPolWaveform& front, const LinkFrame& frame, const SystemParams& params,
                           const DspOptions& dsp);

/// Unit-power scaling of a front-end waveform (receiver mode 2 network input).
SymbolStreams normalized_samples(const DualPolWaveform& front);

/// CPE over [pilot_begin, n) using the frame's pilots; earlier symbols pass through.
SymbolStreams carrier_recovery(const SymbolStreams& s, const LinkFrame& frame, const DspOptions& dsp);

/// Hard decisions over the payload, both polarizations.
Bits payload_bits(const SymbolStreams& s, const LinkFrame& frame);
Bits payload_reference_bits(const LinkFrame& frame);

}  // namespace fiberlab
