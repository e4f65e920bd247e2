#include "fiberlab/pipeline.hpp"

#include <cmath>

#include "fiberlab/fft.hpp"

namespace fiberlab {

std::size_t dispersion_guard_symbols(const SystemParams& params) {
  const double bandwidth = 2.0 * kPi * params.symbol_rate * (1.0 + params.rolloff);
  const double spread = std::abs(params.beta2) * params.total_length() * bandwidth * params.symbol_rate;
  return static_cast<std::size_t>(std::ceil(1.5 * spread)) + 64;
}

LinkFrame make_frame(const SystemParams& params, const DspOptions& dsp, std::size_t payload_symbols,
                     std::uint64_t seed, double power_dbm) {
  params.validate();
  if (payload_symbols == 0) throw std::invalid_argument("make_frame: empty payload");
  const std::size_t n_symbols = payload_symbols + dsp.pilot_symbols + 2 * dsp.edge_symbols;
  SymbolFrame symbols = make_symbol_frame(seed, n_symbols, params.symbol_rate);

  const RrcFilter filt = RrcFilter::make(params.rolloff, dsp.rrc_span, params.sps_forward);
  DualPolWaveform shaped(pulse_shape(symbols.syms_x, filt), pulse_shape(symbols.syms_y, filt), params.forward_rate());
  if (params.linewidth > 0.0) {
    shaped = apply_phase_noise(shaped, PhaseNoiseParams{params.linewidth, 1.0 / params.forward_rate(), seed});
  }
  shaped = set_launch_power(shaped, power_dbm);

  const std::size_t guard = dispersion_guard_symbols(params) + static_cast<std::size_t>(dsp.rrc_span);
  const std::size_t lead = guard * static_cast<std::size_t>(params.sps_forward);
  const std::size_t total = next_pow2(shaped.size() + 2 * lead);
  return LinkFrame{std::move(symbols),
                   zero_pad(shaped, lead, total),
                   lead,
                   n_symbols,
                   dsp.edge_symbols,
                   dsp.edge_symbols + dsp.pilot_symbols,
                   dsp.edge_symbols + dsp.pilot_symbols + payload_symbols};
}

DualPolWaveform rx_front_end(const DualPolWaveform& received, const LinkFrame& frame, const SystemParams& params,
                             int dbp_steps) {
  const DualPolWaveform at_rx = resample(received, params.rx_rate());
  const DualPolWaveform comp = dbp_steps > 0 ? dbp(at_rx, params, dbp_steps)
                                             : cd_compensate(at_rx, params, params.total_length());
  const auto ratio = static_cast<std::size_t>(params.sps_forward / params.sps_rx);
  return crop(comp, frame.lead_samples / ratio, frame.n_symbols * static_cast<std::size_t>(params.sps_rx));
}

namespace {

void normalize(CVec& v) {
  double p = 0.0;
  for (const auto& s : v) p += std::norm(s);
  p /= static_cast<double>(v.size());
  if (!(p > 0.0)) throw std::domain_error("normalize: zero-power stream");
  const double g = 1.0 / std::sqrt(p);
  for (auto& s : v) s *= g;
}

CVec slice(const CVec& v, std::size_t begin, std::size_t end) {
  return CVec(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end));
}

}  // namespace

SymbolStreams normalized_samples(const DualPolWaveform& front) {
  SymbolStreams s{front.x(), front.y()};
  normalize(s.x);
  normalize(s.y);
  return s;
}

SymbolStreams linear_chain(const DualPolWaveform& front, const LinkFrame& frame, const SystemParams& params,
                           const DspOptions& dsp) {
  if (params.sps_rx != 2) throw std::invalid_argument("linear_chain: the butterfly equalizer runs at 2 SpS");
  const RrcFilter filt = RrcFilter::make(params.rolloff, dsp.rrc_span, params.sps_rx);
  const SymbolStreams mf = normalized_samples(matched_filter(front, filt));
  const DualPolWaveform eq_in(mf.x, mf.y, front.sample_rate());

  // Warm-up pass (CMA then RDE), then a clean RDE pass from the converged taps.
  const std::size_t cma = std::min(dsp.cma_symbols, frame.n_symbols / 2);
  RdeResult warm = rde_mimo(eq_in, EqualizerState::centered(dsp.rde_taps, dsp.rde_mu), cma);
  RdeResult eq = rde_mimo(eq_in, warm.state, 0);

  SymbolStreams aligned = eq.out;
  if (dsp.pilot_symbols > 0) {
    const CVec px = slice(frame.symbols.syms_x, frame.pilot_begin, frame.payload_begin);
    const CVec py = slice(frame.symbols.syms_y, frame.pilot_begin, frame.payload_begin);
    const PilotAlignment a = find_pilot_alignment(eq.out, px, py, frame.pilot_begin, dsp.max_lag);
    aligned = apply_alignment(eq.out, a);
    // Noise leaves the blind equalizer slightly short of unit signal gain.
    auto regain = [&](CVec& v, const CVec& pilots) {
      cplx num(0.0, 0.0);
      double den = 0.0;
      for (std::size_t j = 0; j < pilots.size(); ++j) {
        num += v[frame.pilot_begin + j] * std::conj(pilots[j]);
        den += std::norm(pilots[j]);
      }
      const double g = std::abs(num) / den;
      if (g > 0.0) {
        for (auto& s : v) s /= g;
      }
    };
    regain(aligned.x, px);
    regain(aligned.y, py);
  }
  return carrier_recovery(aligned, frame, dsp);
}

SymbolStreams carrier_recovery(const SymbolStreams& s, const LinkFrame& frame, const DspOptions& dsp) {
  SymbolStreams out = s;
  const std::size_t n = s.size();
  if (frame.pilot_begin >= n) return out;
  auto run = [&](const CVec& in, const CVec& ref, CVec& dst) {
    CpeOptions opts;
    opts.test_angles = dsp.cpe_angles;
    opts.window = dsp.cpe_window;
    if (dsp.pilot_symbols > 0) opts.pilots = slice(ref, frame.pilot_begin, frame.payload_begin);
    const CpeResult r = cpe_two_stage(slice(in, frame.pilot_begin, n), opts);
    std::copy(r.symbols.begin(), r.symbols.end(), dst.begin() + static_cast<std::ptrdiff_t>(frame.pilot_begin));
  };
  run(s.x, frame.symbols.syms_x, out.x);
  run(s.y, frame.symbols.syms_y, out.y);
  return out;
}

Bits payload_bits(const SymbolStreams& s, const LinkFrame& frame) {
  if (s.size() < frame.payload_end) throw std::invalid_argument("payload_bits: stream shorter than the payload");
  const Bits bx = demap_16qam_hard(slice(s.x, frame.payload_begin, frame.payload_end));
  const Bits by = demap_16qam_hard(slice(s.y, frame.payload_begin, frame.payload_end));
  Bits out(bx);
  out.insert(out.end(), by.begin(), by.end());
  return out;
}

Bits payload_reference_bits(const LinkFrame& frame) {
  const auto b = static_cast<std::ptrdiff_t>(4 * frame.payload_begin);
  const auto e = static_cast<std::ptrdiff_t>(4 * frame.payload_end);
  Bits out(frame.symbols.bits_x.begin() + b, frame.symbols.bits_x.begin() + e);
  out.insert(out.end(), frame.symbols.bits_y.begin() + b, frame.symbols.bits_y.begin() + e);
  return out;
}

}  // namespace fiberlab
