#include "fiberlab/tx.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "fiberlab/signal.hpp"

namespace fiberlab {

namespace {

// Gray table: two bits (b0 b1) -> level.
constexpr std::array<int, 4> kLevelOfPair = {-3, -1, +3, +1};  // 00, 01, 10, 11

int level_index(int level) {
  switch (level) {
    case -3: return 0b00;
    case -1: return 0b01;
    case +1: return 0b11;
    default: return 0b10;
  }
}

// Ties go to the lower level.
int nearest_level(double v) {
  const double t = 2.0 * qam16_scale();
  if (v <= -t) return -3;
  if (v <= 0.0) return -1;
  if (v <= t) return 1;
  return 3;
}

double rrc_tap(double t, double beta) {
  constexpr double eps = 1e-12;
  if (std::abs(t) < eps) return 1.0 - beta + 4.0 * beta / kPi;
  if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < eps) {
    const double a = kPi / (4.0 * beta);
    return beta / std::sqrt(2.0) * ((1.0 + 2.0 / kPi) * std::sin(a) + (1.0 - 2.0 / kPi) * std::cos(a));
  }
  const double num = std::sin(kPi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(kPi * t * (1.0 + beta));
  const double den = kPi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
  return num / den;
}

}  // namespace

double qam16_scale() { return 1.0 / std::sqrt(10.0); }

const std::vector<cplx>& qam16_points() {
  static const std::vector<cplx> points = [] {
    std::vector<cplx> p(16);
    for (int label = 0; label < 16; ++label) {
      const int li = kLevelOfPair[static_cast<std::size_t>((label >> 2) & 3)];
      const int lq = kLevelOfPair[static_cast<std::size_t>(label & 3)];
      p[static_cast<std::size_t>(label)] = cplx(li, lq) * qam16_scale();
    }
    return p;
  }();
  return points;
}

Bits generate_bits(std::uint64_t seed, std::size_t n, Stream stream) {
  Rng rng(seed, stream);
  Bits bits(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = rng.next_u64();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return bits;
}

CVec map_16qam(const Bits& bits) {
  if (bits.size() % 4 != 0) throw std::domain_error("map_16qam: bit count not divisible by 4");
  CVec out(bits.size() / 4);
  const auto& pts = qam16_points();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int label = (bits[4 * i] << 3) | (bits[4 * i + 1] << 2) | (bits[4 * i + 2] << 1) | bits[4 * i + 3];
    out[i] = pts[static_cast<std::size_t>(label)];
  }
  return out;
}

cplx decide_16qam(cplx s) {
  return cplx(nearest_level(s.real()), nearest_level(s.imag())) * qam16_scale();
}

Bits demap_16qam_hard(const CVec& symbols) {
  Bits bits(symbols.size() * 4);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const int pi = level_index(nearest_level(symbols[i].real()));
    const int pq = level_index(nearest_level(symbols[i].imag()));
    bits[4 * i] = static_cast<std::uint8_t>((pi >> 1) & 1);
    bits[4 * i + 1] = static_cast<std::uint8_t>(pi & 1);
    bits[4 * i + 2] = static_cast<std::uint8_t>((pq >> 1) & 1);
    bits[4 * i + 3] = static_cast<std::uint8_t>(pq & 1);
  }
  return bits;
}

RrcFilter RrcFilter::make(double rolloff, int span_symbols, int sps) {
  if (rolloff < 0.0 || rolloff > 1.0) throw std::invalid_argument("RrcFilter: rolloff outside [0,1]");
  if (span_symbols < 1 || sps < 1) throw std::invalid_argument("RrcFilter: span and sps must be positive");
  RrcFilter f;
  f.rolloff = rolloff;
  f.span_symbols = span_symbols;
  f.sps = sps;
  const int n = span_symbols * sps + 1;
  const int half = n / 2;
  f.taps.resize(static_cast<std::size_t>(n));
  double energy = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = static_cast<double>(k - half) / sps;
    const double v = rrc_tap(t, rolloff);
    f.taps[static_cast<std::size_t>(k)] = v;
    energy += v * v;
  }
  const double norm = 1.0 / std::sqrt(energy);
  for (int k = 0; k <= half; ++k) {
    // Enforce exact symmetry after normalization.
    const double v = f.taps[static_cast<std::size_t>(k)] * norm;
    f.taps[static_cast<std::size_t>(k)] = v;
    f.taps[static_cast<std::size_t>(n - 1 - k)] = v;
  }
  return f;
}

CVec pulse_shape(const CVec& syms, const RrcFilter& filt) {
  if (syms.empty()) throw std::domain_error("pulse_shape: empty symbol sequence");
  const auto sps = static_cast<std::size_t>(filt.sps);
  const auto n_out = syms.size() * sps;
  const auto center = static_cast<std::ptrdiff_t>(filt.center());
  const auto n_taps = static_cast<std::ptrdiff_t>(filt.taps.size());
  CVec out(n_out, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < syms.size(); ++i) {
    const auto pos = static_cast<std::ptrdiff_t>(i * sps);
    for (std::ptrdiff_t k = 0; k < n_taps; ++k) {
      const std::ptrdiff_t n = pos + k - center;
      if (n < 0 || n >= static_cast<std::ptrdiff_t>(n_out)) continue;
      out[static_cast<std::size_t>(n)] += syms[i] * filt.taps[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

std::vector<double> phase_noise_walk(const PhaseNoiseParams& p, std::size_t n) {
  if (p.linewidth < 0.0) throw std::invalid_argument("phase noise: linewidth < 0");
  std::vector<double> phi(n, 0.0);
  if (n == 0 || p.linewidth == 0.0) return phi;
  Rng rng(p.seed, Stream::kPhaseNoise);
  const double sigma = std::sqrt(2.0 * kPi * p.linewidth * p.sample_interval);
  for (std::size_t i = 1; i < n; ++i) phi[i] = phi[i - 1] + sigma * rng.normal();
  return phi;
}

DualPolWaveform rotate_phase(const DualPolWaveform& w, const std::vector<double>& phases, double sign) {
  if (phases.size() != w.size()) throw std::invalid_argument("rotate_phase: length mismatch");
  CVec x(w.size());
  CVec y(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const cplx r = std::polar(1.0, sign * phases[i]);
    x[i] = w.x()[i] * r;
    y[i] = w.y()[i] * r;
  }
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

DualPolWaveform apply_phase_noise(const DualPolWaveform& w, const PhaseNoiseParams& p) {
  if (p.linewidth == 0.0) return w;
  return rotate_phase(w, phase_noise_walk(p, w.size()));
}

DualPolWaveform set_launch_power(const DualPolWaveform& w, double p_dbm) {
  const double current = measure_power(w);
  if (!(current > 0.0)) throw std::domain_error("set_launch_power: zero-power waveform");
  const double scale = std::sqrt(dbm_to_watts(p_dbm) / current);
  CVec x(w.x());
  CVec y(w.y());
  for (auto& v : x) v *= scale;
  for (auto& v : y) v *= scale;
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

SymbolFrame make_symbol_frame(std::uint64_t seed, std::size_t n_symbols, double baud_rate) {
  SymbolFrame f;
  f.bits_x = generate_bits(seed, 4 * n_symbols, Stream::kBitsX);
  f.bits_y = generate_bits(seed, 4 * n_symbols, Stream::kBitsY);
  f.syms_x = map_16qam(f.bits_x);
  f.syms_y = map_16qam(f.bits_y);
  f.baud_rate = baud_rate;
  return f;
}

}  // namespace fiberlab
