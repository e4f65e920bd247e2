#include "fiberlab/rx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <set>

#include "fiberlab/channel.hpp"
#include "fiberlab/fft.hpp"

namespace fiberlab {

namespace {

double wrap_pi(double a) { return std::remainder(a, 2.0 * kPi); }

CVec filter_centered(const CVec& in, const std::vector<double>& taps) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  const auto n_taps = static_cast<std::ptrdiff_t>(taps.size());
  const auto center = n_taps / 2;
  CVec out(in.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    cplx acc(0.0, 0.0);
    const std::ptrdiff_t k_lo = std::max<std::ptrdiff_t>(0, i + center - (n - 1));
    const std::ptrdiff_t k_hi = std::min<std::ptrdiff_t>(n_taps - 1, i + center);
    for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) {
      acc += in[static_cast<std::size_t>(i + center - k)] * taps[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

void multiply_spectrum(CVec& v, const CVec& h) {
  fft_forward(v);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] *= h[k];
  fft_inverse(v);
}

double mean_power(const CVec& v) {
  double acc = 0.0;
  for (const auto& s : v) acc += std::norm(s);
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

}  // namespace

DualPolWaveform resample(const DualPolWaveform& w, double target_rate) {
  const double ratio = target_rate / w.sample_rate();
  const double exact = static_cast<double>(w.size()) * ratio;
  const auto n_out = static_cast<std::size_t>(std::llround(exact));
  if (n_out == 0 || std::abs(exact - static_cast<double>(n_out)) > 1e-9) {
    throw std::invalid_argument("resample: length does not scale to an integer sample count");
  }
  if (n_out == w.size()) return w;
  const std::size_t n_in = w.size();
  const std::size_t keep = std::min(n_in, n_out);
  // Positive bins [0, keep/2), negative bins [-keep/2, 0); the Nyquist bin of
  // the smaller grid is dropped when keep is even.
  const std::size_t pos = (keep + 1) / 2;
  const std::size_t neg = keep / 2 - (keep % 2 == 0 ? 1 : 0);
  auto convert = [&](const CVec& in) {
    CVec f(in);
    fft_forward(f);
    CVec g(n_out, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < pos; ++k) g[k] = f[k];
    for (std::size_t k = 1; k <= neg; ++k) g[n_out - k] = f[n_in - k];
    fft_inverse(g);
    const double s = static_cast<double>(n_out) / static_cast<double>(n_in);
    for (auto& v : g) v *= s;
    return g;
  };
  return DualPolWaveform(convert(w.x()), convert(w.y()), target_rate);
}

DualPolWaveform cd_compensate(const DualPolWaveform& w, const SystemParams& params, double total_length) {
  const SpectralGrid grid(w.size(), w.sample_rate());
  CVec h(w.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    h[k] = std::polar(1.0, -0.5 * params.beta2 * grid[k] * grid[k] * total_length);
  }
  CVec x(w.x());
  CVec y(w.y());
  multiply_spectrum(x, h);
  multiply_spectrum(y, h);
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

DualPolWaveform dbp(const DualPolWaveform& w, const SystemParams& params, int steps_per_span) {
  if (steps_per_span < 1) throw std::invalid_argument("dbp: steps_per_span < 1");
  const std::size_t n = w.size();
  const double delta = params.span_length / steps_per_span;
  const SpectralGrid grid(n, w.sample_rate());
  CVec h(n);
  for (std::size_t k = 0; k < n; ++k) {
    h[k] = std::exp(cplx(0.5 * params.alpha * delta, -0.5 * params.beta2 * grid[k] * grid[k] * delta));
  }
  const double inv_amp = 1.0 / std::sqrt(edfa_gain(params));
  const double neg_gamma_delta = -params.gamma * delta;
  constexpr double kCross = 2.0 / 3.0;
  CVec x(w.x());
  CVec y(w.y());
  for (int s = params.n_spans - 1; s >= 0; --s) {
    for (auto& v : x) v *= inv_amp;
    for (auto& v : y) v *= inv_amp;
    for (int k = 0; k < steps_per_span; ++k) {
      if (neg_gamma_delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          const double px = std::norm(x[i]);
          const double py = std::norm(y[i]);
          x[i] *= std::polar(1.0, neg_gamma_delta * (px + kCross * py));
          y[i] *= std::polar(1.0, neg_gamma_delta * (py + kCross * px));
        }
      }
      multiply_spectrum(x, h);
      multiply_spectrum(y, h);
    }
  }
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

DualPolWaveform matched_filter(const DualPolWaveform& w, const RrcFilter& filt) {
  return DualPolWaveform(filter_centered(w.x(), filt.taps), filter_centered(w.y(), filt.taps), w.sample_rate());
}

SymbolStreams matched_filter_downsample(const DualPolWaveform& w, const RrcFilter& filt, int sps_in) {
  if (sps_in < 1) throw std::invalid_argument("matched_filter_downsample: sps_in < 1");
  if (sps_in == 1) return SymbolStreams{w.x(), w.y()};
  const DualPolWaveform f = matched_filter(w, filt);
  const std::size_t n_sym = w.size() / static_cast<std::size_t>(sps_in);
  SymbolStreams out{CVec(n_sym), CVec(n_sym)};
  for (std::size_t i = 0; i < n_sym; ++i) {
    out.x[i] = f.x()[i * static_cast<std::size_t>(sps_in)];
    out.y[i] = f.y()[i * static_cast<std::size_t>(sps_in)];
  }
  return out;
}

const std::vector<double>& qam16_ring_powers() {
  static const std::vector<double> rings = [] {
    std::set<long long> seen;
    std::vector<double> r;
    for (const auto& p : qam16_points()) {
      const double v = std::norm(p);
      const auto key = std::llround(v * 1e9);
      if (seen.insert(key).second) r.push_back(v);
    }
    std::sort(r.begin(), r.end());
    return r;
  }();
  return rings;
}

EqualizerState EqualizerState::centered(std::size_t n_taps, double mu) {
  if (n_taps % 2 == 0) throw std::invalid_argument("EqualizerState: n_taps must be odd");
  EqualizerState s;
  s.h_xx.assign(n_taps, cplx(0.0, 0.0));
  s.h_xy.assign(n_taps, cplx(0.0, 0.0));
  s.h_yx.assign(n_taps, cplx(0.0, 0.0));
  s.h_yy.assign(n_taps, cplx(0.0, 0.0));
  s.h_xx[n_taps / 2] = 1.0;
  s.h_yy[n_taps / 2] = 1.0;
  s.mu = mu;
  return s;
}

RdeResult rde_mimo(const DualPolWaveform& w, EqualizerState state, std::size_t cma_symbols) {
  const std::size_t n_taps = state.n_taps();
  if (n_taps % 2 == 0) throw std::invalid_argument("rde_mimo: n_taps must be odd");
  const auto n_in = static_cast<std::ptrdiff_t>(w.size());
  const std::size_t n_sym = w.size() / 2;
  const auto half = static_cast<std::ptrdiff_t>(n_taps / 2);
  const auto& rings = qam16_ring_powers();
  double cma_radius = 0.0;
  {
    double m2 = 0.0;
    double m4 = 0.0;
    for (const auto& p : qam16_points()) {
      m2 += std::norm(p);
      m4 += std::norm(p) * std::norm(p);
    }
    cma_radius = m4 / m2;
  }
  const double p_in = std::max(mean_power(w.x()), mean_power(w.y()));
  const double limit = 10.0 * std::max(p_in, 1e-300);
  constexpr std::size_t kBlock = 1024;

  SymbolStreams out{CVec(n_sym), CVec(n_sym)};
  CVec ux(n_taps);
  CVec uy(n_taps);
  double block_px = 0.0;
  double block_py = 0.0;
  std::size_t block_n = 0;
  // Ring decisions use power-normalized outputs so a transient gain dip
  // cannot push points onto inner rings and collapse the gain further.
  double avg_px = 1.0;
  double avg_py = 1.0;
  constexpr double kAvg = 1.0 / 1024.0;
  for (std::size_t k = 0; k < n_sym; ++k) {
    const auto base = static_cast<std::ptrdiff_t>(2 * k) + half;
    for (std::size_t j = 0; j < n_taps; ++j) {
      const std::ptrdiff_t idx = base - static_cast<std::ptrdiff_t>(j);
      const bool inside = idx >= 0 && idx < n_in;
      ux[j] = inside ? w.x()[static_cast<std::size_t>(idx)] : cplx(0.0, 0.0);
      uy[j] = inside ? w.y()[static_cast<std::size_t>(idx)] : cplx(0.0, 0.0);
    }
    cplx yx(0.0, 0.0);
    cplx yy(0.0, 0.0);
    for (std::size_t j = 0; j < n_taps; ++j) {
      yx += state.h_xx[j] * ux[j] + state.h_xy[j] * uy[j];
      yy += state.h_yx[j] * ux[j] + state.h_yy[j] * uy[j];
    }
    out.x[k] = yx;
    out.y[k] = yy;

    const double px = std::norm(yx);
    const double py = std::norm(yy);
    double ex = 0.0;
    double ey = 0.0;
    if (k < cma_symbols) {
      ex = cma_radius - px;
      ey = cma_radius - py;
    } else {
      auto nearest = [&](double p) {
        double best = rings.front();
        for (double r : rings) {
          if (std::abs(r - p) < std::abs(best - p)) best = r;
        }
        return best;
      };
      ex = nearest(px / avg_px) - px;
      ey = nearest(py / avg_py) - py;
    }
    avg_px += kAvg * (px - avg_px);
    avg_py += kAvg * (py - avg_py);
    const cplx gx = state.mu * ex * yx;
    const cplx gy = state.mu * ey * yy;
    for (std::size_t j = 0; j < n_taps; ++j) {
      const cplx cx = std::conj(ux[j]);
      const cplx cy = std::conj(uy[j]);
      state.h_xx[j] += gx * cx;
      state.h_xy[j] += gx * cy;
      state.h_yx[j] += gy * cx;
      state.h_yy[j] += gy * cy;
    }

    block_px += px;
    block_py += py;
    if (++block_n == kBlock || k + 1 == n_sym) {
      const double bx = block_px / static_cast<double>(block_n);
      const double by = block_py / static_cast<double>(block_n);
      if (!std::isfinite(bx) || !std::isfinite(by) || bx > limit || by > limit) {
        throw EqualizerDiverged("rde_mimo: equalizer diverged near symbol " + std::to_string(k));
      }
      block_px = block_py = 0.0;
      block_n = 0;
    }
  }
  return RdeResult{std::move(out), std::move(state)};
}

CpeResult cpe_two_stage(const CVec& symbols, const CpeOptions& opts) {
  if (opts.test_angles < 1 || opts.window < 1) throw std::invalid_argument("cpe: test_angles and window must be >= 1");
  const std::size_t n = symbols.size();
  CpeResult res{CVec(n), std::vector<double>(n, 0.0)};
  if (n == 0) return res;
  const auto n_b = static_cast<std::size_t>(opts.test_angles);
  constexpr double kQuarter = kPi / 2.0;
  const auto half_lo = static_cast<std::size_t>(opts.window / 2);
  const auto half_hi = static_cast<std::size_t>(opts.window) - half_lo;
  auto window_of = [&](std::size_t k) {
    const std::size_t lo = k >= half_lo ? k - half_lo : 0;
    const std::size_t hi = std::min(n, k + half_hi);
    return std::pair<std::size_t, std::size_t>{lo, hi};
  };

  // Stage 1: blind phase search with prefix-summed distances per test angle.
  std::vector<double> best_cost(n, std::numeric_limits<double>::infinity());
  std::vector<double> raw(n, 0.0);
  std::vector<double> prefix(n + 1);
  for (std::size_t b = 0; b < n_b; ++b) {
    const double angle = kQuarter * static_cast<double>(b) / static_cast<double>(n_b);
    const cplx rot = std::polar(1.0, -angle);
    prefix[0] = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const cplx r = symbols[k] * rot;
      prefix[k + 1] = prefix[k] + std::norm(r - decide_16qam(r));
    }
    for (std::size_t k = 0; k < n; ++k) {
      const auto [lo, hi] = window_of(k);
      const double cost = prefix[hi] - prefix[lo];
      if (cost < best_cost[k]) {
        best_cost[k] = cost;
        raw[k] = angle;
      }
    }
  }

  std::vector<double> stage1(n);
  double start = raw[0];
  if (!opts.pilots.empty()) {
    cplx acc(0.0, 0.0);
    const std::size_t np = std::min(n, opts.pilots.size());
    for (std::size_t k = 0; k < np; ++k) acc += symbols[k] * std::conj(opts.pilots[k]);
    const double pilot_phase = std::arg(acc);
    start = raw[0] + kQuarter * std::round((pilot_phase - raw[0]) / kQuarter);
  }
  stage1[0] = start;
  for (std::size_t k = 1; k < n; ++k) {
    stage1[k] = raw[k] + kQuarter * std::round((stage1[k - 1] - raw[k]) / kQuarter);
  }

  // Stage 2: decision-directed ML refinement around the stage-1 track.
  CVec prod(n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx d = decide_16qam(symbols[k] * std::polar(1.0, -stage1[k]));
    prod[k] = symbols[k] * std::conj(d);
  }
  CVec cprefix(n + 1);
  cprefix[0] = cplx(0.0, 0.0);
  for (std::size_t k = 0; k < n; ++k) cprefix[k + 1] = cprefix[k] + prod[k];
  for (std::size_t k = 0; k < n; ++k) {
    const auto [lo, hi] = window_of(k);
    const cplx acc = cprefix[hi] - cprefix[lo];
    const double refined = stage1[k] + wrap_pi(std::arg(acc * std::polar(1.0, -stage1[k])));
    res.phase[k] = refined;
    res.symbols[k] = symbols[k] * std::polar(1.0, -refined);
  }
  return res;
}

PilotAlignment find_pilot_alignment(const SymbolStreams& streams, const CVec& pilots_x, const CVec& pilots_y,
                                    std::size_t pilot_start, int max_lag) {
  PilotAlignment best;
  double best_metric = -1.0;
  const auto n = static_cast<std::ptrdiff_t>(streams.size());
  auto corr = [&](const CVec& s, const CVec& p, int lag) {
    cplx acc(0.0, 0.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(pilot_start + j) + lag;
      if (idx < 0 || idx >= n) continue;
      acc += s[static_cast<std::size_t>(idx)] * std::conj(p[j]);
    }
    return std::abs(acc);
  };
  for (int swap = 0; swap < 2; ++swap) {
    const CVec& sx = swap ? streams.y : streams.x;
    const CVec& sy = swap ? streams.x : streams.y;
    for (int lag = -max_lag; lag <= max_lag; ++lag) {
      const double m = corr(sx, pilots_x, lag) + corr(sy, pilots_y, lag);
      if (m > best_metric) {
        best_metric = m;
        best = PilotAlignment{swap == 1, lag};
      }
    }
  }
  return best;
}

SymbolStreams apply_alignment(const SymbolStreams& streams, const PilotAlignment& a) {
  const CVec& sx = a.swapped ? streams.y : streams.x;
  const CVec& sy = a.swapped ? streams.x : streams.y;
  const auto n = static_cast<std::ptrdiff_t>(streams.size());
  SymbolStreams out{CVec(streams.size()), CVec(streams.size())};
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t src = i + a.lag;
    if (src < 0 || src >= n) continue;
    out.x[static_cast<std::size_t>(i)] = sx[static_cast<std::size_t>(src)];
    out.y[static_cast<std::size_t>(i)] = sy[static_cast<std::size_t>(src)];
  }
  return out;
}

int window_half_width(int memory, int sps) {
  if (memory <= 0) throw std::domain_error("extract_windows: channel memory must be positive");
  if (sps < 1) throw std::domain_error("extract_windows: sps must be >= 1");
  // floor(memory * sps + (sps - 1) / 2) in integer arithmetic.
  return (2 * memory * sps + sps - 1) / 2;
}

WindowedDataset WindowedDataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw std::out_of_range("WindowedDataset::slice");
  WindowedDataset d;
  d.half_width = half_width;
  d.sps = sps;
  const std::size_t in = input_size();
  d.inputs.assign(inputs.begin() + static_cast<std::ptrdiff_t>(begin * in),
                  inputs.begin() + static_cast<std::ptrdiff_t>(end * in));
  d.targets.assign(targets.begin() + static_cast<std::ptrdiff_t>(begin * 4),
                   targets.begin() + static_cast<std::ptrdiff_t>(end * 4));
  d.symbol_index.assign(symbol_index.begin() + static_cast<std::ptrdiff_t>(begin),
                        symbol_index.begin() + static_cast<std::ptrdiff_t>(end));
  return d;
}

WindowedDataset extract_windows(const SymbolStreams& streams, const CVec& targets_x, const CVec& targets_y,
                                int memory, int sps, std::size_t first, std::size_t last) {
  const int m = window_half_width(memory, sps);
  if (streams.x.size() != streams.y.size()) throw std::invalid_argument("extract_windows: stream lengths differ");
  if (targets_x.size() != targets_y.size()) throw std::invalid_argument("extract_windows: target lengths differ");
  if (streams.size() <= static_cast<std::size_t>(2 * m + 1)) {
    throw std::domain_error("extract_windows: stream shorter than one window");
  }
  WindowedDataset d;
  d.half_width = m;
  d.sps = sps;
  last = std::min(last, targets_x.size());
  const auto n = static_cast<std::ptrdiff_t>(streams.size());
  const std::size_t width = static_cast<std::size_t>(2 * m + 1);
  for (std::size_t i = first; i < last; ++i) {
    const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(i) * sps;
    if (center - m < 0 || center + m >= n) continue;
    for (std::size_t j = 0; j < width; ++j) {
      const auto idx = static_cast<std::size_t>(center - m) + j;
      d.inputs.push_back(streams.x[idx].real());
      d.inputs.push_back(streams.y[idx].real());
      d.inputs.push_back(streams.x[idx].imag());
      d.inputs.push_back(streams.y[idx].imag());
    }
    d.targets.push_back(targets_x[i].real());
    d.targets.push_back(targets_x[i].imag());
    d.targets.push_back(targets_y[i].real());
    d.targets.push_back(targets_y[i].imag());
    d.symbol_index.push_back(i);
  }
  return d;
}

}  // namespace fiberlab
