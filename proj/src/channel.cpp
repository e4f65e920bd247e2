#include "fiberlab/channel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "fiberlab/fft.hpp"
#include "fiberlab/rng.hpp"

namespace fiberlab {

namespace {

CVec linear_multiplier(std::size_t n, double sample_rate, double delta, const SystemParams& params) {
  const SpectralGrid grid(n, sample_rate);
  CVec h(n);
  const double loss = -0.5 * params.alpha * delta;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = grid[k];
    h[k] = std::exp(cplx(loss, 0.5 * params.beta2 * w * w * delta));
  }
  return h;
}

void apply_jones(CVec& fx, CVec& fy, const SpectralGrid& grid, const PmdSegment& seg) {
  const double c = std::cos(seg.theta);
  const double s = std::sin(seg.theta);
  const cplx ep = std::polar(1.0, 0.5 * seg.phi);
  const cplx em = std::conj(ep);
  const cplx r11 = ep * c;
  const cplx r12 = em * s;
  const cplx r21 = -ep * s;
  const cplx r22 = em * c;
  for (std::size_t k = 0; k < fx.size(); ++k) {
    const cplx d = std::polar(1.0, -0.5 * grid[k] * seg.dgd);
    const cplx a = fx[k] * d;
    const cplx b = fy[k] * std::conj(d);
    fx[k] = r11 * a + r12 * b;
    fy[k] = r21 * a + r22 * b;
  }
}

void apply_kerr(CVec& x, CVec& y, double gamma_delta) {
  constexpr double kCross = 2.0 / 3.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double px = std::norm(x[i]);
    const double py = std::norm(y[i]);
    x[i] *= std::polar(1.0, gamma_delta * (px + kCross * py));
    y[i] *= std::polar(1.0, gamma_delta * (py + kCross * px));
  }
}

}  // namespace

PmdRealization PmdRealization::identity(const SystemParams& params) {
  PmdRealization r;
  r.n_spans = params.n_spans;
  r.steps_per_span = params.steps_per_span;
  for (int s = 0; s < params.n_spans; ++s) {
    for (int k = 0; k < params.steps_per_span; ++k) r.segments.push_back(PmdSegment{s, k, 0.0, 0.0, 0.0});
  }
  return r;
}

void PmdRealization::write(std::ostream& os) const {
  os << "# span segment theta phi dgd\n";
  os << std::setprecision(17);
  for (const auto& s : segments) {
    os << s.span << ' ' << s.segment << ' ' << s.theta << ' ' << s.phi << ' ' << s.dgd << '\n';
  }
}

PmdRealization PmdRealization::read(std::istream& is) {
  PmdRealization r;
  std::string line;
  int max_span = -1;
  int max_seg = -1;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    PmdSegment s;
    if (!(ls >> s.span >> s.segment >> s.theta >> s.phi >> s.dgd)) {
      throw std::runtime_error("PmdRealization: malformed line: " + line);
    }
    max_span = std::max(max_span, s.span);
    max_seg = std::max(max_seg, s.segment);
    r.segments.push_back(s);
  }
  r.n_spans = max_span + 1;
  r.steps_per_span = max_seg + 1;
  if (r.segments.size() != static_cast<std::size_t>(r.n_spans) * static_cast<std::size_t>(r.steps_per_span)) {
    throw std::runtime_error("PmdRealization: segment table is not span x segment complete");
  }
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    const auto& s = r.segments[i];
    if (static_cast<std::size_t>(s.span * r.steps_per_span + s.segment) != i) {
      throw std::runtime_error("PmdRealization: segments out of order");
    }
  }
  return r;
}

void PmdRealization::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write(os);
}

PmdRealization PmdRealization::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read(is);
}

PmdRealization draw_pmd(const SystemParams& params, std::uint64_t seed) {
  PmdRealization r;
  r.n_spans = params.n_spans;
  r.steps_per_span = params.steps_per_span;
  Rng rng(seed, Stream::kPmd);
  const double sigma = params.pmd_coef * std::sqrt(params.segment_length());
  constexpr double kTwoPi = 2.0 * kPi;
  for (int s = 0; s < params.n_spans; ++s) {
    for (int k = 0; k < params.steps_per_span; ++k) {
      PmdSegment seg{s, k, 0.0, 0.0, 0.0};
      seg.theta = kTwoPi * rng.uniform();
      seg.phi = kTwoPi * rng.uniform();
      seg.dgd = sigma * rng.normal();
      r.segments.push_back(seg);
    }
  }
  return r;
}

DualPolWaveform linear_step(const DualPolWaveform& w, double delta, const SystemParams& params) {
  const CVec h = linear_multiplier(w.size(), w.sample_rate(), delta, params);
  CVec x(w.x());
  CVec y(w.y());
  fft_forward(x);
  fft_forward(y);
  for (std::size_t k = 0; k < h.size(); ++k) {
    x[k] *= h[k];
    y[k] *= h[k];
  }
  fft_inverse(x);
  fft_inverse(y);
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

DualPolWaveform pmd_step(const DualPolWaveform& w, const PmdSegment& seg) {
  CVec x(w.x());
  CVec y(w.y());
  fft_forward(x);
  fft_forward(y);
  apply_jones(x, y, SpectralGrid(w.size(), w.sample_rate()), seg);
  fft_inverse(x);
  fft_inverse(y);
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

DualPolWaveform nonlinear_step(const DualPolWaveform& w, double delta, const SystemParams& params) {
  CVec x(w.x());
  CVec y(w.y());
  apply_kerr(x, y, params.gamma * delta);
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

double edfa_gain(const SystemParams& params) { return std::exp(params.alpha * params.span_length); }

double ase_power_per_pol(const SystemParams& params, double sample_rate) {
  const double n_sp = std::pow(10.0, params.noise_figure_db / 10.0) / 2.0;
  const double h_nu = kPlanck * kSpeedOfLight / params.center_wavelength;
  return n_sp * h_nu * (edfa_gain(params) - 1.0) * sample_rate;
}

DualPolWaveform edfa(const DualPolWaveform& w, const SystemParams& params, std::uint64_t seed,
                     std::uint64_t substream) {
  const double amp = std::sqrt(edfa_gain(params));
  CVec x(w.x());
  CVec y(w.y());
  for (auto& v : x) v *= amp;
  for (auto& v : y) v *= amp;
  if (params.ase_enabled) {
    Rng rng(seed, Stream::kAse, substream);
    const double sigma = std::sqrt(ase_power_per_pol(params, w.sample_rate()) / 2.0);
    for (auto& v : x) v += cplx(sigma * rng.normal(), sigma * rng.normal());
    for (auto& v : y) v += cplx(sigma * rng.normal(), sigma * rng.normal());
  }
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

DualPolWaveform propagate_span(const DualPolWaveform& w, const SystemParams& params, const PmdRealization& pmd,
                               int span) {
  const double delta = params.segment_length();
  const std::size_t n = w.size();
  const CVec h = linear_multiplier(n, w.sample_rate(), delta, params);
  const SpectralGrid grid(n, w.sample_rate());
  const bool use_pmd = params.pmd_enabled;
  if (use_pmd && (pmd.n_spans < params.n_spans || pmd.steps_per_span != params.steps_per_span)) {
    throw std::invalid_argument("propagate: PMD realization does not match span/segment layout");
  }
  CVec x(w.x());
  CVec y(w.y());
  const double gamma_delta = params.gamma * delta;
  for (int k = 0; k < params.steps_per_span; ++k) {
    fft_forward(x);
    fft_forward(y);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] *= h[i];
      y[i] *= h[i];
    }
    if (use_pmd) apply_jones(x, y, grid, pmd.at(span, k));
    fft_inverse(x);
    fft_inverse(y);
    if (gamma_delta != 0.0) apply_kerr(x, y, gamma_delta);
  }
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

DualPolWaveform propagate(const DualPolWaveform& w, const SystemParams& params, const PmdRealization& pmd,
                          std::uint64_t seed) {
  params.validate();
  DualPolWaveform cur = w;
  for (int s = 0; s < params.n_spans; ++s) {
    cur = propagate_span(cur, params, pmd, s);
    cur = edfa(cur, params, seed, static_cast<std::uint64_t>(s));
  }
  return cur;
}

}  // namespace fiberlab
