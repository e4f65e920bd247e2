#include "fiberlab/signal.hpp"

#include <cmath>
#include <algorithm>
#include <stdexcept>

namespace fiberlab {

DualPolWaveform::DualPolWaveform(CVec x, CVec y, double sample_rate)
    : x_(std::move(x)), y_(std::move(y)), sample_rate_(sample_rate) {
  if (x_.size() != y_.size()) {
    throw std::invalid_argument("DualPolWaveform: x and y lengths differ");
  }
  if (!(sample_rate_ > 0.0)) {
    throw std::invalid_argument("DualPolWaveform: sample_rate must be positive");
  }
}

void SystemParams::validate() const {
  if (sps_rx < 1 || sps_forward < sps_rx) {
    throw std::invalid_argument("SystemParams: need sps_forward >= sps_rx >= 1");
  }
  if (sps_forward % sps_rx != 0) {
    throw std::invalid_argument("SystemParams: sps_forward must be a multiple of sps_rx");
  }
  if (steps_per_span < 1) throw std::invalid_argument("SystemParams: steps_per_span < 1");
  if (n_spans < 0) throw std::invalid_argument("SystemParams: n_spans < 0");
  if (rolloff < 0.0 || rolloff > 1.0) throw std::invalid_argument("SystemParams: rolloff outside [0,1]");
  if (!(symbol_rate > 0.0)) throw std::invalid_argument("SystemParams: symbol_rate must be positive");
  if (!(span_length > 0.0)) throw std::invalid_argument("SystemParams: span_length must be positive");
  if (linewidth < 0.0) throw std::invalid_argument("SystemParams: linewidth < 0");
  if (alpha < 0.0) throw std::invalid_argument("SystemParams: alpha < 0");
  if (pmd_coef < 0.0) throw std::invalid_argument("SystemParams: pmd_coef < 0");
}

SystemParams SystemParams::reference_link() {
  SystemParams p;
  p.alpha = alpha_from_db_per_km(0.2);
  p.beta2 = beta2_from_dispersion(17.0);
  p.gamma = 1.4e-3;
  p.pmd_coef = pmd_from_ps_sqrt_km(0.05);
  p.span_length = 80e3;
  p.n_spans = 14;
  p.symbol_rate = 64e9;
  p.sps_forward = 8;
  p.sps_rx = 2;
  p.steps_per_span = 80;
  p.linewidth = 100e3;
  p.noise_figure_db = 5.0;
  p.rolloff = 0.25;
  return p;
}

double beta2_from_dispersion(double d_ps_nm_km, double wavelength) {
  const double d_si = d_ps_nm_km * 1e-12 / (1e-9 * 1e3);  // s/m^2
  return -d_si * wavelength * wavelength / (2.0 * kPi * kSpeedOfLight);
}

double alpha_from_db_per_km(double a_db_km) {
  return a_db_km / (10.0 * std::log10(std::exp(1.0))) / 1000.0;
}

double pmd_from_ps_sqrt_km(double tau) { return tau * 1e-12 / std::sqrt(1000.0); }

double measure_power(const DualPolWaveform& w) {
  if (w.empty()) throw std::domain_error("measure_power: empty waveform");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += std::norm(w.x()[i]) + std::norm(w.y()[i]);
  return acc / static_cast<double>(w.size());
}

double dbm_to_watts(double p_dbm) { return std::pow(10.0, p_dbm / 10.0) / 1000.0; }

double watts_to_dbm(double p_watts) { return 10.0 * std::log10(p_watts * 1000.0); }

}  // namespace fiberlab

namespace fiberlab {

DualPolWaveform zero_pad(const DualPolWaveform& w, std::size_t lead, std::size_t total) {
  if (lead + w.size() > total) throw std::invalid_argument("zero_pad: total too small");
  CVec x(total, cplx(0.0, 0.0));
  CVec y(total, cplx(0.0, 0.0));
  std::copy(w.x().begin(), w.x().end(), x.begin() + static_cast<std::ptrdiff_t>(lead));
  std::copy(w.y().begin(), w.y().end(), y.begin() + static_cast<std::ptrdiff_t>(lead));
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

DualPolWaveform crop(const DualPolWaveform& w, std::size_t offset, std::size_t n) {
  if (offset + n > w.size()) throw std::invalid_argument("crop: range outside waveform");
  const auto b = static_cast<std::ptrdiff_t>(offset);
  const auto e = static_cast<std::ptrdiff_t>(offset + n);
  return DualPolWaveform(CVec(w.x().begin() + b, w.x().begin() + e), CVec(w.y().begin() + b, w.y().begin() + e),
                         w.sample_rate());
}

DualPolWaveform scale(const DualPolWaveform& w, double factor) {
  CVec x(w.x());
  CVec y(w.y());
  for (auto& v : x) v *= factor;
  for (auto& v : y) v *= factor;
  return DualPolWaveform(std::move(x), std::move(y), w.sample_rate());
}

}  // namespace fiberlab
