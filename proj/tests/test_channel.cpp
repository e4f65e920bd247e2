#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fiberlab/channel.hpp"
#include "fiberlab/fft.hpp"
#include "fiberlab/tx.hpp"
#include "oracles.hpp"

using namespace fiberlab;

namespace {

SystemParams quiet_params() {
  SystemParams p;
  p.alpha = 0.0;
  p.beta2 = 0.0;
  p.gamma = 0.0;
  p.pmd_coef = 0.0;
  p.ase_enabled = false;
  p.pmd_enabled = false;
  return p;
}

DualPolWaveform random_wave(std::mt19937_64& g, std::size_t n, double rate = 128e9, double sigma = 1.0) {
  return DualPolWaveform(oracle::random_field(g, n, sigma), oracle::random_field(g, n, sigma), rate);
}

double wave_energy(const DualPolWaveform& w) { return oracle::energy(w.x(), w.y()); }

// Inverse DFT through the naive oracle: conj(DFT(conj(X))) / N.
std::vector<cplx> idft(const std::vector<cplx>& X) {
  std::vector<cplx> c(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) c[i] = std::conj(X[i]);
  auto t = oracle::dft(c);
  for (auto& v : t) v = std::conj(v) / static_cast<double>(X.size());
  return t;
}

double omega_of(std::size_t k, std::size_t n, double rate) {
  const double dw = 2 * kPi * rate / n;
  return k < n / 2 ? dw * k : dw * (static_cast<double>(k) - static_cast<double>(n));
}

}  // namespace

TEST_CASE("draw_pmd") {
  SystemParams p = quiet_params();
  p.n_spans = 3;
  p.steps_per_span = 10;
  p.pmd_coef = 0.0;
  const PmdRealization z = draw_pmd(p, 1);
  REQUIRE(z.segments.size() == 30);
  for (const auto& s : z.segments) {
    CHECK(s.dgd == 0.0);
    CHECK(s.theta >= 0.0);
    CHECK(s.theta < 2 * kPi);
    CHECK(s.phi >= 0.0);
    CHECK(s.phi < 2 * kPi);
  }
  p.pmd_coef = pmd_from_ps_sqrt_km(0.05);
  const PmdRealization a = draw_pmd(p, 42), b = draw_pmd(p, 42);
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    CHECK(a.segments[i].theta == b.segments[i].theta);
    CHECK(a.segments[i].dgd == b.segments[i].dgd);
  }
}

TEST_CASE("DGD spread over 1e5 one-kilometre segments") {
  SystemParams p = quiet_params();
  p.span_length = 100e3;
  p.steps_per_span = 100;
  p.n_spans = 1000;
  p.pmd_coef = pmd_from_ps_sqrt_km(0.05);
  const PmdRealization r = draw_pmd(p, 7);
  double s2 = 0.0;
  for (const auto& s : r.segments) s2 += s.dgd * s.dgd;
  const double sd = std::sqrt(s2 / r.segments.size());
  CHECK(std::abs(sd / 0.05e-12 - 1.0) < 0.02);
}

TEST_CASE("PMD realization text round trip") {
  SystemParams p = quiet_params();
  p.n_spans = 2;
  p.steps_per_span = 3;
  p.pmd_coef = 1e-15;
  const PmdRealization r = draw_pmd(p, 3);
  std::stringstream ss;
  r.write(ss);
  const PmdRealization back = PmdRealization::read(ss);
  REQUIRE(back.segments.size() == r.segments.size());
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    CHECK(back.segments[i].theta == r.segments[i].theta);
    CHECK(back.segments[i].phi == r.segments[i].phi);
    CHECK(back.segments[i].dgd == r.segments[i].dgd);
    CHECK(back.segments[i].span == r.segments[i].span);
  }
}

TEST_CASE("linear step") {
  std::mt19937_64 g(1);
  const DualPolWaveform w = random_wave(g, 256);
  SystemParams p = quiet_params();
  const DualPolWaveform id = linear_step(w, 1000.0, p);
  CHECK(oracle::nrmse(id.x(), w.x()) < 1e-12);

  p.alpha = alpha_from_db_per_km(0.2);
  const DualPolWaveform lossy = linear_step(w, 2000.0, p);
  CHECK(oracle::rel_err(wave_energy(lossy), wave_energy(w) * std::exp(-p.alpha * 2000.0)) < 1e-12);

  // Tone on bin k: amplitude exp(-alpha delta / 2), phase + beta2/2 w0^2 delta.
  p.beta2 = beta2_from_dispersion(17.0);
  const std::size_t n = 128, k = 5;
  const double rate = 64e9, delta = 5000.0;
  CVec tone(n);
  for (std::size_t t = 0; t < n; ++t) tone[t] = std::polar(1.0, 2 * kPi * k * t / n);
  const DualPolWaveform out = linear_step(DualPolWaveform(tone, CVec(n), rate), delta, p);
  const double w0 = 2 * kPi * rate * k / n;
  const cplx factor = std::exp(cplx(-0.5 * p.alpha * delta, 0.5 * p.beta2 * w0 * w0 * delta));
  for (std::size_t t = 0; t < n; ++t) CHECK(std::abs(out.x()[t] - tone[t] * factor) < 1e-12);
}

TEST_CASE("linear step against a naive DFT oracle") {
  std::mt19937_64 g(2);
  SystemParams p = quiet_params();
  p.alpha = 4e-5;
  p.beta2 = -2e-26;
  const std::size_t n = 64;
  const double rate = 128e9, delta = 3000.0;
  const DualPolWaveform w = random_wave(g, n, rate);
  auto X = oracle::dft(w.x());
  for (std::size_t k = 0; k < n; ++k) {
    const double om = omega_of(k, n, rate);
    X[k] *= std::exp(cplx(-0.5 * p.alpha * delta, 0.5 * p.beta2 * om * om * delta));
  }
  CHECK(oracle::nrmse(linear_step(w, delta, p).x(), idft(X)) < 1e-12);
}

TEST_CASE("PMD step") {
  std::mt19937_64 g(3);
  const DualPolWaveform w = random_wave(g, 128);
  const DualPolWaveform id = pmd_step(w, PmdSegment{0, 0, 0.0, 0.0, 0.0});
  CHECK(oracle::nrmse(id.x(), w.x()) < 1e-13);
  CHECK(oracle::nrmse(id.y(), w.y()) < 1e-13);

  const DualPolWaveform rot = pmd_step(w, PmdSegment{0, 0, kPi / 2, 0.0, 0.0});
  CVec neg_x(w.x());
  for (auto& v : neg_x) v = -v;
  CHECK(oracle::nrmse(rot.x(), w.y()) < 1e-13);
  CHECK(oracle::nrmse(rot.y(), neg_x) < 1e-13);

  std::uniform_real_distribution<double> u(0, 2 * kPi);
  std::normal_distribution<double> nd(0, 1e-12);
  for (int t = 0; t < 50; ++t) {
    const PmdSegment s{0, 0, u(g), u(g), nd(g)};
    CHECK(oracle::rel_err(wave_energy(pmd_step(w, s)), wave_energy(w)) < 1e-12);
  }
}

TEST_CASE("PMD step against a transcribed Jones matrix") {
  // J = R(theta, phi) D(w): R = [[e^{j phi/2} cos, e^{-j phi/2} sin], [-e^{j phi/2} sin, e^{-j phi/2} cos]],
  // D = diag(e^{-j w tau / 2}, e^{+j w tau / 2}).
  std::mt19937_64 g(4);
  const std::size_t n = 32;
  const double rate = 64e9;
  const DualPolWaveform w = random_wave(g, n, rate);
  const PmdSegment s{0, 0, 0.7, 2.1, 3e-12};
  auto X = oracle::dft(w.x()), Y = oracle::dft(w.y());
  for (std::size_t k = 0; k < n; ++k) {
    const double om = omega_of(k, n, rate);
    const cplx dx = std::exp(cplx(0, -om * s.dgd / 2)), dy = std::exp(cplx(0, om * s.dgd / 2));
    const cplx ep = std::exp(cplx(0, s.phi / 2)), em = std::exp(cplx(0, -s.phi / 2));
    const cplx a = X[k] * dx, b = Y[k] * dy;
    X[k] = ep * std::cos(s.theta) * a + em * std::sin(s.theta) * b;
    Y[k] = -ep * std::sin(s.theta) * a + em * std::cos(s.theta) * b;
  }
  const DualPolWaveform out = pmd_step(w, s);
  CHECK(oracle::nrmse(out.x(), idft(X)) < 1e-12);
  CHECK(oracle::nrmse(out.y(), idft(Y)) < 1e-12);
}

TEST_CASE("nonlinear step") {
  std::mt19937_64 g(5);
  const DualPolWaveform w = random_wave(g, 200);
  SystemParams p = quiet_params();
  const DualPolWaveform id = nonlinear_step(w, 1000.0, p);
  CHECK(id.x() == w.x());
  p.gamma = 1.4e-3;
  const DualPolWaveform out = nonlinear_step(w, 1000.0, p);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(std::abs(std::abs(out.x()[i]) - std::abs(w.x()[i])) < 1e-14);
    // Straight transcription of the Kerr phase.
    const double px = std::norm(w.x()[i]), py = std::norm(w.y()[i]);
    const cplx ex = w.x()[i] * std::exp(cplx(0, p.gamma * 1000.0 * (px + 2.0 / 3.0 * py)));
    CHECK(std::abs(out.x()[i] - ex) < 1e-13);
  }
  // Unit power on x only, gamma delta = 1 -> one radian.
  p.gamma = 1e-3;
  const DualPolWaveform one = nonlinear_step(DualPolWaveform(CVec(16, cplx(1, 0)), CVec(16), 1.0), 1000.0, p);
  for (const auto& v : one.x()) CHECK(std::arg(v) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("property: PMD and Kerr steps conserve energy to 1e-12") {
  std::mt19937_64 g(6);
  SystemParams p = quiet_params();
  p.gamma = 1.4e-3;
  std::uniform_real_distribution<double> u(0, 2 * kPi);
  std::normal_distribution<double> nd(0, 2e-12);
  for (int t = 0; t < 100; ++t) {
    const DualPolWaveform w = random_wave(g, 256, 128e9, 0.05);
    const double e0 = wave_energy(w);
    CHECK(oracle::rel_err(wave_energy(pmd_step(w, PmdSegment{0, 0, u(g), u(g), nd(g)})), e0) < 1e-12);
    CHECK(oracle::rel_err(wave_energy(nonlinear_step(w, 2000.0, p)), e0) < 1e-12);
  }
}

TEST_CASE("EDFA") {
  SystemParams p = quiet_params();
  p.alpha = alpha_from_db_per_km(0.2);
  p.span_length = 80e3;
  CHECK(10 * std::log10(edfa_gain(p)) == doctest::Approx(16.0).epsilon(1e-12));
  std::mt19937_64 g(7);
  const DualPolWaveform w = random_wave(g, 64);
  CHECK(oracle::rel_err(wave_energy(edfa(w, p, 1)), edfa_gain(p) * wave_energy(w)) < 1e-12);

  // ASE closed form n_sp h nu (G - 1) Fs, n_sp = 10^(NF/10) / 2.
  p.ase_enabled = true;
  p.noise_figure_db = 5.0;
  const double fs = 512e9;
  const double h_nu = kPlanck * kSpeedOfLight / 1550e-9;
  const double expect = std::pow(10.0, 0.5) / 2.0 * h_nu * (std::pow(10.0, 1.6) - 1.0) * fs;
  CHECK(expect == doctest::Approx(4.0e-6).epsilon(0.02));
  CHECK(oracle::rel_err(ase_power_per_pol(p, fs), expect) < 1e-9);
  const DualPolWaveform zero(CVec(256), CVec(256), fs);
  double px = 0.0, py = 0.0;
  const int draws = 1000;
  for (int d = 0; d < draws; ++d) {
    const DualPolWaveform n = edfa(zero, p, 99, static_cast<std::uint64_t>(d));
    for (std::size_t i = 0; i < 256; ++i) {
      px += std::norm(n.x()[i]);
      py += std::norm(n.y()[i]);
    }
  }
  CHECK(std::abs(px / (256.0 * draws) / expect - 1.0) < 0.03);
  CHECK(std::abs(py / (256.0 * draws) / expect - 1.0) < 0.03);
}

TEST_CASE("propagation: linear channel keeps the spectrum magnitude") {
  std::mt19937_64 g(8);
  SystemParams p = quiet_params();
  p.alpha = alpha_from_db_per_km(0.2);
  p.beta2 = beta2_from_dispersion(17.0);
  p.n_spans = 2;
  p.steps_per_span = 4;
  const DualPolWaveform w = random_wave(g, 512, 128e9, 0.01);
  const DualPolWaveform out = propagate(w, p, PmdRealization::identity(p), 1);
  CVec a(w.x()), b(out.x());
  fft_forward(a);
  fft_forward(b);
  // Gain exactly offsets loss; dispersion only rotates phases.
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(std::abs(b[k]) - std::abs(a[k])) < 1e-12);
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double om = omega_of(k, a.size(), 128e9);
    const cplx expect = a[k] * std::exp(cplx(0, 0.5 * p.beta2 * om * om * p.total_length()));
    CHECK(std::abs(b[k] - expect) < 1e-10);
  }
}

TEST_CASE("propagation: span loss and identity") {
  std::mt19937_64 g(9);
  SystemParams p = quiet_params();
  p.alpha = alpha_from_db_per_km(0.2);
  p.steps_per_span = 8;
  const DualPolWaveform w = random_wave(g, 256, 128e9, 0.01);
  const DualPolWaveform s = propagate_span(w, p, PmdRealization::identity(p), 0);
  CHECK(oracle::rel_err(wave_energy(s), wave_energy(w) * std::exp(-p.alpha * p.span_length)) < 1e-12);

  SystemParams off = quiet_params();
  off.n_spans = 3;
  const DualPolWaveform same = propagate(w, off, PmdRealization::identity(off), 1);
  CHECK(oracle::nrmse(same.x(), w.x()) < 1e-13);
}

TEST_CASE("property: propagation is linear and deterministic") {
  std::mt19937_64 g(10);
  SystemParams p = quiet_params();
  p.alpha = alpha_from_db_per_km(0.2);
  p.beta2 = beta2_from_dispersion(17.0);
  p.pmd_enabled = true;
  p.pmd_coef = pmd_from_ps_sqrt_km(0.1);
  p.n_spans = 2;
  p.steps_per_span = 6;
  const PmdRealization pmd = draw_pmd(p, 4);
  const DualPolWaveform w = random_wave(g, 256, 128e9, 0.01);
  const double a = 3.7;
  const DualPolWaveform lhs = propagate(scale(w, a), p, pmd, 1);
  const DualPolWaveform rhs = scale(propagate(w, p, pmd, 1), a);
  CHECK(oracle::nrmse(lhs.x(), rhs.x()) < 1e-12);
  CHECK(oracle::nrmse(lhs.y(), rhs.y()) < 1e-12);

  SystemParams q = p;
  q.gamma = 1.4e-3;
  q.ase_enabled = true;
  const DualPolWaveform r1 = propagate(w, q, pmd, 5), r2 = propagate(w, q, pmd, 5);
  CHECK(r1.x() == r2.x());
  CHECK(r1.y() == r2.y());
  CHECK(propagate(w, q, pmd, 6).x() != r1.x());
}

TEST_CASE("SSFM step-count convergence is first order") {
  // linear -> pmd -> nonlinear without symmetrization: halving the step
  // should halve the change in the output field.
  SystemParams p = quiet_params();
  p.alpha = alpha_from_db_per_km(0.2);
  p.beta2 = beta2_from_dispersion(17.0);
  p.gamma = 1.4e-3;
  const SymbolFrame f = make_symbol_frame(1, 512, 32e9);
  const RrcFilter rrc = RrcFilter::make(0.25, 32, 4);
  const DualPolWaveform w =
      set_launch_power(DualPolWaveform(pulse_shape(f.syms_x, rrc), pulse_shape(f.syms_y, rrc), 128e9), 0.0);
  auto field = [&](int steps) {
    p.steps_per_span = steps;
    const DualPolWaveform o = propagate(w, p, PmdRealization::identity(p), 1);
    CVec v(o.x());
    v.insert(v.end(), o.y().begin(), o.y().end());
    return v;
  };
  const CVec a = field(40), b = field(80), c = field(160);
  const double d1 = oracle::nrmse(a, b), d2 = oracle::nrmse(b, c);
  CHECK(d2 < d1);
  CHECK(d1 / d2 == doctest::Approx(2.0).epsilon(0.05));

  // Strang splitting of the same operators converges at second order.
  auto strang = [&](int steps) {
    p.steps_per_span = steps;
    const double d = p.span_length / steps;
    DualPolWaveform cur = w;
    for (int k = 0; k < steps; ++k) {
      cur = linear_step(cur, d / 2, p);
      cur = nonlinear_step(cur, d, p);
      cur = linear_step(cur, d / 2, p);
    }
    cur = edfa(cur, p, 1, 0);
    CVec v(cur.x());
    v.insert(v.end(), cur.y().begin(), cur.y().end());
    return v;
  };
  const CVec s1 = strang(40), s2 = strang(80), s3 = strang(160);
  // At 40 steps higher-order terms still show, so only require better than
  // the first-order halving by a clear margin.
  CHECK(oracle::nrmse(s1, s2) / oracle::nrmse(s2, s3) > 3.0);
  CHECK(oracle::nrmse(s2, s3) < 0.1 * d2);
}
