#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fiberlab/metrics.hpp"
#include "fiberlab/tx.hpp"
#include "oracles.hpp"

using namespace fiberlab;

namespace {
Bits bits_of(std::initializer_list<int> v) {
  Bits b;
  for (int x : v) b.push_back(static_cast<std::uint8_t>(x));
  return b;
}
}  // namespace

TEST_CASE("generate_bits") {
  CHECK(generate_bits(7, 0).empty());
  CHECK(generate_bits(7, 16) == generate_bits(7, 16));
  CHECK(generate_bits(7, 64) != generate_bits(8, 64));
  const Bits big = generate_bits(7, 1u << 20);
  const double mean = std::accumulate(big.begin(), big.end(), 0.0) / big.size();
  CHECK(mean >= 0.49);
  CHECK(mean <= 0.51);
  CHECK(generate_bits(7, 64, Stream::kBitsX) != generate_bits(7, 64, Stream::kBitsY));
}

TEST_CASE("Gray 16-QAM mapping") {
  const double s = 1.0 / std::sqrt(10.0);
  CHECK(std::abs(map_16qam(bits_of({0, 0, 0, 0}))[0] - cplx(-3 * s, -3 * s)) < 1e-15);
  CHECK(map_16qam(bits_of({0, 0, 0, 0}))[0].real() == doctest::Approx(-0.94868).epsilon(1e-5));
  CHECK(std::abs(map_16qam(bits_of({1, 0, 1, 1}))[0] - cplx(3 * s, 1 * s)) < 1e-15);
  // Level table 00 -3, 01 -1, 11 +1, 10 +3 on both axes.
  const int level[4] = {-3, -1, 3, 1};  // index = 2 b0 + b1
  double e = 0.0;
  for (int label = 0; label < 16; ++label) {
    const Bits b = bits_of({label >> 3 & 1, label >> 2 & 1, label >> 1 & 1, label & 1});
    const cplx p = map_16qam(b)[0];
    CHECK(std::abs(p - cplx(level[label >> 2] * s, level[label & 3] * s)) < 1e-15);
    e += std::norm(p);
  }
  CHECK(e / 16 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(map_16qam(Bits(3)), std::domain_error);
}

TEST_CASE("Gray neighbours differ in one bit") {
  const auto& pts = qam16_points();
  for (std::size_t a = 0; a < 16; ++a) {
    for (std::size_t b = 0; b < 16; ++b) {
      if (std::abs(std::abs(pts[a] - pts[b]) - 2 * qam16_scale()) < 1e-12) {
        CHECK(__builtin_popcount(static_cast<unsigned>(a ^ b)) == 1);
      }
    }
  }
}

TEST_CASE("hard demapping") {
  CHECK(demap_16qam_hard(map_16qam(bits_of({0, 0, 0, 0}))) == bits_of({0, 0, 0, 0}));
  CHECK(demap_16qam_hard({cplx(-0.94868, -0.94868) + 0.01 * cplx(1, 1)}) == bits_of({0, 0, 0, 0}));
}

TEST_CASE("tie-break resolves toward the lower level") {
  // Brute force over the boundary grid: each axis boundary sits midway between
  // two levels; the decision must pick the lower one.
  const double s = qam16_scale();
  const double boundaries[3] = {-2 * s, 0.0, 2 * s};
  const double lower[3] = {-3 * s, -1 * s, 1 * s};
  const double others[4] = {-3 * s, -1 * s, 1 * s, 3 * s};
  for (int i = 0; i < 3; ++i) {
    for (double q : others) {
      CHECK(decide_16qam(cplx(boundaries[i], q)).real() == doctest::Approx(lower[i]));
      CHECK(decide_16qam(cplx(q, boundaries[i])).imag() == doctest::Approx(lower[i]));
    }
  }
}

TEST_CASE("property: map/demap round trip over 2^20 random groups") {
  const Bits b = generate_bits(11, 4u << 20);
  CHECK(demap_16qam_hard(map_16qam(b)) == b);
}

TEST_CASE("RRC taps") {
  const RrcFilter f = RrcFilter::make(0.25, 32, 8);
  CHECK(f.taps.size() == 257);
  double e = 0.0;
  for (double t : f.taps) e += t * t;
  CHECK(std::abs(e - 1.0) < 1e-12);
  for (std::size_t k = 0; k < f.taps.size(); ++k) CHECK(f.taps[k] == f.taps[f.taps.size() - 1 - k]);
}

TEST_CASE("single symbol gives the impulse response") {
  const RrcFilter f = RrcFilter::make(0.25, 32, 8);
  const CVec out = pulse_shape({cplx(1, 0)}, f);
  REQUIRE(out.size() == 8);
  for (std::size_t j = 0; j < 8; ++j) CHECK(out[j].real() == f.taps[f.center() + j]);
  // Longer frame: symbol in the middle reproduces the full tap sequence.
  CVec syms(64, cplx(0, 0));
  syms[32] = 1.0;
  const CVec mid = pulse_shape(syms, f);
  for (std::size_t k = 0; k < f.taps.size(); ++k) CHECK(mid[32 * 8 - f.center() + k].real() == f.taps[k]);
  CHECK_THROWS_AS(pulse_shape({}, f), std::domain_error);
}

TEST_CASE("RRC pair is Nyquist: ISI below -40 dB") {
  const RrcFilter f = RrcFilter::make(0.25, 32, 8);
  // Raised cosine = taps convolved with themselves, sampled every sps.
  const std::size_t n = f.taps.size();
  std::vector<double> rc(2 * n - 1, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) rc[i + j] += f.taps[i] * f.taps[j];
  const std::size_t c = n - 1;
  double worst = 0.0;
  for (std::size_t k = 8; k <= c; k += 8) worst = std::max(worst, std::abs(rc[c + k]));
  CHECK(20 * std::log10(worst / rc[c]) < -40.0);
}

TEST_CASE("property: pulse shaping is linear") {
  std::mt19937_64 g(1);
  const RrcFilter f = RrcFilter::make(0.25, 32, 4);
  for (int t = 0; t < 10; ++t) {
    const CVec a = oracle::random_field(g, 50), b = oracle::random_field(g, 50);
    const cplx ka(0.3, -1.2), kb(-2.0, 0.5);
    CVec mix(50);
    for (std::size_t i = 0; i < 50; ++i) mix[i] = ka * a[i] + kb * b[i];
    const CVec lhs = pulse_shape(mix, f), pa = pulse_shape(a, f), pb = pulse_shape(b, f);
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - (ka * pa[i] + kb * pb[i])) < 1e-12);
  }
}

TEST_CASE("phase noise") {
  std::mt19937_64 g(3);
  const DualPolWaveform w(oracle::random_field(g, 256), oracle::random_field(g, 256), 1e9);
  PhaseNoiseParams off{0.0, 1e-9, 5};
  const DualPolWaveform same = apply_phase_noise(w, off);
  CHECK(same.x() == w.x());
  CHECK(same.y() == w.y());

  PhaseNoiseParams on{100e3, 1.0 / 64e9, 5};
  const DualPolWaveform r = apply_phase_noise(w, on);
  const auto phi = phase_noise_walk(on, w.size());
  CHECK(phi[0] == 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(std::abs(std::abs(r.x()[i]) - std::abs(w.x()[i])) < 1e-14);
    // Same rotation on both polarizations.
    const cplx rx = r.x()[i] / w.x()[i], ry = r.y()[i] / w.y()[i];
    CHECK(std::abs(rx - ry) < 1e-12);
  }
  // Forward then reverse walk with the same draws cancels.
  const DualPolWaveform back = rotate_phase(r, phi, -1.0);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(std::abs(back.x()[i] - w.x()[i]) < 1e-14);
}

TEST_CASE("Wiener variance Monte-Carlo") {
  const double lw = 100e3, ts = 1.0 / 64e9;
  const std::size_t n = 10000;
  double acc = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const auto phi = phase_noise_walk({lw, ts, static_cast<std::uint64_t>(t + 1)}, n + 1);
    acc += phi[n] * phi[n];
  }
  const double expect = 2 * kPi * lw * n * ts;
  CHECK(std::abs(acc / trials / expect - 1.0) < 0.05);
}

TEST_CASE("launch power") {
  std::mt19937_64 g(6);
  const DualPolWaveform w(oracle::random_field(g, 300), oracle::random_field(g, 300), 1e9);
  for (double p : {-10.0, 0.0, 3.0, 7.5}) {
    CHECK(oracle::rel_err(measure_power(set_launch_power(w, p)), dbm_to_watts(p)) < 1e-12);
  }
  // Unit power at 0 dBm scales by sqrt(1e-3).
  CVec u(16, cplx(std::sqrt(0.5), 0.0));
  const DualPolWaveform unit(u, u, 1.0);
  CHECK(set_launch_power(unit, 0.0).x()[3].real() == doctest::Approx(std::sqrt(0.5) * std::sqrt(1e-3)));
  // Global real scale leaves the normalized constellation untouched.
  const SymbolFrame fr = make_symbol_frame(1, 512, 32e9);
  const DualPolWaveform s(fr.syms_x, fr.syms_y, 32e9);
  const DualPolWaveform sp = set_launch_power(s, 4.0);
  const double k = std::sqrt(measure_power(sp) / measure_power(s));
  CVec back(sp.x());
  for (auto& v : back) v /= k;
  CHECK(evm_db(back, fr.syms_x) <= -100.0);
  CHECK_THROWS_AS(set_launch_power(DualPolWaveform(CVec(4), CVec(4), 1.0), 0.0), std::domain_error);
}

TEST_CASE("symbol frame invariants") {
  const SymbolFrame f = make_symbol_frame(3, 1000, 32e9);
  CHECK(f.bits_x.size() == 4 * f.syms_x.size());
  CHECK(f.bits_y.size() == 4 * f.syms_y.size());
  CHECK(f.syms_x == map_16qam(f.bits_x));
}
