#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "fiberlab/channel.hpp"
#include "fiberlab/dataset_io.hpp"
#include "fiberlab/metrics.hpp"
#include "fiberlab/pipeline.hpp"
#include "fiberlab/rx.hpp"
#include "fiberlab/tx.hpp"
#include "oracles.hpp"

using namespace fiberlab;

namespace {

SystemParams linear_link() {
  SystemParams p;
  p.alpha = alpha_from_db_per_km(0.2);
  p.beta2 = beta2_from_dispersion(17.0);
  p.gamma = 0.0;
  p.n_spans = 2;
  p.steps_per_span = 2;
  p.ase_enabled = false;
  p.pmd_enabled = false;
  p.symbol_rate = 32e9;
  return p;
}

DualPolWaveform shaped(const SymbolFrame& f, int sps, double rate) {
  const RrcFilter rrc = RrcFilter::make(0.25, 32, sps);
  return DualPolWaveform(pulse_shape(f.syms_x, rrc), pulse_shape(f.syms_y, rrc), rate * sps);
}

CVec concat(const DualPolWaveform& w) {
  CVec v(w.x());
  v.insert(v.end(), w.y().begin(), w.y().end());
  return v;
}

}  // namespace

TEST_CASE("cd_compensate") {
  std::mt19937_64 g(1);
  const SystemParams p = linear_link();
  const DualPolWaveform w(oracle::random_field(g, 512), oracle::random_field(g, 512), 64e9);
  CHECK(oracle::nrmse(concat(cd_compensate(w, p, 0.0)), concat(w)) < 1e-14);
  SystemParams cd = p;
  cd.alpha = 0.0;
  const DualPolWaveform disp = linear_step(w, 1.3e5, cd);
  CHECK(oracle::nrmse(concat(cd_compensate(disp, p, 1.3e5)), concat(w)) < 1e-10);
}

TEST_CASE("property: accumulated dispersion then compensation is identity") {
  std::mt19937_64 g(2);
  SystemParams p = linear_link();
  p.alpha = 0.0;
  for (int t = 0; t < 10; ++t) {
    const DualPolWaveform w(oracle::random_field(g, 256), oracle::random_field(g, 256), 64e9);
    const double l = std::uniform_real_distribution<double>(1e3, 1e6)(g);
    DualPolWaveform cur = w;
    for (int k = 0; k < 5; ++k) cur = linear_step(cur, l / 5, p);
    CHECK(oracle::nrmse(concat(cd_compensate(cur, p, l)), concat(w)) < 1e-10);
  }
}

TEST_CASE("dbp without nonlinearity equals cd_compensate") {
  std::mt19937_64 g(3);
  const SystemParams p = linear_link();
  const DualPolWaveform w(oracle::random_field(g, 512), oracle::random_field(g, 512), 64e9);
  const auto cd = concat(cd_compensate(w, p, p.total_length()));
  // Loss inversion and gain removal cancel exactly, leaving dispersion only.
  CHECK(oracle::nrmse(concat(dbp(w, p, 1)), cd) < 1e-10);
  CHECK(oracle::nrmse(concat(dbp(w, p, 7)), cd) < 1e-10);
  CHECK_THROWS(dbp(w, p, 0));
}

TEST_CASE("dbp inverts a noiseless nonlinear link") {
  SystemParams p = linear_link();
  p.gamma = 1.4e-3;
  p.sps_forward = 2;
  p.steps_per_span = 20;
  const SymbolFrame f = make_symbol_frame(4, 2048, 32e9);
  const DualPolWaveform tx = set_launch_power(zero_pad(shaped(f, 2, 32e9), 512, 8192), 6.0);
  const DualPolWaveform rx = propagate(tx, p, PmdRealization::identity(p), 1);
  const DualPolWaveform back = dbp(rx, p, 20);
  CHECK(evm_db(concat(back), concat(tx)) < -35.0);
  // One-shot CD compensation leaves the nonlinear distortion in place.
  CHECK(evm_db(concat(cd_compensate(rx, p, p.total_length())), concat(tx)) > evm_db(concat(back), concat(tx)));
}

TEST_CASE("matched filter back to back") {
  const SymbolFrame f = make_symbol_frame(5, 2000, 32e9);
  const RrcFilter rrc = RrcFilter::make(0.25, 32, 4);
  const SymbolStreams s = matched_filter_downsample(shaped(f, 4, 32e9), rrc, 4);
  REQUIRE(s.size() == 2000);
  CVec est(s.x.begin() + 40, s.x.end() - 40), ref(f.syms_x.begin() + 40, f.syms_x.end() - 40);
  CHECK(evm_db(est, ref) < -40.0);
  // sps_in = 1 passes samples through.
  const DualPolWaveform sym(f.syms_x, f.syms_y, 32e9);
  const SymbolStreams pass = matched_filter_downsample(sym, rrc, 1);
  CHECK(pass.x == f.syms_x);
  CHECK(pass.y == f.syms_y);
}

TEST_CASE("property: matched filter is linear") {
  std::mt19937_64 g(6);
  const RrcFilter rrc = RrcFilter::make(0.25, 32, 2);
  const DualPolWaveform a(oracle::random_field(g, 300), oracle::random_field(g, 300), 1.0);
  const DualPolWaveform b(oracle::random_field(g, 300), oracle::random_field(g, 300), 1.0);
  CVec mx(300), my(300);
  for (std::size_t i = 0; i < 300; ++i) {
    mx[i] = 2.0 * a.x()[i] - 0.5 * b.x()[i];
    my[i] = 2.0 * a.y()[i] - 0.5 * b.y()[i];
  }
  const SymbolStreams sa = matched_filter_downsample(a, rrc, 2), sb = matched_filter_downsample(b, rrc, 2);
  const SymbolStreams sm = matched_filter_downsample(DualPolWaveform(mx, my, 1.0), rrc, 2);
  for (std::size_t i = 0; i < sm.size(); ++i) CHECK(std::abs(sm.x[i] - (2.0 * sa.x[i] - 0.5 * sb.x[i])) < 1e-12);
}

TEST_CASE("resampling a band-limited signal round trips") {
  const SymbolFrame f = make_symbol_frame(7, 1024, 32e9);
  const DualPolWaveform w4 = shaped(f, 4, 32e9);
  const DualPolWaveform w2 = resample(w4, 64e9);
  CHECK(w2.size() == w4.size() / 2);
  const DualPolWaveform back = resample(w2, 128e9);
  // Round trip is an ideal lowpass on the circular grid: keep bins
  // -n/4+1 .. n/4-1 of the naive DFT, drop the rest.
  auto lowpass = [](const CVec& v) {
    const long n = static_cast<long>(v.size());
    CVec f = oracle::dft(v);
    for (long k = 0; k < n; ++k) {
      const long s = k < n / 2 ? k : k - n;
      if (s >= n / 4 || s <= -n / 4) f[static_cast<std::size_t>(k)] = 0.0;
    }
    for (auto& c : f) c = std::conj(c);
    CVec t = oracle::dft(f);
    for (auto& c : t) c = std::conj(c) / static_cast<double>(n);
    return t;
  };
  CVec ideal = lowpass(w4.x());
  const CVec iy = lowpass(w4.y());
  ideal.insert(ideal.end(), iy.begin(), iy.end());
  CHECK(oracle::nrmse(concat(back), ideal) < 1e-10);
  // The pulse tails wrap at the frame edges, so a little energy sits above
  // the 2 SpS band; the bulk of the waveform survives.
  CHECK(oracle::nrmse(concat(back), concat(w4)) < 1e-2);
  CHECK_THROWS(resample(DualPolWaveform(CVec(3), CVec(3), 4.0), 2.0));
}

TEST_CASE("16-QAM ring powers") {
  // Brute force over the constellation.
  std::vector<double> rings;
  for (const auto& p : qam16_points()) {
    const double r = std::round(std::norm(p) * 10.0) / 10.0;
    if (std::find(rings.begin(), rings.end(), r) == rings.end()) rings.push_back(r);
  }
  std::sort(rings.begin(), rings.end());
  REQUIRE(rings.size() == 3);
  const auto& lib = qam16_ring_powers();
  for (std::size_t i = 0; i < 3; ++i) CHECK(lib[i] == doctest::Approx(rings[i]).epsilon(1e-12));
  CHECK(lib[0] == doctest::Approx(0.2));
  CHECK(lib[1] == doctest::Approx(1.0));
  CHECK(lib[2] == doctest::Approx(1.8));
}

namespace {

DualPolWaveform rde_input(std::uint64_t seed, std::size_t n, double theta) {
  const SymbolFrame f = make_symbol_frame(seed, n, 32e9);
  const RrcFilter rrc = RrcFilter::make(0.25, 32, 2);
  const DualPolWaveform mf = matched_filter(shaped(f, 2, 32e9), rrc);
  CVec x(mf.size()), y(mf.size());
  const double c = std::cos(theta), s = std::sin(theta);
  for (std::size_t i = 0; i < mf.size(); ++i) {
    x[i] = c * mf.x()[i] + s * mf.y()[i];
    y[i] = -s * mf.x()[i] + c * mf.y()[i];
  }
  return DualPolWaveform(x, y, mf.sample_rate());
}

double ring_error(const CVec& v, std::size_t from) {
  double acc = 0.0;
  for (std::size_t i = from; i < v.size(); ++i) {
    double best = 1e9;
    for (double r : qam16_ring_powers()) best = std::min(best, std::abs(r - std::norm(v[i])));
    acc += best;
  }
  return acc / static_cast<double>(v.size() - from);
}

}  // namespace

TEST_CASE("RDE on an identity channel") {
  const DualPolWaveform w = rde_input(8, 20000, 0.0);
  const RdeResult r = rde_mimo(w, EqualizerState::centered(25, 1e-3), 5000);
  // Floor: the truncated RRC pair leaves some ISI even at the ideal sampling
  // phase. Tap noise from a fixed step may add to it but not double it.
  CVec ideal;
  for (std::size_t i = 0; i < w.size(); i += 2) ideal.push_back(w.x()[i]);
  const double floor = ring_error(ideal, 15000);
  CHECK(floor < 1e-3);
  CHECK(ring_error(r.out.x, 15000) < 2.0 * floor);
  CHECK(ring_error(r.out.y, 15000) < 2.0 * floor);
  CHECK(std::abs(r.state.h_xx[12]) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(r.state.h_yy[12]) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(r.state.h_xy[12]) < 0.05);
  CHECK_THROWS(EqualizerState::centered(24, 1e-3));
}

TEST_CASE("RDE undoes a static polarization rotation") {
  const DualPolWaveform w = rde_input(9, 30000, kPi / 6);
  const RdeResult r = rde_mimo(w, EqualizerState::centered(25, 1e-3), 10000);
  // Cluster output powers of the settled tail by nearest ring and check the centroids.
  for (const CVec* v : {&r.out.x, &r.out.y}) {
    double sum[3] = {0, 0, 0};
    int cnt[3] = {0, 0, 0};
    for (std::size_t i = 20000; i < v->size(); ++i) {
      const double pw = std::norm((*v)[i]);
      int best = 0;
      for (int k = 1; k < 3; ++k)
        if (std::abs(pw - qam16_ring_powers()[k]) < std::abs(pw - qam16_ring_powers()[best])) best = k;
      sum[best] += pw;
      ++cnt[best];
    }
    for (int k = 0; k < 3; ++k) {
      REQUIRE(cnt[k] > 0);
      CHECK(std::abs(sum[k] / cnt[k] - qam16_ring_powers()[k]) < 0.02);
    }
    CHECK(ring_error(*v, 20000) < 1e-2);
  }
}

TEST_CASE("CPE") {
  const SymbolFrame f = make_symbol_frame(10, 4000, 32e9);
  CpeOptions opts;
  opts.pilots.assign(f.syms_x.begin(), f.syms_x.begin() + 256);
  const CpeResult same = cpe_two_stage(f.syms_x, opts);
  CHECK(same.symbols == f.syms_x);

  CVec rot(f.syms_x);
  for (auto& v : rot) v *= std::polar(1.0, kPi / 8);
  const CpeResult r = cpe_two_stage(rot, opts);
  for (double ph : r.phase) CHECK(std::abs(ph - kPi / 8) * 180 / kPi < 0.5);

  // A quarter-turn offset is resolved by the pilots.
  for (auto& v : rot) v *= std::polar(1.0, kPi / 2);
  const CpeResult q = cpe_two_stage(rot, opts);
  CHECK(q.phase[100] == doctest::Approx(kPi / 8 + kPi / 2).epsilon(1e-6));
}

TEST_CASE("CPE phase error falls with the window under Wiener noise") {
  // 64 GBd, 100 kHz, 20 dB SNR.
  const std::size_t n = 20000;
  std::vector<double> mse;
  for (int window : {16, 32, 64}) {
    double acc = 0.0;
    std::size_t cnt = 0;
    for (int trial = 0; trial < 5; ++trial) {
      const SymbolFrame f = make_symbol_frame(20 + trial, n, 64e9);
      const auto phi = phase_noise_walk({100e3, 1.0 / 64e9, static_cast<std::uint64_t>(trial + 1)}, n);
      std::mt19937_64 g(trial);
      std::normal_distribution<double> nd(0.0, std::sqrt(0.01 / 2));
      CVec rx(n);
      for (std::size_t i = 0; i < n; ++i) rx[i] = f.syms_x[i] * std::polar(1.0, phi[i]) + cplx(nd(g), nd(g));
      CpeOptions opts;
      opts.window = window;
      opts.pilots.assign(f.syms_x.begin(), f.syms_x.begin() + 256);
      const CpeResult r = cpe_two_stage(rx, opts);
      for (std::size_t i = 100; i + 100 < n; ++i) {
        const double e = std::remainder(r.phase[i] - phi[i], 2 * kPi);
        acc += e * e;
        ++cnt;
      }
    }
    mse.push_back(acc / cnt);
  }
  CHECK(mse[1] < mse[0]);
  CHECK(mse[2] < mse[1]);
}

TEST_CASE("window geometry") {
  CHECK(window_half_width(1, 1) == 1);
  CHECK(window_half_width(95, 1) == 95);
  CHECK(window_half_width(95, 2) == 190);
  CHECK(window_half_width(3, 4) == 13);  // floor(12 + 1.5)
  CHECK_THROWS_AS(window_half_width(0, 1), std::domain_error);
}

TEST_CASE("extract_windows layout") {
  std::mt19937_64 g(11);
  const std::size_t n = 40;
  SymbolStreams s{oracle::random_field(g, n), oracle::random_field(g, n)};
  const CVec tx = oracle::random_field(g, n), ty = oracle::random_field(g, n);
  const WindowedDataset d = extract_windows(s, tx, ty, 1, 1);
  CHECK(d.half_width == 1);
  CHECK(d.rows() == 6);
  CHECK(d.size() == n - 2);
  for (std::size_t k = 0; k < d.size(); ++k) {
    const std::size_t i = d.symbol_index[k];
    CHECK(i == k + 1);
    const double* m = d.input(k);
    for (int o = -1; o <= 1; ++o) {
      const std::size_t r = static_cast<std::size_t>(2 * (o + 1));
      CHECK(m[r * 2 + 0] == s.x[i + o].real());
      CHECK(m[r * 2 + 1] == s.y[i + o].real());
      CHECK(m[(r + 1) * 2 + 0] == s.x[i + o].imag());
      CHECK(m[(r + 1) * 2 + 1] == s.y[i + o].imag());
    }
    CHECK(d.target(k)[0] == tx[i].real());
    CHECK(d.target(k)[1] == tx[i].imag());
    CHECK(d.target(k)[2] == ty[i].real());
    CHECK(d.target(k)[3] == ty[i].imag());
  }
  CHECK_THROWS_AS(extract_windows(s, tx, ty, 0, 1), std::domain_error);
}

TEST_CASE("property: window count and 2 SpS centring") {
  std::mt19937_64 g(12);
  for (int memory : {1, 2, 5}) {
    for (int sps : {1, 2}) {
      const std::size_t n = 64;
      SymbolStreams s{oracle::random_field(g, n * sps), oracle::random_field(g, n * sps)};
      const CVec t = oracle::random_field(g, n);
      const WindowedDataset d = extract_windows(s, t, t, memory, sps);
      const int m = window_half_width(memory, sps);
      std::size_t expect = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const long c = static_cast<long>(i) * sps;
        if (c - m >= 0 && c + m < static_cast<long>(n * sps)) ++expect;
      }
      CHECK(d.size() == expect);
      CHECK(d.rows() == static_cast<std::size_t>(2 * (2 * m + 1)));
      for (std::size_t k = 0; k < d.size(); ++k) {
        const std::size_t centre = d.symbol_index[k] * sps;
        CHECK(d.input(k)[(2 * m) * 2] == s.x[centre].real());
      }
    }
  }
  SymbolStreams big{CVec(500), CVec(500)};
  CHECK(extract_windows(big, CVec(250), CVec(250), 95, 2).rows() == 2 * (2 * 190 + 1));
  CHECK(extract_windows(big, CVec(500), CVec(500), 95, 1).rows() == 382);
}

TEST_CASE("dataset cache file round trip") {
  std::mt19937_64 g(13);
  SymbolStreams s{oracle::random_field(g, 100), oracle::random_field(g, 100)};
  const CVec t = oracle::random_field(g, 100);
  const WindowedDataset d = extract_windows(s, t, t, 3, 1);
  const auto path = (std::filesystem::temp_directory_path() / "fiberlab_ds_test.bin").string();
  save_dataset(path, d, 0xabcdef);
  const WindowedDataset back = load_dataset(path, 0xabcdef);
  CHECK(back.inputs == d.inputs);
  CHECK(back.targets == d.targets);
  CHECK(back.symbol_index == d.symbol_index);
  CHECK(back.half_width == d.half_width);
  CHECK_THROWS_AS(load_dataset(path, 0x123), StaleCache);
  std::filesystem::remove(path);
}

TEST_CASE("linear RX-1 chain is error free on a linear link with PMD") {
  SystemParams p = linear_link();
  p.pmd_enabled = true;
  p.pmd_coef = pmd_from_ps_sqrt_km(0.1);
  p.steps_per_span = 10;
  const DspOptions dsp;
  const LinkFrame f = make_frame(p, dsp, 20000, 3, 0.0);
  const DualPolWaveform rx = propagate(f.tx, p, draw_pmd(p, 5), 1);
  const SymbolStreams s = linear_chain(rx_front_end(rx, f, p), f, p, dsp);
  const BitErrors e = count_bit_errors(payload_reference_bits(f), payload_bits(s, f));
  CHECK(e.bits == 8 * 20000);
  CHECK(e.errors == 0);
}
