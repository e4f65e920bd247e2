#pragma once

// Straight-line transcriptions of the three recurrent cells, written with
// plain nested loops so they share nothing with the library kernels.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fiberlab/nn/recurrent.hpp"

namespace transcribe {

using namespace fiberlab::nn;

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat as_mat(const Param& p) {
  Mat m(p.rows, Vec(p.cols));
  for (std::size_t r = 0; r < p.rows; ++r)
    for (std::size_t c = 0; c < p.cols; ++c) m[r][c] = p.value[r * p.cols + c];
  return m;
}

inline Vec mul(const Mat& m, const Vec& v) {
  Vec out(m.size(), 0.0);
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < v.size(); ++c) out[r] += m[r][c] * v[c];
  return out;
}

inline Vec add3(const Vec& a, const Vec& b, const Param& bias) {
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i] + bias.value[i];
  return out;
}

inline double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

inline void randomize(const std::vector<Param*>& ps, std::mt19937_64& g, double scale = 0.8) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (Param* p : ps)
    for (auto& v : p->value) v = u(g);
}

inline Vec random_vec(std::mt19937_64& g, std::size_t n, double scale = 1.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(n);
  for (auto& x : v) x = u(g);
  return v;
}


struct CellErrors {
  double rnn = 0.0, lstm = 0.0, gru = 0.0;
};

// One random instance of each cell; largest absolute deviation per cell.
inline CellErrors one_instance(std::mt19937_64& g) {
  std::uniform_int_distribution<int> dim(1, 9);
  CellErrors err;
  const std::size_t ni = dim(g), nh = dim(g);
  const Vec x = random_vec(g, ni), h0 = random_vec(g, nh), c0 = random_vec(g, nh);

  RnnCell rc(ni, nh);
  randomize(rc.params(), g);
  const Vec hr = rnn_cell_forward(rc, x, h0);
  const Vec pre = add3(mul(as_mat(rc.w_h), h0), mul(as_mat(rc.w_x), x), rc.b_h);
  for (std::size_t i = 0; i < nh; ++i) err.rnn = std::max(err.rnn, std::abs(hr[i] - std::tanh(pre[i])));

  LstmCell lc(ni, nh);
  randomize(lc.params(), g);
  const LstmStep ls = lstm_cell_forward(lc, x, h0, c0);
  const Vec ct = add3(mul(as_mat(lc.w_ch), h0), mul(as_mat(lc.w_cx), x), lc.b_c);
  const Vec gu = add3(mul(as_mat(lc.w_uh), h0), mul(as_mat(lc.w_ux), x), lc.b_u);
  const Vec gf = add3(mul(as_mat(lc.w_fh), h0), mul(as_mat(lc.w_fx), x), lc.b_f);
  const Vec go = add3(mul(as_mat(lc.w_oh), h0), mul(as_mat(lc.w_ox), x), lc.b_o);
  for (std::size_t i = 0; i < nh; ++i) {
    const double c = sig(gu[i]) * std::tanh(ct[i]) + sig(gf[i]) * c0[i];
    const double h = sig(go[i]) * std::tanh(c);
    err.lstm = std::max({err.lstm, std::abs(ls.c[i] - c), std::abs(ls.h[i] - h)});
  }

  GruCell gc(ni, nh);
  randomize(gc.params(), g);
  const GruStep gs = gru_cell_forward(gc, x, c0);
  const Vec gr = add3(mul(as_mat(gc.w_rc), c0), mul(as_mat(gc.w_rx), x), gc.b_r);
  const Vec gu2 = add3(mul(as_mat(gc.w_uc), c0), mul(as_mat(gc.w_ux), x), gc.b_u);
  Vec rc0(nh);
  for (std::size_t i = 0; i < nh; ++i) rc0[i] = sig(gr[i]) * c0[i];
  const Vec cand = add3(mul(as_mat(gc.w_cc), rc0), mul(as_mat(gc.w_cx), x), gc.b_c);
  for (std::size_t i = 0; i < nh; ++i) {
    const double u = sig(gu2[i]);
    const double c = u * std::tanh(cand[i]) + (1.0 - u) * c0[i];
    err.gru = std::max(err.gru, std::abs(gs.c[i] - c));
  }
  return err;
}

}  // namespace transcribe
