#include "fiberlab/nn/recurrent.hpp"

#include <cmath>

namespace fiberlab::nn {

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

std::vector<double> affine(const Param& wh, std::span<const double> h, const Param& wx, std::span<const double> x,
                           const Param& b) {
  std::vector<double> a(b.value.begin(), b.value.end());
  matvec_acc(wh, h, a);
  matvec_acc(wx, x, a);
  return a;
}

void glorot(Param& p, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(p.rows + p.cols));
  for (auto& v : p.value) v = (2.0 * rng.uniform() - 1.0) * limit;
}

// Rows of a square Gaussian matrix orthonormalized by modified Gram-Schmidt.
void orthogonal(Param& p, Rng& rng) {
  const std::size_t n = p.rows;
  for (auto& v : p.value) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    double* ri = &p.value[i * n];
    for (std::size_t j = 0; j < i; ++j) {
      const double* rj = &p.value[j * n];
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += ri[k] * rj[k];
      for (std::size_t k = 0; k < n; ++k) ri[k] -= dot * rj[k];
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < n; ++k) norm += ri[k] * ri[k];
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < n; ++k) ri[k] /= norm;
  }
}

void zero(Param& p) { std::fill(p.value.begin(), p.value.end(), 0.0); }

void check_sizes(std::size_t n_in, std::size_t n_h, std::span<const double> x, std::span<const double> h) {
  if (x.size() != n_in || h.size() != n_h) {
    throw ShapeError("recurrent cell expects x of " + std::to_string(n_in) + " and state of " + std::to_string(n_h) +
                     ", got " + std::to_string(x.size()) + " and " + std::to_string(h.size()));
  }
}

}  // namespace

RnnCell::RnnCell(std::size_t n_in, std::size_t n_h, Activation a)
    : w_h("W_h", n_h, n_h), w_x("W_x", n_h, n_in), b_h("b_h", n_h, 1), act(a) {}

LstmCell::LstmCell(std::size_t n_in, std::size_t n_h)
    : w_ch("W_ch", n_h, n_h), w_cx("W_cx", n_h, n_in), b_c("b_c", n_h, 1),
      w_uh("W_uh", n_h, n_h), w_ux("W_ux", n_h, n_in), b_u("b_u", n_h, 1),
      w_fh("W_fh", n_h, n_h), w_fx("W_fx", n_h, n_in), b_f("b_f", n_h, 1),
      w_oh("W_oh", n_h, n_h), w_ox("W_ox", n_h, n_in), b_o("b_o", n_h, 1) {}

GruCell::GruCell(std::size_t n_in, std::size_t n_h)
    : w_cc("W_cc", n_h, n_h), w_cx("W_cx", n_h, n_in), b_c("b_c", n_h, 1),
      w_uc("W_uc", n_h, n_h), w_ux("W_ux", n_h, n_in), b_u("b_u", n_h, 1),
      w_rc("W_rc", n_h, n_h), w_rx("W_rx", n_h, n_in), b_r("b_r", n_h, 1) {}

std::vector<double> rnn_cell_forward(const RnnCell& cell, std::span<const double> x, std::span<const double> h_prev) {
  check_sizes(cell.n_in(), cell.n_h(), x, h_prev);
  std::vector<double> h = affine(cell.w_h, h_prev, cell.w_x, x, cell.b_h);
  for (auto& v : h) v = activate(cell.act, v);
  return h;
}

LstmStep lstm_cell_forward(const LstmCell& cell, std::span<const double> x, std::span<const double> h_prev,
                           std::span<const double> c_prev) {
  check_sizes(cell.n_in(), cell.n_h(), x, h_prev);
  if (c_prev.size() != cell.n_h()) throw ShapeError("lstm cell state size mismatch");
  LstmStep s;
  s.c_tilde = affine(cell.w_ch, h_prev, cell.w_cx, x, cell.b_c);
  s.u = affine(cell.w_uh, h_prev, cell.w_ux, x, cell.b_u);
  s.f = affine(cell.w_fh, h_prev, cell.w_fx, x, cell.b_f);
  s.o = affine(cell.w_oh, h_prev, cell.w_ox, x, cell.b_o);
  const std::size_t n = cell.n_h();
  s.c.resize(n);
  s.h.resize(n);
  s.tanh_c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.c_tilde[i] = std::tanh(s.c_tilde[i]);
    s.u[i] = sigmoid(s.u[i]);
    s.f[i] = sigmoid(s.f[i]);
    s.o[i] = sigmoid(s.o[i]);
    s.c[i] = s.u[i] * s.c_tilde[i] + s.f[i] * c_prev[i];
    s.tanh_c[i] = std::tanh(s.c[i]);
    s.h[i] = s.o[i] * s.tanh_c[i];
  }
  return s;
}

GruStep gru_cell_forward(const GruCell& cell, std::span<const double> x, std::span<const double> c_prev) {
  check_sizes(cell.n_in(), cell.n_h(), x, c_prev);
  const std::size_t n = cell.n_h();
  GruStep s;
  s.u = affine(cell.w_uc, c_prev, cell.w_ux, x, cell.b_u);
  s.r = affine(cell.w_rc, c_prev, cell.w_rx, x, cell.b_r);
  for (std::size_t i = 0; i < n; ++i) {
    s.u[i] = sigmoid(s.u[i]);
    s.r[i] = sigmoid(s.r[i]);
  }
  s.rc.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.rc[i] = s.r[i] * c_prev[i];
  s.c_tilde = affine(cell.w_cc, s.rc, cell.w_cx, x, cell.b_c);
  s.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.c_tilde[i] = std::tanh(s.c_tilde[i]);
    s.c[i] = s.u[i] * s.c_tilde[i] + (1.0 - s.u[i]) * c_prev[i];
  }
  return s;
}

// ---------------------------------------------------------------- Recurrent

Recurrent::Recurrent(const Config& cfg) : cfg_(cfg) {
  if (cfg.units == 0 || cfg.n_in == 0) throw ShapeError("recurrent layer needs positive units and inputs");
  if (cfg.output_units > 0 && (cfg.cell != CellKind::kRnn || cfg.bidirectional || cfg.many_to_one)) {
    throw ShapeError("per-step output map is only defined for unidirectional many-to-many vanilla layers");
  }
  for (std::size_t d = 0; d < directions(); ++d) {
    switch (cfg.cell) {
      case CellKind::kRnn: rnn_.emplace_back(cfg.n_in, cfg.units, cfg.act); break;
      case CellKind::kLstm: lstm_.emplace_back(cfg.n_in, cfg.units); break;
      case CellKind::kGru: gru_.emplace_back(cfg.n_in, cfg.units); break;
    }
  }
  if (cfg.output_units > 0) {
    w_y_ = Param("W_y", cfg.output_units, cfg.units);
    b_y_ = Param("b_y", cfg.output_units, 1);
  }
}

std::string Recurrent::kind() const {
  switch (cfg_.cell) {
    case CellKind::kRnn: return "rnn";
    case CellKind::kLstm: return "lstm";
    case CellKind::kGru: return "gru";
  }
  return "rnn";
}

std::vector<Param*> Recurrent::params() {
  std::vector<Param*> out;
  for (auto& c : rnn_) for (Param* p : c.params()) out.push_back(p);
  for (auto& c : lstm_) for (Param* p : c.params()) out.push_back(p);
  for (auto& c : gru_) for (Param* p : c.params()) out.push_back(p);
  if (cfg_.output_units > 0) {
    out.push_back(&w_y_);
    out.push_back(&b_y_);
  }
  return out;
}

void Recurrent::init(Rng& rng) {
  for (Param* p : params()) {
    if (p->cols == 1) {
      zero(*p);
    } else if (p->rows == p->cols && p->rows == cfg_.units && p->name != "W_y" && p->name.back() != 'x') {
      orthogonal(*p, rng);
    } else {
      glorot(*p, rng);
    }
  }
}

Shape Recurrent::output_shape(const Shape& in) const {
  if (in.channels != cfg_.n_in || in.length == 0) {
    throw ShapeError(kind() + " expects (T x " + std::to_string(cfg_.n_in) + "), got " + in.str());
  }
  if (cfg_.many_to_one) return Shape{1, hidden_width()};
  if (cfg_.output_units > 0) return Shape{in.length, cfg_.output_units};
  return Shape{in.length, hidden_width()};
}

void Recurrent::run_direction(std::size_t dir, const Tensor& in) {
  const std::size_t T = in.length();
  const std::size_t n = cfg_.units;
  DirCache& dc = cache_[dir];
  dc.h.assign(T, {});
  dc.lstm.assign(cfg_.cell == CellKind::kLstm ? T : 0, {});
  dc.gru.assign(cfg_.cell == CellKind::kGru ? T : 0, {});
  std::vector<double> h(n, 0.0);
  std::vector<double> c(n, 0.0);
  for (std::size_t p = 0; p < T; ++p) {
    const std::size_t t = dir == 0 ? p : T - 1 - p;
    const auto x = in.row(t);
    switch (cfg_.cell) {
      case CellKind::kRnn:
        h = rnn_cell_forward(rnn_[dir], x, h);
        break;
      case CellKind::kLstm: {
        LstmStep s = lstm_cell_forward(lstm_[dir], x, h, c);
        h = s.h;
        c = s.c;
        dc.lstm[t] = std::move(s);
        break;
      }
      case CellKind::kGru: {
        GruStep s = gru_cell_forward(gru_[dir], x, h);
        h = s.c;
        dc.gru[t] = std::move(s);
        break;
      }
    }
    dc.h[t] = h;
  }
}

Tensor Recurrent::forward(const Tensor& in, bool /*training*/) {
  const Shape os = output_shape(in.shape());
  const std::size_t T = in.length();
  const std::size_t n = cfg_.units;
  in_cache_ = in;
  cache_.assign(directions(), {});
  for (std::size_t d = 0; d < directions(); ++d) run_direction(d, in);

  Tensor out(os);
  if (cfg_.many_to_one) {
    for (std::size_t d = 0; d < directions(); ++d) {
      const auto& final_h = cache_[d].h[d == 0 ? T - 1 : 0];
      std::copy(final_h.begin(), final_h.end(), out.data().begin() + static_cast<std::ptrdiff_t>(d * n));
    }
  } else if (cfg_.output_units > 0) {
    for (std::size_t t = 0; t < T; ++t) {
      auto row = out.row(t);
      std::copy(b_y_.value.begin(), b_y_.value.end(), row.begin());
      matvec_acc(w_y_, cache_[0].h[t], row);
      for (auto& v : row) v = activate(cfg_.output_act, v);
    }
  } else {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t d = 0; d < directions(); ++d) {
        std::copy(cache_[d].h[t].begin(), cache_[d].h[t].end(), out.row(t).begin() + static_cast<std::ptrdiff_t>(d * n));
      }
    }
  }
  y_cache_ = out;
  return out;
}

void Recurrent::backprop_direction(std::size_t dir, const std::vector<std::vector<double>>& dh, Tensor& gin) {
  const std::size_t T = in_cache_.length();
  const std::size_t n = cfg_.units;
  const DirCache& dc = cache_[dir];
  const std::vector<double> zeros(n, 0.0);
  std::vector<double> carry_h(n, 0.0);
  std::vector<double> carry_c(n, 0.0);
  for (std::size_t q = T; q-- > 0;) {
    const std::size_t t = dir == 0 ? q : T - 1 - q;
    const bool has_prev = q > 0;
    const std::size_t t_prev = dir == 0 ? t - 1 : t + 1;
    const std::vector<double>& h_prev = has_prev ? dc.h[t_prev] : zeros;
    const auto x = in_cache_.row(t);
    auto gx = gin.row(t);
    std::vector<double> dh_total(n);
    for (std::size_t i = 0; i < n; ++i) dh_total[i] = dh[t][i] + carry_h[i];

    switch (cfg_.cell) {
      case CellKind::kRnn: {
        RnnCell& cell = rnn_[dir];
        std::vector<double> da(n);
        for (std::size_t i = 0; i < n; ++i) da[i] = dh_total[i] * activate_grad(cell.act, dc.h[t][i]);
        outer_acc(cell.w_h, da, h_prev);
        outer_acc(cell.w_x, da, x);
        bias_acc(cell.b_h, da);
        matvec_t_acc(cell.w_x, da, gx);
        std::fill(carry_h.begin(), carry_h.end(), 0.0);
        matvec_t_acc(cell.w_h, da, carry_h);
        break;
      }
      case CellKind::kLstm: {
        LstmCell& cell = lstm_[dir];
        const LstmStep& s = dc.lstm[t];
        const std::vector<double>& c_prev = has_prev ? dc.lstm[t_prev].c : zeros;
        std::vector<double> da_c(n), da_u(n), da_f(n), da_o(n), dc_prev(n);
        for (std::size_t i = 0; i < n; ++i) {
          const double d_o = dh_total[i] * s.tanh_c[i];
          const double dc_tot = carry_c[i] + dh_total[i] * s.o[i] * (1.0 - s.tanh_c[i] * s.tanh_c[i]);
          const double d_u = dc_tot * s.c_tilde[i];
          const double d_ct = dc_tot * s.u[i];
          const double d_f = dc_tot * c_prev[i];
          dc_prev[i] = dc_tot * s.f[i];
          da_c[i] = d_ct * (1.0 - s.c_tilde[i] * s.c_tilde[i]);
          da_u[i] = d_u * s.u[i] * (1.0 - s.u[i]);
          da_f[i] = d_f * s.f[i] * (1.0 - s.f[i]);
          da_o[i] = d_o * s.o[i] * (1.0 - s.o[i]);
        }
        std::fill(carry_h.begin(), carry_h.end(), 0.0);
        const std::pair<Param*, Param*> gates[4] = {{&cell.w_ch, &cell.w_cx}, {&cell.w_uh, &cell.w_ux},
                                                    {&cell.w_fh, &cell.w_fx}, {&cell.w_oh, &cell.w_ox}};
        Param* biases[4] = {&cell.b_c, &cell.b_u, &cell.b_f, &cell.b_o};
        const std::vector<double>* das[4] = {&da_c, &da_u, &da_f, &da_o};
        for (int g = 0; g < 4; ++g) {
          outer_acc(*gates[g].first, *das[g], h_prev);
          outer_acc(*gates[g].second, *das[g], x);
          bias_acc(*biases[g], *das[g]);
          matvec_t_acc(*gates[g].first, *das[g], carry_h);
          matvec_t_acc(*gates[g].second, *das[g], gx);
        }
        carry_c = dc_prev;
        break;
      }
      case CellKind::kGru: {
        GruCell& cell = gru_[dir];
        const GruStep& s = dc.gru[t];
        std::vector<double> da_c(n), da_u(n), da_r(n), dprev(n), drc(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const double d_ct = dh_total[i] * s.u[i];
          const double d_u = dh_total[i] * (s.c_tilde[i] - h_prev[i]);
          dprev[i] = dh_total[i] * (1.0 - s.u[i]);
          da_c[i] = d_ct * (1.0 - s.c_tilde[i] * s.c_tilde[i]);
          da_u[i] = d_u * s.u[i] * (1.0 - s.u[i]);
        }
        outer_acc(cell.w_cc, da_c, s.rc);
        outer_acc(cell.w_cx, da_c, x);
        bias_acc(cell.b_c, da_c);
        matvec_t_acc(cell.w_cc, da_c, drc);
        matvec_t_acc(cell.w_cx, da_c, gx);
        for (std::size_t i = 0; i < n; ++i) {
          const double d_r = drc[i] * h_prev[i];
          dprev[i] += drc[i] * s.r[i];
          da_r[i] = d_r * s.r[i] * (1.0 - s.r[i]);
        }
        outer_acc(cell.w_uc, da_u, h_prev);
        outer_acc(cell.w_ux, da_u, x);
        bias_acc(cell.b_u, da_u);
        outer_acc(cell.w_rc, da_r, h_prev);
        outer_acc(cell.w_rx, da_r, x);
        bias_acc(cell.b_r, da_r);
        matvec_t_acc(cell.w_uc, da_u, dprev);
        matvec_t_acc(cell.w_rc, da_r, dprev);
        matvec_t_acc(cell.w_ux, da_u, gx);
        matvec_t_acc(cell.w_rx, da_r, gx);
        carry_h = dprev;
        break;
      }
    }
  }
}

Tensor Recurrent::backward(const Tensor& grad_out) {
  const std::size_t T = in_cache_.length();
  const std::size_t n = cfg_.units;
  Tensor gin(in_cache_.shape());
  for (std::size_t d = 0; d < directions(); ++d) {
    std::vector<std::vector<double>> dh(T, std::vector<double>(n, 0.0));
    if (cfg_.many_to_one) {
      const std::size_t t_final = d == 0 ? T - 1 : 0;
      for (std::size_t i = 0; i < n; ++i) dh[t_final][i] = grad_out[d * n + i];
    } else if (cfg_.output_units > 0) {
      for (std::size_t t = 0; t < T; ++t) {
        std::vector<double> dy(cfg_.output_units);
        for (std::size_t k = 0; k < dy.size(); ++k) {
          dy[k] = grad_out.at(t, k) * activate_grad(cfg_.output_act, y_cache_.at(t, k));
        }
        outer_acc(w_y_, dy, cache_[0].h[t]);
        bias_acc(b_y_, dy);
        matvec_t_acc(w_y_, dy, dh[t]);
      }
    } else {
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < n; ++i) dh[t][i] = grad_out.at(t, d * n + i);
      }
    }
    backprop_direction(d, dh, gin);
  }
  return gin;
}

}  // namespace fiberlab::nn
