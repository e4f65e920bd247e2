#pragma once

#include <span>
#include <vector>

#include "fiberlab/nn/layers.hpp"

namespace fiberlab::nn {

enum class CellKind { kRnn, kLstm, kGru };

/// Vanilla cell: h = act(W_h h_prev + W_x x + b_h).
struct RnnCell {
  Param w_h, w_x, b_h;
  Activation act = Activation::kTanh;

  RnnCell(std::size_t n_in, std::size_t n_h, Activation a = Activation::kTanh);
  std::size_t n_in() const { return w_x.cols; }
  std::size_t n_h() const { return w_h.rows; }
  std::vector<Param*> params() { return {&w_h, &w_x, &b_h}; }
};

/// LSTM cell with candidate c~ and update, forget and output gates.
struct LstmCell {
  Param w_ch, w_cx, b_c;
  Param w_uh, w_ux, b_u;
  Param w_fh, w_fx, b_f;
  Param w_oh, w_ox, b_o;

  LstmCell(std::size_t n_in, std::size_t n_h);
  std::size_t n_in() const { return w_cx.cols; }
  std::size_t n_h() const { return w_ch.rows; }
  std::vector<Param*> params() { return {&w_ch, &w_cx, &b_c, &w_uh, &w_ux, &b_u, &w_fh, &w_fx, &b_f, &w_oh, &w_ox, &b_o}; }
};

/// GRU cell whose reset gate scales c_prev inside the candidate; h = c.
struct GruCell {
  Param w_cc, w_cx, b_c;
  Param w_uc, w_ux, b_u;
  Param w_rc, w_rx, b_r;

  GruCell(std::size_t n_in, std::size_t n_h);
  std::size_t n_in() const { return w_cx.cols; }
  std::size_t n_h() const { return w_cc.rows; }
  std::vector<Param*> params() { return {&w_cc, &w_cx, &b_c, &w_uc, &w_ux, &b_u, &w_rc, &w_rx, &b_r}; }
};

std::vector<double> rnn_cell_forward(const RnnCell& cell, std::span<const double> x, std::span<const double> h_prev);

struct LstmStep {
  std::vector<double> h, c;
  std::vector<double> c_tilde, u, f, o, tanh_c;
};
LstmStep lstm_cell_forward(const LstmCell& cell, std::span<const double> x, std::span<const double> h_prev,
                           std::span<const double> c_prev);

struct GruStep {
  std::vector<double> c;
  std::vector<double> c_tilde, u, r, rc;
};
GruStep gru_cell_forward(const GruCell& cell, std::span<const double> x, std::span<const double> c_prev);

/// Recurrent layer over the length axis of a (T x n_in) feature map.
///
/// Many-to-one emits the final hidden state (1 x n_h, or 1 x 2 n_h when
/// bidirectional: forward state after t = T-1, backward state after t = 0).
/// Many-to-many emits (T x n_h) or (T x 2 n_h); a vanilla unidirectional
/// layer may add the per-step output map y = act_y(W_y h + b_y).
class Recurrent : public Layer {
 public:
  struct Config {
    CellKind cell = CellKind::kRnn;
    std::size_t n_in = 1;
    std::size_t units = 1;  // per direction
    Activation act = Activation::kTanh;  // vanilla cells only
    bool bidirectional = false;
    bool many_to_one = true;
    std::size_t output_units = 0;  // W_y rows, vanilla many-to-many only
    Activation output_act = Activation::kLinear;
  };

  explicit Recurrent(const Config& cfg);

  std::string kind() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Recurrent>(*this); }

  void init(Rng& rng);
  const Config& config() const { return cfg_; }
  std::size_t directions() const { return cfg_.bidirectional ? 2 : 1; }

  RnnCell& rnn(std::size_t dir) { return rnn_.at(dir); }
  LstmCell& lstm(std::size_t dir) { return lstm_.at(dir); }
  GruCell& gru(std::size_t dir) { return gru_.at(dir); }

 private:
  struct DirCache {
    std::vector<std::vector<double>> h;  // per time position
    std::vector<LstmStep> lstm;
    std::vector<GruStep> gru;
  };

  std::size_t hidden_width() const { return cfg_.units * directions(); }
  void run_direction(std::size_t dir, const Tensor& in);
  void backprop_direction(std::size_t dir, const std::vector<std::vector<double>>& dh, Tensor& gin);

  Config cfg_;
  std::vector<RnnCell> rnn_;
  std::vector<LstmCell> lstm_;
  std::vector<GruCell> gru_;
  Param w_y_;
  Param b_y_;

  Tensor in_cache_;
  std::vector<DirCache> cache_;
  Tensor y_cache_;
};

}  // namespace fiberlab::nn
