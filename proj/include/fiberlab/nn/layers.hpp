#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlab/nn/activation.hpp"
#include "fiberlab/nn/tensor.hpp"
#include "fiberlab/rng.hpp"

namespace fiberlab::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A differentiable layer processing one sample at a time.
///
/// forward() caches what backward() needs; backward() must follow the
/// forward() of the same sample. Parameter gradients accumulate until
/// zero_grad().
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  /// Throws ShapeError if `in` is not accepted.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor forward(const Tensor& in, bool training) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
  /// Random source for training-time stochastic layers.
  virtual void set_rng(Rng* /*rng*/) {}

  std::size_t parameter_count();
};

/// Fully connected: y = act(W x + b) on a flattened (1 x n_in) input.
class Dense : public Layer {
 public:
  Dense(std::size_t n_in, std::size_t n_out, Activation act);

  std::string kind() const override { return "fc"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

  void init_glorot(Rng& rng);
  Param& weight() { return w_; }
  Param& bias() { return b_; }
  Activation activation() const { return act_; }

 private:
  Param w_;
  Param b_;
  Activation act_;
  Tensor in_cache_;
  Tensor out_cache_;
};

/// 1-D cross-correlation over the length axis.
///
/// Kernel k has weights w[k][j][c] for tap j and input channel c, stored as
/// row k of an n_ker x (L_ker * C_in) matrix.
class Conv1D : public Layer {
 public:
  struct Geometry {
    std::size_t in_channels = 1;
    std::size_t kernels = 1;
    std::size_t kernel_len = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t dilation = 1;
  };

  Conv1D(Geometry g, Activation act);

  std::string kind() const override { return "conv1d"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Param*> params() override { return {&w_, &b_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1D>(*this); }

  void init_glorot(Rng& rng);
  const Geometry& geometry() const { return g_; }
  Param& weight() { return w_; }
  Param& bias() { return b_; }

 private:
  Geometry g_;
  Activation act_;
  Param w_;
  Param b_;
  Tensor in_cache_;
  Tensor out_cache_;
};

/// (L x C) -> (1 x L*C), channel-last ordering.
class Flatten : public Layer {
 public:
  std::string kind() const override { return "flatten"; }
  Shape output_shape(const Shape& in) const override { return Shape{1, in.elements()}; }
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  Shape in_shape_;
};

/// (L x C) -> (L/g x C*g): merges g consecutive positions into one. Used to
/// turn the interleaved Re/Im rows into one time step per sample.
class Fold : public Layer {
 public:
  explicit Fold(std::size_t group) : group_(group) {}
  std::string kind() const override { return "fold"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Fold>(*this); }
  std::size_t group() const { return group_; }

 private:
  std::size_t group_;
  Shape in_shape_;
};

/// Inverted dropout: training multiplies by mask / (1 - rate), inference is identity.
class Dropout : public Layer {
 public:
  explicit Dropout(double rate);
  std::string kind() const override { return "dropout"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }
  void set_rng(Rng* rng) override { rng_ = rng; }

  double rate() const { return rate_; }
  /// Reuse the most recent mask instead of drawing a new one.
  void freeze_mask(bool frozen) { frozen_ = frozen; }

 private:
  double rate_;
  Rng* rng_ = nullptr;
  bool frozen_ = false;
  std::vector<double> mask_;
};

}  // namespace fiberlab::nn
