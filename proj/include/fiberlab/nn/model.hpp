#pragma once

#include <memory>
#include <vector>

#include "fiberlab/nn/layers.hpp"
#include "fiberlab/nn/recurrent.hpp"

namespace fiberlab::nn {

/// Ordered layer stack. Copying deep-clones the layers and re-binds the
/// dropout stream to the copy.
class Model {
 public:
  Model() = default;
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  void add(std::unique_ptr<Layer> layer);
  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  /// Walks the shape chain; a ShapeError names the failing layer.
  Shape output_shape(const Shape& in) const;
  std::vector<Shape> shape_chain(const Shape& in) const;

  Tensor forward(const Tensor& in, bool training = false);
  /// Back-propagates dL/d(output); parameter gradients accumulate.
  Tensor backward(const Tensor& grad_out);

  std::vector<Param*> params();
  void zero_grad();
  std::size_t parameter_count();

  /// Glorot / orthogonal init, one RNG substream per layer.
  void init(std::uint64_t seed);
  void seed_dropout(std::uint64_t seed);

 private:
  void bind_rng();

  std::vector<std::unique_ptr<Layer>> layers_;
  std::unique_ptr<Rng> dropout_rng_;
};

/// Mean squared error over the outputs of one sample.
double mse(const Tensor& pred, const double* target);
/// d(mse)/d(pred), divided by `batch` so summed gradients give the batch mean.
Tensor mse_grad(const Tensor& pred, const double* target, std::size_t batch);

}  // namespace fiberlab::nn
