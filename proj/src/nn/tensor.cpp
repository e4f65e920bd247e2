#include "fiberlab/nn/tensor.hpp"

#include <algorithm>
#include <stdexcept>

namespace fiberlab::nn {

std::string Shape::str() const { return "(" + std::to_string(length) + " x " + std::to_string(channels) + ")"; }

Tensor::Tensor(Shape shape, double fill) : shape_(shape), data_(shape.elements(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.elements()) throw std::invalid_argument("Tensor: data size does not match shape " + shape_.str());
}

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(Shape{1, n}, std::move(v));
}

Tensor Tensor::reshaped(Shape s) const {
  if (s.elements() != shape_.elements()) throw std::invalid_argument("Tensor::reshaped: element count mismatch");
  return Tensor(s, data_);
}

void Param::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

void matvec_acc(const Param& w, std::span<const double> x, std::span<double> y) {
  const std::size_t cols = w.cols;
  const double* p = w.value.data();
  for (std::size_t r = 0; r < w.rows; ++r, p += cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += p[c] * x[c];
    y[r] += acc;
  }
}

void matvec_t_acc(const Param& w, std::span<const double> dy, std::span<double> x_grad) {
  const std::size_t cols = w.cols;
  const double* p = w.value.data();
  for (std::size_t r = 0; r < w.rows; ++r, p += cols) {
    const double d = dy[r];
    if (d == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) x_grad[c] += p[c] * d;
  }
}

void outer_acc(Param& w, std::span<const double> dy, std::span<const double> x) {
  const std::size_t cols = w.cols;
  double* g = w.grad.data();
  for (std::size_t r = 0; r < w.rows; ++r, g += cols) {
    const double d = dy[r];
    if (d == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) g[c] += d * x[c];
  }
}

void bias_acc(Param& b, std::span<const double> dy) {
  for (std::size_t r = 0; r < b.rows; ++r) b.grad[r] += dy[r];
}

}  // namespace fiberlab::nn
