#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fiberlab::nn {

/// Feature map of `length` positions x `channels` features, row-major
/// (channel last). Vectors are stored as length 1.
struct Shape {
  std::size_t length = 0;
  std::size_t channels = 0;

  std::size_t elements() const { return length * channels; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor vector(std::vector<double> v);

  const Shape& shape() const { return shape_; }
  std::size_t length() const { return shape_.length; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }

  double& at(std::size_t t, std::size_t c) { return data_[t * shape_.channels + c]; }
  double at(std::size_t t, std::size_t c) const { return data_[t * shape_.channels + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t t) { return {data_.data() + t * shape_.channels, shape_.channels}; }
  std::span<const double> row(std::size_t t) const { return {data_.data() + t * shape_.channels, shape_.channels}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Same data, new shape with an equal element count.
  Tensor reshaped(Shape s) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Trainable parameter: a rows x cols matrix (bias vectors have cols == 1)
/// with its accumulated gradient.
struct Param {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;

  Param() = default;
  Param(std::string n, std::size_t r, std::size_t c)
      : name(std::move(n)), rows(r), cols(c), value(r * c, 0.0), grad(r * c, 0.0) {}

  std::size_t size() const { return value.size(); }
  double& operator()(std::size_t r, std::size_t c) { return value[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return value[r * cols + c]; }
  void zero_grad();
};

/// y += W x for W rows x cols.
void matvec_acc(const Param& w, std::span<const double> x, std::span<double> y);
/// x_grad += W^T dy.
void matvec_t_acc(const Param& w, std::span<const double> dy, std::span<double> x_grad);
/// W.grad += dy x^T.
void outer_acc(Param& w, std::span<const double> dy, std::span<const double> x);
/// b.grad += dy.
void bias_acc(Param& b, std::span<const double> dy);

}  // namespace fiberlab::nn
