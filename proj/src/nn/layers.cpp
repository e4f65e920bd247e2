#include "fiberlab/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace fiberlab::nn {

namespace {

void glorot_uniform(Param& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : p.value) v = (2.0 * rng.uniform() - 1.0) * limit;
}

}  // namespace

std::size_t Layer::parameter_count() {
  std::size_t n = 0;
  for (const Param* p : params()) n += p->size();
  return n;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t n_in, std::size_t n_out, Activation act)
    : w_("W", n_out, n_in), b_("b", n_out, 1), act_(act) {}

void Dense::init_glorot(Rng& rng) {
  glorot_uniform(w_, w_.cols, w_.rows, rng);
  std::fill(b_.value.begin(), b_.value.end(), 0.0);
}

Shape Dense::output_shape(const Shape& in) const {
  if (in.length != 1 || in.channels != w_.cols) {
    throw ShapeError("fc expects (1 x " + std::to_string(w_.cols) + "), got " + in.str());
  }
  return Shape{1, w_.rows};
}

Tensor Dense::forward(const Tensor& in, bool /*training*/) {
  output_shape(in.shape());
  Tensor out(Shape{1, w_.rows});
  std::copy(b_.value.begin(), b_.value.end(), out.data().begin());
  matvec_acc(w_, in.data(), out.data());
  for (auto& v : out.data()) v = activate(act_, v);
  in_cache_ = in;
  out_cache_ = out;
  return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
  std::vector<double> da(w_.rows);
  for (std::size_t r = 0; r < w_.rows; ++r) da[r] = grad_out[r] * activate_grad(act_, out_cache_[r]);
  outer_acc(w_, da, in_cache_.data());
  bias_acc(b_, da);
  Tensor gin(in_cache_.shape());
  matvec_t_acc(w_, da, gin.data());
  return gin;
}

// ---------------------------------------------------------------- Conv1D

Conv1D::Conv1D(Geometry g, Activation act)
    : g_(g), act_(act), w_("W", g.kernels, g.kernel_len * g.in_channels), b_("b", g.kernels, 1) {
  if (g.kernels == 0 || g.kernel_len == 0 || g.stride == 0 || g.dilation == 0 || g.in_channels == 0) {
    throw ShapeError("conv1d: kernels, kernel length, stride, dilation and channels must be positive");
  }
}

void Conv1D::init_glorot(Rng& rng) {
  glorot_uniform(w_, g_.kernel_len * g_.in_channels, g_.kernel_len * g_.kernels, rng);
  std::fill(b_.value.begin(), b_.value.end(), 0.0);
}

Shape Conv1D::output_shape(const Shape& in) const {
  if (in.channels != g_.in_channels) {
    throw ShapeError("conv1d expects " + std::to_string(g_.in_channels) + " input channels, got " + in.str());
  }
  const auto padded = static_cast<long long>(in.length + 2 * g_.padding);
  const auto reach = static_cast<long long>(g_.dilation * (g_.kernel_len - 1) + 1);
  if (reach > padded) {
    throw ShapeError("conv1d kernel (reach " + std::to_string(reach) + ") longer than padded input " + in.str());
  }
  const auto l_out = static_cast<std::size_t>((padded - reach) / static_cast<long long>(g_.stride) + 1);
  return Shape{l_out, g_.kernels};
}

Tensor Conv1D::forward(const Tensor& in, bool /*training*/) {
  const Shape os = output_shape(in.shape());
  Tensor out(os);
  const std::size_t patch_len = g_.kernel_len * g_.in_channels;
  std::vector<double> patch(patch_len);
  const auto len = static_cast<long long>(in.length());
  for (std::size_t t = 0; t < os.length; ++t) {
    const long long start = static_cast<long long>(t * g_.stride) - static_cast<long long>(g_.padding);
    for (std::size_t j = 0; j < g_.kernel_len; ++j) {
      const long long pos = start + static_cast<long long>(j * g_.dilation);
      for (std::size_t c = 0; c < g_.in_channels; ++c) {
        patch[j * g_.in_channels + c] = (pos >= 0 && pos < len) ? in.at(static_cast<std::size_t>(pos), c) : 0.0;
      }
    }
    auto row = out.row(t);
    std::copy(b_.value.begin(), b_.value.end(), row.begin());
    matvec_acc(w_, patch, row);
    for (auto& v : row) v = activate(act_, v);
  }
  in_cache_ = in;
  out_cache_ = out;
  return out;
}

Tensor Conv1D::backward(const Tensor& grad_out) {
  const Shape os = out_cache_.shape();
  Tensor gin(in_cache_.shape());
  const std::size_t patch_len = g_.kernel_len * g_.in_channels;
  std::vector<double> patch(patch_len);
  std::vector<double> dpatch(patch_len);
  std::vector<double> da(g_.kernels);
  const auto len = static_cast<long long>(in_cache_.length());
  for (std::size_t t = 0; t < os.length; ++t) {
    for (std::size_t k = 0; k < g_.kernels; ++k) {
      da[k] = grad_out.at(t, k) * activate_grad(act_, out_cache_.at(t, k));
    }
    const long long start = static_cast<long long>(t * g_.stride) - static_cast<long long>(g_.padding);
    for (std::size_t j = 0; j < g_.kernel_len; ++j) {
      const long long pos = start + static_cast<long long>(j * g_.dilation);
      for (std::size_t c = 0; c < g_.in_channels; ++c) {
        patch[j * g_.in_channels + c] =
            (pos >= 0 && pos < len) ? in_cache_.at(static_cast<std::size_t>(pos), c) : 0.0;
      }
    }
    outer_acc(w_, da, patch);
    bias_acc(b_, da);
    std::fill(dpatch.begin(), dpatch.end(), 0.0);
    matvec_t_acc(w_, da, dpatch);
    for (std::size_t j = 0; j < g_.kernel_len; ++j) {
      const long long pos = start + static_cast<long long>(j * g_.dilation);
      if (pos < 0 || pos >= len) continue;
      for (std::size_t c = 0; c < g_.in_channels; ++c) {
        gin.at(static_cast<std::size_t>(pos), c) += dpatch[j * g_.in_channels + c];
      }
    }
  }
  return gin;
}

// ---------------------------------------------------------------- Flatten / Fold

Tensor Flatten::forward(const Tensor& in, bool /*training*/) {
  in_shape_ = in.shape();
  return in.reshaped(Shape{1, in.size()});
}

Tensor Flatten::backward(const Tensor& grad_out) { return grad_out.reshaped(in_shape_); }

Shape Fold::output_shape(const Shape& in) const {
  if (group_ == 0 || in.length % group_ != 0) {
    throw ShapeError("fold(" + std::to_string(group_) + ") needs a length divisible by the group, got " + in.str());
  }
  return Shape{in.length / group_, in.channels * group_};
}

Tensor Fold::forward(const Tensor& in, bool /*training*/) {
  in_shape_ = in.shape();
  return in.reshaped(output_shape(in.shape()));
}

Tensor Fold::backward(const Tensor& grad_out) { return grad_out.reshaped(in_shape_); }

// ---------------------------------------------------------------- Dropout

Dropout::Dropout(double rate) : rate_(rate) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& in, bool training) {
  if (!training || rate_ == 0.0) {
    mask_.assign(in.size(), 1.0);
    return in;
  }
  if (!frozen_ || mask_.size() != in.size()) {
    if (rng_ == nullptr) throw std::logic_error("dropout: no random source attached");
    mask_.resize(in.size());
    const double keep_scale = 1.0 / (1.0 - rate_);
    for (auto& m : mask_) m = rng_->uniform() < rate_ ? 0.0 : keep_scale;
  }
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * mask_[i];
  return out;
}

Tensor Dropout::backward(const Tensor& grad_out) {
  Tensor g(grad_out.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_out[i] * mask_[i];
  return g;
}

}  // namespace fiberlab::nn
