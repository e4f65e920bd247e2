#include "fiberlab/nn/model.hpp"

namespace fiberlab::nn {

Model::Model(const Model& other) { *this = other; }

Model& Model::operator=(const Model& other) {
  if (this == &other) return *this;
  layers_.clear();
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
  dropout_rng_ = other.dropout_rng_ ? std::make_unique<Rng>(*other.dropout_rng_) : nullptr;
  bind_rng();
  return *this;
}

void Model::add(std::unique_ptr<Layer> layer) {
  layers_.push_back(std::move(layer));
  bind_rng();
}

void Model::bind_rng() {
  for (auto& l : layers_) l->set_rng(dropout_rng_.get());
}

std::vector<Shape> Model::shape_chain(const Shape& in) const {
  std::vector<Shape> chain{in};
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      chain.push_back(layers_[i]->output_shape(chain.back()));
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + " (" + layers_[i]->kind() + "): " + e.what());
    }
  }
  return chain;
}

Shape Model::output_shape(const Shape& in) const { return shape_chain(in).back(); }

Tensor Model::forward(const Tensor& in, bool training) {
  Tensor t = in;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      t = layers_[i]->forward(t, training);
    } catch (const ShapeError& e) {
      throw ShapeError("layer " + std::to_string(i) + " (" + layers_[i]->kind() + "): " + e.what());
    }
  }
  return t;
}

Tensor Model::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
  return g;
}

std::vector<Param*> Model::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) {
    for (Param* p : l->params()) out.push_back(p);
  }
  return out;
}

void Model::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (auto& l : layers_) n += l->parameter_count();
  return n;
}

void Model::init(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Rng rng(seed, Stream::kNnInit, i);
    if (auto* d = dynamic_cast<Dense*>(layers_[i].get())) d->init_glorot(rng);
    else if (auto* c = dynamic_cast<Conv1D*>(layers_[i].get())) c->init_glorot(rng);
    else if (auto* r = dynamic_cast<Recurrent*>(layers_[i].get())) r->init(rng);
  }
}

void Model::seed_dropout(std::uint64_t seed) {
  dropout_rng_ = std::make_unique<Rng>(seed, Stream::kDropout);
  bind_rng();
}

double mse(const Tensor& pred, const double* target) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    s += e * e;
  }
  return s / static_cast<double>(pred.size());
}

Tensor mse_grad(const Tensor& pred, const double* target, std::size_t batch) {
  Tensor g(pred.shape());
  const double scale = 2.0 / static_cast<double>(pred.size() * batch);
  for (std::size_t i = 0; i < pred.size(); ++i) g[i] = scale * (pred[i] - target[i]);
  return g;
}

}  // namespace fiberlab::nn
