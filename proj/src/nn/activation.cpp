#include "fiberlab/nn/activation.hpp"

#include <cmath>
#include <stdexcept>

namespace fiberlab::nn {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::kLinear: return v;
    case Activation::kTanh: return std::tanh(v);
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-v));
    case Activation::kRelu: return v > 0.0 ? v : 0.0;
    case Activation::kLeakyRelu: return v > 0.0 ? v : kLeakySlope * v;
  }
  return v;
}

double activate_grad(Activation a, double y) {
  switch (a) {
    case Activation::kLinear: return 1.0;
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kSigmoid: return y * (1.0 - y);
    case Activation::kRelu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::kLeakyRelu: return y > 0.0 ? 1.0 : kLeakySlope;
  }
  return 1.0;
}

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "relu") return Activation::kRelu;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kRelu: return "relu";
    case Activation::kLeakyRelu: return "leaky_relu";
  }
  return "linear";
}

}  // namespace fiberlab::nn
