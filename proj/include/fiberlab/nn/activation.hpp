#pragma once

#include <string>
#include <string_view>

namespace fiberlab::nn {

enum class Activation { kLinear, kTanh, kSigmoid, kRelu, kLeakyRelu };

inline constexpr double kLeakySlope = 0.3;

double activate(Activation a, double v);
/// Derivative expressed through the activation output y = activate(a, v).
double activate_grad(Activation a, double y);

Activation parse_activation(std::string_view name);
std::string activation_name(Activation a);

}  // namespace fiberlab::nn
