#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlab/nn/model.hpp"

namespace fiberlab {

enum class LayerKind { kFc, kConv1d, kRnn, kLstm, kGru, kDropout, kFlatten, kFold };

std::string layer_kind_name(LayerKind k);
LayerKind parse_layer_kind(const std::string& s);
bool is_recurrent(LayerKind k);

/// One hidden layer. `units` is the FC width or the recurrent width summed
/// over both directions; `channels` is the conv kernel count.
struct LayerSpec {
  LayerKind kind = LayerKind::kFc;
  std::size_t units = 0;
  std::size_t channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t dilation = 1;
  nn::Activation act = nn::Activation::kLinear;
  bool bidirectional = false;
  bool many_to_one = false;
  double rate = 0.0;
  std::size_t group = 0;

  bool operator==(const LayerSpec&) const = default;
};

struct ArchSpec {
  std::string name;
  int rx_mode = 1;
  /// Default channel memory M-bar in symbols; sets the window length.
  int memory = 1;
  std::vector<LayerSpec> layers;
  std::size_t head_units = 4;
  nn::Activation head_act = nn::Activation::kLinear;

  bool operator==(const ArchSpec&) const = default;
};

class UnknownModel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

const std::vector<std::string>& model_names();
ArchSpec catalog(const std::string& name, int rx_mode);

/// NN input sample rate for a receiver mode: 1 SpS for RX-1, 2 for RX-2.
int rx_input_sps(int rx_mode);
/// (2(2M+1) x 2) input shape for a window with memory M-bar.
nn::Shape window_shape(int memory, int sps);

struct LayerShape {
  nn::Shape in;
  nn::Shape out;
};
/// Shape chain over the hidden layers followed by the head. A failure
/// names the offending layer.
std::vector<LayerShape> infer_shapes(const ArchSpec& spec, const nn::Shape& input);

nn::Model build(const ArchSpec& spec, const nn::Shape& input, std::uint64_t seed);
inline nn::Model build(const ArchSpec& spec, std::uint64_t seed) {
  return build(spec, window_shape(spec.memory, rx_input_sps(spec.rx_mode)), seed);
}

/// Copy of `spec` with the last recurrent layer's (total) width replaced.
ArchSpec with_recurrent_units(const ArchSpec& spec, std::size_t units);

/// Line-oriented text form:
///   name <s> / rx_mode <n> / memory <n>
///   layer <kind> key=value ...
///   head fc units=<n> act=<a>
/// Unknown keys are rejected; '#' starts a comment.
void write_arch(std::ostream& os, const ArchSpec& spec);
std::string arch_to_string(const ArchSpec& spec);
ArchSpec read_arch(std::istream& is);
ArchSpec arch_from_string(const std::string& text);
ArchSpec load_arch(const std::string& path);

}  // namespace fiberlab
