#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fiberlab/zoo.hpp"

namespace fiberlab {

using Count = std::uint64_t;

/// FLOPs charged per activation evaluation. Linear activations cost nothing.
struct CostModel {
  Count eta = 4;
  std::map<std::size_t, Count> layer_eta;  // overrides by hidden-layer index

  Count eta_for(std::size_t layer, nn::Activation act) const;
};

Count flops_rnn_cell(Count n_i, Count n_h, Count eta);
Count flops_lstm_cell(Count n_i, Count n_h, Count eta);
Count flops_gru_cell(Count n_i, Count n_h, Count eta);
Count flops_fc(Count n_i, Count n_h, Count eta);

/// floor((L_in + 2 pad - (dil L_ker - 1) - 1) / strd + 1); throws
/// std::domain_error when the result is below 1.
Count conv_out_len(Count l_in, Count pad, Count dil, Count l_ker, Count strd);

struct ConvGeom {
  Count kernels = 1;
  Count kernel_len = 1;
  Count in_channels = 1;
  Count l_in = 1;
  Count stride = 1;
  Count padding = 0;
  Count dilation = 1;
};
/// n_ker (2 e_ker - 1) L_out + eta e_out.
Count flops_conv(const ConvGeom& g, Count eta);

struct LayerCost {
  std::string layer;  // "0", "1", ..., "head"
  std::string kind;
  Count params = 0;
  Count flops = 0;
  Count time_steps = 0;  // recurrent layers only
};

struct ModelCost {
  std::vector<LayerCost> layers;
  Count flops = 0;
  Count params = 0;
};

ModelCost model_cost(const ArchSpec& spec, const nn::Shape& input, const CostModel& cost = {});
inline ModelCost model_cost(const ArchSpec& spec, const CostModel& cost = {}) {
  return model_cost(spec, window_shape(spec.memory, rx_input_sps(spec.rx_mode)), cost);
}

/// CSV with columns layer,kind,params,flops,time_steps and a closing total row.
void write_cost_csv(std::ostream& os, const ModelCost& cost);

}  // namespace fiberlab
