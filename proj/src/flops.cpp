#include "fiberlab/flops.hpp"

#include <ostream>
#include <stdexcept>

namespace fiberlab {

Count CostModel::eta_for(std::size_t layer, nn::Activation act) const {
  if (act == nn::Activation::kLinear) return 0;
  const auto it = layer_eta.find(layer);
  return it == layer_eta.end() ? eta : it->second;
}

Count flops_rnn_cell(Count n_i, Count n_h, Count eta) { return n_i * n_h + n_h * n_h + 2 * n_h + eta * n_h; }

Count flops_lstm_cell(Count n_i, Count n_h, Count eta) {
  return 4 * (n_i * n_h + n_h * n_h + 3 * n_h) + 5 * eta * n_h;
}

Count flops_gru_cell(Count n_i, Count n_h, Count eta) {
  return 3 * (n_i * n_h + n_h * n_h + 2 * n_h + eta * n_h) + 5 * n_h;
}

Count flops_fc(Count n_i, Count n_h, Count eta) { return n_i * n_h + eta * n_h + n_h; }

Count conv_out_len(Count l_in, Count pad, Count dil, Count l_ker, Count strd) {
  if (strd == 0) throw std::domain_error("conv stride must be positive");
  const auto num = static_cast<long long>(l_in + 2 * pad) - static_cast<long long>(dil * l_ker - 1) - 1;
  if (num < 0) throw std::domain_error("conv output length below 1");
  return static_cast<Count>(num) / strd + 1;
}

Count flops_conv(const ConvGeom& g, Count eta) {
  const Count l_out = conv_out_len(g.l_in, g.padding, g.dilation, g.kernel_len, g.stride);
  const Count e_ker = g.kernel_len * g.in_channels;
  return g.kernels * (2 * e_ker - 1) * l_out + eta * l_out * g.kernels;
}

ModelCost model_cost(const ArchSpec& spec, const nn::Shape& input, const CostModel& cost) {
  const auto shapes = infer_shapes(spec, input);
  ModelCost out;
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const bool head = i == spec.layers.size();
    LayerSpec l;
    if (head) {
      l.kind = LayerKind::kFc;
      l.units = spec.head_units;
      l.act = spec.head_act;
    } else {
      l = spec.layers[i];
    }
    const nn::Shape& in = shapes[i].in;
    LayerCost c;
    c.layer = head ? "head" : std::to_string(i);
    c.kind = layer_kind_name(l.kind);
    const Count eta = cost.eta_for(i, l.act);
    switch (l.kind) {
      case LayerKind::kFc:
        c.params = in.channels * l.units + l.units;
        c.flops = flops_fc(in.channels, l.units, eta);
        break;
      case LayerKind::kConv1d: {
        ConvGeom g{l.channels, l.kernel, in.channels, in.length, l.stride, l.padding, l.dilation};
        c.params = l.channels * l.kernel * in.channels + l.channels;
        c.flops = flops_conv(g, eta);
        break;
      }
      case LayerKind::kRnn:
      case LayerKind::kLstm:
      case LayerKind::kGru: {
        const Count dirs = l.bidirectional ? 2 : 1;
        const Count n_h = l.units / dirs;
        const Count n_i = in.channels;
        const Count gates = l.kind == LayerKind::kRnn ? 1 : l.kind == LayerKind::kLstm ? 4 : 3;
        const Count cell_eta = cost.eta_for(i, l.kind == LayerKind::kRnn ? l.act : nn::Activation::kTanh);
        const Count cell = l.kind == LayerKind::kRnn    ? flops_rnn_cell(n_i, n_h, cell_eta)
                           : l.kind == LayerKind::kLstm ? flops_lstm_cell(n_i, n_h, cell_eta)
                                                        : flops_gru_cell(n_i, n_h, cell_eta);
        c.time_steps = in.length;
        c.params = dirs * gates * (n_i * n_h + n_h * n_h + n_h);
        c.flops = dirs * c.time_steps * cell;
        break;
      }
      case LayerKind::kDropout:
      case LayerKind::kFlatten:
      case LayerKind::kFold:
        break;
    }
    out.flops += c.flops;
    out.params += c.params;
    out.layers.push_back(c);
  }
  return out;
}

void write_cost_csv(std::ostream& os, const ModelCost& cost) {
  os << "layer,kind,params,flops,time_steps\n";
  for (const auto& l : cost.layers) {
    os << l.layer << ',' << l.kind << ',' << l.params << ',' << l.flops << ',' << l.time_steps << '\n';
  }
  os << "total,," << cost.params << ',' << cost.flops << ",\n";
}

}  // namespace fiberlab
