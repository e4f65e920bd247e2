#include "fiberlab/zoo.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace fiberlab {

using nn::Activation;
using nn::Shape;

std::string layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kFc: return "fc";
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kRnn: return "rnn";
    case LayerKind::kLstm: return "lstm";
    case LayerKind::kGru: return "gru";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kFold: return "fold";
  }
  return "?";
}

LayerKind parse_layer_kind(const std::string& s) {
  static const std::map<std::string, LayerKind> kinds = {
      {"fc", LayerKind::kFc},           {"conv1d", LayerKind::kConv1d},   {"rnn", LayerKind::kRnn},
      {"lstm", LayerKind::kLstm},       {"gru", LayerKind::kGru},         {"dropout", LayerKind::kDropout},
      {"flatten", LayerKind::kFlatten}, {"fold", LayerKind::kFold}};
  const auto it = kinds.find(s);
  if (it == kinds.end()) throw std::invalid_argument("unknown layer kind '" + s + "'");
  return it->second;
}

bool is_recurrent(LayerKind k) { return k == LayerKind::kRnn || k == LayerKind::kLstm || k == LayerKind::kGru; }

// ---------------------------------------------------------------- catalog

namespace {

LayerSpec fc(std::size_t units, Activation act) {
  LayerSpec l;
  l.kind = LayerKind::kFc;
  l.units = units;
  l.act = act;
  return l;
}

LayerSpec conv(std::size_t kernel, std::size_t stride, std::size_t channels, Activation act) {
  LayerSpec l;
  l.kind = LayerKind::kConv1d;
  l.kernel = kernel;
  l.stride = stride;
  l.channels = channels;
  l.act = act;
  return l;
}

LayerSpec recurrent(LayerKind kind, std::size_t units, bool bidirectional, bool many_to_one) {
  LayerSpec l;
  l.kind = kind;
  l.units = units;
  l.act = Activation::kTanh;
  l.bidirectional = bidirectional;
  l.many_to_one = many_to_one;
  return l;
}

LayerSpec dropout(double rate) {
  LayerSpec l;
  l.kind = LayerKind::kDropout;
  l.rate = rate;
  return l;
}

LayerSpec flatten() {
  LayerSpec l;
  l.kind = LayerKind::kFlatten;
  return l;
}

LayerSpec fold(std::size_t group) {
  LayerSpec l;
  l.kind = LayerKind::kFold;
  l.group = group;
  return l;
}

ArchSpec arch(std::string name, int rx_mode, int memory, std::vector<LayerSpec> layers) {
  ArchSpec a;
  a.name = std::move(name);
  a.rx_mode = rx_mode;
  a.memory = memory;
  a.layers = std::move(layers);
  return a;
}

constexpr Activation kTanh = Activation::kTanh;
constexpr Activation kRelu = Activation::kRelu;

// Window defaults put each model's per-symbol FLOPs near its published
// value; `fiberlab flops --arch <name>` prints the result.
ArchSpec catalog_rx1(const std::string& name) {
  if (name == "mlp") {
    return arch(name, 1, 95,
                {flatten(), dropout(0.4), fc(1536, kTanh), fc(1536, kTanh), dropout(0.3), fc(1536, kTanh),
                 fc(1536, kTanh)});
  }
  if (name == "cnn_mlp") {
    return arch(name, 1, 95,
                {conv(49, 1, 4, kRelu), conv(49, 1, 6, kRelu), conv(49, 1, 8, kRelu), flatten(), fc(768, kTanh),
                 fc(768, kTanh)});
  }
  if (name == "bi_lstm") return arch(name, 1, 55, {fold(2), recurrent(LayerKind::kLstm, 144, true, false), flatten()});
  if (name == "bi_gru") return arch(name, 1, 54, {fold(2), recurrent(LayerKind::kGru, 144, true, false), flatten()});
  if (name == "bi_rnn") return arch(name, 1, 51, {fold(2), recurrent(LayerKind::kRnn, 240, true, false), flatten()});
  if (name == "cnn_bi_lstm") {
    return arch(name, 1, 39,
                {conv(49, 1, 2, Activation::kLeakyRelu), recurrent(LayerKind::kLstm, 136, true, false), flatten()});
  }
  if (name == "crnn") {
    return arch(name, 1, 62,
                {conv(49, 1, 4, kRelu), conv(9, 9, 36, kRelu), conv(5, 5, 180, kRelu),
                 recurrent(LayerKind::kRnn, 454, false, true)});
  }
  throw UnknownModel("unknown model '" + name + "'");
}

ArchSpec catalog_rx2(const std::string& name) {
  if (name == "mlp") {
    return arch(name, 2, 47,
                {flatten(), dropout(0.5), fc(1536, kTanh), fc(1152, kTanh), dropout(0.4), fc(1152, kTanh),
                 fc(768, kTanh)});
  }
  if (name == "cnn_mlp") {
    return arch(name, 2, 47,
                {conv(99, 1, 3, kRelu), conv(99, 3, 7, kRelu), conv(51, 3, 20, kRelu), flatten(), fc(1152, kTanh),
                 dropout(0.3), fc(1152, kTanh)});
  }
  if (name == "bi_lstm") return arch(name, 2, 28, {fold(2), recurrent(LayerKind::kLstm, 158, true, false), flatten()});
  if (name == "bi_gru") return arch(name, 2, 28, {fold(2), recurrent(LayerKind::kGru, 158, true, false), flatten()});
  if (name == "bi_rnn") return arch(name, 2, 26, {fold(2), recurrent(LayerKind::kRnn, 270, true, false), flatten()});
  if (name == "cnn_bi_lstm") {
    return arch(name, 2, 24,
                {conv(49, 1, 2, Activation::kLeakyRelu), recurrent(LayerKind::kLstm, 136, true, false), flatten()});
  }
  if (name == "crnn") {
    return arch(name, 2, 61,
                {conv(99, 1, 4, kRelu), conv(11, 11, 30, kRelu), conv(9, 9, 125, kRelu),
                 recurrent(LayerKind::kRnn, 494, false, true)});
  }
  throw UnknownModel("unknown model '" + name + "'");
}

}  // namespace

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names = {"mlp", "cnn_mlp", "bi_lstm", "bi_gru", "bi_rnn", "cnn_bi_lstm", "crnn"};
  return names;
}

ArchSpec catalog(const std::string& name, int rx_mode) {
  if (rx_mode == 1) return catalog_rx1(name);
  if (rx_mode == 2) return catalog_rx2(name);
  throw std::invalid_argument("rx_mode must be 1 or 2, got " + std::to_string(rx_mode));
}

int rx_input_sps(int rx_mode) {
  if (rx_mode != 1 && rx_mode != 2) throw std::invalid_argument("rx_mode must be 1 or 2");
  return rx_mode;
}

Shape window_shape(int memory, int sps) {
  if (memory <= 0 || sps <= 0) throw std::domain_error("window needs positive memory and sps");
  const int m = (2 * memory * sps + sps - 1) / 2;
  return Shape{static_cast<std::size_t>(2 * (2 * m + 1)), 2};
}

// ---------------------------------------------------------------- shapes and building

namespace {

std::size_t per_direction(const LayerSpec& l) {
  const std::size_t dirs = l.bidirectional ? 2 : 1;
  if (l.units == 0 || l.units % dirs != 0) {
    throw nn::ShapeError("recurrent width " + std::to_string(l.units) + " does not split evenly across directions");
  }
  return l.units / dirs;
}

std::unique_ptr<nn::Layer> make_layer(const LayerSpec& l, const Shape& in) {
  switch (l.kind) {
    case LayerKind::kFc:
      return std::make_unique<nn::Dense>(in.channels, l.units, l.act);
    case LayerKind::kConv1d: {
      nn::Conv1D::Geometry g;
      g.in_channels = in.channels;
      g.kernels = l.channels;
      g.kernel_len = l.kernel;
      g.stride = l.stride;
      g.padding = l.padding;
      g.dilation = l.dilation;
      return std::make_unique<nn::Conv1D>(g, l.act);
    }
    case LayerKind::kRnn:
    case LayerKind::kLstm:
    case LayerKind::kGru: {
      nn::Recurrent::Config c;
      c.cell = l.kind == LayerKind::kRnn ? nn::CellKind::kRnn
               : l.kind == LayerKind::kLstm ? nn::CellKind::kLstm
                                            : nn::CellKind::kGru;
      c.n_in = in.channels;
      c.units = per_direction(l);
      c.act = l.act;
      c.bidirectional = l.bidirectional;
      c.many_to_one = l.many_to_one;
      return std::make_unique<nn::Recurrent>(c);
    }
    case LayerKind::kDropout:
      return std::make_unique<nn::Dropout>(l.rate);
    case LayerKind::kFlatten:
      return std::make_unique<nn::Flatten>();
    case LayerKind::kFold:
      return std::make_unique<nn::Fold>(l.group);
  }
  throw std::logic_error("unhandled layer kind");
}

void validate_layer(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::kFc:
      if (l.units == 0) throw nn::ShapeError("fc needs units >= 1");
      break;
    case LayerKind::kConv1d:
      if (l.channels == 0 || l.kernel == 0 || l.stride == 0 || l.dilation == 0) {
        throw nn::ShapeError("conv1d needs positive channels, kernel, stride and dilation");
      }
      // The FLOP count takes dilation as dil * L_ker - 1, which only matches the layer at 1.
      if (l.dilation != 1) throw nn::ShapeError("conv1d dilation must be 1 in an architecture spec");
      break;
    case LayerKind::kRnn:
    case LayerKind::kLstm:
    case LayerKind::kGru:
      per_direction(l);
      break;
    case LayerKind::kDropout:
      if (!(l.rate >= 0.0 && l.rate < 1.0)) throw nn::ShapeError("dropout rate must be in [0, 1)");
      break;
    case LayerKind::kFold:
      if (l.group == 0) throw nn::ShapeError("fold group must be positive");
      break;
    case LayerKind::kFlatten:
      break;
  }
}

}  // namespace

std::vector<LayerShape> infer_shapes(const ArchSpec& spec, const Shape& input) {
  std::vector<LayerShape> out;
  Shape cur = input;
  for (std::size_t i = 0; i <= spec.layers.size(); ++i) {
    const bool head = i == spec.layers.size();
    LayerSpec l = head ? fc(spec.head_units, spec.head_act) : spec.layers[i];
    try {
      validate_layer(l);
      const Shape next = make_layer(l, cur)->output_shape(cur);
      out.push_back({cur, next});
      cur = next;
    } catch (const nn::ShapeError& e) {
      const std::string where = head ? std::string("head") : "layer " + std::to_string(i) + " (" + layer_kind_name(l.kind) + ")";
      throw nn::ShapeError(spec.name + ": " + where + ": " + e.what());
    }
  }
  return out;
}

nn::Model build(const ArchSpec& spec, const Shape& input, std::uint64_t seed) {
  const auto shapes = infer_shapes(spec, input);
  nn::Model model;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) model.add(make_layer(spec.layers[i], shapes[i].in));
  model.add(make_layer(fc(spec.head_units, spec.head_act), shapes.back().in));
  model.init(seed);
  return model;
}

ArchSpec with_recurrent_units(const ArchSpec& spec, std::size_t units) {
  ArchSpec out = spec;
  for (auto it = out.layers.rbegin(); it != out.layers.rend(); ++it) {
    if (is_recurrent(it->kind)) {
      it->units = units;
      return out;
    }
  }
  throw std::invalid_argument(spec.name + " has no recurrent layer to rescale");
}

// ---------------------------------------------------------------- text format

namespace {

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool recurrent_has_act(LayerKind k) { return k == LayerKind::kRnn; }

[[noreturn]] void parse_fail(std::size_t line, const std::string& msg) {
  throw std::invalid_argument("arch line " + std::to_string(line) + ": " + msg);
}

std::size_t parse_count(const std::string& v, std::size_t line) {
  std::size_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) parse_fail(line, "expected a non-negative integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& v, std::size_t line) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) parse_fail(line, "expected a number, got '" + v + "'");
  return out;
}

std::map<std::string, std::string> parse_pairs(std::istringstream& ss, std::size_t line) {
  std::map<std::string, std::string> kv;
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) parse_fail(line, "expected key=value, got '" + tok + "'");
    if (!kv.emplace(tok.substr(0, eq), tok.substr(eq + 1)).second) parse_fail(line, "duplicate key '" + tok.substr(0, eq) + "'");
  }
  return kv;
}

}  // namespace

void write_arch(std::ostream& os, const ArchSpec& spec) {
  os << "name " << spec.name << "\n";
  os << "rx_mode " << spec.rx_mode << "\n";
  os << "memory " << spec.memory << "\n";
  for (const auto& l : spec.layers) {
    os << "layer " << layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::kFc:
        os << " units=" << l.units << " act=" << nn::activation_name(l.act);
        break;
      case LayerKind::kConv1d:
        os << " channels=" << l.channels << " kernel=" << l.kernel << " stride=" << l.stride << " padding=" << l.padding
           << " dilation=" << l.dilation << " act=" << nn::activation_name(l.act);
        break;
      case LayerKind::kRnn:
      case LayerKind::kLstm:
      case LayerKind::kGru:
        os << " units=" << l.units;
        if (recurrent_has_act(l.kind)) os << " act=" << nn::activation_name(l.act);
        os << " direction=" << (l.bidirectional ? "bi" : "uni") << " output=" << (l.many_to_one ? "last" : "sequence");
        break;
      case LayerKind::kDropout:
        os << " rate=" << fmt_double(l.rate);
        break;
      case LayerKind::kFlatten:
        break;
      case LayerKind::kFold:
        os << " group=" << l.group;
        break;
    }
    os << "\n";
  }
  os << "head fc units=" << spec.head_units << " act=" << nn::activation_name(spec.head_act) << "\n";
}

std::string arch_to_string(const ArchSpec& spec) {
  std::ostringstream os;
  write_arch(os, spec);
  return os.str();
}

ArchSpec read_arch(std::istream& is) {
  ArchSpec spec;
  spec.name.clear();
  bool have_name = false, have_mode = false, have_memory = false, have_head = false;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ss(raw);
    std::string key;
    if (!(ss >> key)) continue;
    if (have_head) parse_fail(line_no, "nothing may follow the head");
    if (key == "name") {
      if (!(ss >> spec.name)) parse_fail(line_no, "missing name");
      have_name = true;
    } else if (key == "rx_mode" || key == "memory") {
      std::string v;
      if (!(ss >> v)) parse_fail(line_no, "missing value for " + key);
      const auto n = static_cast<int>(parse_count(v, line_no));
      if (key == "rx_mode") {
        if (n != 1 && n != 2) parse_fail(line_no, "rx_mode must be 1 or 2");
        spec.rx_mode = n;
        have_mode = true;
      } else {
        if (n <= 0) parse_fail(line_no, "memory must be positive");
        spec.memory = n;
        have_memory = true;
      }
    } else if (key == "layer" || key == "head") {
      std::string kind_s;
      if (!(ss >> kind_s)) parse_fail(line_no, "missing layer kind");
      LayerSpec l;
      try {
        l.kind = parse_layer_kind(kind_s);
      } catch (const std::invalid_argument& e) {
        parse_fail(line_no, e.what());
      }
      if (key == "head" && l.kind != LayerKind::kFc) parse_fail(line_no, "head must be fc");
      auto kv = parse_pairs(ss, line_no);
      auto take = [&](const std::string& k) -> std::string {
        const auto it = kv.find(k);
        if (it == kv.end()) parse_fail(line_no, "missing key '" + k + "' for " + kind_s);
        std::string v = it->second;
        kv.erase(it);
        return v;
      };
      auto take_or = [&](const std::string& k, const std::string& fallback) {
        return kv.count(k) ? take(k) : fallback;
      };
      auto act = [&](const std::string& v) {
        try {
          return nn::parse_activation(v);
        } catch (const std::invalid_argument& e) {
          parse_fail(line_no, e.what());
        }
      };
      switch (l.kind) {
        case LayerKind::kFc:
          l.units = parse_count(take("units"), line_no);
          l.act = act(take("act"));
          break;
        case LayerKind::kConv1d:
          l.channels = parse_count(take("channels"), line_no);
          l.kernel = parse_count(take("kernel"), line_no);
          l.stride = parse_count(take_or("stride", "1"), line_no);
          l.padding = parse_count(take_or("padding", "0"), line_no);
          l.dilation = parse_count(take_or("dilation", "1"), line_no);
          l.act = act(take("act"));
          break;
        case LayerKind::kRnn:
        case LayerKind::kLstm:
        case LayerKind::kGru: {
          l.units = parse_count(take("units"), line_no);
          l.act = recurrent_has_act(l.kind) ? act(take_or("act", "tanh")) : Activation::kTanh;
          const std::string dir = take("direction");
          if (dir != "uni" && dir != "bi") parse_fail(line_no, "direction must be uni or bi");
          l.bidirectional = dir == "bi";
          const std::string out = take("output");
          if (out != "last" && out != "sequence") parse_fail(line_no, "output must be last or sequence");
          l.many_to_one = out == "last";
          break;
        }
        case LayerKind::kDropout:
          l.rate = parse_real(take("rate"), line_no);
          break;
        case LayerKind::kFlatten:
          break;
        case LayerKind::kFold:
          l.group = parse_count(take("group"), line_no);
          break;
      }
      if (!kv.empty()) parse_fail(line_no, "unknown key '" + kv.begin()->first + "' for " + kind_s);
      try {
        validate_layer(l);
      } catch (const nn::ShapeError& e) {
        parse_fail(line_no, e.what());
      }
      if (key == "head") {
        spec.head_units = l.units;
        spec.head_act = l.act;
        have_head = true;
      } else {
        spec.layers.push_back(l);
      }
    } else {
      parse_fail(line_no, "unknown key '" + key + "'");
    }
    std::string extra;
    if (key != "layer" && key != "head" && (ss >> extra)) parse_fail(line_no, "trailing token '" + extra + "'");
  }
  if (!have_name || !have_mode || !have_memory) throw std::invalid_argument("arch: name, rx_mode and memory are required");
  if (!have_head) throw std::invalid_argument("arch: exactly one head line is required");
  return spec;
}

ArchSpec arch_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_arch(is);
}

ArchSpec load_arch(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open arch file " + path);
  return read_arch(is);
}

}  // namespace fiberlab
