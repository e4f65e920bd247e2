#include "fiberlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fiberlab {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void ExperimentConfig::validate() const {
  system.validate();
  if (rx_mode != 1 && rx_mode != 2) throw std::invalid_argument("config: rx_mode must be 1 or 2");
  if (powers_dbm.empty()) throw std::invalid_argument("config: powers_dbm must not be empty");
  if (equalizers.empty()) throw std::invalid_argument("config: equalizers must not be empty");
  for (const auto& e : equalizers) {
    if (e == "linear") continue;
    if (e.rfind("dbp:", 0) == 0) {
      const std::string steps = e.substr(4);
      if (steps.empty() || steps.find_first_not_of("0123456789") != std::string::npos || std::stoi(steps) < 1) {
        throw std::invalid_argument("config: bad equalizer '" + e + "' (expected dbp:<steps>)");
      }
      continue;
    }
    if (e.rfind("nn:", 0) == 0 && e.size() > 3) continue;
    throw std::invalid_argument("config: unknown equalizer '" + e + "'");
  }
  if (n_train_symbols == 0) throw std::invalid_argument("config: n_train_symbols must be positive");
  if (n_test_bits < 8) throw std::invalid_argument("config: n_test_bits must be at least 8");
  if (memory < 0) throw std::invalid_argument("config: memory must be >= 0");
  if (system.sps_rx != 2) throw std::invalid_argument("config: the receiver chain runs at sps_rx = 2");
  if (dsp.pilot_symbols > 0 && dsp.pilot_symbols < 16) throw std::invalid_argument("config: use >= 16 pilot symbols or none");
  if (dsp.rde_taps % 2 == 0) throw std::invalid_argument("config: rde_taps must be odd");
  if (training.schedule.batch == 0) throw std::invalid_argument("config: training batch must be positive");
}

ExperimentConfig profile_config(const std::string& profile) {
  ExperimentConfig c;
  c.profile = profile;
  SystemParams& s = c.system;
  s.alpha = alpha_from_db_per_km(0.2);
  s.beta2 = beta2_from_dispersion(17.0);
  s.gamma = 1.4e-3;
  s.pmd_coef = pmd_from_ps_sqrt_km(0.05);
  s.span_length = 80e3;
  s.linewidth = 100e3;
  s.rolloff = 0.25;
  s.sps_rx = 2;
  if (profile == "desk") {
    s.n_spans = 4;
    s.symbol_rate = 32e9;
    s.sps_forward = 4;
    s.steps_per_span = 40;
    // Raised from 5 dB so the short link has a measurable BER near its optimum.
    s.noise_figure_db = 20.0;
    c.equalizers = {"linear", "dbp:2", "dbp:80", "nn:crnn"};
    c.powers_dbm = {0.5, 2.0, 3.5, 5.0, 6.5, 8.0, 9.5};
    c.n_train_symbols = 262144;
    c.n_test_bits = 262144;
    // Narrower window and recurrent layer than the catalog so training fits
    // in about an hour on one core.
    c.memory = 35;
    c.recurrent_units = {{"crnn", 96}};
    c.training.schedule.epochs = 30;
    c.training.schedule.batch = 64;
    c.training.schedule.adam.lr = 1e-3;
    c.output_dir = "out/desk";
  } else if (profile == "paper") {
    s.n_spans = 14;
    s.symbol_rate = 64e9;
    s.sps_forward = 8;
    s.steps_per_span = 80;
    s.noise_figure_db = 5.0;
    c.equalizers = {"linear", "dbp:2", "dbp:80", "nn:mlp", "nn:cnn_mlp", "nn:bi_rnn", "nn:bi_gru",
                    "nn:bi_lstm", "nn:cnn_bi_lstm", "nn:crnn"};
    c.powers_dbm = {-2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    c.n_train_symbols = 262144;
    c.n_test_bits = 16777216;
    c.training.schedule.epochs = 100;
    c.dsp.edge_symbols = 256;
    c.output_dir = "out/paper";
  } else {
    throw std::invalid_argument("unknown profile '" + profile + "' (expected desk or paper)");
  }
  return c;
}

namespace {

class Obj {
 public:
  Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw std::invalid_argument("config: " + where_ + " must be an object");
  }
  ~Obj() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      (void)v;
      if (!seen_.count(k)) throw std::invalid_argument("config: unknown key '" + k + "' in " + where_);
    }
  }
  const json* get(const std::string& k) {
    seen_.insert(k);
    const auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }
  template <typename T>
  void read(const std::string& k, T& out) {
    if (const json* v = get(k)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        throw std::invalid_argument("config: wrong type for '" + k + "' in " + where_);
      }
    }
  }
  void read_scaled(const std::string& k, double& out, double scale) {
    if (!get(k)) return;
    double v = 0.0;
    read(k, v);
    out = v * scale;
  }
  std::string where(const std::string& k) const { return where_ + "." + k; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_system(const json& j, SystemParams& s) {
  Obj o(j, "system");
  // Only keys present in the file touch the field, so absent keys keep exact profile values.
  double v = 0.0;
  if (o.get("center_wavelength_nm")) {
    o.read("center_wavelength_nm", v);
    s.center_wavelength = v * 1e-9;
  }
  if (o.get("fiber_loss_db_per_km")) {
    o.read("fiber_loss_db_per_km", v);
    s.alpha = alpha_from_db_per_km(v);
  }
  if (o.get("dispersion_ps_nm_km")) {
    o.read("dispersion_ps_nm_km", v);
    s.beta2 = beta2_from_dispersion(v, s.center_wavelength);
  }
  if (o.get("pmd_ps_sqrt_km")) {
    o.read("pmd_ps_sqrt_km", v);
    s.pmd_coef = pmd_from_ps_sqrt_km(v);
  }
  o.read_scaled("gamma_per_w_km", s.gamma, 1e-3);
  o.read_scaled("span_length_km", s.span_length, 1e3);
  o.read("n_spans", s.n_spans);
  o.read_scaled("symbol_rate_gbd", s.symbol_rate, 1e9);
  o.read("sps_forward", s.sps_forward);
  o.read("sps_rx", s.sps_rx);
  o.read("steps_per_span", s.steps_per_span);
  o.read_scaled("linewidth_khz", s.linewidth, 1e3);
  o.read("noise_figure_db", s.noise_figure_db);
  o.read("rolloff", s.rolloff);
  o.read("ase", s.ase_enabled);
  o.read("pmd", s.pmd_enabled);
}

void read_training(const json& j, TrainingConfig& t) {
  Obj o(j, "training");
  o.read("epochs", t.schedule.epochs);
  o.read("batch", t.schedule.batch);
  o.read("lr", t.schedule.adam.lr);
  o.read("beta1", t.schedule.adam.beta1);
  o.read("beta2", t.schedule.adam.beta2);
  o.read("epsilon", t.schedule.adam.eps);
  o.read("validation_fraction", t.schedule.validation_fraction);
  o.read("transfer", t.transfer);
}

void read_dsp(const json& j, DspOptions& d) {
  Obj o(j, "dsp");
  o.read("rrc_span", d.rrc_span);
  o.read("rde_taps", d.rde_taps);
  o.read("rde_mu", d.rde_mu);
  o.read("cma_symbols", d.cma_symbols);
  o.read("cpe_test_angles", d.cpe_angles);
  o.read("cpe_window", d.cpe_window);
  o.read("pilot_symbols", d.pilot_symbols);
  o.read("edge_symbols", d.edge_symbols);
  o.read("max_lag", d.max_lag);
}

// Unit conversions are inexact; 12 digits keeps the printed values clean and
// makes dump(parse(dump(c))) a fixed point.
double tidy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

ordered_json system_json(const SystemParams& s) {
  ordered_json j;
  j["fiber_loss_db_per_km"] = tidy(s.alpha * 10.0 * std::log10(std::exp(1.0)) * 1e3);
  j["dispersion_ps_nm_km"] =
      tidy(-s.beta2 * 2.0 * kPi * kSpeedOfLight / (s.center_wavelength * s.center_wavelength) * 1e6);
  j["gamma_per_w_km"] = tidy(s.gamma * 1e3);
  j["pmd_ps_sqrt_km"] = tidy(s.pmd_coef / pmd_from_ps_sqrt_km(1.0));
  j["span_length_km"] = tidy(s.span_length / 1e3);
  j["n_spans"] = s.n_spans;
  j["symbol_rate_gbd"] = tidy(s.symbol_rate / 1e9);
  j["sps_forward"] = s.sps_forward;
  j["sps_rx"] = s.sps_rx;
  j["steps_per_span"] = s.steps_per_span;
  j["linewidth_khz"] = tidy(s.linewidth / 1e3);
  j["noise_figure_db"] = s.noise_figure_db;
  j["rolloff"] = s.rolloff;
  j["center_wavelength_nm"] = tidy(s.center_wavelength * 1e9);
  j["ase"] = s.ase_enabled;
  j["pmd"] = s.pmd_enabled;
  return j;
}

ordered_json dsp_json(const DspOptions& d) {
  ordered_json j;
  j["rrc_span"] = d.rrc_span;
  j["rde_taps"] = d.rde_taps;
  j["rde_mu"] = d.rde_mu;
  j["cma_symbols"] = d.cma_symbols;
  j["cpe_test_angles"] = d.cpe_angles;
  j["cpe_window"] = d.cpe_window;
  j["pilot_symbols"] = d.pilot_symbols;
  j["edge_symbols"] = d.edge_symbols;
  j["max_lag"] = d.max_lag;
  return j;
}

// Exact SI values for hashing, independent of the unit conversions above.
ordered_json system_exact(const SystemParams& s) {
  ordered_json j;
  j["alpha"] = s.alpha;
  j["beta2"] = s.beta2;
  j["gamma"] = s.gamma;
  j["pmd_coef"] = s.pmd_coef;
  j["span_length"] = s.span_length;
  j["n_spans"] = s.n_spans;
  j["symbol_rate"] = s.symbol_rate;
  j["sps_forward"] = s.sps_forward;
  j["sps_rx"] = s.sps_rx;
  j["steps_per_span"] = s.steps_per_span;
  j["linewidth"] = s.linewidth;
  j["noise_figure_db"] = s.noise_figure_db;
  j["rolloff"] = s.rolloff;
  j["center_wavelength"] = s.center_wavelength;
  j["ase"] = s.ase_enabled;
  j["pmd"] = s.pmd_enabled;
  return j;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::string& default_profile) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  ExperimentConfig c;
  {
    Obj o(j, "config");
    std::string profile = default_profile;
    o.read("profile", profile);
    c = profile_config(profile);
    if (const json* s = o.get("system")) read_system(*s, c.system);
    o.read("rx_mode", c.rx_mode);
    o.read("equalizers", c.equalizers);
    o.read("powers_dbm", c.powers_dbm);
    o.read("n_train_symbols", c.n_train_symbols);
    o.read("n_test_bits", c.n_test_bits);
    o.read("memory", c.memory);
    if (const json* u = o.get("recurrent_units")) {
      if (!u->is_object()) throw std::invalid_argument("config: recurrent_units must be an object");
      c.recurrent_units.clear();
      for (const auto& [k, v] : u->items()) {
        if (!v.is_number_unsigned()) throw std::invalid_argument("config: recurrent_units." + k + " must be a positive integer");
        c.recurrent_units[k] = v.get<std::size_t>();
      }
    }
    if (const json* t = o.get("training")) read_training(*t, c.training);
    if (const json* d = o.get("dsp")) read_dsp(*d, c.dsp);
    o.read("seed", c.seed);
    o.read("eta", c.eta);
    o.read("output_dir", c.output_dir);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& default_profile) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), default_profile);
}

std::string config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["profile"] = c.profile;
  j["system"] = system_json(c.system);
  j["rx_mode"] = c.rx_mode;
  j["equalizers"] = c.equalizers;
  j["powers_dbm"] = c.powers_dbm;
  j["n_train_symbols"] = c.n_train_symbols;
  j["n_test_bits"] = c.n_test_bits;
  j["memory"] = c.memory;
  ordered_json units = ordered_json::object();
  for (const auto& [k, v] : c.recurrent_units) units[k] = v;
  j["recurrent_units"] = units;
  ordered_json t;
  t["epochs"] = c.training.schedule.epochs;
  t["batch"] = c.training.schedule.batch;
  t["lr"] = c.training.schedule.adam.lr;
  t["beta1"] = c.training.schedule.adam.beta1;
  t["beta2"] = c.training.schedule.adam.beta2;
  t["epsilon"] = c.training.schedule.adam.eps;
  t["validation_fraction"] = c.training.schedule.validation_fraction;
  t["transfer"] = c.training.transfer;
  j["training"] = t;
  j["dsp"] = dsp_json(c.dsp);
  j["seed"] = c.seed;
  j["eta"] = c.eta;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t dataset_key(const ExperimentConfig& cfg, double power_dbm, const std::string& role, int memory, int sps) {
  ordered_json j;
  j["format"] = 1;
  j["system"] = system_exact(cfg.system);
  j["rx_mode"] = cfg.rx_mode;
  j["dsp"] = dsp_json(cfg.dsp);
  j["seed"] = cfg.seed;
  j["n_train_symbols"] = cfg.n_train_symbols;
  j["n_test_bits"] = cfg.n_test_bits;
  j["power_dbm"] = power_dbm;
  j["role"] = role;
  j["memory"] = memory;
  j["sps"] = sps;
  return fnv1a64(j.dump());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
  std::uint64_t state = seed ^ (0x9e3779b97f4a7c15ULL * (purpose + 1));
  return splitmix64(state);
}

}  // namespace fiberlab
