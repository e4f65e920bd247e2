#include "fiberlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "fiberlab/dataset_io.hpp"

namespace fiberlab {

namespace fs = std::filesystem;

EqualizerSpec parse_equalizer(const std::string& s) {
  EqualizerSpec e;
  e.label = s;
  if (s == "linear") return e;
  if (s.rfind("dbp:", 0) == 0) {
    e.kind = EqualizerSpec::Kind::kDbp;
    const std::string n = s.substr(4);
    if (n.empty() || n.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("bad equalizer '" + s + "' (expected dbp:<steps>)");
    }
    e.dbp_steps = std::stoi(n);
    if (e.dbp_steps < 1) throw std::invalid_argument("dbp needs at least one step per span");
    return e;
  }
  if (s.rfind("nn:", 0) == 0 && s.size() > 3) {
    e.kind = EqualizerSpec::Kind::kNn;
    e.arch = s.substr(3);
    return e;
  }
  throw std::invalid_argument("unknown equalizer '" + s + "'");
}

namespace {

template <typename F>
auto staged(const std::string& tag, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(tag, e.what());
  }
}

std::uint64_t seed_for(const ExperimentConfig& cfg, Purpose p) {
  return derive_seed(cfg.seed, static_cast<std::uint64_t>(p));
}

std::string file_token(std::string s) {
  for (char& c : s) {
    if (c == ':' || c == '/' || c == '\\' || c == ' ') c = '_';
  }
  return s;
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

void note(std::ostream* os, const std::string& line) {
  if (os) *os << line << '\n' << std::flush;
}

std::string seconds_str(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", s);
  return buf;
}

}  // namespace

PmdRealization experiment_pmd(const ExperimentConfig& cfg) {
  return draw_pmd(cfg.system, seed_for(cfg, Purpose::kPmd));
}

std::size_t payload_symbols(const ExperimentConfig& cfg, FrameRole role) {
  if (role == FrameRole::kTrain) return cfg.n_train_symbols;
  // 8 bits per dual-polarization 16-QAM symbol
  return (cfg.n_test_bits + 7) / 8;
}

ProcessedLink process_link(const ExperimentConfig& cfg, const PmdRealization& pmd, double power_dbm, FrameRole role) {
  const bool train = role == FrameRole::kTrain;
  const std::uint64_t frame_seed = seed_for(cfg, train ? Purpose::kTrainFrame : Purpose::kTestFrame);
  const std::uint64_t ase_seed = seed_for(cfg, train ? Purpose::kTrainAse : Purpose::kTestAse);
  LinkFrame frame = make_frame(cfg.system, cfg.dsp, payload_symbols(cfg, role), frame_seed, power_dbm);
  DualPolWaveform received = propagate(frame.tx, cfg.system, pmd, ase_seed);
  DualPolWaveform front = rx_front_end(received, frame, cfg.system, 0);
  SymbolStreams linear = linear_chain(front, frame, cfg.system, cfg.dsp);
  return ProcessedLink{std::move(frame), std::move(received), std::move(front), std::move(linear)};
}

SymbolStreams dbp_chain(const ExperimentConfig& cfg, const ProcessedLink& link, int steps) {
  const DualPolWaveform front = rx_front_end(link.received, link.frame, cfg.system, steps);
  return linear_chain(front, link.frame, cfg.system, cfg.dsp);
}

ArchSpec resolve_arch(const ExperimentConfig& cfg, const std::string& name_or_path) {
  const auto& names = model_names();
  ArchSpec a;
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    a = catalog(name_or_path, cfg.rx_mode);
  } else if (fs::exists(name_or_path)) {
    a = load_arch(name_or_path);
    if (a.rx_mode != cfg.rx_mode) {
      throw std::invalid_argument(name_or_path + ": arch is for rx_mode " + std::to_string(a.rx_mode) +
                                  ", config uses " + std::to_string(cfg.rx_mode));
    }
  } else {
    throw UnknownModel("unknown model '" + name_or_path + "' (not in the catalog and no such file)");
  }
  if (cfg.memory > 0) a.memory = cfg.memory;
  if (const auto it = cfg.recurrent_units.find(a.name); it != cfg.recurrent_units.end()) {
    a = with_recurrent_units(a, it->second);
  }
  infer_shapes(a, window_shape(a.memory, rx_input_sps(a.rx_mode)));
  return a;
}

WindowedDataset nn_windows(const ExperimentConfig& cfg, const ArchSpec& arch, const ProcessedLink& link,
                           std::size_t first, std::size_t last) {
  const auto& sy = link.frame.symbols;
  if (cfg.rx_mode == 1) return extract_windows(link.linear, sy.syms_x, sy.syms_y, arch.memory, 1, first, last);
  if (cfg.system.sps_rx != 2) throw std::invalid_argument("receiver mode 2 expects a 2 SpS front end");
  return extract_windows(normalized_samples(link.front), sy.syms_x, sy.syms_y, arch.memory, 2, first, last);
}

WindowedDataset training_windows(const ExperimentConfig& cfg, const ArchSpec& arch, const ProcessedLink& link) {
  const auto& f = link.frame;
  WindowedDataset d = nn_windows(cfg, arch, link, f.payload_begin, f.payload_end);
  if (d.size() != f.payload_end - f.payload_begin) {
    throw std::invalid_argument("edge_symbols too small for memory " + std::to_string(arch.memory));
  }
  return d;
}

nn::TrainResult train_equalizer(const ExperimentConfig& cfg, const ArchSpec& arch, const WindowedDataset& data,
                                const nn::Model* warm_start,
                                const std::function<void(const nn::EpochRecord&)>& on_epoch) {
  const nn::Shape input = window_shape(arch.memory, rx_input_sps(arch.rx_mode));
  if (input.length != data.rows()) throw std::invalid_argument("dataset window does not match the architecture");
  nn::Model model = warm_start ? *warm_start : build(arch, input, seed_for(cfg, Purpose::kNnInit));
  nn::TrainSchedule schedule = cfg.training.schedule;
  schedule.seed = seed_for(cfg, Purpose::kShuffle);
  model.seed_dropout(schedule.seed);
  return nn::train(std::move(model), data, schedule, on_epoch);
}

SymbolStreams nn_equalize(const ExperimentConfig& cfg, nn::Model& model, const ArchSpec& arch,
                          const ProcessedLink& link) {
  const auto& f = link.frame;
  const WindowedDataset d = nn_windows(cfg, arch, link, f.pilot_begin, f.payload_end);
  if (d.size() != f.payload_end - f.pilot_begin) {
    throw std::invalid_argument("edge_symbols too small for memory " + std::to_string(arch.memory));
  }
  const std::vector<double> pred = nn::predict(model, d);
  SymbolStreams out;
  if (cfg.rx_mode == 1) {
    out = link.linear;
  } else {
    out.x.assign(f.n_symbols, cplx(0.0, 0.0));
    out.y.assign(f.n_symbols, cplx(0.0, 0.0));
  }
  for (std::size_t k = 0; k < d.size(); ++k) {
    const std::size_t i = d.symbol_index[k];
    out.x[i] = cplx(pred[4 * k], pred[4 * k + 1]);
    out.y[i] = cplx(pred[4 * k + 2], pred[4 * k + 3]);
  }
  if (cfg.rx_mode == 2) out = carrier_recovery(out, f, cfg.dsp);
  return out;
}

BitErrors score(const ProcessedLink& link, const SymbolStreams& equalized) {
  return count_bit_errors(payload_reference_bits(link.frame), payload_bits(equalized, link.frame));
}

std::string DatasetCache::path_for(std::uint64_t key) const {
  char name[40];
  std::snprintf(name, sizeof name, "windows_%016llx.bin", static_cast<unsigned long long>(key));
  return (fs::path(dir_) / name).string();
}

WindowedDataset DatasetCache::get(std::uint64_t key, const std::function<WindowedDataset()>& build) {
  if (dir_.empty()) return build();
  const std::string path = path_for(key);
  const std::string file = fs::path(path).filename().string();
  if (fs::exists(path)) {
    ++hits_;
    note(log_, "cache hit " + file);
    return load_cache(path, key);
  }
  ++misses_;
  note(log_, "cache miss " + file);
  WindowedDataset d = build();
  fs::create_directories(dir_);
  save_dataset(path, d, key);
  return d;
}

WindowedDataset load_cache(const std::string& path, std::uint64_t key) { return load_dataset(path, key); }

namespace {

struct Outputs {
  std::ofstream results;
  std::ofstream history;
  std::ofstream stages;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void write_complexity(const fs::path& p, const std::vector<std::pair<std::string, ModelCost>>& costs) {
  std::ofstream os = open_out(p);
  os << "equalizer,layer,kind,params,flops,time_steps\n";
  for (const auto& [label, cost] : costs) {
    std::ostringstream body;
    write_cost_csv(body, cost);
    std::istringstream lines(body.str());
    std::string line;
    std::getline(lines, line);  // per-model header
    while (std::getline(lines, line)) os << label << ',' << line << '\n';
  }
}

void incomplete_row(std::ostream& os, const ExperimentConfig& cfg, double power, const std::string& stage) {
  os << format_double(power) << ",incomplete," << cfg.rx_mode << ",n/a,n/a,0,0,0,0," << cfg.seed << ",0\n";
  os << "# incomplete at " << stage << '\n' << std::flush;
}

struct NnSlot {
  ArchSpec arch;
  ModelCost cost;
  std::optional<nn::Model> previous;
};

}  // namespace

RunReport run(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  {
    std::ofstream cj = open_out(out / "config.json");
    cj << config_to_json(cfg);
  }
  Outputs o{open_out(out / "results.csv"), open_out(out / "training_history.csv"), open_out(out / "stages.log")};
  write_result_header(o.results);
  o.history << "equalizer,launch_power_dbm,epoch,train_mse,val_mse\n";
  o.results.flush();

  const std::string cache_dir = opts.use_cache ? opts.cache_dir.value_or((out / "cache").string()) : std::string();
  DatasetCache cache(cache_dir, &o.stages);
  const Clock clock;
  auto progress = [&](const std::string& s) { note(opts.progress, "[" + seconds_str(clock.seconds()) + "] " + s); };

  RunReport report;
  std::vector<EqualizerSpec> eqs;
  std::map<std::size_t, NnSlot> nn_slots;
  CostModel cost_model;
  cost_model.eta = cfg.eta;
  staged("setup", [&] {
    for (std::size_t k = 0; k < cfg.equalizers.size(); ++k) {
      eqs.push_back(parse_equalizer(cfg.equalizers[k]));
      if (eqs.back().kind != EqualizerSpec::Kind::kNn) continue;
      NnSlot slot;
      slot.arch = resolve_arch(cfg, eqs.back().arch);
      slot.cost = model_cost(slot.arch, cost_model);
      report.costs.emplace_back(eqs.back().label, slot.cost);
      nn_slots.emplace(k, std::move(slot));
    }
  });
  write_complexity(out / "complexity.csv", report.costs);

  const PmdRealization pmd = staged("pmd", [&] { return experiment_pmd(cfg); });
  pmd.save((out / "pmd.txt").string());

  for (double power : cfg.powers_dbm) {
    const std::string ptag = "p=" + format_double(power);
    std::string stage = ptag;
    try {
      stage = ptag + " test-link";
      note(&o.stages, ptag + ": propagate test frame");
      progress(ptag + ": propagate test frame");
      const ProcessedLink test = staged(stage, [&] { return process_link(cfg, pmd, power, FrameRole::kTest); });
      std::optional<ProcessedLink> train_link;

      for (std::size_t k = 0; k < eqs.size(); ++k) {
        const EqualizerSpec& eq = eqs[k];
        stage = ptag + " " + eq.label;
        note(&o.stages, ptag + ": " + eq.label);
        progress(ptag + ": " + eq.label);
        ResultRow row;
        SymbolStreams equalized = staged(stage, [&]() -> SymbolStreams {
          switch (eq.kind) {
            case EqualizerSpec::Kind::kLinear:
              return test.linear;
            case EqualizerSpec::Kind::kDbp:
              return dbp_chain(cfg, test, eq.dbp_steps);
            case EqualizerSpec::Kind::kNn: {
              NnSlot& slot = nn_slots.at(k);
              const int sps = rx_input_sps(cfg.rx_mode);
              const std::uint64_t key = dataset_key(cfg, power, "train", slot.arch.memory, sps);
              const WindowedDataset data = cache.get(key, [&] {
                if (!train_link) {
                  note(&o.stages, ptag + ": propagate training frame");
                  progress(ptag + ": propagate training frame");
                  train_link = process_link(cfg, pmd, power, FrameRole::kTrain);
                }
                return training_windows(cfg, slot.arch, *train_link);
              });
              const nn::Model* warm = cfg.training.transfer && slot.previous ? &*slot.previous : nullptr;
              nn::TrainResult tr = train_equalizer(cfg, slot.arch, data, warm, [&](const nn::EpochRecord& r) {
                o.history << eq.label << ',' << format_double(power) << ',' << r.epoch << ','
                          << format_double(r.train_mse) << ',' << format_double(r.val_mse) << '\n';
                progress(ptag + ": " + eq.label + " epoch " + std::to_string(r.epoch) + " train " +
                         format_double(r.train_mse) + " val " + format_double(r.val_mse));
              });
              o.history.flush();
              note(&o.stages, ptag + ": " + eq.label + " best epoch " + std::to_string(tr.best_epoch));
              SymbolStreams s = nn_equalize(cfg, tr.model, slot.arch, test);
              slot.previous = std::move(tr.model);
              return s;
            }
          }
          throw std::logic_error("unhandled equalizer kind");
        });
        row = make_result(power, eq.label, cfg.rx_mode, score(test, equalized), cfg.seed);
        if (eq.kind == EqualizerSpec::Kind::kNn) {
          row.flops_per_symbol = nn_slots.at(k).cost.flops;
          row.params = nn_slots.at(k).cost.params;
        }
        write_result_row(o.results, row);
        o.results.flush();
        progress(ptag + ": " + eq.label + " ber " + format_double(row.ber) +
                 (row.q_factor_db ? " q " + format_double(*row.q_factor_db) : std::string(" q n/a")));
        report.rows.push_back(row);

        if (opts.constellations) {
          const auto& f = test.frame;
          const std::size_t n = std::min(opts.constellation_symbols, f.payload_end - f.payload_begin);
          const CVec pts(equalized.x.begin() + static_cast<std::ptrdiff_t>(f.payload_begin),
                         equalized.x.begin() + static_cast<std::ptrdiff_t>(f.payload_begin + n));
          constellation_dump(pts, (out / ("constellation_" + file_token(eq.label) + "_" + format_double(power) +
                                          ".csv")).string());
        }
      }
    } catch (const std::exception& e) {
      incomplete_row(o.results, cfg, power, stage);
      note(&o.stages, "error: " + std::string(e.what()));
      if (dynamic_cast<const StageError*>(&e)) throw;
      throw StageError(stage, e.what());
    }
  }
  report.cache_hits = cache.hits();
  return report;
}

double gain_trend(const std::vector<UnitsRow>& rows) {
  // Rank the widths, then pool every (rank, gain) pair into one regression.
  std::vector<std::size_t> widths;
  for (const auto& r : rows) widths.push_back(r.units);
  std::sort(widths.begin(), widths.end());
  widths.erase(std::unique(widths.begin(), widths.end()), widths.end());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (!r.q_gain_db) continue;
    const double x = static_cast<double>(std::lower_bound(widths.begin(), widths.end(), r.units) - widths.begin());
    sx += x;
    sy += *r.q_gain_db;
    sxx += x * x;
    sxy += x * *r.q_gain_db;
    ++n;
  }
  if (n < 2) return 0.0;
  const double den = static_cast<double>(n) * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (static_cast<double>(n) * sxy - sx * sy) / den;
}

std::vector<UnitsRow> sweep_units(const ExperimentConfig& cfg, const std::string& arch_name,
                                  const std::vector<std::size_t>& grid, const RunOptions& opts) {
  cfg.validate();
  if (grid.empty()) throw std::invalid_argument("sweep-units needs at least one width");
  const fs::path out(cfg.output_dir);
  fs::create_directories(out);
  std::ofstream csv = open_out(out / "units_sweep.csv");
  std::ofstream stages = open_out(out / "units_sweep.log");
  csv << "launch_power_dbm,units,q_nn_db,q_linear_db,q_gain_db\n";
  const std::string cache_dir = opts.use_cache ? opts.cache_dir.value_or((out / "cache").string()) : std::string();
  DatasetCache cache(cache_dir, &stages);
  const Clock clock;
  auto progress = [&](const std::string& s) { note(opts.progress, "[" + seconds_str(clock.seconds()) + "] " + s); };
  auto opt_str = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("n/a"); };

  // Fails early when the architecture has nothing to rescale.
  staged("setup", [&] { with_recurrent_units(resolve_arch(cfg, arch_name), grid.front()); });
  const PmdRealization pmd = staged("pmd", [&] { return experiment_pmd(cfg); });

  std::vector<UnitsRow> rows;
  for (double power : cfg.powers_dbm) {
    const std::string ptag = "p=" + format_double(power);
    progress(ptag + ": propagate test frame");
    const ProcessedLink test = staged(ptag + " test-link", [&] { return process_link(cfg, pmd, power, FrameRole::kTest); });
    const BitErrors lin = score(test, test.linear);
    std::optional<double> q_lin;
    if (lin.rate() > 0.0 && lin.rate() < 0.5) q_lin = q_factor_db(lin.rate());
    std::optional<ProcessedLink> train_link;
    for (std::size_t units : grid) {
      const std::string tag = ptag + " units=" + std::to_string(units);
      progress(tag);
      note(&stages, tag);
      UnitsRow row = staged(tag, [&] {
        const ArchSpec arch = with_recurrent_units(resolve_arch(cfg, arch_name), units);
        const std::uint64_t key = dataset_key(cfg, power, "train", arch.memory, rx_input_sps(cfg.rx_mode));
        const WindowedDataset data = cache.get(key, [&] {
          if (!train_link) train_link = process_link(cfg, pmd, power, FrameRole::kTrain);
          return training_windows(cfg, arch, *train_link);
        });
        nn::TrainResult tr = train_equalizer(cfg, arch, data);
        const BitErrors e = score(test, nn_equalize(cfg, tr.model, arch, test));
        UnitsRow r;
        r.launch_power_dbm = power;
        r.units = units;
        if (e.rate() > 0.0 && e.rate() < 0.5) r.q_nn_db = q_factor_db(e.rate());
        r.q_linear_db = q_lin;
        if (r.q_nn_db && q_lin) r.q_gain_db = *r.q_nn_db - *q_lin;
        return r;
      });
      csv << format_double(power) << ',' << units << ',' << opt_str(row.q_nn_db) << ',' << opt_str(row.q_linear_db)
          << ',' << opt_str(row.q_gain_db) << '\n'
          << std::flush;
      rows.push_back(row);
    }
  }
  if (grid.size() > 1 && gain_trend(rows) < 0.0) {
    const std::string w = "warning: Q gain falls with the number of units on average";
    note(&stages, w);
    note(opts.progress, w);
  }
  return rows;
}

}  // namespace fiberlab
