#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fiberlab/config.hpp"
#include "fiberlab/flops.hpp"
#include "fiberlab/metrics.hpp"
#include "fiberlab/nn/train.hpp"
#include "fiberlab/pipeline.hpp"
#include "fiberlab/zoo.hpp"

namespace fiberlab {

/// Independent seed purposes; see derive_seed.
enum class Purpose : std::uint64_t {
  kTrainFrame = 1,
  kTestFrame = 2,
  kTrainAse = 3,
  kTestAse = 4,
  kPmd = 5,
  kNnInit = 6,
  kShuffle = 7,
};

enum class FrameRole { kTrain, kTest };

struct EqualizerSpec {
  enum class Kind { kLinear, kDbp, kNn } kind = Kind::kLinear;
  int dbp_steps = 0;
  std::string arch;   // catalog name or arch file path
  std::string label;  // as written in the config
};

EqualizerSpec parse_equalizer(const std::string& s);

/// Error raised inside a pipeline stage; what() starts with the stage tag.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& msg)
      : std::runtime_error(stage + ": " + msg), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// A frame after transmission, the link and the linear receiver.
struct ProcessedLink {
  LinkFrame frame;
  DualPolWaveform received;
  DualPolWaveform front;  // CD compensated, 2 SpS
  SymbolStreams linear;   // output of the full linear chain
};

PmdRealization experiment_pmd(const ExperimentConfig& cfg);

/// Payload symbols of a frame: the training size or enough for n_test_bits.
std::size_t payload_symbols(const ExperimentConfig& cfg, FrameRole role);

ProcessedLink process_link(const ExperimentConfig& cfg, const PmdRealization& pmd, double power_dbm, FrameRole role);

/// DBP front end with `steps` steps per span followed by the linear chain.
SymbolStreams dbp_chain(const ExperimentConfig& cfg, const ProcessedLink& link, int steps);

/// Catalog entry or arch file, with the config's receiver mode, memory and unit overrides applied.
ArchSpec resolve_arch(const ExperimentConfig& cfg, const std::string& name_or_path);

/// Windows over symbols [first, last) in the receiver mode's NN input domain.
WindowedDataset nn_windows(const ExperimentConfig& cfg, const ArchSpec& arch, const ProcessedLink& link,
                           std::size_t first, std::size_t last);

/// Training windows over the payload of a training frame.
WindowedDataset training_windows(const ExperimentConfig& cfg, const ArchSpec& arch, const ProcessedLink& link);

nn::TrainResult train_equalizer(const ExperimentConfig& cfg, const ArchSpec& arch, const WindowedDataset& data,
                                const nn::Model* warm_start = nullptr,
                                const std::function<void(const nn::EpochRecord&)>& on_epoch = {});

/// NN equalization of a test frame from the pilots to the end of the
/// payload; RX-2 outputs then go through carrier recovery.
SymbolStreams nn_equalize(const ExperimentConfig& cfg, nn::Model& model, const ArchSpec& arch,
                          const ProcessedLink& link);

BitErrors score(const ProcessedLink& link, const SymbolStreams& equalized);

/// Windowed datasets stored under their dataset_key.
class DatasetCache {
 public:
  explicit DatasetCache(std::string dir, std::ostream* log = nullptr) : dir_(std::move(dir)), log_(log) {}

  std::string path_for(std::uint64_t key) const;
  /// Loads the keyed file if present, otherwise builds and stores it.
  WindowedDataset get(std::uint64_t key, const std::function<WindowedDataset()>& build);

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::string dir_;
  std::ostream* log_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// Throws StaleCache when the stored key differs from `key`.
WindowedDataset load_cache(const std::string& path, std::uint64_t key);

struct RunOptions {
  /// Defaults to <output_dir>/cache. Empty string after resolution disables caching.
  std::optional<std::string> cache_dir;
  bool use_cache = true;
  bool constellations = true;
  std::size_t constellation_symbols = 4096;
  /// Human progress with timings; the files written are timing-free.
  std::ostream* progress = nullptr;
};

struct RunReport {
  std::vector<ResultRow> rows;
  std::vector<std::pair<std::string, ModelCost>> costs;
  std::size_t cache_hits = 0;
};

/// Full sweep. Writes results.csv, complexity.csv, training_history.csv,
/// stages.log, config.json and constellation_*.csv into cfg.output_dir.
RunReport run(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct UnitsRow {
  double launch_power_dbm = 0.0;
  std::size_t units = 0;
  std::optional<double> q_nn_db;
  std::optional<double> q_linear_db;
  std::optional<double> q_gain_db;
};

/// Retrains `arch` at each width of `grid` and every power of the config.
/// Writes units_sweep.csv; a falling trend is logged as a warning.
std::vector<UnitsRow> sweep_units(const ExperimentConfig& cfg, const std::string& arch,
                                  const std::vector<std::size_t>& grid, const RunOptions& opts = {});

/// Least-squares slope of gain against grid index; negative means a falling trend.
double gain_trend(const std::vector<UnitsRow>& rows);

}  // namespace fiberlab
