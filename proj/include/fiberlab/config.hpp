#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fiberlab/flops.hpp"
#include "fiberlab/nn/train.hpp"
#include "fiberlab/pipeline.hpp"
#include "fiberlab/signal.hpp"

namespace fiberlab {

struct TrainingConfig {
  nn::TrainSchedule schedule;
  /// Warm-start each power from the model trained at the previous power.
  bool transfer = false;
};

struct ExperimentConfig {
  std::string profile = "desk";
  SystemParams system;
  int rx_mode = 1;
  /// "linear", "dbp:<steps>", "nn:<catalog name>" or "nn:<path to arch file>".
  std::vector<std::string> equalizers;
  std::vector<double> powers_dbm;
  std::size_t n_train_symbols = 16384;
  std::size_t n_test_bits = 262144;
  /// Channel memory in symbols; 0 keeps each architecture's default.
  int memory = 0;
  /// Recurrent widths replacing the catalog values, keyed by model name.
  std::map<std::string, std::size_t> recurrent_units;
  TrainingConfig training;
  DspOptions dsp;
  std::uint64_t seed = 1;
  Count eta = 4;
  std::string output_dir = "out";

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

ExperimentConfig profile_config(const std::string& profile);

/// Reads JSON on top of the named profile (or the file's own "profile").
/// Unknown keys anywhere are errors.
ExperimentConfig parse_config(const std::string& json_text, const std::string& default_profile = "desk");
ExperimentConfig load_config(const std::string& path, const std::string& default_profile = "desk");

/// Canonical JSON: every key, fixed order, shortest round-trip numbers.
std::string config_to_json(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);

/// Identifies one windowed dataset: every field that influences its bytes.
std::uint64_t dataset_key(const ExperimentConfig& cfg, double power_dbm, const std::string& role, int memory, int sps);

/// Seed for an independent purpose (frames, noise, PMD, init) derived from the experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose);

}  // namespace fiberlab
