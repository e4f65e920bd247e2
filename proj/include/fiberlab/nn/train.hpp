#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fiberlab/nn/adam.hpp"
#include "fiberlab/nn/model.hpp"
#include "fiberlab/rx.hpp"

namespace fiberlab::nn {

struct TrainSchedule {
  std::size_t epochs = 10;
  std::size_t batch = 16;
  AdamConfig adam;
  /// Trailing fraction held out for model selection.
  double validation_fraction = 0.1;
  std::uint64_t seed = 1;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  Model model;  // snapshot with the lowest validation loss
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_mse = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input tensor for sample i: the 2(2M+1) x 2 window.
Tensor window_tensor(const WindowedDataset& d, std::size_t i);

double evaluate_mse(Model& model, const WindowedDataset& d);

/// Equalized 4-vectors (Re sx, Im sx, Re sy, Im sy), one per sample.
std::vector<double> predict(Model& model, const WindowedDataset& d);

/// Mini-batch Adam on the MSE. With a zero validation fraction the
/// training loss drives selection.
TrainResult train(Model model, const WindowedDataset& data, const TrainSchedule& schedule,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace fiberlab::nn
