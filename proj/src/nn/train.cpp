#include "fiberlab/nn/train.hpp"

#include <cmath>
#include <numeric>

namespace fiberlab::nn {

Tensor window_tensor(const WindowedDataset& d, std::size_t i) {
  const double* p = d.input(i);
  return Tensor(Shape{d.rows(), 2}, std::vector<double>(p, p + d.input_size()));
}

double evaluate_mse(Model& model, const WindowedDataset& d) {
  if (d.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) s += mse(model.forward(window_tensor(d, i), false), d.target(i));
  return s / static_cast<double>(d.size());
}

std::vector<double> predict(Model& model, const WindowedDataset& d) {
  std::vector<double> out;
  out.reserve(d.size() * 4);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Tensor y = model.forward(window_tensor(d, i), false);
    out.insert(out.end(), y.data().begin(), y.data().end());
  }
  return out;
}

TrainResult train(Model model, const WindowedDataset& data, const TrainSchedule& schedule,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  if (schedule.batch == 0) throw std::invalid_argument("batch size must be positive");
  if (schedule.validation_fraction < 0.0 || schedule.validation_fraction >= 1.0) {
    throw std::invalid_argument("validation fraction must be in [0, 1)");
  }
  const auto n_val = static_cast<std::size_t>(std::floor(schedule.validation_fraction * static_cast<double>(data.size())));
  const std::size_t n_train = data.size() - n_val;
  if (n_train == 0) throw std::invalid_argument("training set is empty");
  const WindowedDataset val = data.slice(n_train, data.size());

  model.output_shape(Shape{data.rows(), 2});
  model.seed_dropout(schedule.seed);
  AdamState adam(schedule.adam);
  Rng shuffle(schedule.seed, Stream::kShuffle);
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.best_val_mse = INFINITY;
  const auto params = model.params();
  for (std::size_t epoch = 1; epoch <= schedule.epochs; ++epoch) {
    for (std::size_t i = n_train; i-- > 1;) std::swap(order[i], order[shuffle.below(i + 1)]);
    double train_loss = 0.0;
    for (std::size_t start = 0; start < n_train; start += schedule.batch) {
      const std::size_t end = std::min(n_train, start + schedule.batch);
      model.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const Tensor y = model.forward(window_tensor(data, i), true);
        const double loss = mse(y, data.target(i));
        if (!std::isfinite(loss)) {
          throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                                 std::to_string(i) + " (lr " + std::to_string(schedule.adam.lr) + ")");
        }
        train_loss += loss;
        model.backward(mse_grad(y, data.target(i), end - start));
      }
      adam.step(params);
    }
    EpochRecord rec{epoch, train_loss / static_cast<double>(n_train), 0.0};
    rec.val_mse = evaluate_mse(model, n_val > 0 ? val : data.slice(0, n_train));
    if (!std::isfinite(rec.val_mse)) throw TrainingDiverged("non-finite validation loss at epoch " + std::to_string(epoch));
    result.history.push_back(rec);
    if (rec.val_mse < result.best_val_mse) {
      result.best_val_mse = rec.val_mse;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (on_epoch) on_epoch(rec);
  }
  if (result.history.empty()) {
    result.model = model;
    result.best_val_mse = n_val > 0 ? evaluate_mse(model, val) : evaluate_mse(model, data);
  }
  return result;
}

}  // namespace fiberlab::nn
