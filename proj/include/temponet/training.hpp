#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "temponet/data.hpp"
#include "temponet/model.hpp"

namespace temponet {

enum class LossKind { mse, mae };

struct TrainConfig {
  double learning_rate = 1e-4;
  Index batch_size = 32;
  Index max_epochs = 10;
  Index patience = 3;  // epochs without validation improvement before stopping
  std::uint64_t seed = 0;
  Index repetitions = 10;
  LossKind loss = LossKind::mse;
  double clip_norm = 0.0;  // 0 disables gradient clipping
  Index max_steps = 0;     // 0 = no cap on optimizer steps

  void validate() const {
    if (learning_rate <= 0) throw ContractError("TrainConfig: learning_rate must be > 0");
    if (batch_size < 1) throw ContractError("TrainConfig: batch_size must be >= 1");
    if (patience < 1) throw ContractError("TrainConfig: patience must be >= 1");
    if (max_epochs < 1) throw ContractError("TrainConfig: max_epochs must be >= 1");
    if (repetitions < 1) throw ContractError("TrainConfig: repetitions must be >= 1");
    if (clip_norm < 0) throw ContractError("TrainConfig: clip_norm must be >= 0");
    if (max_steps < 0) throw ContractError("TrainConfig: max_steps must be >= 0");
  }
};

// Per-parameter first/second moment buffers, aligned with the model's
// named_parameters order.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Index step = 0;
  std::vector<Buffer<double>> m, v;

  void ensure(const std::vector<std::pair<std::string, Tensord>>& params);
};

// Standard bias-corrected Adam update over the populated gradient buffers.
// Optionally rescales gradients to a global L2 norm bound first. Non-finite
// gradients abort with the offending parameter's name.
void adam_step(const std::vector<std::pair<std::string, Tensord>>& params,
               AdamState& state, double lr, double clip_norm = 0.0);

struct EpochStats {
  Index epoch = 0;        // 1-based
  double train_loss = 0;  // mean batch loss (normalized units)
  double val_loss = 0;    // validation MAE (normalized units)
  double wall_ms = 0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  double best_val = 0;
  Index best_epoch = 0;  // 0 = the initial parameters were never beaten
  Index steps = 0;
};

// Mini-batch training with per-epoch seeded shuffling and early stopping on
// validation MAE. The model is left holding the best-validation parameters
// (possibly the initial ones). Models without parameters only get evaluated.
TrainResult train(Forecaster<double>& model, const WindowDataset& train_windows,
                  const WindowDataset& val_windows, const TrainConfig& cfg);

using ModelFactory =
    std::function<std::unique_ptr<Forecaster<double>>(std::uint64_t seed)>;

struct RepeatedResult {
  std::vector<TrainResult> runs;
  std::size_t best_run = 0;
  std::unique_ptr<Forecaster<double>> best_model;
};

// Trains `cfg.repetitions` independently initialized models on seeds
// cfg.seed, cfg.seed+1, ... and keeps the one with the best validation MAE.
RepeatedResult train_repeated(const ModelFactory& make_model,
                              const WindowDataset& train_windows,
                              const WindowDataset& val_windows,
                              const TrainConfig& cfg);

// Forecast errors in denormalized target units (degrees).
struct EvalResult {
  double mae = 0;
  double mse = 0;
  std::vector<double> per_step_mae;    // per horizon step
  std::vector<double> per_step_mse;
  std::vector<double> per_window_mae;  // per window, for distribution plots
  Index windows = 0;
};

EvalResult evaluate(Forecaster<double>& model, const WindowDataset& windows,
                    const NormStats& stats, Index batch_size = 32);

// Deep copies of the current parameter values, for best-checkpoint tracking.
std::vector<Buffer<double>> snapshot_params(
    const std::vector<std::pair<std::string, Tensord>>& params);
void restore_params(const std::vector<std::pair<std::string, Tensord>>& params,
                    const std::vector<Buffer<double>>& snapshot);

}  // namespace temponet
