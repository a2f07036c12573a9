#include "temponet/training.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>

#include "temponet/ops.hpp"

namespace temponet {

namespace {

using ArrMap = Eigen::Map<Eigen::ArrayXd>;
using CArrMap = Eigen::Map<const Eigen::ArrayXd>;

Tensord loss_tensor(const Tensord& pred, const Tensord& target, LossKind kind) {
  Tensord diff = sub(pred, target);
  return kind == LossKind::mse ? mean(mul(diff, diff)) : mean(abs(diff));
}

// Mean |error| over every element of the window set, in normalized units;
// cheap eval-mode metric that early stopping monitors. (Denormalizing is an
// affine map with positive scale, so the ranking matches the degree-space
// MAE.)
double validation_mae(Forecaster<double>& model, const WindowDataset& windows,
                      Index batch_size) {
  Rng unused(0);
  double abs_sum = 0;
  Index n_elems = 0;
  for (Index first = 0; first < windows.size(); first += batch_size) {
    const Index count = std::min(batch_size, windows.size() - first);
    ForecastBatch<double> batch = windows.make_batch(first, count);
    Tensord pred = model.forward(batch, unused, /*training=*/false);
    auto pv = pred.values();
    auto tv = batch.target.values();
    for (std::size_t i = 0; i < pv.size(); ++i) abs_sum += std::fabs(pv[i] - tv[i]);
    n_elems += static_cast<Index>(pv.size());
  }
  return abs_sum / static_cast<double>(n_elems);
}

}  // namespace

void AdamState::ensure(
    const std::vector<std::pair<std::string, Tensord>>& params) {
  if (m.empty()) {
    for (const auto& [name, p] : params) {
      m.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
      v.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
    }
    return;
  }
  if (m.size() != params.size()) {
    throw ContractError("AdamState: tracked " + std::to_string(m.size()) +
                        " parameters, model has " +
                        std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (static_cast<Index>(m[i].size()) != params[i].second.numel()) {
      throw ContractError("AdamState: moment shape mismatch on '" +
                          params[i].first + "'");
    }
  }
}

void adam_step(const std::vector<std::pair<std::string, Tensord>>& params,
               AdamState& state, double lr, double clip_norm) {
  state.ensure(params);

  double sq_norm = 0;
  for (const auto& [name, p] : params) {
    Tensord handle = p;
    auto g = handle.grad_raw();
    if (!all_finite<double>({g.data(), g.size()})) {
      throw NumericError("adam_step: non-finite gradient in parameter '" +
                         name + "'");
    }
    if (clip_norm > 0) sq_norm += CArrMap(g.data(), static_cast<Index>(g.size())).square().sum();
  }
  double grad_scale = 1.0;
  if (clip_norm > 0) {
    const double norm = std::sqrt(sq_norm);
    if (norm > clip_norm) grad_scale = clip_norm / norm;
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensord handle = params[i].second;
    const Index n = handle.numel();
    auto gspan = handle.grad_raw();
    ArrMap g(gspan.data(), n);
    ArrMap m(state.m[i].data(), n);
    ArrMap v(state.v[i].data(), n);
    ArrMap w(handle.values_mut().data(), n);
    if (grad_scale != 1.0) g *= grad_scale;
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.square();
    w -= lr * (m / bc1) / ((v / bc2).sqrt() + state.eps);
  }
}

std::vector<Buffer<double>> snapshot_params(
    const std::vector<std::pair<std::string, Tensord>>& params) {
  std::vector<Buffer<double>> snap;
  snap.reserve(params.size());
  for (const auto& [name, p] : params) {
    snap.emplace_back(p.values().begin(), p.values().end());
  }
  return snap;
}

void restore_params(const std::vector<std::pair<std::string, Tensord>>& params,
                    const std::vector<Buffer<double>>& snapshot) {
  if (snapshot.size() != params.size()) {
    throw ContractError("restore_params: snapshot size mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensord handle = params[i].second;
    std::copy(snapshot[i].begin(), snapshot[i].end(),
              handle.values_mut().begin());
  }
}

TrainResult train(Forecaster<double>& model,
                  const WindowDataset& train_windows,
                  const WindowDataset& val_windows, const TrainConfig& cfg) {
  cfg.validate();
  if (train_windows.size() < 1 || val_windows.size() < 1) {
    throw DataError("train: need at least one training and one validation window");
  }

  auto params = model.named_parameters();
  TrainResult result;
  result.best_val = validation_mae(model, val_windows, cfg.batch_size);
  result.best_epoch = 0;

  if (params.empty()) {
    // nothing to optimize (persistence); the initial state is the result
    return result;
  }

  // Backward only reaches tensors flagged as differentiable leaves; the
  // named-parameter list is the single source of truth for what learns.
  for (auto& [name, p] : params) p.set_requires_grad(true);

  AdamState adam;
  Rng rng(cfg.seed);
  std::vector<Buffer<double>> best = snapshot_params(params);
  std::vector<Index> order(static_cast<std::size_t>(train_windows.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);

  Index epochs_since_improvement = 0;
  bool out_of_steps = false;
  for (Index epoch = 1; epoch <= cfg.max_epochs && !out_of_steps; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);
    double loss_sum = 0;
    Index n_batches = 0;
    for (std::size_t first = 0; first < order.size();
         first += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t count = std::min(static_cast<std::size_t>(cfg.batch_size),
                                         order.size() - first);
      ForecastBatch<double> batch = train_windows.make_batch(
          std::span<const Index>(order.data() + first, count));
      Graphd graph;
      Graphd::Scope scope(graph);
      Tensord pred = model.forward(batch, rng, /*training=*/true);
      Tensord loss = loss_tensor(pred, batch.target, cfg.loss);
      if (!std::isfinite(loss.item())) {
        throw NumericError("train: non-finite loss at epoch " +
                           std::to_string(epoch) + ", step " +
                           std::to_string(result.steps + 1));
      }
      for (auto& [name, p] : params) p.zero_grad();
      graph.backward(loss);
      adam_step(params, adam, cfg.learning_rate, cfg.clip_norm);
      loss_sum += loss.item();
      ++n_batches;
      ++result.steps;
      if (cfg.max_steps > 0 && result.steps >= cfg.max_steps) {
        out_of_steps = true;
        break;
      }
    }
    const double val = validation_mae(model, val_windows, cfg.batch_size);
    const double wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    result.history.push_back(
        {epoch, loss_sum / static_cast<double>(n_batches), val, wall_ms});
    if (val < result.best_val) {
      result.best_val = val;
      result.best_epoch = epoch;
      best = snapshot_params(params);
      epochs_since_improvement = 0;
    } else {
      ++epochs_since_improvement;
      if (epochs_since_improvement >= cfg.patience) break;
    }
  }
  restore_params(params, best);
  return result;
}

RepeatedResult train_repeated(const ModelFactory& make_model,
                              const WindowDataset& train_windows,
                              const WindowDataset& val_windows,
                              const TrainConfig& cfg) {
  cfg.validate();
  RepeatedResult result;
  double best_val = std::numeric_limits<double>::infinity();
  for (Index rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(rep);
    std::unique_ptr<Forecaster<double>> model = make_model(seed);
    TrainConfig rep_cfg = cfg;
    rep_cfg.seed = seed;
    TrainResult run = train(*model, train_windows, val_windows, rep_cfg);
    if (run.best_val < best_val) {
      best_val = run.best_val;
      result.best_run = static_cast<std::size_t>(rep);
      result.best_model = std::move(model);
    }
    result.runs.push_back(std::move(run));
  }
  return result;
}

EvalResult evaluate(Forecaster<double>& model, const WindowDataset& windows,
                    const NormStats& stats, Index batch_size) {
  if (windows.size() < 1) throw DataError("evaluate: empty window set");
  const std::string& target = windows.table().target_channel;
  // errors in degrees: the means cancel, only the scale matters
  const double sd = stats.stddev_of(target);
  const Index horizon = windows.spec().horizon;

  EvalResult r;
  r.windows = windows.size();
  r.per_step_mae.assign(static_cast<std::size_t>(horizon), 0.0);
  r.per_step_mse.assign(static_cast<std::size_t>(horizon), 0.0);
  r.per_window_mae.reserve(static_cast<std::size_t>(windows.size()));

  Rng unused(0);
  double abs_sum = 0, sq_sum = 0;
  for (Index first = 0; first < windows.size(); first += batch_size) {
    const Index count = std::min(batch_size, windows.size() - first);
    ForecastBatch<double> batch = windows.make_batch(first, count);
    Tensord pred = model.forward(batch, unused, /*training=*/false);
    if (pred.shape() != batch.target.shape()) {
      throw ShapeError("evaluate: prediction " + pred.shape().str() +
                       " vs target " + batch.target.shape().str());
    }
    auto pv = pred.values();
    auto tv = batch.target.values();
    const Index out_ch = pred.shape().dim(2);
    for (Index b = 0; b < count; ++b) {
      double window_abs = 0;
      for (Index s = 0; s < horizon; ++s) {
        for (Index c = 0; c < out_ch; ++c) {
          const std::size_t at =
              static_cast<std::size_t>((b * horizon + s) * out_ch + c);
          const double err = (pv[at] - tv[at]) * sd;  // degrees
          const double a = std::fabs(err);
          abs_sum += a;
          sq_sum += err * err;
          window_abs += a;
          r.per_step_mae[static_cast<std::size_t>(s)] += a;
          r.per_step_mse[static_cast<std::size_t>(s)] += err * err;
        }
      }
      r.per_window_mae.push_back(window_abs /
                                 static_cast<double>(horizon * out_ch));
    }
  }
  const double n = static_cast<double>(r.windows) *
                   static_cast<double>(horizon) *
                   static_cast<double>(model.config().out_channels);
  r.mae = abs_sum / n;
  r.mse = sq_sum / n;
  const double per_step_n = static_cast<double>(r.windows) *
                            static_cast<double>(model.config().out_channels);
  for (auto& x : r.per_step_mae) x /= per_step_n;
  for (auto& x : r.per_step_mse) x /= per_step_n;
  return r;
}

}  // namespace temponet
