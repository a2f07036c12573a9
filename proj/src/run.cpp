#include "temponet/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "temponet/attention.hpp"
#include "temponet/grad_check.hpp"
#include "temponet/ops.hpp"
#include "temponet/svg.hpp"

namespace temponet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kKnownModels = {"temponet", "transformer",
                                               "dlinear", "nlinear",
                                               "persistence"};

std::string loss_to_string(LossKind loss) {
  return loss == LossKind::mse ? "mse" : "mae";
}

LossKind loss_from_string(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "mae") return LossKind::mae;
  throw DataError("unknown loss '" + s + "' (expected mse or mae)");
}

std::string checkpoint_path(const RunSpec& spec, const std::string& model,
                            Index horizon) {
  return (fs::path(spec.out_dir) /
          ("checkpoint_" + model + "_h" + std::to_string(horizon) + ".tpn"))
      .string();
}

std::string history_path(const RunSpec& spec, const std::string& model,
                         Index horizon) {
  return (fs::path(spec.out_dir) /
          ("history_" + model + "_h" + std::to_string(horizon) + ".csv"))
      .string();
}

void write_manifest(const RunSpec& spec) {
  fs::create_directories(spec.out_dir);
  const std::string path = (fs::path(spec.out_dir) / "manifest.json").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << run_spec_to_json(spec) << '\n';
}

WindowSpec window_spec_for(const RunSpec& spec, const ModelConfig& cfg,
                           Index horizon) {
  WindowSpec w;
  w.lookback = cfg.lookback;
  w.horizon = horizon;
  w.label_len = cfg.label_len;
  w.stride = spec.stride;
  w.validate();
  return w;
}

// Validation tail windows; falls back to the training windows when the tail
// is shorter than one window so tiny desk runs still early-stop on something.
WindowDataset validation_windows(const PreparedData& data,
                                 const WindowSpec& wspec,
                                 const WindowDataset& train_windows) {
  const Index need = wspec.lookback + wspec.horizon;
  if (data.val_rows.rows() >= need) {
    return make_windows(data.val_rows, wspec);
  }
  std::fprintf(stderr,
               "note: validation tail has %lld rows (< %lld); "
               "validating on the training windows\n",
               static_cast<long long>(data.val_rows.rows()),
               static_cast<long long>(need));
  return train_windows;
}

double sum_history_wall_s(const std::string& path) {
  if (!fs::exists(path)) return 0.0;
  double total_ms = 0;
  for (const EpochStats& e : read_history_csv(path)) total_ms += e.wall_ms;
  return total_ms / 1000.0;
}

struct InferTiming {
  double mean_ms = 0;
  double std_ms = 0;
};

InferTiming time_inference(Forecaster<double>& model,
                           const ForecastBatch<double>& batch, Index warmup,
                           Index repeats) {
  Rng rng(0);
  for (Index i = 0; i < warmup; ++i) model.forward(batch, rng, false);
  std::vector<double> ms;
  ms.reserve(static_cast<std::size_t>(repeats));
  for (Index i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    model.forward(batch, rng, false);
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  InferTiming out;
  for (double v : ms) out.mean_ms += v;
  out.mean_ms /= static_cast<double>(ms.size());
  for (double v : ms) out.std_ms += (v - out.mean_ms) * (v - out.mean_ms);
  out.std_ms = std::sqrt(out.std_ms / static_cast<double>(ms.size()));
  return out;
}

// Single-window batch for latency measurements; channel count and geometry
// come from the model's own config.
ForecastBatch<double> bench_batch(const ModelConfig& cfg) {
  WindowSpec wspec;
  wspec.lookback = cfg.lookback;
  wspec.horizon = cfg.horizon;
  wspec.label_len = cfg.label_len;
  SeriesTable table =
      synth_gait(cfg.lookback + cfg.horizon, 1, cfg.in_channels);
  WindowDataset windows = make_windows(std::move(table), wspec);
  return windows.make_batch(0, 1);
}

}  // namespace

void RunSpec::validate() {
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()),
                 horizons.end());
  if (horizons.empty()) throw ContractError("RunSpec: no horizons given");
  if (horizons.front() < 1) {
    throw ContractError("RunSpec: horizons must be >= 1");
  }
  if (split_ratio <= 0 || split_ratio >= 1) {
    throw ContractError("RunSpec: split_ratio must be in (0, 1)");
  }
  if (val_fraction <= 0 || val_fraction >= 1) {
    throw ContractError("RunSpec: val_fraction must be in (0, 1)");
  }
  if (stride < 1) throw ContractError("RunSpec: stride must be >= 1");
  if (synth_steps < 2) throw ContractError("RunSpec: synth_steps must be >= 2");
  if (bench_warmup < 0 || bench_repeats < 1) {
    throw ContractError("RunSpec: bench warmup/repeats out of range");
  }
  if (gradcheck_tol <= 0) throw ContractError("RunSpec: tol must be > 0");
  if (plot_window < 0) throw ContractError("RunSpec: plot_window must be >= 0");
  if (std::find(kKnownModels.begin(), kKnownModels.end(), model) ==
      kKnownModels.end()) {
    throw ContractError("RunSpec: unknown model kind '" + model + "'");
  }
}

std::string run_spec_to_json(const RunSpec& spec) {
  json j;
  j["command"] = spec.command;
  j["model"] = spec.model;
  j["eval_models"] = spec.eval_models;
  j["reference_model"] = spec.reference_model;
  j["data"] = spec.data;
  j["synth_steps"] = spec.synth_steps;
  j["synth_seed"] = spec.synth_seed;
  j["synth_channels"] = spec.synth_channels;
  j["synth_period_ms"] = spec.synth_period_ms;
  j["time_column"] = spec.time_column;
  j["target_channel"] = spec.target_channel;
  j["feature_channels"] = spec.feature_channels;
  j["upsample_from_ms"] = spec.upsample_from_ms;
  j["upsample_to_ms"] = spec.upsample_to_ms;
  j["split_ratio"] = spec.split_ratio;
  j["val_fraction"] = spec.val_fraction;
  j["horizons"] = spec.horizons;
  j["stride"] = spec.stride;
  j["model_config"] = json::parse(config_to_json(spec.model_cfg));
  j["train"] = {{"learning_rate", spec.train_cfg.learning_rate},
                {"batch_size", spec.train_cfg.batch_size},
                {"max_epochs", spec.train_cfg.max_epochs},
                {"patience", spec.train_cfg.patience},
                {"seed", spec.train_cfg.seed},
                {"repetitions", spec.train_cfg.repetitions},
                {"loss", loss_to_string(spec.train_cfg.loss)},
                {"clip_norm", spec.train_cfg.clip_norm},
                {"max_steps", spec.train_cfg.max_steps}};
  j["checkpoint"] = spec.checkpoint;
  j["bench_warmup"] = spec.bench_warmup;
  j["bench_repeats"] = spec.bench_repeats;
  j["gradcheck_tol"] = spec.gradcheck_tol;
  j["gradcheck_component"] = spec.gradcheck_component;
  j["out_dir"] = spec.out_dir;
  j["plot_window"] = spec.plot_window;
  return j.dump(2);
}

RunSpec run_spec_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("run spec: invalid JSON: ") + e.what());
  }
  RunSpec spec;
  try {
    spec.command = j.value("command", spec.command);
    spec.model = j.value("model", spec.model);
    spec.eval_models = j.value("eval_models", spec.eval_models);
    spec.reference_model = j.value("reference_model", spec.reference_model);
    spec.data = j.value("data", spec.data);
    spec.synth_steps = j.value("synth_steps", spec.synth_steps);
    spec.synth_seed = j.value("synth_seed", spec.synth_seed);
    spec.synth_channels = j.value("synth_channels", spec.synth_channels);
    spec.synth_period_ms = j.value("synth_period_ms", spec.synth_period_ms);
    spec.time_column = j.value("time_column", spec.time_column);
    spec.target_channel = j.value("target_channel", spec.target_channel);
    spec.feature_channels = j.value("feature_channels", spec.feature_channels);
    spec.upsample_from_ms = j.value("upsample_from_ms", spec.upsample_from_ms);
    spec.upsample_to_ms = j.value("upsample_to_ms", spec.upsample_to_ms);
    spec.split_ratio = j.value("split_ratio", spec.split_ratio);
    spec.val_fraction = j.value("val_fraction", spec.val_fraction);
    spec.horizons = j.value("horizons", spec.horizons);
    spec.stride = j.value("stride", spec.stride);
    if (j.contains("model_config")) {
      spec.model_cfg = config_from_json(j["model_config"].dump());
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      TrainConfig& cfg = spec.train_cfg;
      cfg.learning_rate = t.value("learning_rate", cfg.learning_rate);
      cfg.batch_size = t.value("batch_size", cfg.batch_size);
      cfg.max_epochs = t.value("max_epochs", cfg.max_epochs);
      cfg.patience = t.value("patience", cfg.patience);
      cfg.seed = t.value("seed", cfg.seed);
      cfg.repetitions = t.value("repetitions", cfg.repetitions);
      cfg.loss = loss_from_string(t.value("loss", loss_to_string(cfg.loss)));
      cfg.clip_norm = t.value("clip_norm", cfg.clip_norm);
      cfg.max_steps = t.value("max_steps", cfg.max_steps);
    }
    spec.checkpoint = j.value("checkpoint", spec.checkpoint);
    spec.bench_warmup = j.value("bench_warmup", spec.bench_warmup);
    spec.bench_repeats = j.value("bench_repeats", spec.bench_repeats);
    spec.gradcheck_tol = j.value("gradcheck_tol", spec.gradcheck_tol);
    spec.gradcheck_component =
        j.value("gradcheck_component", spec.gradcheck_component);
    spec.out_dir = j.value("out_dir", spec.out_dir);
    spec.plot_window = j.value("plot_window", spec.plot_window);
  } catch (const json::exception& e) {
    throw DataError(std::string("run spec: ") + e.what());
  }
  return spec;
}

PreparedData prepare_data(const RunSpec& spec) {
  SeriesTable raw;
  Index dropped = 0;
  if (spec.data == "synth") {
    raw = synth_gait(spec.synth_steps, spec.synth_seed, spec.synth_channels,
                     spec.synth_period_ms);
  } else {
    CsvSchema schema;
    schema.time_column = spec.time_column;
    schema.target_channel = spec.target_channel;
    schema.feature_channels = spec.feature_channels;
    IngestResult in = ingest_csv(spec.data, schema);
    raw = std::move(in.table);
    dropped = in.rows_dropped;
  }
  if (spec.upsample_from_ms > 0) {
    raw = upsample_linear(raw, spec.upsample_from_ms, spec.upsample_to_ms);
  }

  auto [train_all, test] = split_train_test(raw, spec.split_ratio);

  PreparedData out;
  out.stats = fit_normalize(train_all);
  out.train_rows = apply_normalize(train_all, out.stats);
  out.test_rows = apply_normalize(test, out.stats);
  out.rows_dropped = dropped;
  out.in_channels = out.train_rows.n_channels();

  // The validation tail stays inside the training partition so the test rows
  // are never touched before the final evaluation.
  auto [fit_part, val_part] =
      split_train_test(out.train_rows, 1.0 - spec.val_fraction);
  (void)fit_part;  // training still sees the full partition
  out.val_rows = std::move(val_part);
  return out;
}

void cmd_train(RunSpec spec) {
  spec.command = "train";
  spec.validate();
  fs::create_directories(spec.out_dir);

  PreparedData data = prepare_data(spec);
  spec.model_cfg.in_channels = data.in_channels;
  spec.model_cfg.horizon = spec.horizons.front();
  spec.model_cfg.validate();
  write_manifest(spec);

  for (Index h : spec.horizons) {
    ModelConfig cfg = spec.model_cfg;
    cfg.horizon = h;
    cfg.validate();

    const WindowSpec wspec = window_spec_for(spec, cfg, h);
    WindowDataset train_windows = make_windows(data.train_rows, wspec);
    WindowDataset val_windows =
        validation_windows(data, wspec, train_windows);

    const ModelFactory factory = [&](std::uint64_t seed) {
      Rng rng(seed);
      return make_forecaster<double>(spec.model, cfg, rng);
    };
    RepeatedResult result =
        train_repeated(factory, train_windows, val_windows, spec.train_cfg);

    save_checkpoint(checkpoint_path(spec, spec.model, h), *result.best_model);
    const TrainResult& best = result.runs[result.best_run];
    write_history_csv(history_path(spec, spec.model, h), best.history);

    std::printf(
        "train %s h=%lld: %lld windows, %lld steps, best val MAE %.6g "
        "(epoch %lld, run %zu of %zu)\n",
        spec.model.c_str(), static_cast<long long>(h),
        static_cast<long long>(train_windows.size()),
        static_cast<long long>(best.steps), best.best_val,
        static_cast<long long>(best.best_epoch), result.best_run + 1,
        result.runs.size());
  }
}

void cmd_eval(RunSpec spec) {
  spec.command = "eval";
  spec.validate();
  fs::create_directories(spec.out_dir);

  PreparedData data = prepare_data(spec);
  spec.model_cfg.in_channels = data.in_channels;
  write_manifest(spec);

  std::vector<std::string> models = spec.eval_models;
  if (models.empty()) {
    for (const std::string& kind : kKnownModels) {
      const bool has_checkpoint =
          std::any_of(spec.horizons.begin(), spec.horizons.end(), [&](Index h) {
            return fs::exists(checkpoint_path(spec, kind, h));
          });
      if (has_checkpoint || kind == "persistence") models.push_back(kind);
    }
  }

  MetricsReport report;
  // Per-window MAE at the longest horizon feeds the distribution plot.
  const Index box_horizon = spec.horizons.back();
  std::vector<std::string> box_labels;
  std::vector<std::vector<double>> box_samples;

  for (const std::string& kind : models) {
    for (Index h : spec.horizons) {
      MetricsCell cell;
      cell.model = kind;
      cell.horizon = h;
      try {
        std::unique_ptr<Forecaster<double>> model;
        const std::string ckpt = checkpoint_path(spec, kind, h);
        if (fs::exists(ckpt)) {
          model = load_checkpoint(ckpt);
        } else if (kind == "persistence") {
          ModelConfig cfg = spec.model_cfg;
          cfg.horizon = h;
          Rng rng(0);
          model = make_forecaster<double>(kind, cfg, rng);
        } else {
          throw DataError("missing checkpoint: " + ckpt);
        }

        const ModelConfig& cfg = model->config();
        WindowSpec wspec = window_spec_for(spec, cfg, h);
        WindowDataset test_windows = make_windows(data.test_rows, wspec);
        EvalResult ev = evaluate(*model, test_windows, data.stats,
                                 spec.train_cfg.batch_size);

        cell.mae = ev.mae;
        cell.mse = ev.mse;
        cell.param_count = param_count(*model);
        cell.train_wall_s = sum_history_wall_s(history_path(spec, kind, h));
        InferTiming t =
            time_inference(*model, test_windows.make_batch(0, 1), 5, 20);
        cell.infer_mean_ms = t.mean_ms;
        cell.infer_std_ms = t.std_ms;

        if (h == box_horizon) {
          box_labels.push_back(kind);
          box_samples.push_back(ev.per_window_mae);
        }
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.reason = e.what();
      }
      report.cells.push_back(std::move(cell));
    }
  }

  const fs::path out(spec.out_dir);
  write_report_csv((out / "report.csv").string(), report);
  const MaeMatrix matrix = mae_matrix(report);
  write_mae_matrix_csv((out / "metrics.csv").string(), matrix);

  if (std::find(matrix.models.begin(), matrix.models.end(),
                spec.reference_model) != matrix.models.end()) {
    write_improvement_csv((out / "improvement.csv").string(),
                          improvement_table(matrix, spec.reference_model));
  } else {
    std::fprintf(stderr,
                 "note: reference model '%s' has no metrics; skipping "
                 "improvement.csv\n",
                 spec.reference_model.c_str());
  }

  // Forecast overlays for the primary model.
  const double mu = data.stats.mean_of(spec.target_channel);
  const double sd = data.stats.stddev_of(spec.target_channel);
  for (Index h : spec.horizons) {
    const std::string ckpt = checkpoint_path(spec, spec.model, h);
    std::unique_ptr<Forecaster<double>> model;
    if (fs::exists(ckpt)) {
      model = load_checkpoint(ckpt);
    } else if (spec.model == "persistence") {
      ModelConfig cfg = spec.model_cfg;
      cfg.horizon = h;
      Rng rng(0);
      model = make_forecaster<double>(spec.model, cfg, rng);
    } else {
      continue;
    }
    WindowSpec wspec = window_spec_for(spec, model->config(), h);
    WindowDataset test_windows = make_windows(data.test_rows, wspec);
    if (test_windows.size() == 0) continue;
    const Index w = std::min(spec.plot_window, test_windows.size() - 1);
    ForecastBatch<double> batch = test_windows.make_batch(w, 1);
    Rng rng(0);
    Tensord pred = model->forward(batch, rng, false);

    const Index lookback = wspec.lookback;
    std::vector<double> context(static_cast<std::size_t>(lookback));
    std::vector<double> truth(static_cast<std::size_t>(h));
    std::vector<double> predicted(static_cast<std::size_t>(h));
    auto enc = batch.enc_in.values();
    const Index channels = batch.enc_in.shape().dim(2);
    for (Index i = 0; i < lookback; ++i) {
      context[static_cast<std::size_t>(i)] =
          enc[static_cast<std::size_t>(i * channels + batch.target_column)] *
              sd + mu;
    }
    auto tgt = batch.target.values();
    auto prd = pred.values();
    for (Index i = 0; i < h; ++i) {
      truth[static_cast<std::size_t>(i)] =
          tgt[static_cast<std::size_t>(i)] * sd + mu;
      predicted[static_cast<std::size_t>(i)] =
          prd[static_cast<std::size_t>(i)] * sd + mu;
    }
    write_forecast_svg(
        (out / ("forecast_" + std::to_string(h) + ".svg")).string(), context,
        truth, predicted,
        spec.model + ", " + std::to_string(h) + "-step forecast");
  }

  if (!box_labels.empty()) {
    write_box_plot_svg((out / "mae_box.svg").string(), box_labels, box_samples,
                       "per-window MAE at " + std::to_string(box_horizon) +
                           " steps (deg)");
  }

  for (const MetricsCell& cell : report.cells) {
    if (cell.failed) {
      std::printf("eval %s h=%lld: FAILED (%s)\n", cell.model.c_str(),
                  static_cast<long long>(cell.horizon), cell.reason.c_str());
    } else {
      std::printf("eval %s h=%lld: MAE %.6g deg, MSE %.6g, %lld params\n",
                  cell.model.c_str(), static_cast<long long>(cell.horizon),
                  cell.mae, cell.mse, static_cast<long long>(cell.param_count));
    }
  }
}

void cmd_report(const RunSpec& spec) {
  const fs::path out(spec.out_dir);
  const MaeMatrix matrix = read_mae_matrix_csv((out / "metrics.csv").string());
  write_improvement_csv((out / "improvement.csv").string(),
                        improvement_table(matrix, spec.reference_model));
  std::printf("report: wrote %s (reference %s)\n",
              (out / "improvement.csv").string().c_str(),
              spec.reference_model.c_str());
}

void cmd_bench(RunSpec spec) {
  spec.command = "bench";
  spec.validate();
  fs::create_directories(spec.out_dir);

  std::unique_ptr<Forecaster<double>> model;
  if (!spec.checkpoint.empty()) {
    model = load_checkpoint(spec.checkpoint);
  } else {
    ModelConfig cfg = spec.model_cfg;
    cfg.in_channels = spec.synth_channels;
    cfg.horizon = spec.horizons.front();
    cfg.validate();
    Rng rng(spec.train_cfg.seed);
    model = make_forecaster<double>(spec.model, cfg, rng);
  }
  write_manifest(spec);

  ForecastBatch<double> batch = bench_batch(model->config());
  const InferTiming t =
      time_inference(*model, batch, spec.bench_warmup, spec.bench_repeats);
  const Index params = param_count(*model);

  const std::string path = (fs::path(spec.out_dir) / "bench.csv").string();
  std::ofstream csv(path, std::ios::binary);
  if (!csv) throw DataError("cannot write " + path);
  csv << "model,horizon,param_count,warmup,repeats,mean_ms,std_ms\n";
  csv << model->kind() << ',' << model->config().horizon << ',' << params
      << ',' << spec.bench_warmup << ',' << spec.bench_repeats << ','
      << format_double(t.mean_ms) << ',' << format_double(t.std_ms) << '\n';

  std::printf(
      "bench %s h=%lld: %lld params, forward %.3f ms +- %.3f ms "
      "(%lld warmup, %lld timed)\n",
      std::string(model->kind()).c_str(),
      static_cast<long long>(model->config().horizon),
      static_cast<long long>(params), t.mean_ms, t.std_ms,
      static_cast<long long>(spec.bench_warmup),
      static_cast<long long>(spec.bench_repeats));
}

// --- gradient-check command --------------------------------------------------

namespace {

struct ComponentResult {
  std::string name;
  double max_rel_err = 0;
};

Tensord random_tensor(const Shape& shape, Rng& rng, double scale = 1.0) {
  Tensord t = Tensord::uninitialized(shape);
  for (double& v : t.values_mut()) v = rng.uniform(-scale, scale);
  return t;
}

// Reduces an arbitrary tensor to a scalar with fixed random mixing weights so
// every output element influences the loss.
Tensord mix_to_scalar(const Tensord& x, const Tensord& weights) {
  return mean(mul(x, weights));
}

ComponentResult check_matmul(Rng& rng) {
  Tensord a = random_tensor(Shape{2, 3, 4}, rng);
  Tensord b = random_tensor(Shape{4, 5}, rng);
  Tensord c = random_tensor(Shape{2, 5, 3}, rng);
  Tensord w = random_tensor(Shape{2, 5, 3}, rng);
  auto f = [&] {
    Tensord ab = matmul(a, b);  // batched @ shared rhs: [2,3,5]
    Tensord abc =
        matmul(transpose_last2(ab), transpose_last2(c));  // [2,5,5]
    return mix_to_scalar(matmul(abc, c), w);  // c enters twice
  };
  GradCheckReport r =
      grad_check(f, {{"a", a}, {"b", b}, {"c", c}});
  return {"matmul", r.max_rel_err};
}

ComponentResult check_softmax(Rng& rng) {
  Tensord x = random_tensor(Shape{3, 4, 5}, rng, 2.0);
  Tensord w = random_tensor(Shape{3, 4, 5}, rng);
  auto f = [&] { return mix_to_scalar(softmax_lastdim(x), w); };
  GradCheckReport r = grad_check(f, {{"x", x}});
  return {"softmax", r.max_rel_err};
}

ComponentResult check_layer_norm(Rng& rng) {
  Tensord x = random_tensor(Shape{2, 5, 8}, rng);
  Tensord gain = random_tensor(Shape{8}, rng);
  Tensord bias = random_tensor(Shape{8}, rng);
  Tensord w = random_tensor(Shape{2, 5, 8}, rng);
  auto f = [&] { return mix_to_scalar(layer_norm(x, gain, bias), w); };
  GradCheckReport r =
      grad_check(f, {{"x", x}, {"gain", gain}, {"bias", bias}});
  return {"layer_norm", r.max_rel_err};
}

ComponentResult check_ffn(Rng& rng) {
  FfnParams<double> p =
      FfnParams<double>::init(8, 16, rng, Activation::gelu);
  Tensord x = random_tensor(Shape{2, 4, 8}, rng);
  Tensord w = random_tensor(Shape{2, 4, 8}, rng);
  auto f = [&] { return mix_to_scalar(position_wise_ffn(x, p), w); };
  auto leaves = p.params("");
  leaves.emplace_back("x", x);
  GradCheckReport r = grad_check(f, leaves);
  return {"ffn", r.max_rel_err};
}

ComponentResult check_mha(Rng& rng, ScaleMode scale, MaskMode mask) {
  MhaParams<double> p =
      MhaParams<double>::init(8, 2, rng, scale, mask);
  Tensord x = random_tensor(Shape{2, 4, 8}, rng);
  Tensord w = random_tensor(Shape{2, 4, 8}, rng);
  Tensord causal = make_causal_mask<double>(4);
  auto f = [&] {
    return mix_to_scalar(multi_head_attention(x, x, p, &causal), w);
  };
  auto leaves = p.params("");
  leaves.emplace_back("x", x);
  GradCheckReport r = grad_check(f, leaves);
  return {"mha[" + to_string(scale) + "," + to_string(mask) + "]",
          r.max_rel_err};
}

ComponentResult check_temporal_attention(Rng& rng) {
  TemporalAttentionParams<double> p =
      TemporalAttentionParams<double>::init(8, rng);
  Tensord x = random_tensor(Shape{2, 5, 8}, rng);
  Tensord w = random_tensor(Shape{2, 5, 8}, rng);
  auto f = [&] { return mix_to_scalar(dynamic_temporal_attention(x, p), w); };
  auto leaves = p.params("");
  leaves.emplace_back("x", x);
  GradCheckReport r = grad_check(f, leaves);
  return {"temporal_attention", r.max_rel_err};
}

ComponentResult check_full_model(Rng& rng) {
  ModelConfig cfg;
  cfg.d = 8;
  cfg.h = 2;
  cfg.d_ff = 16;
  cfg.n_enc = 1;
  cfg.n_dec = 1;
  cfg.n_temporal_blocks = 1;
  cfg.in_channels = 5;
  cfg.out_channels = 1;
  cfg.lookback = 6;
  cfg.label_len = 3;
  cfg.horizon = 2;
  cfg.dropout = 0.0;

  std::unique_ptr<Forecaster<double>> model =
      make_forecaster<double>("temponet", cfg, rng);

  WindowSpec wspec;
  wspec.lookback = cfg.lookback;
  wspec.horizon = cfg.horizon;
  wspec.label_len = cfg.label_len;
  SeriesTable table = synth_gait(32, 11, cfg.in_channels);
  WindowDataset windows = make_windows(std::move(table), wspec);
  ForecastBatch<double> batch = windows.make_batch(0, 2);

  Rng fwd_rng(0);
  auto f = [&] {
    Tensord pred = model->forward(batch, fwd_rng, false);
    Tensord diff = sub(pred, batch.target);
    return mean(mul(diff, diff));
  };
  GradCheckReport r = grad_check(f, model->named_parameters());
  return {"full_model", r.max_rel_err};
}

}  // namespace

bool cmd_gradcheck(const RunSpec& spec) {
  if (spec.gradcheck_tol <= 0) throw ContractError("gradcheck: tol must be > 0");
  Rng rng(spec.train_cfg.seed + 17);

  std::vector<ComponentResult> results;
  const std::string& want = spec.gradcheck_component;
  auto selected = [&](const std::string& name) {
    return want == "all" || want == name;
  };

  if (selected("matmul")) results.push_back(check_matmul(rng));
  if (selected("softmax")) results.push_back(check_softmax(rng));
  if (selected("layer_norm")) results.push_back(check_layer_norm(rng));
  if (selected("ffn")) results.push_back(check_ffn(rng));
  if (selected("mha")) {
    for (ScaleMode scale :
         {ScaleMode::inv_sqrt_head_dim, ScaleMode::inv_sqrt_d_times_h}) {
      for (MaskMode mask : {MaskMode::pre_softmax_additive,
                            MaskMode::post_softmax_multiplicative}) {
        results.push_back(check_mha(rng, scale, mask));
      }
    }
  }
  if (selected("temporal_attention")) {
    results.push_back(check_temporal_attention(rng));
  }
  if (selected("full_model")) results.push_back(check_full_model(rng));

  if (results.empty()) {
    throw ContractError(
        "gradcheck: unknown component '" + want +
        "' (expected all, matmul, softmax, layer_norm, ffn, mha, "
        "temporal_attention, or full_model)");
  }

  bool all_pass = true;
  for (const ComponentResult& r : results) {
    const bool pass = r.max_rel_err <= spec.gradcheck_tol;
    all_pass = all_pass && pass;
    std::printf("gradcheck %-55s max_rel_err=%.3e %s\n", r.name.c_str(),
                r.max_rel_err, pass ? "PASS" : "FAIL");
  }
  std::printf("gradcheck: %s (tol %.3g)\n", all_pass ? "all passed" : "FAILED",
              spec.gradcheck_tol);
  return all_pass;
}

}  // namespace temponet
