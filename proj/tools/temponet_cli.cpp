// Command-line front end: train/eval/bench/gradcheck/report over the shared
// RunSpec. Exit codes: 0 ok, 1 usage or internal contract violation, 2 bad
// input data, 3 numerical failure.

#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "temponet/run.hpp"

namespace {

using temponet::Index;
using temponet::RunSpec;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw temponet::DataError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Flags shared by every subcommand. Each option writes straight into the
// RunSpec; a --config JSON file (same schema as the emitted manifest) is
// loaded first so explicit flags override it.
struct CommonFlags {
  std::string config_path;

  void attach(CLI::App& cmd, RunSpec& spec) {
    cmd.add_option("--config", config_path,
                   "JSON run spec (a previously written manifest works); "
                   "explicit flags override its values");
    cmd.add_option("--data", spec.data, "'synth' or a CSV file path");
    cmd.add_option("--model", spec.model,
                   "temponet|transformer|dlinear|nlinear|persistence");
    cmd.add_option("--horizons", spec.horizons,
                   "forecast horizons in steps (e.g. --horizons 1 20 100)");
    cmd.add_option("--out", spec.out_dir, "output directory");

    cmd.add_option("--synth-steps", spec.synth_steps,
                   "rows of synthetic data");
    cmd.add_option("--synth-seed", spec.synth_seed, "synthetic data seed");
    cmd.add_option("--synth-channels", spec.synth_channels,
                   "synthetic channel count");
    cmd.add_option("--time-column", spec.time_column, "CSV timestamp column");
    cmd.add_option("--target", spec.target_channel, "CSV target channel");
    cmd.add_option("--features", spec.feature_channels,
                   "CSV channels to keep (default: all)");
    cmd.add_option("--upsample-from", spec.upsample_from_ms,
                   "input sample period in ms (0 = already on target grid)");
    cmd.add_option("--upsample-to", spec.upsample_to_ms,
                   "target sample period in ms");
    cmd.add_option("--split", spec.split_ratio, "train share of the rows");
    cmd.add_option("--val-fraction", spec.val_fraction,
                   "tail share of the train split used for validation");
    cmd.add_option("--stride", spec.stride, "window stride in rows");

    cmd.add_option("--d", spec.model_cfg.d, "model width");
    cmd.add_option("--heads", spec.model_cfg.h, "attention heads");
    cmd.add_option("--d-ff", spec.model_cfg.d_ff,
                   "feed-forward width (default 4*d)");
    cmd.add_option("--enc", spec.model_cfg.n_enc, "encoder layers");
    cmd.add_option("--dec", spec.model_cfg.n_dec, "decoder layers");
    cmd.add_option("--temporal-blocks", spec.model_cfg.n_temporal_blocks,
                   "temporal attention blocks per encoder layer");
    cmd.add_option("--lookback", spec.model_cfg.lookback,
                   "observed steps per window");
    cmd.add_option("--label-len", spec.model_cfg.label_len,
                   "decoder warm-start length (default lookback/2)");
    cmd.add_option("--dropout", spec.model_cfg.dropout, "dropout rate");
    cmd.add_option("--embedding", embedding_,
                   "value+positional | value+temporal | "
                   "value+positional+temporal");
    cmd.add_option("--scale-mode", scale_mode_,
                   "inv_sqrt_head_dim | inv_sqrt_d_times_h");
    cmd.add_option("--mask-mode", mask_mode_,
                   "pre_softmax_additive | post_softmax_multiplicative");
    cmd.add_option("--activation", activation_, "relu | gelu");

    cmd.add_option("--lr", spec.train_cfg.learning_rate, "Adam learning rate");
    cmd.add_option("--batch", spec.train_cfg.batch_size, "batch size");
    cmd.add_option("--epochs", spec.train_cfg.max_epochs, "epoch cap");
    cmd.add_option("--patience", spec.train_cfg.patience,
                   "early-stopping patience (epochs)");
    cmd.add_option("--seed", spec.train_cfg.seed, "training seed");
    cmd.add_option("--reps", spec.train_cfg.repetitions,
                   "independent repetitions; the best validation run is kept");
    cmd.add_option("--loss", loss_, "mse | mae");
    cmd.add_option("--clip-norm", spec.train_cfg.clip_norm,
                   "global gradient-norm bound (0 = off)");
    cmd.add_option("--max-steps", spec.train_cfg.max_steps,
                   "optimizer step cap (0 = unlimited)");

    cmd.add_option("--reference", spec.reference_model,
                   "reference model for improvement percentages");
    cmd.add_option("--plot-window", spec.plot_window,
                   "test window drawn in forecast SVGs");
  }

  // Applies enum flag text and fills in the fields left at their sentinel
  // values: layer counts follow the model kind's defaults, d_ff tracks 4*d,
  // label_len tracks lookback/2. apply_kind_defaults is false when a config
  // file already pinned everything.
  void resolve(RunSpec& spec, bool apply_kind_defaults) const {
    if (apply_kind_defaults) {
      const temponet::ModelConfig base =
          temponet::default_config_for(spec.model);
      if (spec.model_cfg.n_enc < 0) spec.model_cfg.n_enc = base.n_enc;
      if (spec.model_cfg.n_dec < 0) spec.model_cfg.n_dec = base.n_dec;
      if (spec.model_cfg.n_temporal_blocks < 0) {
        spec.model_cfg.n_temporal_blocks = base.n_temporal_blocks;
      }
      if (embedding_.empty()) {
        spec.model_cfg.embedding_mode = base.embedding_mode;
      }
    }
    if (spec.model_cfg.d_ff < 0) spec.model_cfg.d_ff = 4 * spec.model_cfg.d;
    if (spec.model_cfg.label_len < 0) {
      spec.model_cfg.label_len = spec.model_cfg.lookback / 2;
    }
    if (!embedding_.empty()) {
      spec.model_cfg.embedding_mode =
          temponet::embedding_mode_from_string(embedding_);
    }
    if (!scale_mode_.empty()) {
      spec.model_cfg.scale_mode = temponet::scale_mode_from_string(scale_mode_);
    }
    if (!mask_mode_.empty()) {
      spec.model_cfg.mask_mode = temponet::mask_mode_from_string(mask_mode_);
    }
    if (!activation_.empty()) {
      spec.model_cfg.activation = temponet::activation_from_string(activation_);
    }
    if (!loss_.empty()) {
      if (loss_ == "mse") {
        spec.train_cfg.loss = temponet::LossKind::mse;
      } else if (loss_ == "mae") {
        spec.train_cfg.loss = temponet::LossKind::mae;
      } else {
        throw CLI::ValidationError("--loss", "expected mse or mae");
      }
    }
  }

 private:
  std::string embedding_, scale_mode_, mask_mode_, activation_, loss_;
};

}  // namespace

int main(int argc, char** argv) {
  temponet::tune_allocator();

  CLI::App app("TempoNet sequence forecasting: training, evaluation, "
               "gradient checks, and benchmarks");
  app.require_subcommand(1);

  RunSpec spec;
  // CLI default: one repetition; pass --reps 10 for the full best-of-10
  // selection protocol.
  spec.train_cfg.repetitions = 1;
  // Sentinels marking "not set on the command line"; resolve() replaces them
  // with kind-dependent defaults after the model kind is known.
  spec.model_cfg.n_enc = -1;
  spec.model_cfg.n_dec = -1;
  spec.model_cfg.n_temporal_blocks = -1;
  spec.model_cfg.d_ff = -1;
  spec.model_cfg.label_len = -1;

  CommonFlags flags;
  CLI::App* train = app.add_subcommand("train", "fit models, one per horizon");
  CLI::App* eval = app.add_subcommand(
      "eval", "score saved checkpoints on the test split and write reports");
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "compare analytic gradients with central differences");
  CLI::App* bench =
      app.add_subcommand("bench", "time single-window forward passes");
  CLI::App* report = app.add_subcommand(
      "report", "recompute improvement.csv from an existing metrics.csv");

  for (CLI::App* cmd : {train, eval, gradcheck, bench, report}) {
    flags.attach(*cmd, spec);
  }
  gradcheck->add_option("--tol", spec.gradcheck_tol,
                        "max accepted relative gradient error");
  gradcheck->add_option("--component", spec.gradcheck_component,
                        "all|matmul|softmax|layer_norm|ffn|mha|"
                        "temporal_attention|full_model");
  bench->add_option("--checkpoint", spec.checkpoint,
                    "time this checkpoint instead of a fresh model");
  bench->add_option("--warmup", spec.bench_warmup, "untimed warmup passes");
  bench->add_option("--repeats", spec.bench_repeats, "timed passes");

  CLI11_PARSE(app, argc, argv);

  try {
    // The config file seeds the RunSpec; anything typed on the command line
    // overrides it, which a second parse of the same argv achieves.
    if (!flags.config_path.empty()) {
      spec = temponet::run_spec_from_json(read_text_file(flags.config_path));
      spec.train_cfg.repetitions = std::max<Index>(
          spec.train_cfg.repetitions, 1);
      CLI::App reparse("reparse");
      reparse.require_subcommand(1);
      CommonFlags flags2;
      for (const char* name :
           {"train", "eval", "gradcheck", "bench", "report"}) {
        CLI::App* cmd = reparse.add_subcommand(name);
        flags2.attach(*cmd, spec);
        if (std::string(name) == "gradcheck") {
          cmd->add_option("--tol", spec.gradcheck_tol);
          cmd->add_option("--component", spec.gradcheck_component);
        } else if (std::string(name) == "bench") {
          cmd->add_option("--checkpoint", spec.checkpoint);
          cmd->add_option("--warmup", spec.bench_warmup);
          cmd->add_option("--repeats", spec.bench_repeats);
        }
        cmd->allow_extras();
      }
      reparse.parse(argc, argv);
      flags2.resolve(spec, /*apply_kind_defaults=*/false);
    } else {
      flags.resolve(spec, /*apply_kind_defaults=*/true);
    }

    if (train->parsed()) {
      temponet::cmd_train(spec);
    } else if (eval->parsed()) {
      temponet::cmd_eval(spec);
    } else if (gradcheck->parsed()) {
      if (!temponet::cmd_gradcheck(spec)) return 3;
    } else if (bench->parsed()) {
      temponet::cmd_bench(spec);
    } else if (report->parsed()) {
      temponet::cmd_report(spec);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const temponet::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const temponet::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
