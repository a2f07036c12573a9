#pragma once

#include <string>
#include <vector>

#include "temponet/checkpoint.hpp"
#include "temponet/data.hpp"
#include "temponet/metrics.hpp"
#include "temponet/training.hpp"

namespace temponet {

// Fully resolved description of one CLI run. Serialized verbatim into the
// output directory as `manifest`; feeding that file back through --config
// reproduces the run.
struct RunSpec {
  std::string command = "train";
  std::string model = "temponet";
  std::vector<std::string> eval_models;  // empty: discover from checkpoints
  std::string reference_model = "temponet";

  // data source: "synth" or a CSV path
  std::string data = "synth";
  Index synth_steps = 20000;
  std::uint64_t synth_seed = 7;
  Index synth_channels = 40;
  double synth_period_ms = 1000.0;
  std::string time_column = "time_ms";
  std::string target_channel = "knee_angle_deg";
  std::vector<std::string> feature_channels;  // empty = every column
  double upsample_from_ms = 0;  // 0 = input already on the target grid
  double upsample_to_ms = 1;
  double split_ratio = 0.8;
  double val_fraction = 0.1;  // tail share of the train partition

  std::vector<Index> horizons = {1, 20, 40, 60, 80, 100};
  Index stride = 1;

  ModelConfig model_cfg;  // horizon overwritten per sweep entry
  TrainConfig train_cfg;

  std::string checkpoint;  // bench: path to load instead of fresh init
  Index bench_warmup = 100;
  Index bench_repeats = 1000;

  double gradcheck_tol = 1e-4;
  std::string gradcheck_component = "all";

  std::string out_dir = "out";
  Index plot_window = 0;

  void validate();  // sorts/dedups horizons, checks ranges
};

std::string run_spec_to_json(const RunSpec& spec);
RunSpec run_spec_from_json(const std::string& json_text);

// Preprocessed partitions shared by the commands.
struct PreparedData {
  NormStats stats;
  SeriesTable train_rows;  // normalized; includes the validation tail
  SeriesTable val_rows;
  SeriesTable test_rows;
  Index rows_dropped = 0;
  Index in_channels = 0;
};

// ingest/generate -> (optional) upsample -> split -> normalize on train only
PreparedData prepare_data(const RunSpec& spec);

void cmd_train(RunSpec spec);
void cmd_eval(RunSpec spec);
bool cmd_gradcheck(const RunSpec& spec);  // false when any component fails
void cmd_bench(RunSpec spec);
void cmd_report(const RunSpec& spec);

}  // namespace temponet
