#pragma once

#include <span>
#include <string>
#include <vector>

#include "temponet/model.hpp"

namespace temponet {

// Named multichannel series sampled on a strictly increasing millisecond
// grid. Channels are column stores of equal length; no NaN survives
// ingestion.
struct SeriesTable {
  std::vector<double> time_ms;
  std::vector<std::string> channel_names;
  std::vector<std::vector<double>> channels;  // channels[c][row]
  std::string target_channel;

  Index rows() const { return static_cast<Index>(time_ms.size()); }
  Index n_channels() const { return static_cast<Index>(channels.size()); }

  Index channel_index(const std::string& name) const;
  const std::vector<double>& channel(const std::string& name) const;

  void validate() const;  // lengths equal, time strictly increasing, no NaN
};

struct CsvSchema {
  std::string time_column = "time_ms";
  std::string target_channel = "knee_angle_deg";
  // Channels to keep, in order; empty = every non-time column in file order.
  std::vector<std::string> feature_channels;
};

struct IngestResult {
  SeriesTable table;
  Index rows_dropped = 0;  // rows removed because a cell was NaN
};

// Parses a UTF-8, '.'-decimal CSV with a header row. Rows containing NaN are
// dropped (counted); unparseable cells, a missing target channel, or
// non-monotone timestamps raise DataError naming the offending line.
IngestResult ingest_csv(const std::string& path, const CsvSchema& schema);

// Piecewise-linear resampling from one uniform grid to a finer one.
// from_period must be a multiple of to_period; original samples are
// preserved bitwise at coincident timestamps.
SeriesTable upsample_linear(const SeriesTable& table, double from_period_ms,
                            double to_period_ms);

// Chronological split: first round(rows * ratio) rows go to train, the rest
// to test. Both sides keep at least one row.
std::pair<SeriesTable, SeriesTable> split_train_test(const SeriesTable& table,
                                                     double ratio);

// Per-channel affine normalization fitted on the training partition only.
// Standard deviation uses the population (1/n) formula.
struct NormStats {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::string> dropped;  // zero-variance non-target channels

  Index index_of(const std::string& name) const;
  double mean_of(const std::string& name) const;
  double stddev_of(const std::string& name) const;
};

NormStats fit_normalize(const SeriesTable& train);

// Returns a table with only the retained channels, each mapped to
// (x - mean) / stddev using the fitted stats.
SeriesTable apply_normalize(const SeriesTable& table, const NormStats& stats);

struct WindowSpec {
  Index lookback = 128;
  Index horizon = 20;
  Index label_len = 64;
  Index stride = 1;
  // Cycle length assumed by the sin/cos tick features.
  double mark_period_ms = 1000.0;

  void validate() const;
};

// Lazy sliding-window view over a (normalized) table. Window w starts at row
// w*stride; enc_in covers rows [s, s+L), the target rows [s+L, s+L+H), and
// dec_in repeats the last label_len observed rows followed by horizon
// zero-filled placeholder rows. Count = floor((rows - L - H)/stride) + 1.
class WindowDataset {
 public:
  WindowDataset(SeriesTable table, WindowSpec spec);

  Index size() const { return count_; }
  const WindowSpec& spec() const { return spec_; }
  const SeriesTable& table() const { return table_; }
  Index target_column() const { return target_col_; }

  // Absolute row where window w's forecast begins (first target row).
  Index forecast_row(Index w) const;

  ForecastBatch<double> make_batch(std::span<const Index> windows) const;
  ForecastBatch<double> make_batch(Index first_window, Index count) const;

 private:
  SeriesTable table_;
  WindowSpec spec_;
  Index count_ = 0;
  Index target_col_ = 0;
};

inline WindowDataset make_windows(SeriesTable table, const WindowSpec& spec) {
  return WindowDataset(std::move(table), spec);
}

// Deterministic quasi-periodic stand-in for a real recording session: a
// smooth periodic knee-angle target plus phase-shifted harmonic mixtures as
// pseudo EMG / accelerometer / gyroscope channels, all lightly noised from
// the seed. One row per millisecond.
SeriesTable synth_gait(Index n, std::uint64_t seed, Index n_channels = 40,
                       double period_ms = 1000.0);

}  // namespace temponet
