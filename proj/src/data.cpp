#include "temponet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <utility>

namespace temponet {

namespace {

constexpr double kZeroVariance = 1e-12;

std::string trim(std::string s) {
  const auto is_space = [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, Index line_no) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw DataError("csv line " + std::to_string(line_no) +
                    ": cannot parse '" + cell + "' as a number");
  }
  return value;
}

}  // namespace

// --- SeriesTable ----------------------------------------------------------------

Index SeriesTable::channel_index(const std::string& name) const {
  for (std::size_t i = 0; i < channel_names.size(); ++i) {
    if (channel_names[i] == name) return static_cast<Index>(i);
  }
  throw DataError("channel '" + name + "' not present in table");
}

const std::vector<double>& SeriesTable::channel(const std::string& name) const {
  return channels[static_cast<std::size_t>(channel_index(name))];
}

void SeriesTable::validate() const {
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (static_cast<Index>(channels[c].size()) != rows()) {
      throw DataError("channel '" + channel_names[c] + "' has " +
                      std::to_string(channels[c].size()) + " rows, time has " +
                      std::to_string(rows()));
    }
    if (!all_finite<double>(channels[c])) {
      throw DataError("channel '" + channel_names[c] +
                      "' contains non-finite values");
    }
  }
  for (Index i = 1; i < rows(); ++i) {
    if (!(time_ms[static_cast<std::size_t>(i)] >
          time_ms[static_cast<std::size_t>(i - 1)])) {
      throw DataError("timestamps not strictly increasing at row " +
                      std::to_string(i));
    }
  }
}

// --- ingest ---------------------------------------------------------------------

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open csv file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);

  Index time_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == schema.time_column) time_col = static_cast<Index>(i);
  }
  if (time_col < 0) {
    throw DataError(path + ": no '" + schema.time_column + "' column");
  }

  std::vector<std::string> keep_names;
  if (schema.feature_channels.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (static_cast<Index>(i) != time_col) keep_names.push_back(header[i]);
    }
  } else {
    keep_names = schema.feature_channels;
  }
  std::vector<Index> keep_cols;
  for (const std::string& name : keep_names) {
    Index col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) col = static_cast<Index>(i);
    }
    if (col < 0) throw DataError(path + ": no '" + name + "' column");
    keep_cols.push_back(col);
  }
  if (std::find(keep_names.begin(), keep_names.end(), schema.target_channel) ==
      keep_names.end()) {
    throw DataError(path + ": target channel '" + schema.target_channel +
                    "' not among ingested channels");
  }

  IngestResult result;
  SeriesTable& table = result.table;
  table.channel_names = keep_names;
  table.channels.resize(keep_names.size());
  table.target_channel = schema.target_channel;

  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError("csv line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " cells, got " +
                      std::to_string(cells.size()));
    }
    const double t =
        parse_cell(cells[static_cast<std::size_t>(time_col)], line_no);
    if (std::isnan(t)) {
      throw DataError("csv line " + std::to_string(line_no) +
                      ": NaN timestamp");
    }
    std::vector<double> row;
    row.reserve(keep_cols.size());
    bool has_nan = false;
    for (Index col : keep_cols) {
      const double v = parse_cell(cells[static_cast<std::size_t>(col)], line_no);
      if (std::isnan(v)) has_nan = true;
      row.push_back(v);
    }
    if (has_nan) {
      ++result.rows_dropped;
      continue;
    }
    if (!table.time_ms.empty() && t <= table.time_ms.back()) {
      throw DataError("csv line " + std::to_string(line_no) +
                      ": timestamp " + std::to_string(t) +
                      " not after previous " +
                      std::to_string(table.time_ms.back()));
    }
    table.time_ms.push_back(t);
    for (std::size_t c = 0; c < row.size(); ++c) table.channels[c].push_back(row[c]);
  }
  table.validate();
  return result;
}

// --- resampling -----------------------------------------------------------------

SeriesTable upsample_linear(const SeriesTable& table, double from_period_ms,
                            double to_period_ms) {
  if (from_period_ms <= 0 || to_period_ms <= 0) {
    throw DataError("upsample_linear: periods must be positive");
  }
  const Index ratio = static_cast<Index>(std::llround(from_period_ms / to_period_ms));
  if (ratio < 1 ||
      std::fabs(from_period_ms - static_cast<double>(ratio) * to_period_ms) > 1e-9) {
    throw DataError("upsample_linear: " + std::to_string(from_period_ms) +
                    " ms is not a multiple of " + std::to_string(to_period_ms) +
                    " ms");
  }
  const Index n = table.rows();
  for (Index i = 1; i < n; ++i) {
    const double dt = table.time_ms[static_cast<std::size_t>(i)] -
                      table.time_ms[static_cast<std::size_t>(i - 1)];
    if (std::fabs(dt - from_period_ms) > 1e-9) {
      throw DataError("upsample_linear: spacing " + std::to_string(dt) +
                      " ms at row " + std::to_string(i) +
                      " does not match declared period " +
                      std::to_string(from_period_ms) + " ms");
    }
  }

  SeriesTable out;
  out.channel_names = table.channel_names;
  out.target_channel = table.target_channel;
  out.channels.resize(table.channels.size());
  const Index n_out = n < 2 ? n : (n - 1) * ratio + 1;
  out.time_ms.reserve(static_cast<std::size_t>(n_out));
  for (auto& c : out.channels) c.reserve(static_cast<std::size_t>(n_out));

  for (Index i = 0; i + 1 < n; ++i) {
    for (Index j = 0; j < ratio; ++j) {
      if (j == 0) {
        // exact copy keeps originals bitwise intact
        out.time_ms.push_back(table.time_ms[static_cast<std::size_t>(i)]);
        for (std::size_t c = 0; c < table.channels.size(); ++c) {
          out.channels[c].push_back(table.channels[c][static_cast<std::size_t>(i)]);
        }
      } else {
        const double frac = static_cast<double>(j) / static_cast<double>(ratio);
        out.time_ms.push_back(table.time_ms[static_cast<std::size_t>(i)] +
                              static_cast<double>(j) * to_period_ms);
        for (std::size_t c = 0; c < table.channels.size(); ++c) {
          const double a = table.channels[c][static_cast<std::size_t>(i)];
          const double b = table.channels[c][static_cast<std::size_t>(i + 1)];
          out.channels[c].push_back(a + (b - a) * frac);
        }
      }
    }
  }
  if (n > 0) {
    out.time_ms.push_back(table.time_ms[static_cast<std::size_t>(n - 1)]);
    for (std::size_t c = 0; c < table.channels.size(); ++c) {
      out.channels[c].push_back(table.channels[c][static_cast<std::size_t>(n - 1)]);
    }
  }
  return out;
}

// --- split ----------------------------------------------------------------------

namespace {
SeriesTable slice_rows(const SeriesTable& table, Index first, Index count) {
  SeriesTable out;
  out.channel_names = table.channel_names;
  out.target_channel = table.target_channel;
  out.time_ms.assign(table.time_ms.begin() + first,
                     table.time_ms.begin() + first + count);
  for (const auto& c : table.channels) {
    out.channels.emplace_back(c.begin() + first, c.begin() + first + count);
  }
  return out;
}
}  // namespace

std::pair<SeriesTable, SeriesTable> split_train_test(const SeriesTable& table,
                                                     double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DataError("split_train_test: ratio must be in (0, 1), got " +
                    std::to_string(ratio));
  }
  const Index n = table.rows();
  if (n < 2) throw DataError("split_train_test: need at least 2 rows");
  Index n_train = static_cast<Index>(std::llround(static_cast<double>(n) * ratio));
  n_train = std::clamp(n_train, Index(1), n - 1);
  return {slice_rows(table, 0, n_train), slice_rows(table, n_train, n - n_train)};
}

// --- normalization --------------------------------------------------------------

Index NormStats::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<Index>(i);
  }
  throw DataError("normalization stats missing channel '" + name + "'");
}

double NormStats::mean_of(const std::string& name) const {
  return mean[static_cast<std::size_t>(index_of(name))];
}

double NormStats::stddev_of(const std::string& name) const {
  return stddev[static_cast<std::size_t>(index_of(name))];
}

NormStats fit_normalize(const SeriesTable& train) {
  if (train.rows() < 1) throw DataError("fit_normalize: empty table");
  NormStats stats;
  for (std::size_t c = 0; c < train.channels.size(); ++c) {
    const auto& xs = train.channels[c];
    const double n = static_cast<double>(xs.size());
    double mu = 0.0;
    for (double x : xs) mu += x;
    mu /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mu) * (x - mu);
    var /= n;  // population variance
    const double sd = std::sqrt(var);
    if (sd < kZeroVariance) {
      if (train.channel_names[c] == train.target_channel) {
        throw DataError("fit_normalize: target channel '" +
                        train.target_channel + "' has zero variance");
      }
      stats.dropped.push_back(train.channel_names[c]);
      continue;
    }
    stats.names.push_back(train.channel_names[c]);
    stats.mean.push_back(mu);
    stats.stddev.push_back(sd);
  }
  return stats;
}

SeriesTable apply_normalize(const SeriesTable& table, const NormStats& stats) {
  SeriesTable out;
  out.time_ms = table.time_ms;
  out.target_channel = table.target_channel;
  for (std::size_t i = 0; i < stats.names.size(); ++i) {
    const auto& src = table.channel(stats.names[i]);
    std::vector<double> dst(src.size());
    const double mu = stats.mean[i];
    const double inv_sd = 1.0 / stats.stddev[i];
    for (std::size_t r = 0; r < src.size(); ++r) dst[r] = (src[r] - mu) * inv_sd;
    out.channel_names.push_back(stats.names[i]);
    out.channels.push_back(std::move(dst));
  }
  return out;
}

// --- windowing ------------------------------------------------------------------

void WindowSpec::validate() const {
  if (lookback < 1 || horizon < 1 || stride < 1) {
    throw DataError("WindowSpec: lookback, horizon and stride must be >= 1");
  }
  if (label_len < 0 || label_len > lookback) {
    throw DataError("WindowSpec: label_len must lie in [0, lookback]");
  }
  if (mark_period_ms <= 0) {
    throw DataError("WindowSpec: mark_period_ms must be positive");
  }
}

WindowDataset::WindowDataset(SeriesTable table, WindowSpec spec)
    : table_(std::move(table)), spec_(spec) {
  spec_.validate();
  table_.validate();
  const Index need = spec_.lookback + spec_.horizon;
  if (table_.rows() < need) {
    throw DataError("make_windows: table has " + std::to_string(table_.rows()) +
                    " rows, need at least lookback + horizon = " +
                    std::to_string(need));
  }
  target_col_ = table_.channel_index(table_.target_channel);
  count_ = (table_.rows() - need) / spec_.stride + 1;
}

Index WindowDataset::forecast_row(Index w) const {
  if (w < 0 || w >= count_) {
    throw ContractError("forecast_row: window " + std::to_string(w) +
                        " out of range [0, " + std::to_string(count_) + ")");
  }
  return w * spec_.stride + spec_.lookback;
}

namespace {
void fill_marks(double* dst, const std::vector<double>& time_ms, Index first,
                Index count, double period) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (Index r = 0; r < count; ++r) {
    const double phase =
        std::fmod(time_ms[static_cast<std::size_t>(first + r)], period) /
        period * two_pi;
    dst[r * kMarkFeatures + 0] = std::sin(phase);
    dst[r * kMarkFeatures + 1] = std::cos(phase);
  }
}
}  // namespace

ForecastBatch<double> WindowDataset::make_batch(
    std::span<const Index> windows) const {
  if (windows.empty()) throw ContractError("make_batch: empty window list");
  const Index b = static_cast<Index>(windows.size());
  const Index lb = spec_.lookback;
  const Index dec_len = spec_.label_len + spec_.horizon;
  const Index n_ch = table_.n_channels();

  ForecastBatch<double> batch;
  batch.target_column = target_col_;
  batch.enc_in = Tensord::uninitialized(Shape{b, lb, n_ch});
  batch.dec_in = Tensord::uninitialized(Shape{b, dec_len, n_ch});
  batch.enc_marks = Tensord::uninitialized(Shape{b, lb, kMarkFeatures});
  batch.dec_marks = Tensord::uninitialized(Shape{b, dec_len, kMarkFeatures});
  batch.target = Tensord::uninitialized(Shape{b, spec_.horizon, 1});

  double* enc = batch.enc_in.values_mut().data();
  double* dec = batch.dec_in.values_mut().data();
  double* enc_marks = batch.enc_marks.values_mut().data();
  double* dec_marks = batch.dec_marks.values_mut().data();
  double* target = batch.target.values_mut().data();

  for (Index bi = 0; bi < b; ++bi) {
    const Index w = windows[static_cast<std::size_t>(bi)];
    if (w < 0 || w >= count_) {
      throw ContractError("make_batch: window " + std::to_string(w) +
                          " out of range [0, " + std::to_string(count_) + ")");
    }
    const Index s = w * spec_.stride;
    for (Index r = 0; r < lb; ++r) {
      for (Index c = 0; c < n_ch; ++c) {
        enc[(bi * lb + r) * n_ch + c] =
            table_.channels[static_cast<std::size_t>(c)]
                           [static_cast<std::size_t>(s + r)];
      }
    }
    // warm start: observed label rows, then zero placeholders for the future
    for (Index r = 0; r < spec_.label_len; ++r) {
      const Index row = s + lb - spec_.label_len + r;
      for (Index c = 0; c < n_ch; ++c) {
        dec[(bi * dec_len + r) * n_ch + c] =
            table_.channels[static_cast<std::size_t>(c)]
                           [static_cast<std::size_t>(row)];
      }
    }
    std::fill_n(dec + (bi * dec_len + spec_.label_len) * n_ch,
                spec_.horizon * n_ch, 0.0);
    for (Index r = 0; r < spec_.horizon; ++r) {
      target[(bi * spec_.horizon + r)] =
          table_.channels[static_cast<std::size_t>(target_col_)]
                         [static_cast<std::size_t>(s + lb + r)];
    }
    fill_marks(enc_marks + bi * lb * kMarkFeatures, table_.time_ms, s, lb,
               spec_.mark_period_ms);
    fill_marks(dec_marks + bi * dec_len * kMarkFeatures, table_.time_ms,
               s + lb - spec_.label_len, dec_len, spec_.mark_period_ms);
  }
  return batch;
}

ForecastBatch<double> WindowDataset::make_batch(Index first_window,
                                                Index count) const {
  std::vector<Index> idx(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = first_window + i;
  return make_batch(idx);
}

// --- synthetic generator ---------------------------------------------------------

SeriesTable synth_gait(Index n, std::uint64_t seed, Index n_channels,
                       double period_ms) {
  if (n < 1) throw DataError("synth_gait: n must be >= 1");
  if (n_channels < 1) throw DataError("synth_gait: need at least one channel");

  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double omega = two_pi / period_ms;
  Rng rng(seed);

  SeriesTable table;
  table.target_channel = "knee_angle_deg";
  table.time_ms.resize(static_cast<std::size_t>(n));
  for (Index t = 0; t < n; ++t) {
    table.time_ms[static_cast<std::size_t>(t)] = static_cast<double>(t);
  }

  {
    // smooth periodic knee angle: fundamental stride harmonic plus a second
    // harmonic and light noise, all in degrees
    const double phase0 = rng.uniform(0.0, two_pi);
    const double phase1 = rng.uniform(0.0, two_pi);
    std::vector<double> knee(static_cast<std::size_t>(n));
    for (Index t = 0; t < n; ++t) {
      const double x = static_cast<double>(t);
      knee[static_cast<std::size_t>(t)] = 35.0 + 25.0 * std::sin(omega * x + phase0) +
                                          8.0 * std::sin(2.0 * omega * x + phase1) +
                                          0.5 * rng.uniform(-1.0, 1.0);
    }
    table.channel_names.push_back(table.target_channel);
    table.channels.push_back(std::move(knee));
  }

  static constexpr const char* kPrefixes[3] = {"emg", "acc", "gyr"};
  for (Index k = 0; k < n_channels - 1; ++k) {
    const double a1 = rng.uniform(0.5, 2.0);
    const double a2 = rng.uniform(0.1, 0.8);
    const double ph1 = rng.uniform(0.0, two_pi);
    const double ph2 = rng.uniform(0.0, two_pi);
    const double noise_amp = rng.uniform(0.05, 0.3);
    std::vector<double> ch(static_cast<std::size_t>(n));
    for (Index t = 0; t < n; ++t) {
      const double x = static_cast<double>(t);
      ch[static_cast<std::size_t>(t)] = a1 * std::sin(omega * x + ph1) +
                                        a2 * std::sin(2.0 * omega * x + ph2) +
                                        noise_amp * rng.uniform(-1.0, 1.0);
    }
    const std::size_t modality = static_cast<std::size_t>(k % 3);
    const Index number = k / 3;
    std::string name = std::string(kPrefixes[modality]) + "_" +
                       (number < 10 ? "0" : "") + std::to_string(number);
    table.channel_names.push_back(std::move(name));
    table.channels.push_back(std::move(ch));
  }
  return table;
}

}  // namespace temponet
