#pragma once

#include <string>
#include <vector>

#include "temponet/training.hpp"

namespace temponet {

// One evaluated (model, horizon) combination; either filled with metrics or
// marked failed with the reason.
struct MetricsCell {
  std::string model;
  Index horizon = 0;
  double mae = 0;  // degrees
  double mse = 0;  // degrees^2
  Index param_count = 0;
  double train_wall_s = 0;
  double infer_mean_ms = 0;
  double infer_std_ms = 0;
  bool failed = false;
  std::string reason;
};

struct MetricsReport {
  std::vector<MetricsCell> cells;

  const MetricsCell* find(const std::string& model, Index horizon) const;
};

// Long-form CSV: one row per cell, every float at 17 significant digits so
// re-parsing reproduces the report exactly.
void write_report_csv(const std::string& path, const MetricsReport& report);
MetricsReport read_report_csv(const std::string& path);

// MAE matrix with horizons as rows and models as columns. Cells never
// evaluated stay empty and read back as NaN.
struct MaeMatrix {
  std::vector<Index> horizons;
  std::vector<std::string> models;
  std::vector<std::vector<double>> mae;  // [horizon_row][model_col]

  double at(Index horizon, const std::string& model) const;
};

MaeMatrix mae_matrix(const MetricsReport& report);
void write_mae_matrix_csv(const std::string& path, const MaeMatrix& matrix);
MaeMatrix read_mae_matrix_csv(const std::string& path);

// 100 * (other - reference) / reference: by how many percent the other
// model's MAE exceeds the reference's (positive = reference is better).
double relative_improvement_percent(double other_mae, double reference_mae);

struct ImprovementTable {
  std::string reference;
  std::vector<Index> horizons;
  std::vector<std::string> others;
  std::vector<std::vector<double>> percent;  // [horizon_row][other_col]
};

ImprovementTable improvement_table(const MaeMatrix& matrix,
                                   const std::string& reference);
void write_improvement_csv(const std::string& path,
                           const ImprovementTable& table);

void write_history_csv(const std::string& path,
                       const std::vector<EpochStats>& history);
std::vector<EpochStats> read_history_csv(const std::string& path);

// 17-significant-digit formatting used by every CSV writer (round-trip safe).
std::string format_double(double v);

}  // namespace temponet
