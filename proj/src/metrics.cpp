#include "temponet/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace temponet {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, const std::string& context) {
  if (cell.empty()) return std::nan("");
  double v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw DataError(context + ": cannot parse '" + cell + "' as a number");
  }
  return v;
}

Index parse_index(const std::string& cell, const std::string& context) {
  Index v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw DataError(context + ": cannot parse '" + cell + "' as an integer");
  }
  return v;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const MetricsCell* MetricsReport::find(const std::string& model,
                                       Index horizon) const {
  for (const auto& c : cells) {
    if (c.model == model && c.horizon == horizon) return &c;
  }
  return nullptr;
}

void write_report_csv(const std::string& path, const MetricsReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << "model,horizon,mae_deg,mse_deg2,param_count,train_wall_s,"
         "infer_mean_ms,infer_std_ms,failed,reason\n";
  for (const auto& c : report.cells) {
    out << c.model << ',' << c.horizon << ',' << format_double(c.mae) << ','
        << format_double(c.mse) << ',' << c.param_count << ','
        << format_double(c.train_wall_s) << ',' << format_double(c.infer_mean_ms)
        << ',' << format_double(c.infer_std_ms) << ',' << (c.failed ? 1 : 0)
        << ',' << c.reason << '\n';
  }
}

MetricsReport read_report_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  MetricsReport report;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = path + " line " + std::to_string(line_no);
    // reason is the last column and may contain commas: split off the first 9
    std::vector<std::string> cells = split_line(line);
    if (cells.size() < 10) {
      throw DataError(context + ": expected 10 columns");
    }
    MetricsCell c;
    c.model = cells[0];
    c.horizon = parse_index(cells[1], context);
    c.mae = parse_double(cells[2], context);
    c.mse = parse_double(cells[3], context);
    c.param_count = parse_index(cells[4], context);
    c.train_wall_s = parse_double(cells[5], context);
    c.infer_mean_ms = parse_double(cells[6], context);
    c.infer_std_ms = parse_double(cells[7], context);
    c.failed = parse_index(cells[8], context) != 0;
    c.reason = cells[9];
    for (std::size_t i = 10; i < cells.size(); ++i) c.reason += "," + cells[i];
    report.cells.push_back(std::move(c));
  }
  return report;
}

double MaeMatrix::at(Index horizon, const std::string& model) const {
  for (std::size_t r = 0; r < horizons.size(); ++r) {
    if (horizons[r] != horizon) continue;
    for (std::size_t c = 0; c < models.size(); ++c) {
      if (models[c] == model) return mae[r][c];
    }
  }
  throw DataError("mae matrix has no cell (" + model + ", " +
                  std::to_string(horizon) + ")");
}

MaeMatrix mae_matrix(const MetricsReport& report) {
  MaeMatrix m;
  for (const auto& c : report.cells) {
    if (std::find(m.horizons.begin(), m.horizons.end(), c.horizon) ==
        m.horizons.end()) {
      m.horizons.push_back(c.horizon);
    }
    if (std::find(m.models.begin(), m.models.end(), c.model) == m.models.end()) {
      m.models.push_back(c.model);
    }
  }
  std::sort(m.horizons.begin(), m.horizons.end());
  m.mae.assign(m.horizons.size(),
               std::vector<double>(m.models.size(), std::nan("")));
  for (const auto& c : report.cells) {
    if (c.failed) continue;
    const auto r = static_cast<std::size_t>(
        std::find(m.horizons.begin(), m.horizons.end(), c.horizon) -
        m.horizons.begin());
    const auto col = static_cast<std::size_t>(
        std::find(m.models.begin(), m.models.end(), c.model) - m.models.begin());
    m.mae[r][col] = c.mae;
  }
  return m;
}

void write_mae_matrix_csv(const std::string& path, const MaeMatrix& matrix) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << "horizon_ms";
  for (const auto& model : matrix.models) out << ',' << model;
  out << '\n';
  for (std::size_t r = 0; r < matrix.horizons.size(); ++r) {
    out << matrix.horizons[r];
    for (std::size_t c = 0; c < matrix.models.size(); ++c) {
      out << ',';
      if (!std::isnan(matrix.mae[r][c])) out << format_double(matrix.mae[r][c]);
    }
    out << '\n';
  }
}

MaeMatrix read_mae_matrix_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  std::vector<std::string> header = split_line(line);
  if (header.empty() || header[0] != "horizon_ms") {
    throw DataError(path + ": expected 'horizon_ms' as the first column");
  }
  MaeMatrix m;
  m.models.assign(header.begin() + 1, header.end());
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = path + " line " + std::to_string(line_no);
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw DataError(context + ": expected " + std::to_string(header.size()) +
                      " columns, got " + std::to_string(cells.size()));
    }
    m.horizons.push_back(parse_index(cells[0], context));
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      row.push_back(parse_double(cells[c], context));
    }
    m.mae.push_back(std::move(row));
  }
  return m;
}

double relative_improvement_percent(double other_mae, double reference_mae) {
  if (!(reference_mae > 0)) {
    throw NumericError("relative improvement undefined for reference MAE " +
                       format_double(reference_mae));
  }
  return 100.0 * (other_mae - reference_mae) / reference_mae;
}

ImprovementTable improvement_table(const MaeMatrix& matrix,
                                   const std::string& reference) {
  const auto ref_it =
      std::find(matrix.models.begin(), matrix.models.end(), reference);
  if (ref_it == matrix.models.end()) {
    throw DataError("improvement table: reference model '" + reference +
                    "' not in matrix");
  }
  const auto ref_col =
      static_cast<std::size_t>(ref_it - matrix.models.begin());

  ImprovementTable t;
  t.reference = reference;
  t.horizons = matrix.horizons;
  for (std::size_t c = 0; c < matrix.models.size(); ++c) {
    if (c != ref_col) t.others.push_back(matrix.models[c]);
  }
  for (std::size_t r = 0; r < matrix.horizons.size(); ++r) {
    std::vector<double> row;
    for (std::size_t c = 0; c < matrix.models.size(); ++c) {
      if (c == ref_col) continue;
      const double other = matrix.mae[r][c];
      const double ref = matrix.mae[r][ref_col];
      row.push_back(std::isnan(other) || std::isnan(ref)
                        ? std::nan("")
                        : relative_improvement_percent(other, ref));
    }
    t.percent.push_back(std::move(row));
  }
  return t;
}

void write_improvement_csv(const std::string& path,
                           const ImprovementTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << "# percent = 100 * (mae_other - mae_" << table.reference << ") / mae_"
      << table.reference << "; positive means " << table.reference
      << " is better\n";
  out << "horizon_ms";
  for (const auto& model : table.others) out << ',' << model;
  out << '\n';
  for (std::size_t r = 0; r < table.horizons.size(); ++r) {
    out << table.horizons[r];
    for (std::size_t c = 0; c < table.others.size(); ++c) {
      out << ',';
      if (!std::isnan(table.percent[r][c])) {
        out << format_double(table.percent[r][c]);
      }
    }
    out << '\n';
  }
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochStats>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write: " + path);
  out << "epoch,train_loss,val_loss,wall_ms\n";
  for (const auto& e : history) {
    out << e.epoch << ',' << format_double(e.train_loss) << ','
        << format_double(e.val_loss) << ',' << format_double(e.wall_ms) << '\n';
  }
}

std::vector<EpochStats> read_history_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  std::vector<EpochStats> history;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = path + " line " + std::to_string(line_no);
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != 4) throw DataError(context + ": expected 4 columns");
    EpochStats e;
    e.epoch = parse_index(cells[0], context);
    e.train_loss = parse_double(cells[1], context);
    e.val_loss = parse_double(cells[2], context);
    e.wall_ms = parse_double(cells[3], context);
    history.push_back(e);
  }
  return history;
}

}  // namespace temponet
