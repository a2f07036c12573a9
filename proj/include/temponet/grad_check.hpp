#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "temponet/tensor.hpp"

namespace temponet {

// Central-difference audit of reverse-mode gradients.
struct GradCheckReport {
  struct Entry {
    std::string name;
    double max_rel_err = 0.0;
    Index worst_index = -1;
    double analytic = 0.0;   // at the worst element
    double numeric = 0.0;
  };
  std::vector<Entry> leaves;
  double max_rel_err = 0.0;

  bool pass(double tol) const { return max_rel_err < tol; }
};

// f rebuilds the forward pass from the given leaves and returns the scalar
// loss; it must be deterministic (same leaves, same loss bitwise). Each leaf
// element is wiggled by +-step and the central difference is compared against
// the recorded gradient. Relative error uses a floored denominator so
// near-zero gradients are judged on absolute terms.
template <class F>
GradCheckReport grad_check(F f,
                           std::vector<std::pair<std::string, Tensord>> leaves,
                           double step = 1e-5,
                           double denominator_floor = 1e-3) {
  const double probe0 = f().item();
  const double probe1 = f().item();
  if (std::memcmp(&probe0, &probe1, sizeof(double)) != 0) {
    throw ContractError(
        "grad_check: function is not deterministic; disable dropout and "
        "fix any stateful randomness before checking gradients");
  }
  if (!std::isfinite(probe0)) {
    throw NumericError("grad_check: loss is not finite at the base point");
  }

  for (auto& [name, leaf] : leaves) leaf.set_requires_grad(true).zero_grad();
  std::vector<std::vector<double>> analytic;
  {
    Graphd graph;
    Graphd::Scope scope(graph);
    Tensord loss = f();
    graph.backward(loss);
    for (auto& [name, leaf] : leaves) analytic.push_back(leaf.grad());
  }

  GradCheckReport report;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& [name, leaf] = leaves[li];
    GradCheckReport::Entry entry;
    entry.name = name;
    auto values = leaf.values_mut();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = f().item();
      values[i] = saved - step;
      const double down = f().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[li][i];
      const double denom =
          std::max({std::fabs(a), std::fabs(numeric), denominator_floor});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > entry.max_rel_err) {
        entry.max_rel_err = rel;
        entry.worst_index = static_cast<Index>(i);
        entry.analytic = a;
        entry.numeric = numeric;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.leaves.push_back(std::move(entry));
  }
  return report;
}

}  // namespace temponet
