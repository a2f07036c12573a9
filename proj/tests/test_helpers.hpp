#pragma once

#include <cstring>
#include <vector>

#include "temponet/random.hpp"
#include "temponet/tensor.hpp"

namespace testutil {

using temponet::Index;
using temponet::Rng;
using temponet::Shape;
using temponet::Tensord;

inline Tensord random_tensor(const Shape& shape, Rng& rng, double lo = -1.0,
                             double hi = 1.0) {
  Tensord t = Tensord::uninitialized(shape);
  for (double& v : t.values_mut()) v = rng.uniform(lo, hi);
  return t;
}

inline bool bitwise_equal(const Tensord& a, const Tensord& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.values().data(), b.values().data(),
                     a.values().size() * sizeof(double)) == 0;
}

inline double max_abs_diff(const Tensord& a, const Tensord& b) {
  double worst = 0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    worst = std::max(worst, std::abs(av[i] - bv[i]));
  }
  return worst;
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

}  // namespace testutil
