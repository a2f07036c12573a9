#pragma once

#include <array>
#include <initializer_list>
#include <string>
#include <vector>

#include "temponet/common.hpp"

namespace temponet {

// Dense row-major extents, rank 1..4 (batch x heads x length x depth covers
// every layer in the model). All extents are >= 1.
class Shape {
 public:
  static constexpr int kMaxRank = 4;

  Shape() = default;

  Shape(std::initializer_list<Index> dims) { assign(dims.begin(), dims.end()); }

  explicit Shape(const std::vector<Index>& dims) {
    assign(dims.begin(), dims.end());
  }

  int rank() const { return rank_; }

  Index dim(int i) const {
    if (i < 0) i += rank_;
    if (i < 0 || i >= rank_) {
      throw ContractError("Shape::dim: axis " + std::to_string(i) +
                          " out of range for rank " + std::to_string(rank_));
    }
    return dims_[static_cast<std::size_t>(i)];
  }

  Index operator[](int i) const { return dim(i); }

  Index numel() const {
    if (rank_ == 0) return 0;
    Index n = 1;
    for (int i = 0; i < rank_; ++i) n *= dims_[static_cast<std::size_t>(i)];
    return n;
  }

  bool operator==(const Shape& other) const {
    if (rank_ != other.rank_) return false;
    for (int i = 0; i < rank_; ++i) {
      if (dims_[static_cast<std::size_t>(i)] !=
          other.dims_[static_cast<std::size_t>(i)])
        return false;
    }
    return true;
  }
  bool operator!=(const Shape& other) const { return !(*this == other); }

  std::string str() const {
    std::string s = "[";
    for (int i = 0; i < rank_; ++i) {
      if (i) s += ", ";
      s += std::to_string(dims_[static_cast<std::size_t>(i)]);
    }
    return s + "]";
  }

 private:
  template <class It>
  void assign(It first, It last) {
    rank_ = 0;
    for (It it = first; it != last; ++it) {
      if (rank_ >= kMaxRank) {
        throw ShapeError("Shape: rank exceeds " + std::to_string(kMaxRank));
      }
      if (*it < 1) {
        throw ShapeError("Shape: extents must be >= 1, got " +
                         std::to_string(*it));
      }
      dims_[static_cast<std::size_t>(rank_++)] = *it;
    }
    if (rank_ == 0) throw ShapeError("Shape: rank must be >= 1");
  }

  std::array<Index, kMaxRank> dims_{};
  int rank_ = 0;
};

}  // namespace temponet
