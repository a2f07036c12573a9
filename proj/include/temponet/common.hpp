#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <malloc.h>
#include <new>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace temponet {

using Index = std::int64_t;

// Shape/width mismatches between operands.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite values where finite ones are required (inputs, losses, gradients).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Bad input data: files, schemas, series that violate their invariants.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse (e.g. backward on a non-scalar).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

template <class Scalar>
bool all_finite(std::span<const Scalar> xs) {
  for (const Scalar& x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Allocator for numeric buffers with two deliberate twists:
//  - allocations are pinned to 64-byte boundaries. Vectorized reductions
//    split an array into scalar head/tail and SIMD body based on where the
//    pointer falls relative to the packet size, so uniform alignment keeps
//    summation order — and therefore every last bit of the result —
//    independent of heap layout.
//  - value-initialization is skipped; activation buffers are written in full
//    right after allocation, so the memset would be pure overhead.
template <class T>
struct UninitAllocator {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  UninitAllocator() = default;
  template <class U>
  UninitAllocator(const UninitAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(
        ::operator new(n * sizeof(T), std::align_val_t{kAlign}));
  }
  void deallocate(T* p, std::size_t n) noexcept {
    ::operator delete(p, n * sizeof(T), std::align_val_t{kAlign});
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    if constexpr (sizeof...(Args) > 0) {
      ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
  }
  template <class U>
  bool operator==(const UninitAllocator<U>&) const noexcept {
    return true;
  }
  template <class U>
  bool operator!=(const UninitAllocator<U>&) const noexcept {
    return false;
  }
};

template <class Scalar>
using Buffer = std::vector<Scalar, UninitAllocator<Scalar>>;

// Keeps large activation buffers on the heap instead of round-tripping
// through mmap on every training step.
inline void tune_allocator() {
#ifdef M_MMAP_THRESHOLD
  mallopt(M_MMAP_THRESHOLD, 512 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
#endif
}

}  // namespace temponet
