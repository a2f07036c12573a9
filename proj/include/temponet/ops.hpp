#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "temponet/random.hpp"
#include "temponet/tensor.hpp"

// Differentiable primitives over Tensor<Scalar>. Every op validates shapes,
// computes its value through Eigen maps over the row-major buffers, and, when
// a Graph is active, records a pull-back closure that accumulates (+=) into
// its inputs' gradient buffers.

namespace temponet {

namespace detail {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MatMap = Eigen::Map<Mat<S>>;
template <class S>
using CMatMap = Eigen::Map<const Mat<S>>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using ArrMap = Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>>;
template <class S>
using CArrMap = Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>>;
template <class S>
using CRowArrMap = Eigen::Map<const Eigen::Array<S, 1, Eigen::Dynamic>>;

template <class S>
MatMap<S> mat(std::span<S> v, Index rows, Index cols) {
  return MatMap<S>(v.data(), rows, cols);
}
template <class S>
CMatMap<S> cmat(std::span<const S> v, Index rows, Index cols) {
  return CMatMap<S>(v.data(), rows, cols);
}
template <class S>
ArrMap<S> arr(std::span<S> v) {
  return ArrMap<S>(v.data(), static_cast<Index>(v.size()));
}
template <class S>
CArrMap<S> carr(std::span<const S> v) {
  return CArrMap<S>(v.data(), static_cast<Index>(v.size()));
}

template <class S>
void record(const char* tag, std::initializer_list<const Tensor<S>*> ins,
            const Tensor<S>& out, std::function<void()> fn) {
  if (Graph<S>* g = Graph<S>::active()) g->record(tag, ins, out, std::move(fn));
}

// Whether a gradient for t must be computed: either t is a requires-grad leaf
// or gradient flows through it to one.
template <class S>
bool needs_grad(const Tensor<S>& t) {
  if (t.requires_grad()) return true;
  Graph<S>* g = Graph<S>::active();
  return g != nullptr && g->is_op_output(*t.data_ptr());
}

// Row-major strides of dims padded to rank 4 with trailing ones.
struct Dims4 {
  std::array<Index, 4> dim{1, 1, 1, 1};
  std::array<Index, 4> stride{1, 1, 1, 1};
};
inline Dims4 pad4(const Shape& s) {
  Dims4 d;
  for (int i = 0; i < s.rank(); ++i) d.dim[static_cast<std::size_t>(i)] = s.dim(i);
  d.stride[3] = 1;
  for (int i = 2; i >= 0; --i) {
    d.stride[static_cast<std::size_t>(i)] =
        d.stride[static_cast<std::size_t>(i + 1)] *
        d.dim[static_cast<std::size_t>(i + 1)];
  }
  return d;
}

template <class S, bool Accumulate>
void permute_kernel(const S* src, const Dims4& in, const std::array<int, 4>& p,
                    S* dst) {
  const Index d0 = in.dim[static_cast<std::size_t>(p[0])];
  const Index d1 = in.dim[static_cast<std::size_t>(p[1])];
  const Index d2 = in.dim[static_cast<std::size_t>(p[2])];
  const Index d3 = in.dim[static_cast<std::size_t>(p[3])];
  const Index s0 = in.stride[static_cast<std::size_t>(p[0])];
  const Index s1 = in.stride[static_cast<std::size_t>(p[1])];
  const Index s2 = in.stride[static_cast<std::size_t>(p[2])];
  const Index s3 = in.stride[static_cast<std::size_t>(p[3])];
  Index pos = 0;
  for (Index a = 0; a < d0; ++a)
    for (Index b = 0; b < d1; ++b)
      for (Index c = 0; c < d2; ++c) {
        const S* row = src + a * s0 + b * s1 + c * s2;
        for (Index e = 0; e < d3; ++e) {
          if constexpr (Accumulate) {
            dst[pos++] += row[e * s3];
          } else {
            dst[pos++] = row[e * s3];
          }
        }
      }
}

}  // namespace detail

// --- matmul -----------------------------------------------------------------

// a: [..., m, k]. b: either [k, n] (applied to every leading slice, computed
// as one fused GEMM) or [..., k, n] with leading dims equal to a's (a batch
// of GEMMs).
template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.rank() < 2) {
    throw ShapeError("matmul: lhs must have rank >= 2, got " + sa.str());
  }
  const Index m = sa.dim(-2);
  const Index k = sa.dim(-1);
  const bool shared_rhs = sb.rank() == 2 && sa.rank() > 2;
  if (!shared_rhs && sb.rank() != sa.rank()) {
    throw ShapeError("matmul: rank mismatch " + sa.str() + " x " + sb.str());
  }
  if (!shared_rhs) {
    for (int i = 0; i < sa.rank() - 2; ++i) {
      if (sa.dim(i) != sb.dim(i)) {
        throw ShapeError("matmul: batch dims differ, " + sa.str() + " x " +
                         sb.str());
      }
    }
  }
  if (sb.dim(-2) != k) {
    throw ShapeError("matmul: inner dims differ, " + sa.str() + " x " +
                     sb.str());
  }
  const Index n = sb.dim(-1);
  const Index batch = sa.numel() / (m * k);

  Shape out_shape = [&] {
    std::vector<Index> d;
    for (int i = 0; i < sa.rank() - 1; ++i) d.push_back(sa.dim(i));
    d.push_back(n);
    return Shape(d);
  }();
  Tensor<S> out = Tensor<S>::uninitialized(out_shape);

  if (shared_rhs || sa.rank() == 2) {
    auto A = detail::cmat(a.values(), batch * m, k);
    auto B = detail::cmat(b.values(), k, n);
    detail::mat(out.values_mut(), batch * m, n).noalias() = A * B;
  } else {
    for (Index i = 0; i < batch; ++i) {
      detail::CMatMap<S> A(a.values().data() + i * m * k, m, k);
      detail::CMatMap<S> B(b.values().data() + i * k * n, k, n);
      detail::MatMap<S> C(out.values_mut().data() + i * m * n, m, n);
      C.noalias() = A * B;
    }
  }

  const bool need_a = detail::needs_grad(a);
  const bool need_b = detail::needs_grad(b);
  detail::record<S>(
      "matmul", {&a, &b}, out,
      [ad = a.data_ptr(), bd = b.data_ptr(), od = out.data_ptr(), m, k, n,
       batch, shared_rhs, need_a, need_b] {
        detail::CMatMap<S> G(od->grad.data(), batch * m, n);
        if (shared_rhs || batch == 1) {
          if (need_a) {
            ad->ensure_grad();
            detail::MatMap<S> dA(ad->grad.data(), batch * m, k);
            detail::CMatMap<S> B(bd->values.data(), k, n);
            dA.noalias() += G * B.transpose();
          }
          if (need_b) {
            bd->ensure_grad();
            detail::MatMap<S> dB(bd->grad.data(), k, n);
            detail::CMatMap<S> A(ad->values.data(), batch * m, k);
            dB.noalias() += A.transpose() * G;
          }
        } else {
          if (need_a) ad->ensure_grad();
          if (need_b) bd->ensure_grad();
          for (Index i = 0; i < batch; ++i) {
            detail::CMatMap<S> Gi(od->grad.data() + i * m * n, m, n);
            if (need_a) {
              detail::MatMap<S> dA(ad->grad.data() + i * m * k, m, k);
              detail::CMatMap<S> B(bd->values.data() + i * k * n, k, n);
              dA.noalias() += Gi * B.transpose();
            }
            if (need_b) {
              detail::MatMap<S> dB(bd->grad.data() + i * k * n, k, n);
              detail::CMatMap<S> A(ad->values.data() + i * m * k, m, k);
              dB.noalias() += A.transpose() * Gi;
            }
          }
        }
      });
  return out;
}

// --- axis permutation / reshape ----------------------------------------------

template <class S>
Tensor<S> transpose(const Tensor<S>& x, const std::vector<int>& perm) {
  const Shape& s = x.shape();
  const int r = s.rank();
  if (static_cast<int>(perm.size()) != r) {
    throw ShapeError("transpose: permutation size " +
                     std::to_string(perm.size()) + " for rank " +
                     std::to_string(r));
  }
  std::array<bool, Shape::kMaxRank> seen{};
  for (int p : perm) {
    if (p < 0 || p >= r || seen[static_cast<std::size_t>(p)]) {
      throw ShapeError("transpose: invalid permutation for rank " +
                       std::to_string(r));
    }
    seen[static_cast<std::size_t>(p)] = true;
  }

  std::vector<Index> out_dims;
  for (int i = 0; i < r; ++i) out_dims.push_back(s.dim(perm[static_cast<std::size_t>(i)]));
  Tensor<S> out = Tensor<S>::uninitialized(Shape(out_dims));

  std::array<int, 4> p4{0, 1, 2, 3};
  for (int i = 0; i < r; ++i) p4[static_cast<std::size_t>(i)] = perm[static_cast<std::size_t>(i)];
  const detail::Dims4 in4 = detail::pad4(s);
  detail::permute_kernel<S, false>(x.values().data(), in4, p4,
                                   out.values_mut().data());

  std::array<int, 4> inv{0, 1, 2, 3};
  for (int i = 0; i < r; ++i) inv[static_cast<std::size_t>(p4[static_cast<std::size_t>(i)])] = i;
  const bool need_x = detail::needs_grad(x);
  detail::record<S>(
      "transpose", {&x}, out,
      [xd = x.data_ptr(), od = out.data_ptr(), inv, need_x] {
        if (!need_x) return;
        xd->ensure_grad();
        const detail::Dims4 g4 = detail::pad4(od->shape);
        detail::permute_kernel<S, true>(od->grad.data(), g4, inv,
                                        xd->grad.data());
      });
  return out;
}

// Swaps the last two axes; leading axes are untouched.
template <class S>
Tensor<S> transpose_last2(const Tensor<S>& x) {
  const int r = x.shape().rank();
  if (r < 2) {
    throw ShapeError("transpose_last2: rank must be >= 2, got " +
                     x.shape().str());
  }
  std::vector<int> perm(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::swap(perm[static_cast<std::size_t>(r - 2)],
            perm[static_cast<std::size_t>(r - 1)]);
  return transpose(x, perm);
}

template <class S>
Tensor<S> reshape(const Tensor<S>& x, const Shape& shape) {
  if (shape.numel() != x.numel()) {
    throw ShapeError("reshape: " + x.shape().str() + " has " +
                     std::to_string(x.numel()) + " elements, target " +
                     shape.str() + " has " + std::to_string(shape.numel()));
  }
  Tensor<S> out = Tensor<S>::uninitialized(shape);
  std::copy(x.values().begin(), x.values().end(), out.values_mut().begin());
  const bool need_x = detail::needs_grad(x);
  detail::record<S>("reshape", {&x}, out,
                    [xd = x.data_ptr(), od = out.data_ptr(), need_x] {
                      if (!need_x) return;
                      xd->ensure_grad();
                      detail::ArrMap<S>(xd->grad.data(),
                                        static_cast<Index>(xd->grad.size())) +=
                          detail::CArrMap<S>(od->grad.data(),
                                             static_cast<Index>(od->grad.size()));
                    });
  return out;
}

// --- elementwise -------------------------------------------------------------

// b's shape must equal a's shape or a's trailing dims (then b is added to
// every leading slice: bias over the last axis, positional table over the
// last two, ...).
template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  const Index an = a.numel();
  const Index bn = b.numel();
  const int ra = a.shape().rank();
  const int rb = b.shape().rank();
  if (rb > ra) {
    throw ShapeError("add: rhs rank exceeds lhs, " + a.shape().str() + " + " +
                     b.shape().str());
  }
  for (int i = 0; i < rb; ++i) {
    if (b.shape().dim(i) != a.shape().dim(i + ra - rb)) {
      throw ShapeError("add: shapes not broadcastable, " + a.shape().str() +
                       " + " + b.shape().str());
    }
  }
  const Index reps = an / bn;
  Tensor<S> out = Tensor<S>::uninitialized(a.shape());
  {
    auto A = detail::cmat(a.values(), reps, bn);
    detail::CRowArrMap<S> B(b.values().data(), bn);
    detail::mat(out.values_mut(), reps, bn) =
        (A.array().rowwise() + B).matrix();
  }
  const bool need_a = detail::needs_grad(a);
  const bool need_b = detail::needs_grad(b);
  detail::record<S>(
      "add", {&a, &b}, out,
      [ad = a.data_ptr(), bd = b.data_ptr(), od = out.data_ptr(), reps, bn,
       need_a, need_b] {
        detail::CMatMap<S> G(od->grad.data(), reps, bn);
        if (need_a) {
          ad->ensure_grad();
          detail::MatMap<S>(ad->grad.data(), reps, bn) += G;
        }
        if (need_b) {
          bd->ensure_grad();
          Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(bd->grad.data(), bn) +=
              G.colwise().sum();
        }
      });
  return out;
}

template <class S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("sub: shapes differ, " + a.shape().str() + " - " +
                     b.shape().str());
  }
  Tensor<S> out = Tensor<S>::uninitialized(a.shape());
  detail::arr(out.values_mut()) = detail::carr(a.values()) - detail::carr(b.values());
  const bool need_a = detail::needs_grad(a);
  const bool need_b = detail::needs_grad(b);
  detail::record<S>(
      "sub", {&a, &b}, out,
      [ad = a.data_ptr(), bd = b.data_ptr(), od = out.data_ptr(), need_a,
       need_b] {
        detail::CArrMap<S> G(od->grad.data(), static_cast<Index>(od->grad.size()));
        if (need_a) {
          ad->ensure_grad();
          detail::ArrMap<S>(ad->grad.data(), G.size()) += G;
        }
        if (need_b) {
          bd->ensure_grad();
          detail::ArrMap<S>(bd->grad.data(), G.size()) -= G;
        }
      });
  return out;
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mul: shapes differ, " + a.shape().str() + " * " +
                     b.shape().str());
  }
  Tensor<S> out = Tensor<S>::uninitialized(a.shape());
  detail::arr(out.values_mut()) = detail::carr(a.values()) * detail::carr(b.values());
  const bool need_a = detail::needs_grad(a);
  const bool need_b = detail::needs_grad(b);
  detail::record<S>(
      "mul", {&a, &b}, out,
      [ad = a.data_ptr(), bd = b.data_ptr(), od = out.data_ptr(), need_a,
       need_b] {
        detail::CArrMap<S> G(od->grad.data(), static_cast<Index>(od->grad.size()));
        if (need_a) {
          ad->ensure_grad();
          detail::ArrMap<S>(ad->grad.data(), G.size()) +=
              G * detail::CArrMap<S>(bd->values.data(), G.size());
        }
        if (need_b) {
          bd->ensure_grad();
          detail::ArrMap<S>(bd->grad.data(), G.size()) +=
              G * detail::CArrMap<S>(ad->values.data(), G.size());
        }
      });
  return out;
}

template <class S>
Tensor<S> scale(const Tensor<S>& x, S c) {
  Tensor<S> out = Tensor<S>::uninitialized(x.shape());
  detail::arr(out.values_mut()) = detail::carr(x.values()) * c;
  const bool need_x = detail::needs_grad(x);
  detail::record<S>("scale", {&x}, out,
                    [xd = x.data_ptr(), od = out.data_ptr(), c, need_x] {
                      if (!need_x) return;
                      xd->ensure_grad();
                      detail::ArrMap<S>(xd->grad.data(),
                                        static_cast<Index>(xd->grad.size())) +=
                          detail::CArrMap<S>(od->grad.data(),
                                             static_cast<Index>(od->grad.size())) *
                          c;
                    });
  return out;
}

template <class S>
Tensor<S> add_scalar(const Tensor<S>& x, S c) {
  Tensor<S> out = Tensor<S>::uninitialized(x.shape());
  detail::arr(out.values_mut()) = detail::carr(x.values()) + c;
  const bool need_x = detail::needs_grad(x);
  detail::record<S>("add_scalar", {&x}, out,
                    [xd = x.data_ptr(), od = out.data_ptr(), need_x] {
                      if (!need_x) return;
                      xd->ensure_grad();
                      detail::ArrMap<S>(xd->grad.data(),
                                        static_cast<Index>(xd->grad.size())) +=
                          detail::CArrMap<S>(od->grad.data(),
                                             static_cast<Index>(od->grad.size()));
                    });
  return out;
}

// --- nonlinearities ----------------------------------------------------------

template <class S>
Tensor<S> relu(const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::uninitialized(x.shape());
  detail::arr(out.values_mut()) = detail::carr(x.values()).max(S(0));
  const bool need_x = detail::needs_grad(x);
  detail::record<S>("relu", {&x}, out,
                    [xd = x.data_ptr(), od = out.data_ptr(), need_x] {
                      if (!need_x) return;
                      xd->ensure_grad();
                      const Index n = static_cast<Index>(xd->grad.size());
                      detail::ArrMap<S>(xd->grad.data(), n) +=
                          detail::CArrMap<S>(od->grad.data(), n) *
                          (detail::CArrMap<S>(xd->values.data(), n) > S(0))
                              .template cast<S>();
                    });
  return out;
}

// Exact Gaussian form: 0.5 x (1 + erf(x / sqrt(2))).
template <class S>
Tensor<S> gelu(const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::uninitialized(x.shape());
  {
    auto in = x.values();
    auto ov = out.values_mut();
    for (std::size_t i = 0; i < in.size(); ++i) {
      ov[i] = S(0.5) * in[i] * (S(1) + std::erf(in[i] * std::numbers::sqrt2_v<S> / S(2)));
    }
  }
  const bool need_x = detail::needs_grad(x);
  detail::record<S>(
      "gelu", {&x}, out, [xd = x.data_ptr(), od = out.data_ptr(), need_x] {
        if (!need_x) return;
        xd->ensure_grad();
        constexpr S inv_sqrt2 = std::numbers::sqrt2_v<S> / S(2);
        constexpr S inv_sqrt2pi = S(0.3989422804014326779399461);
        for (std::size_t i = 0; i < xd->grad.size(); ++i) {
          const S v = xd->values[i];
          const S cdf = S(0.5) * (S(1) + std::erf(v * inv_sqrt2));
          const S pdf = inv_sqrt2pi * std::exp(S(-0.5) * v * v);
          xd->grad[i] += od->grad[i] * (cdf + v * pdf);
        }
      });
  return out;
}

template <class S>
Tensor<S> abs(const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::uninitialized(x.shape());
  detail::arr(out.values_mut()) = detail::carr(x.values()).abs();
  const bool need_x = detail::needs_grad(x);
  detail::record<S>("abs", {&x}, out,
                    [xd = x.data_ptr(), od = out.data_ptr(), need_x] {
                      if (!need_x) return;
                      xd->ensure_grad();
                      const Index n = static_cast<Index>(xd->grad.size());
                      detail::ArrMap<S>(xd->grad.data(), n) +=
                          detail::CArrMap<S>(od->grad.data(), n) *
                          detail::CArrMap<S>(xd->values.data(), n).sign();
                    });
  return out;
}

// --- softmax -----------------------------------------------------------------

// Softmax over the last axis with max-subtraction. Rows whose exponentials
// are non-finite or sum to zero indicate poisoned logits and raise
// NumericError.
template <class S>
Tensor<S> softmax_lastdim(const Tensor<S>& x) {
  const Index cols = x.shape().dim(-1);
  const Index rows = x.numel() / cols;
  Tensor<S> out = Tensor<S>::uninitialized(x.shape());
  {
    auto X = detail::cmat(x.values(), rows, cols);
    auto O = detail::mat(out.values_mut(), rows, cols);
    const detail::Vec<S> mx = X.rowwise().maxCoeff();
    O = (X.colwise() - mx).array().exp().matrix();
    const detail::Vec<S> sums = O.rowwise().sum();
    if (!sums.allFinite() || (sums.array() <= S(0)).any()) {
      throw NumericError("softmax: non-finite logits or fully-masked row");
    }
    O.array().colwise() /= sums.array();
  }
  const bool need_x = detail::needs_grad(x);
  detail::record<S>(
      "softmax", {&x}, out,
      [xd = x.data_ptr(), od = out.data_ptr(), rows, cols, need_x] {
        if (!need_x) return;
        xd->ensure_grad();
        detail::CMatMap<S> G(od->grad.data(), rows, cols);
        detail::CMatMap<S> Sm(od->values.data(), rows, cols);
        detail::MatMap<S> DX(xd->grad.data(), rows, cols);
        const detail::Vec<S> dots =
            (G.array() * Sm.array()).matrix().rowwise().sum();
        DX.array() += Sm.array() * (G.colwise() - dots).array();
      });
  return out;
}

// --- layer norm --------------------------------------------------------------

// Normalizes over the last axis using the population variance, then applies
// the learned elementwise gain and bias.
template <class S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gain,
                     const Tensor<S>& bias, S eps = S(1e-5)) {
  const Index d = x.shape().dim(-1);
  if (gain.shape().rank() != 1 || gain.numel() != d || bias.shape() != gain.shape()) {
    throw ShapeError("layer_norm: gain/bias must be rank-1 of size " +
                     std::to_string(d) + ", got " + gain.shape().str() +
                     " and " + bias.shape().str());
  }
  const Index rows = x.numel() / d;
  Tensor<S> out = Tensor<S>::uninitialized(x.shape());
  auto xhat = std::make_shared<Buffer<S>>();
  xhat->resize(static_cast<std::size_t>(x.numel()));
  auto inv_std = std::make_shared<Buffer<S>>();
  inv_std->resize(static_cast<std::size_t>(rows));
  {
    auto X = detail::cmat(x.values(), rows, d);
    auto O = detail::mat(out.values_mut(), rows, d);
    detail::MatMap<S> XH(xhat->data(), rows, d);
    detail::CRowArrMap<S> g(gain.values().data(), d);
    detail::CRowArrMap<S> b(bias.values().data(), d);
    for (Index r = 0; r < rows; ++r) {
      const S mu = X.row(r).mean();
      const S var = (X.row(r).array() - mu).square().sum() / S(d);
      const S istd = S(1) / std::sqrt(var + eps);
      (*inv_std)[static_cast<std::size_t>(r)] = istd;
      XH.row(r).array() = (X.row(r).array() - mu) * istd;
      O.row(r).array() = XH.row(r).array() * g + b;
    }
  }
  const bool need_x = detail::needs_grad(x);
  const bool need_g = detail::needs_grad(gain);
  const bool need_b = detail::needs_grad(bias);
  detail::record<S>(
      "layer_norm", {&x, &gain, &bias}, out,
      [xd = x.data_ptr(), gd = gain.data_ptr(), bd = bias.data_ptr(),
       od = out.data_ptr(), xhat, inv_std, rows, d, need_x, need_g, need_b] {
        detail::CMatMap<S> G(od->grad.data(), rows, d);
        detail::CMatMap<S> XH(xhat->data(), rows, d);
        detail::CRowArrMap<S> g(gd->values.data(), d);
        if (need_x) {
          xd->ensure_grad();
          detail::MatMap<S> DX(xd->grad.data(), rows, d);
          for (Index r = 0; r < rows; ++r) {
            const auto dyg = (G.row(r).array() * g).eval();
            const S s1 = dyg.sum();
            const S s2 = (dyg * XH.row(r).array()).sum();
            const S istd = (*inv_std)[static_cast<std::size_t>(r)];
            DX.row(r).array() +=
                istd * (dyg - s1 / S(d) - XH.row(r).array() * (s2 / S(d)));
          }
        }
        if (need_g) {
          gd->ensure_grad();
          Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(gd->grad.data(), d) +=
              (G.array() * XH.array()).matrix().colwise().sum();
        }
        if (need_b) {
          bd->ensure_grad();
          Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(bd->grad.data(), d) +=
              G.colwise().sum();
        }
      });
  return out;
}

// --- dropout -----------------------------------------------------------------

// Inverted dropout: kept activations are scaled by 1/(1-rate) so evaluation
// needs no rescaling. Identity (and recorded as nothing) when rate is zero or
// training is off.
template <class S>
Tensor<S> dropout(const Tensor<S>& x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ContractError("dropout: rate must be in [0, 1), got " +
                        std::to_string(rate));
  }
  if (rate == 0.0 || !training) return x;
  Tensor<S> out = Tensor<S>::uninitialized(x.shape());
  auto mask = std::make_shared<Buffer<S>>();
  mask->resize(static_cast<std::size_t>(x.numel()));
  const S inv_keep = S(1) / S(1.0 - rate);
  {
    auto in = x.values();
    auto ov = out.values_mut();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const S m = rng.uniform() >= rate ? inv_keep : S(0);
      (*mask)[i] = m;
      ov[i] = in[i] * m;
    }
  }
  const bool need_x = detail::needs_grad(x);
  detail::record<S>("dropout", {&x}, out,
                    [xd = x.data_ptr(), od = out.data_ptr(), mask, need_x] {
                      if (!need_x) return;
                      xd->ensure_grad();
                      const Index n = static_cast<Index>(xd->grad.size());
                      detail::ArrMap<S>(xd->grad.data(), n) +=
                          detail::CArrMap<S>(od->grad.data(), n) *
                          detail::CArrMap<S>(mask->data(), n);
                    });
  return out;
}

// --- slicing -----------------------------------------------------------------

// Contiguous slice [start, start+len) along one axis.
template <class S>
Tensor<S> narrow(const Tensor<S>& x, int axis, Index start, Index len) {
  const Shape& s = x.shape();
  if (axis < 0) axis += s.rank();
  if (axis < 0 || axis >= s.rank()) {
    throw ShapeError("narrow: axis out of range for " + s.str());
  }
  const Index dim = s.dim(axis);
  if (start < 0 || len < 1 || start + len > dim) {
    throw ShapeError("narrow: [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") out of range for axis of " +
                     std::to_string(dim));
  }
  std::vector<Index> out_dims;
  for (int i = 0; i < s.rank(); ++i) out_dims.push_back(i == axis ? len : s.dim(i));
  Tensor<S> out = Tensor<S>::uninitialized(Shape(out_dims));

  Index inner = 1;
  for (int i = axis + 1; i < s.rank(); ++i) inner *= s.dim(i);
  const Index outer = x.numel() / (dim * inner);
  {
    const S* src = x.values().data();
    S* dst = out.values_mut().data();
    for (Index o = 0; o < outer; ++o) {
      std::copy_n(src + (o * dim + start) * inner, len * inner,
                  dst + o * len * inner);
    }
  }
  const bool need_x = detail::needs_grad(x);
  detail::record<S>(
      "narrow", {&x}, out,
      [xd = x.data_ptr(), od = out.data_ptr(), outer, inner, dim, start, len,
       need_x] {
        if (!need_x) return;
        xd->ensure_grad();
        const S* g = od->grad.data();
        S* dst = xd->grad.data();
        for (Index o = 0; o < outer; ++o) {
          detail::ArrMap<S>(dst + (o * dim + start) * inner, len * inner) +=
              detail::CArrMap<S>(g + o * len * inner, len * inner);
        }
      });
  return out;
}

// --- reductions --------------------------------------------------------------

template <class S>
Tensor<S> sum(const Tensor<S>& x) {
  Tensor<S> out = Tensor<S>::scalar(detail::carr(x.values()).sum());
  const bool need_x = detail::needs_grad(x);
  detail::record<S>("sum", {&x}, out,
                    [xd = x.data_ptr(), od = out.data_ptr(), need_x] {
                      if (!need_x) return;
                      xd->ensure_grad();
                      detail::ArrMap<S>(xd->grad.data(),
                                        static_cast<Index>(xd->grad.size())) +=
                          od->grad[0];
                    });
  return out;
}

template <class S>
Tensor<S> mean(const Tensor<S>& x) {
  const S inv_n = S(1) / S(x.numel());
  Tensor<S> out = Tensor<S>::scalar(detail::carr(x.values()).sum() * inv_n);
  const bool need_x = detail::needs_grad(x);
  detail::record<S>("mean", {&x}, out,
                    [xd = x.data_ptr(), od = out.data_ptr(), inv_n, need_x] {
                      if (!need_x) return;
                      xd->ensure_grad();
                      detail::ArrMap<S>(xd->grad.data(),
                                        static_cast<Index>(xd->grad.size())) +=
                          od->grad[0] * inv_n;
                    });
  return out;
}

// --- masking -----------------------------------------------------------------

inline constexpr double kMaskedLogitPenalty = 1e9;

// Adds -1e9 to logits wherever mask (broadcast over leading axes) is zero.
// The mask itself is a constant; gradient passes through untouched logits
// and masked ones alike (softmax then kills the latter).
template <class S>
Tensor<S> mask_additive(const Tensor<S>& scores, const Tensor<S>& mask) {
  const Index sn = scores.numel();
  const Index mn = mask.numel();
  const int rs = scores.shape().rank();
  const int rm = mask.shape().rank();
  if (rm > rs) {
    throw ShapeError("mask_additive: mask rank exceeds scores, " +
                     scores.shape().str() + " vs " + mask.shape().str());
  }
  for (int i = 0; i < rm; ++i) {
    if (mask.shape().dim(i) != scores.shape().dim(i + rs - rm)) {
      throw ShapeError("mask_additive: mask " + mask.shape().str() +
                       " does not match trailing dims of " +
                       scores.shape().str());
    }
  }
  const Index reps = sn / mn;
  Tensor<S> out = Tensor<S>::uninitialized(scores.shape());
  {
    const S* sv = scores.values().data();
    const S* mv = mask.values().data();
    S* ov = out.values_mut().data();
    for (Index r = 0; r < reps; ++r) {
      for (Index i = 0; i < mn; ++i) {
        ov[r * mn + i] = sv[r * mn + i] +
                         (mv[i] == S(0) ? S(-kMaskedLogitPenalty) : S(0));
      }
    }
  }
  const bool need_s = detail::needs_grad(scores);
  detail::record<S>("mask_additive", {&scores, &mask}, out,
                    [sd = scores.data_ptr(), od = out.data_ptr(), need_s] {
                      if (!need_s) return;
                      sd->ensure_grad();
                      detail::ArrMap<S>(sd->grad.data(),
                                        static_cast<Index>(sd->grad.size())) +=
                          detail::CArrMap<S>(od->grad.data(),
                                             static_cast<Index>(od->grad.size()));
                    });
  return out;
}

// Multiplies attention weights elementwise by mask (broadcast over leading
// axes). Used after softmax; rows are not renormalized.
template <class S>
Tensor<S> mask_multiply(const Tensor<S>& weights, const Tensor<S>& mask) {
  const Index wn = weights.numel();
  const Index mn = mask.numel();
  const int rw = weights.shape().rank();
  const int rm = mask.shape().rank();
  if (rm > rw) {
    throw ShapeError("mask_multiply: mask rank exceeds weights");
  }
  for (int i = 0; i < rm; ++i) {
    if (mask.shape().dim(i) != weights.shape().dim(i + rw - rm)) {
      throw ShapeError("mask_multiply: mask " + mask.shape().str() +
                       " does not match trailing dims of " +
                       weights.shape().str());
    }
  }
  const Index reps = wn / mn;
  Tensor<S> out = Tensor<S>::uninitialized(weights.shape());
  {
    auto W = detail::cmat(weights.values(), reps, mn);
    detail::CRowArrMap<S> M(mask.values().data(), mn);
    detail::mat(out.values_mut(), reps, mn) =
        (W.array().rowwise() * M).matrix();
  }
  const bool need_w = detail::needs_grad(weights);
  detail::record<S>(
      "mask_multiply", {&weights, &mask}, out,
      [wd = weights.data_ptr(), md = mask.data_ptr(), od = out.data_ptr(),
       reps, mn, need_w] {
        if (!need_w) return;
        wd->ensure_grad();
        detail::CMatMap<S> G(od->grad.data(), reps, mn);
        detail::CRowArrMap<S> M(md->values.data(), mn);
        detail::MatMap<S>(wd->grad.data(), reps, mn).array() +=
            G.array().rowwise() * M;
      });
  return out;
}

}  // namespace temponet
