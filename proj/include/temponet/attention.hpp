#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "temponet/ops.hpp"

namespace temponet {

// How attention logits are scaled before the softmax.
enum class ScaleMode {
  inv_sqrt_head_dim,   // 1/sqrt(d/h): scores normalized by per-head width
  inv_sqrt_d_times_h,  // 1/sqrt(d*h): stronger damping (1/64 at d=512, h=8)
};

// Where the mask acts relative to the softmax.
enum class MaskMode {
  pre_softmax_additive,          // -1e9 on masked logits, rows stay normalized
  post_softmax_multiplicative,   // suppress logits, then zero weights exactly
};

enum class Activation { relu, gelu };

namespace detail {
template <class S>
Tensor<S> glorot(Index rows, Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor<S> t = Tensor<S>::uninitialized(Shape{rows, cols});
  for (S& v : t.values_mut()) v = static_cast<S>(rng.uniform(-limit, limit));
  return t;
}
}  // namespace detail

using NamedParams = std::vector<std::pair<std::string, Tensor<double>>>;

// --- multi-head attention ------------------------------------------------------

template <class S>
struct MhaParams {
  Tensor<S> w_q, w_k, w_v, w_o;  // all d x d
  Index d = 0;
  Index h = 1;
  ScaleMode scale_mode = ScaleMode::inv_sqrt_head_dim;
  MaskMode mask_mode = MaskMode::pre_softmax_additive;

  static MhaParams init(Index d, Index h, Rng& rng,
                        ScaleMode scale = ScaleMode::inv_sqrt_head_dim,
                        MaskMode mask = MaskMode::pre_softmax_additive) {
    if (d < 1 || h < 1 || d % h != 0) {
      throw ShapeError("MhaParams: width " + std::to_string(d) +
                       " not divisible into " + std::to_string(h) + " heads");
    }
    MhaParams p;
    p.d = d;
    p.h = h;
    p.scale_mode = scale;
    p.mask_mode = mask;
    p.w_q = detail::glorot<S>(d, d, rng);
    p.w_k = detail::glorot<S>(d, d, rng);
    p.w_v = detail::glorot<S>(d, d, rng);
    p.w_o = detail::glorot<S>(d, d, rng);
    return p;
  }

  std::vector<std::pair<std::string, Tensor<S>>> params(
      const std::string& prefix) const {
    return {{prefix + ".w_q", w_q},
            {prefix + ".w_k", w_k},
            {prefix + ".w_v", w_v},
            {prefix + ".w_o", w_o}};
  }

  S scale_factor() const {
    switch (scale_mode) {
      case ScaleMode::inv_sqrt_head_dim:
        return S(1) / std::sqrt(static_cast<S>(d / h));
      case ScaleMode::inv_sqrt_d_times_h:
        return S(1) / std::sqrt(static_cast<S>(d * h));
    }
    throw ContractError("MhaParams: unknown scale mode");
  }
};

// Lower-triangular ones: position i may attend to positions j <= i.
template <class S>
Tensor<S> make_causal_mask(Index len) {
  Tensor<S> m = Tensor<S>::zeros(Shape{len, len});
  auto v = m.values_mut();
  for (Index i = 0; i < len; ++i) {
    for (Index j = 0; j <= i; ++j) v[static_cast<std::size_t>(i * len + j)] = S(1);
  }
  return m;
}

// q_in: [B, Lq, d], kv_in: [B, Lk, d], mask (optional): [Lq, Lk] of {0,1}.
// Projects, splits into h heads, scales logits, applies the mask per
// mask_mode, softmaxes, attends, merges heads, and projects once more.
template <class S>
Tensor<S> multi_head_attention(const Tensor<S>& q_in, const Tensor<S>& kv_in,
                               const MhaParams<S>& p,
                               const Tensor<S>* mask = nullptr) {
  if (q_in.shape().rank() != 3 || kv_in.shape().rank() != 3) {
    throw ShapeError("multi_head_attention: inputs must be [B, L, d], got " +
                     q_in.shape().str() + " and " + kv_in.shape().str());
  }
  const Index batch = q_in.shape().dim(0);
  const Index lq = q_in.shape().dim(1);
  const Index lk = kv_in.shape().dim(1);
  if (q_in.shape().dim(-1) != p.d || kv_in.shape().dim(-1) != p.d) {
    throw ShapeError("multi_head_attention: input width != " +
                     std::to_string(p.d));
  }
  if (kv_in.shape().dim(0) != batch) {
    throw ShapeError("multi_head_attention: batch dims differ");
  }
  if (p.d % p.h != 0) {
    throw ShapeError("multi_head_attention: d=" + std::to_string(p.d) +
                     " not divisible by h=" + std::to_string(p.h));
  }
  if (mask != nullptr &&
      mask->shape() != Shape{lq, lk}) {
    throw ShapeError("multi_head_attention: mask " + mask->shape().str() +
                     " does not match scores [" + std::to_string(lq) + ", " +
                     std::to_string(lk) + "]");
  }
  const Index dk = p.d / p.h;

  auto split_heads = [&](const Tensor<S>& x, Index len) {
    return transpose(reshape(x, Shape{batch, len, p.h, dk}), {0, 2, 1, 3});
  };
  Tensor<S> q = split_heads(matmul(q_in, p.w_q), lq);    // [B, h, Lq, dk]
  Tensor<S> k = split_heads(matmul(kv_in, p.w_k), lk);   // [B, h, Lk, dk]
  Tensor<S> v = split_heads(matmul(kv_in, p.w_v), lk);   // [B, h, Lk, dk]

  Tensor<S> scores =
      matmul(scale(q, p.scale_factor()), transpose_last2(k));  // [B,h,Lq,Lk]

  Tensor<S> weights;
  if (mask != nullptr && p.mask_mode == MaskMode::pre_softmax_additive) {
    weights = softmax_lastdim(mask_additive(scores, *mask));
  } else if (mask != nullptr) {
    // Masked logits must be suppressed before the softmax as well: otherwise
    // they inflate the denominator and masked-out positions bleed into the
    // surviving weights. The multiply afterwards pins masked entries to an
    // exact 0, so rows sum to at most 1.
    weights =
        mask_multiply(softmax_lastdim(mask_additive(scores, *mask)), *mask);
  } else {
    weights = softmax_lastdim(scores);
  }

  Tensor<S> context = matmul(weights, v);  // [B, h, Lq, dk]
  Tensor<S> merged =
      reshape(transpose(context, {0, 2, 1, 3}), Shape{batch, lq, p.d});
  return matmul(merged, p.w_o);
}

// --- dynamic temporal attention ------------------------------------------------

template <class S>
struct TemporalAttentionParams {
  Tensor<S> wt_q, wt_k, wt_v;  // all d x d

  static TemporalAttentionParams init(Index d, Rng& rng) {
    TemporalAttentionParams p;
    p.wt_q = detail::glorot<S>(d, d, rng);
    p.wt_k = detail::glorot<S>(d, d, rng);
    p.wt_v = detail::glorot<S>(d, d, rng);
    return p;
  }

  std::vector<std::pair<std::string, Tensor<S>>> params(
      const std::string& prefix) const {
    return {{prefix + ".wt_q", wt_q},
            {prefix + ".wt_k", wt_k},
            {prefix + ".wt_v", wt_v}};
  }
};

// Single-head, full-width attention with unscaled logits: the dot products
// Qt Kt^T go into the softmax as-is, and the weights attend over Vt.
template <class S>
Tensor<S> dynamic_temporal_attention(const Tensor<S>& x,
                                     const TemporalAttentionParams<S>& p) {
  if (x.shape().rank() != 3) {
    throw ShapeError("dynamic_temporal_attention: input must be [B, L, d]");
  }
  if (x.shape().dim(-1) != p.wt_q.shape().dim(0)) {
    throw ShapeError("dynamic_temporal_attention: input width " +
                     std::to_string(x.shape().dim(-1)) + " != " +
                     std::to_string(p.wt_q.shape().dim(0)));
  }
  Tensor<S> qt = matmul(x, p.wt_q);
  Tensor<S> kt = matmul(x, p.wt_k);
  Tensor<S> vt = matmul(x, p.wt_v);
  Tensor<S> weights = softmax_lastdim(matmul(qt, transpose_last2(kt)));
  return matmul(weights, vt);
}

// --- position-wise feed-forward --------------------------------------------------

template <class S>
struct FfnParams {
  Tensor<S> w1, b1, w2, b2;  // [d, d_ff], [d_ff], [d_ff, d], [d]
  Activation activation = Activation::relu;

  static FfnParams init(Index d, Index d_ff, Rng& rng,
                        Activation act = Activation::relu) {
    if (d_ff < d) {
      throw ShapeError("FfnParams: d_ff=" + std::to_string(d_ff) +
                       " < d=" + std::to_string(d));
    }
    FfnParams p;
    p.activation = act;
    p.w1 = detail::glorot<S>(d, d_ff, rng);
    p.b1 = Tensor<S>::zeros(Shape{d_ff});
    p.w2 = detail::glorot<S>(d_ff, d, rng);
    p.b2 = Tensor<S>::zeros(Shape{d});
    return p;
  }

  std::vector<std::pair<std::string, Tensor<S>>> params(
      const std::string& prefix) const {
    return {{prefix + ".w1", w1},
            {prefix + ".b1", b1},
            {prefix + ".w2", w2},
            {prefix + ".b2", b2}};
  }
};

// Applied independently at every position: w2 * act(w1 * x + b1) + b2.
template <class S>
Tensor<S> position_wise_ffn(const Tensor<S>& x, const FfnParams<S>& p) {
  if (x.shape().dim(-1) != p.w1.shape().dim(0)) {
    throw ShapeError("position_wise_ffn: input width " +
                     std::to_string(x.shape().dim(-1)) + " != " +
                     std::to_string(p.w1.shape().dim(0)));
  }
  Tensor<S> hidden = add(matmul(x, p.w1), p.b1);
  hidden = p.activation == Activation::relu ? relu(hidden) : gelu(hidden);
  return add(matmul(hidden, p.w2), p.b2);
}

}  // namespace temponet
