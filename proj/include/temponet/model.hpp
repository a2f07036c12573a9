#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "temponet/attention.hpp"
#include "temponet/ops.hpp"

namespace temponet {

// Which additive terms the input embedding carries besides the value
// projection.
enum class EmbeddingMode {
  value_positional,           // + fixed sinusoidal position table
  value_temporal,             // + learned projection of tick features
  value_positional_temporal,  // + both
};

struct ModelConfig {
  Index d = 512;
  Index h = 8;
  Index d_ff = 2048;
  Index n_enc = 4;
  Index n_dec = 3;
  Index n_temporal_blocks = 3;
  Index in_channels = 40;
  Index out_channels = 1;
  Index lookback = 128;
  Index horizon = 1;
  Index label_len = 64;
  EmbeddingMode embedding_mode = EmbeddingMode::value_positional;
  double dropout = 0.05;
  ScaleMode scale_mode = ScaleMode::inv_sqrt_head_dim;
  MaskMode mask_mode = MaskMode::pre_softmax_additive;
  Activation activation = Activation::relu;

  void validate() const {
    if (d < 1 || h < 1 || d % h != 0) {
      throw ShapeError("ModelConfig: d=" + std::to_string(d) +
                       " must be positive and divisible by h=" +
                       std::to_string(h));
    }
    if (d_ff < d) {
      throw ShapeError("ModelConfig: d_ff=" + std::to_string(d_ff) +
                       " < d=" + std::to_string(d));
    }
    if (n_enc < 0 || n_dec < 0 || n_temporal_blocks < 0) {
      throw ShapeError("ModelConfig: layer counts must be >= 0");
    }
    if (in_channels < 1 || out_channels < 1) {
      throw ShapeError("ModelConfig: channel counts must be >= 1");
    }
    if (lookback < 1 || horizon < 1) {
      throw ShapeError("ModelConfig: lookback and horizon must be >= 1");
    }
    if (label_len < 0 || label_len > lookback) {
      throw ShapeError("ModelConfig: label_len=" + std::to_string(label_len) +
                       " must lie in [0, lookback=" + std::to_string(lookback) +
                       "]");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
      throw ShapeError("ModelConfig: dropout must be in [0, 1)");
    }
  }
};

// One training/evaluation sample group. Decoder input repeats the last
// label_len observed steps and zero-fills the horizon placeholder rows
// (unknown future). Marks are tick features (phase of the stride cycle)
// aligned with each sequence; models that don't use them ignore them.
template <class S>
struct ForecastBatch {
  Tensor<S> enc_in;     // [B, lookback, in_channels]
  Tensor<S> dec_in;     // [B, label_len + horizon, in_channels]
  Tensor<S> enc_marks;  // [B, lookback, n_marks]
  Tensor<S> dec_marks;  // [B, label_len + horizon, n_marks]
  Tensor<S> target;     // [B, horizon, out_channels]
  Index target_column = 0;  // target's column within the channel axis

  Index batch_size() const { return enc_in.shape().dim(0); }
};

inline constexpr Index kMarkFeatures = 2;  // sin/cos of cycle phase

// --- embeddings ---------------------------------------------------------------

namespace detail {

// Fixed sinusoidal position table [len, d]: even columns sin, odd columns cos,
// wavelengths geometric from 2*pi to 10000*2*pi.
template <class S>
Tensor<S> sinusoidal_table(Index len, Index d) {
  Tensor<S> t = Tensor<S>::uninitialized(Shape{len, d});
  auto v = t.values_mut();
  for (Index pos = 0; pos < len; ++pos) {
    for (Index i = 0; i < d; i += 2) {
      const double angle =
          static_cast<double>(pos) *
          std::exp(static_cast<double>(i) * (-std::log(10000.0) / static_cast<double>(d)));
      v[static_cast<std::size_t>(pos * d + i)] = static_cast<S>(std::sin(angle));
      if (i + 1 < d) {
        v[static_cast<std::size_t>(pos * d + i + 1)] =
            static_cast<S>(std::cos(angle));
      }
    }
  }
  return t;
}

}  // namespace detail

template <class S>
struct Embedding {
  Tensor<S> w_value, b_value;  // [C, d], [d]
  Tensor<S> w_marks;           // [n_marks, d]; only in temporal modes
  Tensor<S> position_table;    // [max_len, d]; constant, not learned
  EmbeddingMode mode = EmbeddingMode::value_positional;
  double dropout_rate = 0.0;

  static Embedding init(Index channels, Index d, Index max_len,
                        EmbeddingMode mode, double dropout_rate, Rng& rng) {
    Embedding e;
    e.mode = mode;
    e.dropout_rate = dropout_rate;
    e.w_value = detail::glorot<S>(channels, d, rng);
    e.b_value = Tensor<S>::zeros(Shape{d});
    if (mode != EmbeddingMode::value_positional) {
      e.w_marks = detail::glorot<S>(kMarkFeatures, d, rng);
    }
    if (mode != EmbeddingMode::value_temporal) {
      e.position_table = detail::sinusoidal_table<S>(max_len, d);
    }
    return e;
  }

  Tensor<S> forward(const Tensor<S>& x, const Tensor<S>& marks, Rng& rng,
                    bool training) const {
    if (x.shape().rank() != 3 || x.shape().dim(-1) != w_value.shape().dim(0)) {
      throw ShapeError("Embedding: expected [B, L, " +
                       std::to_string(w_value.shape().dim(0)) + "], got " +
                       x.shape().str());
    }
    const Index len = x.shape().dim(1);
    Tensor<S> e = add(matmul(x, w_value), b_value);
    if (mode != EmbeddingMode::value_temporal) {
      if (len > position_table.shape().dim(0)) {
        throw ShapeError("Embedding: sequence length " + std::to_string(len) +
                         " exceeds position table of " +
                         std::to_string(position_table.shape().dim(0)));
      }
      e = add(e, narrow(position_table, 0, 0, len));
    }
    if (mode != EmbeddingMode::value_positional) {
      if (!marks.valid() || marks.shape() != Shape{x.shape().dim(0), len, kMarkFeatures}) {
        throw ShapeError("Embedding: temporal mode needs marks [B, L, " +
                         std::to_string(kMarkFeatures) + "]");
      }
      e = add(e, matmul(marks, w_marks));
    }
    return dropout(e, dropout_rate, rng, training);
  }

  std::vector<std::pair<std::string, Tensor<S>>> params(
      const std::string& prefix) const {
    std::vector<std::pair<std::string, Tensor<S>>> out = {
        {prefix + ".w_value", w_value}, {prefix + ".b_value", b_value}};
    if (mode != EmbeddingMode::value_positional) {
      out.emplace_back(prefix + ".w_marks", w_marks);
    }
    return out;
  }
};

// --- layer norm parameters ------------------------------------------------------

template <class S>
struct LayerNormParams {
  Tensor<S> gain, bias;

  static LayerNormParams init(Index d) {
    return {Tensor<S>::constant(Shape{d}, S(1)), Tensor<S>::zeros(Shape{d})};
  }

  Tensor<S> apply(const Tensor<S>& x) const { return layer_norm(x, gain, bias); }

  std::vector<std::pair<std::string, Tensor<S>>> params(
      const std::string& prefix) const {
    return {{prefix + ".gain", gain}, {prefix + ".bias", bias}};
  }
};

// --- encoder / decoder layers ----------------------------------------------------

// Self-attention, then the stack of temporal attention blocks, then the FFN;
// every stage is residual + post-norm. With zero temporal blocks this is
// exactly the original Transformer encoder layer.
template <class S>
struct EncoderLayer {
  MhaParams<S> self_attn;
  std::vector<TemporalAttentionParams<S>> temporal;
  std::vector<LayerNormParams<S>> temporal_norm;
  FfnParams<S> ffn;
  LayerNormParams<S> attn_norm;
  LayerNormParams<S> ffn_norm;
  double dropout_rate = 0.0;

  static EncoderLayer init(const ModelConfig& cfg, Rng& rng) {
    EncoderLayer l;
    l.dropout_rate = cfg.dropout;
    l.self_attn = MhaParams<S>::init(cfg.d, cfg.h, rng, cfg.scale_mode,
                                     cfg.mask_mode);
    for (Index i = 0; i < cfg.n_temporal_blocks; ++i) {
      l.temporal.push_back(TemporalAttentionParams<S>::init(cfg.d, rng));
      l.temporal_norm.push_back(LayerNormParams<S>::init(cfg.d));
    }
    l.ffn = FfnParams<S>::init(cfg.d, cfg.d_ff, rng, cfg.activation);
    l.attn_norm = LayerNormParams<S>::init(cfg.d);
    l.ffn_norm = LayerNormParams<S>::init(cfg.d);
    return l;
  }

  Tensor<S> forward(const Tensor<S>& x, Rng& rng, bool training) const {
    Tensor<S> a = attn_norm.apply(add(
        x, dropout(multi_head_attention(x, x, self_attn), dropout_rate, rng,
                   training)));
    for (std::size_t i = 0; i < temporal.size(); ++i) {
      a = temporal_norm[i].apply(add(
          a, dropout(dynamic_temporal_attention(a, temporal[i]), dropout_rate,
                     rng, training)));
    }
    return ffn_norm.apply(add(
        a, dropout(position_wise_ffn(a, ffn), dropout_rate, rng, training)));
  }

  std::vector<std::pair<std::string, Tensor<S>>> params(
      const std::string& prefix) const {
    std::vector<std::pair<std::string, Tensor<S>>> out;
    auto append = [&out](std::vector<std::pair<std::string, Tensor<S>>> ps) {
      for (auto& p : ps) out.push_back(std::move(p));
    };
    append(self_attn.params(prefix + ".self"));
    append(attn_norm.params(prefix + ".self_norm"));
    for (std::size_t i = 0; i < temporal.size(); ++i) {
      const std::string tp = prefix + ".temporal" + std::to_string(i);
      append(temporal[i].params(tp));
      append(temporal_norm[i].params(tp + "_norm"));
    }
    append(ffn.params(prefix + ".ffn"));
    append(ffn_norm.params(prefix + ".ffn_norm"));
    return out;
  }
};

// Causal self-attention, cross-attention over the encoder memory, FFN; all
// residual + post-norm, as in the original Transformer decoder.
template <class S>
struct DecoderLayer {
  MhaParams<S> self_attn;
  MhaParams<S> cross_attn;
  FfnParams<S> ffn;
  LayerNormParams<S> self_norm;
  LayerNormParams<S> cross_norm;
  LayerNormParams<S> ffn_norm;
  double dropout_rate = 0.0;

  static DecoderLayer init(const ModelConfig& cfg, Rng& rng) {
    DecoderLayer l;
    l.dropout_rate = cfg.dropout;
    l.self_attn = MhaParams<S>::init(cfg.d, cfg.h, rng, cfg.scale_mode,
                                     cfg.mask_mode);
    l.cross_attn = MhaParams<S>::init(cfg.d, cfg.h, rng, cfg.scale_mode,
                                      cfg.mask_mode);
    l.ffn = FfnParams<S>::init(cfg.d, cfg.d_ff, rng, cfg.activation);
    l.self_norm = LayerNormParams<S>::init(cfg.d);
    l.cross_norm = LayerNormParams<S>::init(cfg.d);
    l.ffn_norm = LayerNormParams<S>::init(cfg.d);
    return l;
  }

  Tensor<S> forward(const Tensor<S>& y, const Tensor<S>& memory,
                    const Tensor<S>& causal_mask, Rng& rng,
                    bool training) const {
    Tensor<S> a = self_norm.apply(add(
        y, dropout(multi_head_attention(y, y, self_attn, &causal_mask),
                   dropout_rate, rng, training)));
    Tensor<S> b = cross_norm.apply(add(
        a, dropout(multi_head_attention(a, memory, cross_attn), dropout_rate,
                   rng, training)));
    return ffn_norm.apply(add(
        b, dropout(position_wise_ffn(b, ffn), dropout_rate, rng, training)));
  }

  std::vector<std::pair<std::string, Tensor<S>>> params(
      const std::string& prefix) const {
    std::vector<std::pair<std::string, Tensor<S>>> out;
    auto append = [&out](std::vector<std::pair<std::string, Tensor<S>>> ps) {
      for (auto& p : ps) out.push_back(std::move(p));
    };
    append(self_attn.params(prefix + ".self"));
    append(self_norm.params(prefix + ".self_norm"));
    append(cross_attn.params(prefix + ".cross"));
    append(cross_norm.params(prefix + ".cross_norm"));
    append(ffn.params(prefix + ".ffn"));
    append(ffn_norm.params(prefix + ".ffn_norm"));
    return out;
  }
};

// --- forecaster interface ---------------------------------------------------------

template <class S>
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual Tensor<S> forward(const ForecastBatch<S>& batch, Rng& rng,
                            bool training) = 0;
  virtual std::vector<std::pair<std::string, Tensor<S>>> named_parameters()
      const = 0;
  virtual const ModelConfig& config() const = 0;
  virtual std::string_view kind() const = 0;

  bool trainable() const { return !named_parameters().empty(); }
};

template <class S>
Index param_count(const Forecaster<S>& model) {
  Index n = 0;
  for (const auto& [name, t] : model.named_parameters()) n += t.numel();
  return n;
}

// --- encoder-decoder forecaster (TempoNet and the vanilla Transformer) -------------

// kind "temponet": encoder layers carry the temporal attention stack.
// kind "transformer": n_temporal_blocks = 0 reduces each encoder layer to the
// original self-attention + FFN form.
template <class S>
class EncoderDecoderForecaster final : public Forecaster<S> {
 public:
  EncoderDecoderForecaster(std::string kind, const ModelConfig& cfg, Rng& rng)
      : kind_(std::move(kind)), cfg_(cfg) {
    cfg_.validate();
    const Index dec_len = cfg_.label_len + cfg_.horizon;
    const Index max_len = std::max(cfg_.lookback, dec_len);
    enc_embed_ = Embedding<S>::init(cfg_.in_channels, cfg_.d, max_len,
                                    cfg_.embedding_mode, cfg_.dropout, rng);
    dec_embed_ = Embedding<S>::init(cfg_.in_channels, cfg_.d, max_len,
                                    cfg_.embedding_mode, cfg_.dropout, rng);
    for (Index i = 0; i < cfg_.n_enc; ++i) {
      enc_layers_.push_back(EncoderLayer<S>::init(cfg_, rng));
    }
    for (Index i = 0; i < cfg_.n_dec; ++i) {
      dec_layers_.push_back(DecoderLayer<S>::init(cfg_, rng));
    }
    head_w_ = detail::glorot<S>(cfg_.d, cfg_.out_channels, rng);
    head_b_ = Tensor<S>::zeros(Shape{cfg_.out_channels});
    causal_mask_ = make_causal_mask<S>(dec_len);
  }

  Tensor<S> forward(const ForecastBatch<S>& batch, Rng& rng,
                    bool training) override {
    const Index dec_len = cfg_.label_len + cfg_.horizon;
    if (batch.enc_in.shape() !=
        Shape{batch.batch_size(), cfg_.lookback, cfg_.in_channels}) {
      throw ShapeError("forward: enc_in " + batch.enc_in.shape().str() +
                       " does not match config [B, " +
                       std::to_string(cfg_.lookback) + ", " +
                       std::to_string(cfg_.in_channels) + "]");
    }
    if (batch.dec_in.shape() !=
        Shape{batch.batch_size(), dec_len, cfg_.in_channels}) {
      throw ShapeError("forward: dec_in " + batch.dec_in.shape().str() +
                       " does not match config [B, " + std::to_string(dec_len) +
                       ", " + std::to_string(cfg_.in_channels) + "]");
    }
    Tensor<S> memory = enc_embed_.forward(batch.enc_in, batch.enc_marks, rng,
                                          training);
    for (const auto& layer : enc_layers_) {
      memory = layer.forward(memory, rng, training);
    }
    Tensor<S> y =
        dec_embed_.forward(batch.dec_in, batch.dec_marks, rng, training);
    for (const auto& layer : dec_layers_) {
      y = layer.forward(y, memory, causal_mask_, rng, training);
    }
    Tensor<S> projected = add(matmul(y, head_w_), head_b_);
    return narrow(projected, 1, dec_len - cfg_.horizon, cfg_.horizon);
  }

  std::vector<std::pair<std::string, Tensor<S>>> named_parameters()
      const override {
    std::vector<std::pair<std::string, Tensor<S>>> out;
    auto append = [&out](std::vector<std::pair<std::string, Tensor<S>>> ps) {
      for (auto& p : ps) out.push_back(std::move(p));
    };
    append(enc_embed_.params("enc_embed"));
    append(dec_embed_.params("dec_embed"));
    for (std::size_t i = 0; i < enc_layers_.size(); ++i) {
      append(enc_layers_[i].params("enc" + std::to_string(i)));
    }
    for (std::size_t i = 0; i < dec_layers_.size(); ++i) {
      append(dec_layers_[i].params("dec" + std::to_string(i)));
    }
    out.emplace_back("head.w", head_w_);
    out.emplace_back("head.b", head_b_);
    return out;
  }

  const ModelConfig& config() const override { return cfg_; }
  std::string_view kind() const override { return kind_; }

  // Test access to individual stages.
  const std::vector<EncoderLayer<S>>& encoder_layers() const {
    return enc_layers_;
  }
  const std::vector<DecoderLayer<S>>& decoder_layers() const {
    return dec_layers_;
  }
  const Embedding<S>& encoder_embedding() const { return enc_embed_; }

 private:
  std::string kind_;
  ModelConfig cfg_;
  Embedding<S> enc_embed_, dec_embed_;
  std::vector<EncoderLayer<S>> enc_layers_;
  std::vector<DecoderLayer<S>> dec_layers_;
  Tensor<S> head_w_, head_b_;
  Tensor<S> causal_mask_;
};

// --- linear baselines ---------------------------------------------------------------

inline constexpr Index kTrendKernel = 25;  // moving-average width (odd)

namespace detail {

// Replicate-padded moving average as a constant [L, L] matrix, already
// transposed so trend = x . m stays on the tape without a dedicated
// convolution kernel: column i holds 1/k over the clamped window around i.
template <class S>
Tensor<S> moving_average_matrix(Index len, Index kernel) {
  Tensor<S> m = Tensor<S>::zeros(Shape{len, len});
  auto v = m.values_mut();
  const Index half = kernel / 2;
  const S w = S(1) / static_cast<S>(kernel);
  for (Index i = 0; i < len; ++i) {
    for (Index u = i - half; u <= i + half; ++u) {
      const Index j = std::clamp(u, Index(0), len - 1);
      v[static_cast<std::size_t>(j * len + i)] += w;
    }
  }
  return m;
}

// [B, L, C] -> target column as [B, L].
template <class S>
Tensor<S> target_history(const ForecastBatch<S>& batch) {
  const Index b = batch.batch_size();
  const Index len = batch.enc_in.shape().dim(1);
  return reshape(narrow(batch.enc_in, 2, batch.target_column, 1),
                 Shape{b, len});
}

}  // namespace detail

// Decomposition baseline: a moving average splits the lookback into trend and
// remainder, each mapped linearly from L to H with weights shared across
// batches; the two forecasts sum.
template <class S>
class DLinearForecaster final : public Forecaster<S> {
 public:
  DLinearForecaster(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    w_trend_ = detail::glorot<S>(cfg_.lookback, cfg_.horizon, rng);
    b_trend_ = Tensor<S>::zeros(Shape{cfg_.horizon});
    w_rem_ = detail::glorot<S>(cfg_.lookback, cfg_.horizon, rng);
    b_rem_ = Tensor<S>::zeros(Shape{cfg_.horizon});
    ma_ = detail::moving_average_matrix<S>(cfg_.lookback, kTrendKernel);
  }

  Tensor<S> forward(const ForecastBatch<S>& batch, Rng&, bool) override {
    Tensor<S> x = detail::target_history(batch);   // [B, L]
    Tensor<S> trend = matmul(x, ma_);              // [B, L]
    Tensor<S> remainder = sub(x, trend);
    Tensor<S> pred = add(add(matmul(trend, w_trend_), b_trend_),
                         add(matmul(remainder, w_rem_), b_rem_));
    return reshape(pred, Shape{batch.batch_size(), cfg_.horizon, 1});
  }

  std::vector<std::pair<std::string, Tensor<S>>> named_parameters()
      const override {
    return {{"trend.w", w_trend_},
            {"trend.b", b_trend_},
            {"remainder.w", w_rem_},
            {"remainder.b", b_rem_}};
  }

  const ModelConfig& config() const override { return cfg_; }
  std::string_view kind() const override { return "dlinear"; }

 private:
  ModelConfig cfg_;
  Tensor<S> w_trend_, b_trend_, w_rem_, b_rem_;
  Tensor<S> ma_;
};

// Offset baseline: subtract the last observed value, map L to H linearly,
// add the offset back.
template <class S>
class NLinearForecaster final : public Forecaster<S> {
 public:
  NLinearForecaster(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    w_ = detail::glorot<S>(cfg_.lookback, cfg_.horizon, rng);
    b_ = Tensor<S>::zeros(Shape{cfg_.horizon});
    ones_l_ = Tensor<S>::constant(Shape{1, cfg_.lookback}, S(1));
    ones_h_ = Tensor<S>::constant(Shape{1, cfg_.horizon}, S(1));
  }

  Tensor<S> forward(const ForecastBatch<S>& batch, Rng&, bool) override {
    Tensor<S> x = detail::target_history(batch);                // [B, L]
    Tensor<S> last = narrow(x, 1, cfg_.lookback - 1, 1);        // [B, 1]
    Tensor<S> centered = sub(x, matmul(last, ones_l_));         // [B, L]
    Tensor<S> pred = add(add(matmul(centered, w_), b_),
                         matmul(last, ones_h_));                // [B, H]
    return reshape(pred, Shape{batch.batch_size(), cfg_.horizon, 1});
  }

  std::vector<std::pair<std::string, Tensor<S>>> named_parameters()
      const override {
    return {{"w", w_}, {"b", b_}};
  }

  const ModelConfig& config() const override { return cfg_; }
  std::string_view kind() const override { return "nlinear"; }

 private:
  ModelConfig cfg_;
  Tensor<S> w_, b_;
  Tensor<S> ones_l_, ones_h_;
};

// Naive baseline: repeat the last observed target value across the horizon.
template <class S>
class PersistenceForecaster final : public Forecaster<S> {
 public:
  explicit PersistenceForecaster(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    ones_h_ = Tensor<S>::constant(Shape{1, cfg_.horizon}, S(1));
  }

  Tensor<S> forward(const ForecastBatch<S>& batch, Rng&, bool) override {
    Tensor<S> x = detail::target_history(batch);          // [B, L]
    Tensor<S> last = narrow(x, 1, cfg_.lookback - 1, 1);  // [B, 1]
    return reshape(matmul(last, ones_h_),
                   Shape{batch.batch_size(), cfg_.horizon, 1});
  }

  std::vector<std::pair<std::string, Tensor<S>>> named_parameters()
      const override {
    return {};
  }

  const ModelConfig& config() const override { return cfg_; }
  std::string_view kind() const override { return "persistence"; }

 private:
  ModelConfig cfg_;
  Tensor<S> ones_h_;
};

// --- factory ---------------------------------------------------------------------

// Baseline-specific structural defaults, applied before user overrides: the
// vanilla transformer runs 2 encoder / 1 decoder layers with no temporal
// blocks and tick-feature embeddings.
inline ModelConfig default_config_for(const std::string& kind) {
  ModelConfig cfg;
  if (kind == "transformer") {
    cfg.n_enc = 2;
    cfg.n_dec = 1;
    cfg.n_temporal_blocks = 0;
    cfg.embedding_mode = EmbeddingMode::value_temporal;
  }
  return cfg;
}

template <class S>
std::unique_ptr<Forecaster<S>> make_forecaster(const std::string& kind,
                                               ModelConfig cfg, Rng& rng) {
  if (kind == "temponet") {
    return std::make_unique<EncoderDecoderForecaster<S>>(kind, cfg, rng);
  }
  if (kind == "transformer") {
    cfg.n_temporal_blocks = 0;
    return std::make_unique<EncoderDecoderForecaster<S>>(kind, cfg, rng);
  }
  if (kind == "dlinear") {
    return std::make_unique<DLinearForecaster<S>>(cfg, rng);
  }
  if (kind == "nlinear") {
    return std::make_unique<NLinearForecaster<S>>(cfg, rng);
  }
  if (kind == "persistence") {
    return std::make_unique<PersistenceForecaster<S>>(cfg);
  }
  throw ContractError("make_forecaster: unknown model kind '" + kind + "'");
}

}  // namespace temponet
