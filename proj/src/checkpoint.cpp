#include "temponet/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace temponet {

namespace {

constexpr char kMagic[8] = {'T', 'P', 'N', 'C', 'K', 'P', 'T', '1'};

template <class T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw DataError("checkpoint: truncated while reading " + what);
  }
  return v;
}

}  // namespace

std::string to_string(EmbeddingMode mode) {
  switch (mode) {
    case EmbeddingMode::value_positional: return "value+positional";
    case EmbeddingMode::value_temporal: return "value+temporal";
    case EmbeddingMode::value_positional_temporal: return "value+positional+temporal";
  }
  throw ContractError("unknown embedding mode");
}

std::string to_string(ScaleMode mode) {
  switch (mode) {
    case ScaleMode::inv_sqrt_head_dim: return "inv_sqrt_head_dim";
    case ScaleMode::inv_sqrt_d_times_h: return "inv_sqrt_d_times_h";
  }
  throw ContractError("unknown scale mode");
}

std::string to_string(MaskMode mode) {
  switch (mode) {
    case MaskMode::pre_softmax_additive: return "pre_softmax_additive";
    case MaskMode::post_softmax_multiplicative: return "post_softmax_multiplicative";
  }
  throw ContractError("unknown mask mode");
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::relu: return "relu";
    case Activation::gelu: return "gelu";
  }
  throw ContractError("unknown activation");
}

EmbeddingMode embedding_mode_from_string(const std::string& s) {
  if (s == "value+positional") return EmbeddingMode::value_positional;
  if (s == "value+temporal") return EmbeddingMode::value_temporal;
  if (s == "value+positional+temporal") return EmbeddingMode::value_positional_temporal;
  throw DataError("unknown embedding mode '" + s + "'");
}

ScaleMode scale_mode_from_string(const std::string& s) {
  if (s == "inv_sqrt_head_dim") return ScaleMode::inv_sqrt_head_dim;
  if (s == "inv_sqrt_d_times_h") return ScaleMode::inv_sqrt_d_times_h;
  throw DataError("unknown scale mode '" + s + "'");
}

MaskMode mask_mode_from_string(const std::string& s) {
  if (s == "pre_softmax_additive") return MaskMode::pre_softmax_additive;
  if (s == "post_softmax_multiplicative") return MaskMode::post_softmax_multiplicative;
  throw DataError("unknown mask mode '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "gelu") return Activation::gelu;
  throw DataError("unknown activation '" + s + "'");
}

std::string config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["d"] = cfg.d;
  j["h"] = cfg.h;
  j["d_ff"] = cfg.d_ff;
  j["n_enc"] = cfg.n_enc;
  j["n_dec"] = cfg.n_dec;
  j["n_temporal_blocks"] = cfg.n_temporal_blocks;
  j["in_channels"] = cfg.in_channels;
  j["out_channels"] = cfg.out_channels;
  j["lookback"] = cfg.lookback;
  j["horizon"] = cfg.horizon;
  j["label_len"] = cfg.label_len;
  j["embedding_mode"] = to_string(cfg.embedding_mode);
  j["dropout"] = cfg.dropout;
  j["scale_mode"] = to_string(cfg.scale_mode);
  j["mask_mode"] = to_string(cfg.mask_mode);
  j["activation"] = to_string(cfg.activation);
  return j.dump();
}

ModelConfig config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: invalid JSON: ") + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.d = j.value("d", cfg.d);
    cfg.h = j.value("h", cfg.h);
    cfg.d_ff = j.value("d_ff", cfg.d_ff);
    cfg.n_enc = j.value("n_enc", cfg.n_enc);
    cfg.n_dec = j.value("n_dec", cfg.n_dec);
    cfg.n_temporal_blocks = j.value("n_temporal_blocks", cfg.n_temporal_blocks);
    cfg.in_channels = j.value("in_channels", cfg.in_channels);
    cfg.out_channels = j.value("out_channels", cfg.out_channels);
    cfg.lookback = j.value("lookback", cfg.lookback);
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.label_len = j.value("label_len", cfg.label_len);
    if (j.contains("embedding_mode")) {
      cfg.embedding_mode = embedding_mode_from_string(j["embedding_mode"]);
    }
    cfg.dropout = j.value("dropout", cfg.dropout);
    if (j.contains("scale_mode")) {
      cfg.scale_mode = scale_mode_from_string(j["scale_mode"]);
    }
    if (j.contains("mask_mode")) {
      cfg.mask_mode = mask_mode_from_string(j["mask_mode"]);
    }
    if (j.contains("activation")) {
      cfg.activation = activation_from_string(j["activation"]);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: bad field type: ") + e.what());
  }
  return cfg;
}

void save_checkpoint(const std::string& path, const Forecaster<double>& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path);

  out.write(kMagic, sizeof(kMagic));
  nlohmann::json header;
  header["kind"] = std::string(model.kind());
  header["config"] = nlohmann::json::parse(config_to_json(model.config()));
  const std::string header_text = header.dump();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(header_text.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

  const auto params = model.named_parameters();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape().rank()));
    for (int i = 0; i < t.shape().rank(); ++i) {
      write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(t.shape().dim(i)));
    }
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.values().size() * sizeof(double)));
  }
  if (!out) throw DataError("write failed for checkpoint: " + path);
}

std::unique_ptr<Forecaster<double>> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);

  char magic[sizeof(kMagic)] = {};
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw DataError(path + ": not a checkpoint file (bad magic)");
  }
  const auto header_len = read_pod<std::uint32_t>(in, "header length");
  std::string header_text(header_len, '\0');
  if (!in.read(header_text.data(), header_len)) {
    throw DataError(path + ": truncated header");
  }
  std::string kind;
  ModelConfig cfg;
  try {
    nlohmann::json header = nlohmann::json::parse(header_text);
    kind = header.at("kind").get<std::string>();
    cfg = config_from_json(header.at("config").dump());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad checkpoint header: " + e.what());
  }

  Rng init_rng(0);  // initial values are immediately overwritten
  std::unique_ptr<Forecaster<double>> model =
      make_forecaster<double>(kind, cfg, init_rng);
  auto params = model->named_parameters();

  const auto n_tensors = read_pod<std::uint32_t>(in, "tensor count");
  if (n_tensors != params.size()) {
    throw DataError(path + ": has " + std::to_string(n_tensors) +
                    " tensors, model '" + kind + "' expects " +
                    std::to_string(params.size()));
  }
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const auto name_len = read_pod<std::uint16_t>(in, "tensor name length");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len)) {
      throw DataError(path + ": truncated tensor name");
    }
    const auto rank = read_pod<std::uint8_t>(in, "tensor rank");
    std::vector<Index> dims;
    for (std::uint8_t r = 0; r < rank; ++r) {
      dims.push_back(static_cast<Index>(read_pod<std::uint64_t>(in, "tensor dim")));
    }
    const Shape shape(dims);

    Tensord* dst = nullptr;
    for (auto& [pname, p] : params) {
      if (pname == name) dst = &p;
    }
    if (dst == nullptr) {
      throw DataError(path + ": tensor '" + name +
                      "' does not exist in model '" + kind + "'");
    }
    if (dst->shape() != shape) {
      throw DataError(path + ": tensor '" + name + "' has shape " +
                      shape.str() + ", model expects " + dst->shape().str());
    }
    if (!in.read(reinterpret_cast<char*>(dst->values_mut().data()),
                 static_cast<std::streamsize>(shape.numel() * sizeof(double)))) {
      throw DataError(path + ": truncated tensor data for '" + name + "'");
    }
  }
  return model;
}

}  // namespace temponet
