#include "entnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "entnet/error.hpp"

namespace entnet {

namespace {

std::string variant_name(Variant v) { return v == Variant::kGeneral ? "general" : "simplified"; }
std::string activation_name(Activation a) { return a == Activation::kPrelu ? "prelu" : "identity"; }

Variant parse_variant(const std::string& s) {
  if (s == "general") return Variant::kGeneral;
  if (s == "simplified") return Variant::kSimplified;
  fail(ErrorCode::kBadCheckpoint, "unknown variant " + s);
}

Activation parse_activation(const std::string& s) {
  if (s == "prelu") return Activation::kPrelu;
  if (s == "identity") return Activation::kIdentity;
  fail(ErrorCode::kBadCheckpoint, "unknown activation " + s);
}

std::string key_mode_name(KeyMode k) {
  switch (k) {
    case KeyMode::kFree: return "free";
    case KeyMode::kTiedTokens: return "tied_tokens";
    case KeyMode::kTiedCandidates: return "tied_candidates";
  }
  return "free";
}

KeyMode parse_key_mode(const std::string& s) {
  if (s == "free") return KeyMode::kFree;
  if (s == "tied_tokens") return KeyMode::kTiedTokens;
  if (s == "tied_candidates") return KeyMode::kTiedCandidates;
  fail(ErrorCode::kBadCheckpoint, "unknown key mode " + s);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) fail(ErrorCode::kBadCheckpoint, "truncated file");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

std::string get_bytes(std::istream& in, std::size_t n) {
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    fail(ErrorCode::kBadCheckpoint, "truncated file");
  }
  return s;
}

}  // namespace

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["slots"] = c.memory.slots;
  j["dim"] = c.memory.dim;
  j["variant"] = variant_name(c.memory.variant);
  j["activation"] = activation_name(c.memory.activation);
  j["normalize"] = c.memory.normalize;
  j["keys_tied"] = c.memory.keys_tied;
  j["output_activation"] = activation_name(c.output_activation);
  j["output"] = c.output == OutputMode::kDecoder ? "decoder" : "direct";
  j["keys"] = key_mode_name(c.keys);
  j["key_tokens"] = c.key_tokens;
  j["vocab_size"] = c.vocab_size;
  j["story_length"] = c.story_length;
  j["query_length"] = c.query_length;
  j["dual_encoding"] = c.dual_encoding;
  j["freeze_masks"] = c.freeze_masks;
  j["dropout"] = c.dropout;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.memory.slots = j.at("slots").get<std::size_t>();
    c.memory.dim = j.at("dim").get<std::size_t>();
    c.memory.variant = parse_variant(j.at("variant").get<std::string>());
    c.memory.activation = parse_activation(j.at("activation").get<std::string>());
    c.memory.normalize = j.at("normalize").get<bool>();
    c.memory.keys_tied = j.at("keys_tied").get<bool>();
    c.output_activation = parse_activation(j.at("output_activation").get<std::string>());
    c.output = j.at("output").get<std::string>() == "direct" ? OutputMode::kDirect
                                                             : OutputMode::kDecoder;
    c.keys = parse_key_mode(j.at("keys").get<std::string>());
    c.key_tokens = j.at("key_tokens").get<std::vector<int>>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.story_length = j.at("story_length").get<std::size_t>();
    c.query_length = j.at("query_length").get<std::size_t>();
    c.dual_encoding = j.at("dual_encoding").get<bool>();
    c.freeze_masks = j.at("freeze_masks").get<bool>();
    c.dropout = j.at("dropout").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kBadCheckpoint, std::string("model config: ") + e.what());
  }
}

void save_checkpoint(std::ostream& out, const Model& model, const nlohmann::json& extra) {
  nlohmann::json meta;
  meta["model"] = config_to_json(model.config());
  meta["vocab"] = model.vocab().serialize();
  meta["extra"] = extra.is_null() ? nlohmann::json::object() : extra;
  const std::string header = meta.dump();

  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_u32(out, static_cast<std::uint32_t>(model.params().size()));
  for (const auto& p : model.params()) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put_u32(out, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t e : p->value.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (double v : p->value.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  if (!out) fail(ErrorCode::kIo, "checkpoint write failed");
}

void save_checkpoint(const std::string& path, const Model& model, const nlohmann::json& extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  save_checkpoint(out, model, extra);
}

LoadedCheckpoint load_checkpoint(std::istream& in) {
  const std::string magic = get_bytes(in, sizeof kCheckpointMagic);
  if (std::memcmp(magic.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    fail(ErrorCode::kBadCheckpoint, "not an entnet checkpoint");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kBadCheckpoint, "unsupported checkpoint version " + std::to_string(version));
  }
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(get_bytes(in, get_u32(in)));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kBadCheckpoint, std::string("metadata: ") + e.what());
  }
  if (!meta.contains("model") || !meta.contains("vocab")) {
    fail(ErrorCode::kBadCheckpoint, "metadata lacks model or vocab");
  }
  Model model(config_from_json(meta["model"]),
              Vocabulary::deserialize(meta["vocab"].get<std::string>()));
  const std::uint32_t count = get_u32(in);
  if (count != model.params().size()) {
    fail(ErrorCode::kBadCheckpoint, "checkpoint holds " + std::to_string(count) +
                                        " tensors, configuration needs " +
                                        std::to_string(model.params().size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = get_bytes(in, get_u32(in));
    Parameter* p = model.params().find(name);
    if (p == nullptr) fail(ErrorCode::kBadCheckpoint, "unexpected tensor " + name);
    const std::uint32_t rank = get_u32(in);
    Shape shape(rank);
    for (auto& e : shape) e = get_u32(in);
    if (shape != p->value.shape()) {
      fail(ErrorCode::kBadCheckpoint, name + " has shape " + shape_string(shape) + ", expected " +
                                          shape_string(p->value.shape()));
    }
    for (double& v : p->value.values()) v = std::bit_cast<float>(get_u32(in));
  }
  return LoadedCheckpoint{std::move(model), meta.value("extra", nlohmann::json::object())};
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace entnet
