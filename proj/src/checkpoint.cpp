// Copyright (c) 2026 vrft contributors
// SPDX-License-Identifier: Apache-2.0

#include "vrft/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "vrft/error.hpp"

namespace vrft {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'V', 'R', 'F', 'T', 'C', 'K', 'P', 'T'};

struct BlockView {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::span<const double> data;
};

std::vector<BlockView> views(const PolicyParams& p) {
  const auto& t = p.trainable;
  const auto& c = t.connectors;
  return {
      {"base", p.base.rows(), p.base.cols(), p.base.flat()},
      {"token_embedding", p.token_embedding.rows(), p.token_embedding.cols(), p.token_embedding.flat()},
      {"lora_b", t.lora_b.rows(), t.lora_b.cols(), t.lora_b.flat()},
      {"lora_a", t.lora_a.rows(), t.lora_a.cols(), t.lora_a.flat()},
      {"disease_weight", c.disease_weight.rows(), c.disease_weight.cols(), c.disease_weight.flat()},
      {"disease_bias", c.disease_bias.size(), 1, c.disease_bias},
      {"pixel_weight", c.pixel_weight.rows(), c.pixel_weight.cols(), c.pixel_weight.flat()},
      {"pixel_bias", c.pixel_bias.size(), 1, c.pixel_bias},
  };
}

std::vector<std::span<double>> mutable_blocks(PolicyParams& p) {
  auto& t = p.trainable;
  auto& c = t.connectors;
  return {p.base.flat(),         p.token_embedding.flat(), t.lora_b.flat(),
          t.lora_a.flat(),       c.disease_weight.flat(),  std::span<double>(c.disease_bias),
          c.pixel_weight.flat(), std::span<double>(c.pixel_bias)};
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  return v;
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return v;
}

json config_json(const PolicyConfig& c) {
  return {{"model_dim", c.model_dim},         {"instruction_dim", c.instruction_dim},
          {"token_dim", c.token_dim},         {"max_len", c.max_len},
          {"rank", c.rank},                   {"alpha", c.alpha},
          {"patch", c.patch},                 {"stem", c.stem},
          {"base_scale", c.base_scale},       {"adapter_scale", c.adapter_scale},
          {"connector_scale", c.connector_scale}, {"embedding_scale", c.embedding_scale}};
}

PolicyConfig config_from_json(const json& j) {
  PolicyConfig c;
  c.model_dim = j.at("model_dim").get<int>();
  c.instruction_dim = j.at("instruction_dim").get<int>();
  c.token_dim = j.at("token_dim").get<int>();
  c.max_len = j.at("max_len").get<int>();
  c.rank = j.at("rank").get<int>();
  c.alpha = j.at("alpha").get<double>();
  c.patch = j.at("patch").get<int>();
  c.stem = j.at("stem").get<int>();
  c.base_scale = j.at("base_scale").get<double>();
  c.adapter_scale = j.at("adapter_scale").get<double>();
  c.connector_scale = j.at("connector_scale").get<double>();
  c.embedding_scale = j.at("embedding_scale").get<double>();
  return c;
}

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  auto p = stem;
  p += ext;
  return p;
}

void mismatch(const char* field, long long header, long long expected) {
  throw SchemaError(std::string("checkpoint ") + field + " is " + std::to_string(header) +
                    ", expected " + std::to_string(expected));
}

}  // namespace

std::vector<std::string> checkpoint_block_names() {
  return {"base",           "token_embedding", "lora_b",       "lora_a",
          "disease_weight", "disease_bias",    "pixel_weight", "pixel_bias"};
}

std::vector<std::uint8_t> block_bytes(const PolicyParams& params, std::string_view name) {
  for (const auto& b : views(params)) {
    if (b.name != name) continue;
    std::vector<std::uint8_t> out;
    out.reserve(b.data.size() * 8);
    for (double v : b.data) put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
  }
  throw ArgumentError("unknown checkpoint block '" + std::string(name) + "'");
}

void save_checkpoint(const PolicyParams& params, const std::filesystem::path& stem,
                     std::string_view config_hash) {
  json blocks = json::array();
  std::size_t offset = 0;
  std::vector<std::uint8_t> bin(kMagic, kMagic + sizeof kMagic);
  put_u32(bin, kCheckpointVersion);
  put_u32(bin, 0);
  std::size_t total = 0;
  for (const auto& b : views(params)) total += b.data.size();
  put_u64(bin, total);
  for (const auto& b : views(params)) {
    blocks.push_back({{"name", b.name},
                      {"rows", b.rows},
                      {"cols", b.cols},
                      {"offset", offset},
                      {"count", b.data.size()},
                      {"frozen", b.name == "base" || b.name == "token_embedding"}});
    offset += b.data.size();
    for (double v : b.data) put_u64(bin, std::bit_cast<std::uint64_t>(v));
  }
  json header{{"format", "vrft-checkpoint"},
              {"version", kCheckpointVersion},
              {"byte_order", "little"},
              {"value_type", "float64"},
              {"policy", config_json(params.config)},
              {"context_dim", params.config.context_dim()},
              {"vocab_size", params.vocab_size()},
              {"rank", params.config.rank},
              {"alpha", params.config.alpha},
              {"seed", params.seed},
              {"config_hash", config_hash},
              {"vocabulary", params.vocab.symbols()},
              {"blocks", blocks},
              {"total_values", total}};

  std::ofstream hb(with_ext(stem, ".bin"), std::ios::binary | std::ios::trunc);
  if (!hb) throw IoError("cannot write " + with_ext(stem, ".bin").string());
  hb.write(reinterpret_cast<const char*>(bin.data()), static_cast<std::streamsize>(bin.size()));
  std::ofstream hj(with_ext(stem, ".json"), std::ios::binary | std::ios::trunc);
  if (!hj) throw IoError("cannot write " + with_ext(stem, ".json").string());
  hj << header.dump(2) << '\n';
  if (!hb || !hj) throw IoError("write failed for checkpoint " + stem.string());
}

PolicyParams load_checkpoint(const std::filesystem::path& stem, const PolicyConfig* expected) {
  std::ifstream hj(with_ext(stem, ".json"), std::ios::binary);
  if (!hj) throw IoError("cannot open " + with_ext(stem, ".json").string());
  json header;
  try {
    header = json::parse(hj);
  } catch (const json::exception& e) {
    throw ParseError("checkpoint header: " + std::string(e.what()));
  }
  PolicyParams p;
  try {
    if (header.at("format").get<std::string>() != "vrft-checkpoint")
      throw SchemaError("not a checkpoint header: " + with_ext(stem, ".json").string());
    if (header.at("version").get<std::uint32_t>() != kCheckpointVersion)
      throw SchemaError("unsupported checkpoint version");
    p.config = config_from_json(header.at("policy"));
    p.seed = header.at("seed").get<std::uint64_t>();
    p.vocab = Vocabulary(header.at("vocabulary").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw SchemaError("checkpoint header: " + std::string(e.what()));
  }
  if (expected) {
    const auto& e = *expected;
    if (p.config.model_dim != e.model_dim) mismatch("model_dim", p.config.model_dim, e.model_dim);
    if (p.config.instruction_dim != e.instruction_dim)
      mismatch("instruction_dim", p.config.instruction_dim, e.instruction_dim);
    if (p.config.token_dim != e.token_dim) mismatch("token_dim", p.config.token_dim, e.token_dim);
    if (p.config.max_len != e.max_len) mismatch("max_len", p.config.max_len, e.max_len);
    if (p.config.rank != e.rank) mismatch("rank", p.config.rank, e.rank);
    if (p.config.patch != e.patch) mismatch("patch", p.config.patch, e.patch);
    if (p.config.alpha != e.alpha) throw SchemaError("checkpoint alpha differs from configuration");
  }

  const auto d = p.config.context_dim();
  const auto v = p.vocab.size();
  const auto dm = static_cast<std::size_t>(p.config.model_dim);
  p.base = Matrix(d, v);
  p.token_embedding = Matrix(v, static_cast<std::size_t>(p.config.token_dim));
  p.trainable.lora_b = Matrix(d, static_cast<std::size_t>(p.config.rank));
  p.trainable.lora_a = Matrix(static_cast<std::size_t>(p.config.rank), v);
  p.trainable.connectors = ConnectorParams(dm, kDiseaseDim, kPixelChannels);

  const auto names = checkpoint_block_names();
  const auto& blocks = header.at("blocks");
  if (!blocks.is_array() || blocks.size() != names.size())
    throw SchemaError("checkpoint must hold exactly " + std::to_string(names.size()) + " blocks");
  auto dst = mutable_blocks(p);
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto name = blocks[k].at("name").get<std::string>();
    if (name != names[k]) throw SchemaError("unexpected checkpoint block '" + name + "'");
    const auto count = blocks[k].at("count").get<std::size_t>();
    if (count != dst[k].size())
      mismatch(names[k].c_str(), static_cast<long long>(count), static_cast<long long>(dst[k].size()));
  }

  std::ifstream hb(with_ext(stem, ".bin"), std::ios::binary);
  if (!hb) throw IoError("cannot open " + with_ext(stem, ".bin").string());
  std::vector<std::uint8_t> bin((std::istreambuf_iterator<char>(hb)), std::istreambuf_iterator<char>());
  if (bin.size() < 24 || std::memcmp(bin.data(), kMagic, sizeof kMagic) != 0)
    throw SchemaError("checkpoint binary has a bad magic number");
  if (get_u32(bin.data() + 8) != kCheckpointVersion)
    throw SchemaError("checkpoint binary version mismatch");
  std::size_t total = 0;
  for (auto b : dst) total += b.size();
  if (get_u64(bin.data() + 16) != total || bin.size() != 24 + 8 * total)
    throw SchemaError("checkpoint binary size does not match its header");
  const std::uint8_t* at = bin.data() + 24;
  for (auto b : dst)
    for (auto& x : b) {
      x = std::bit_cast<double>(get_u64(at));
      at += 8;
    }
  return p;
}

}  // namespace vrft
