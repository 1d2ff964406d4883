// Copyright 2026 The Compcap Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "compcap/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "compcap/error.hpp"
#include "compcap/io.hpp"
#include "json.hpp"

namespace compcap {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

constexpr char kMagic[8] = {'B', 'U', 'T', 'R', 'C', 'K', 'P', 'T'};
constexpr std::size_t kDigestBytes = 20;
constexpr std::size_t kPrefixBytes = sizeof kMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t);

using Shape = std::vector<std::size_t>;

std::vector<std::pair<std::string, Shape>> entry_shapes(const ModelConfig& c) {
  return {
      {"W1", {c.E, c.V}},
      {"W2", {c.J, c.L}},
      {"W3", {c.J, c.I}},
      {"W4", {1, c.J}},
      {"W5", {1, c.H}},
      {"W6", {c.H, c.J}},
      {"W7", {c.H, c.L}},
      {"W8", {c.V, c.G}},
      {"enc.w_ih", {4 * c.L, c.E}},
      {"enc.w_hh", {4 * c.L, c.L}},
      {"enc.bias", {4 * c.L}},
      {"gen.w_ih", {4 * c.G, c.J + c.L}},
      {"gen.w_hh", {4 * c.G, c.G}},
      {"gen.bias", {4 * c.G}},
  };
}

nlohmann::ordered_json config_json(const ModelConfig& c) {
  return {{"V", c.V}, {"E", c.E}, {"L", c.L}, {"J", c.J}, {"I", c.I}, {"R", c.R}, {"H", c.H}, {"G", c.G},
          {"max_len", c.max_len}, {"ranking_enabled", c.ranking_enabled}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.V = j.at("V");
  c.E = j.at("E");
  c.L = j.at("L");
  c.J = j.at("J");
  c.I = j.at("I");
  c.R = j.at("R");
  c.H = j.at("H");
  c.G = j.at("G");
  c.max_len = j.at("max_len");
  c.ranking_enabled = j.at("ranking_enabled");
  return c;
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t pos) {
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  return v;
}

}  // namespace

std::string serialize_checkpoint(const ModelParams& p, const Vocabulary& vocab) {
  nlohmann::ordered_json header;
  header["config"] = config_json(p.config);
  header["vocab"] = vocab.words();
  auto entries = nlohmann::ordered_json::array();
  for (const Parameter* q : p.parameters()) entries.push_back({{"name", q->name}, {"shape", q->value.shape()}});
  header["entries"] = entries;
  const std::string h = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, h.size());
  out += h;
  for (const Parameter* q : p.parameters()) {
    out.append(reinterpret_cast<const char*>(q->value.data()), q->value.size() * sizeof(double));
  }
  return out + sha1_digest(out);
}

void save_checkpoint(const std::string& path, const ModelParams& p, const Vocabulary& vocab) {
  write_file(path, serialize_checkpoint(p, vocab));
}

namespace {

Checkpoint parse_verified(const std::string& bytes, const std::optional<ModelConfig>& expected) {
  if (bytes.size() < kPrefixBytes + kDigestBytes) throw IoError("checkpoint truncated: " + std::to_string(bytes.size()) + " bytes");
  const std::size_t body = bytes.size() - kDigestBytes;
  if (sha1_digest(std::string_view(bytes).substr(0, body)) != std::string_view(bytes).substr(body)) {
    throw IoError("checkpoint integrity check failed (truncated or corrupted)");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw IoError("not a checkpoint: bad magic");
  const auto version = get<std::uint32_t>(bytes, sizeof kMagic);
  if (version != kCheckpointVersion) {
    throw IoError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                  std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = get<std::uint64_t>(bytes, sizeof kMagic + sizeof(std::uint32_t));
  if (header_len > body - kPrefixBytes) throw IoError("checkpoint header length exceeds file size");

  const nlohmann::json header = nlohmann::json::parse(bytes.substr(kPrefixBytes, header_len));
  const ModelConfig config = config_from_json(header.at("config"));
  const auto& entries = header.at("entries");
  const auto wanted = entry_shapes(config);
  if (entries.size() != wanted.size()) throw IoError("checkpoint lists " + std::to_string(entries.size()) + " entries");

  std::vector<std::string> mismatches;
  const auto against = expected ? entry_shapes(*expected) : wanted;
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    const std::string name = entries[i].at("name");
    const Shape shape = entries[i].at("shape");
    if (name != wanted[i].first || shape != wanted[i].second) throw IoError("checkpoint entry " + name + " is inconsistent with its header");
    if (shape != against[i].second) {
      mismatches.push_back(name + " has shape " + shape_string(shape) + ", expected " + shape_string(against[i].second));
    }
  }
  if (!mismatches.empty()) {
    std::string msg = "checkpoint does not match the model config:";
    for (const auto& m : mismatches) msg += "\n  " + m;
    throw IoError(msg);
  }

  std::size_t pos = kPrefixBytes + header_len;
  std::size_t total = 0;
  for (const auto& [name, shape] : wanted) total += shape.size() == 2 ? shape[0] * shape[1] : shape[0];
  if (body - pos != total * sizeof(double)) throw IoError("checkpoint payload size does not match its entries");

  Checkpoint ck;
  ck.params.config = config;
  auto slots = ck.params.parameters();
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    const auto& [name, shape] = wanted[i];
    std::vector<double> data(shape.size() == 2 ? shape[0] * shape[1] : shape[0]);
    std::memcpy(data.data(), bytes.data() + pos, data.size() * sizeof(double));
    pos += data.size() * sizeof(double);
    *slots[i] = Parameter(name, Tensor(shape, std::move(data)));
  }
  ck.vocab = Vocabulary(header.at("vocab").get<std::vector<std::string>>());
  if (ck.vocab.size() != config.V) throw IoError("checkpoint vocabulary size disagrees with V");
  return ck;
}

}  // namespace

Checkpoint parse_checkpoint(const std::string& bytes, const std::optional<ModelConfig>& expected) {
  try {
    return parse_verified(bytes, expected);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint header: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::string& path, const std::optional<ModelConfig>& expected) {
  return parse_checkpoint(read_file(path), expected);
}

}  // namespace compcap
