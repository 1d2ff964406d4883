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

#include "compcap/vocab.hpp"

#include <algorithm>
#include <map>

#include "compcap/error.hpp"
#include "compcap/text.hpp"

namespace compcap {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  tokens_ = {"<pad>", "<bos>", "<eos>", "<unk>"};
  tokens_.insert(tokens_.end(), tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) throw ConfigError("duplicate vocabulary token \"" + tokens_[i] + "\"");
  }
}

Vocabulary Vocabulary::build(const std::vector<std::string>& captions, std::size_t max_size) {
  if (max_size < kReservedTokens) throw ConfigError("vocabulary size must be at least " + std::to_string(kReservedTokens));
  std::map<std::string, std::size_t> counts;
  for (const auto& c : captions)
    for (auto& t : tokenize(c)) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  for (const auto& [w, _] : ranked) {
    if (words.size() + kReservedTokens >= max_size) break;
    words.push_back(w);
  }
  return Vocabulary(words);
}

std::size_t Vocabulary::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::encode(std::string_view caption) const {
  std::vector<std::size_t> out;
  for (const auto& t : tokenize(caption)) out.push_back(index(t));
  return out;
}

std::string Vocabulary::decode(const std::vector<std::size_t>& ids) const {
  std::vector<std::string> words;
  for (std::size_t id : ids) {
    if (id == kEos) break;
    if (id == kPad || id == kBos) continue;
    words.push_back(token(id));
  }
  return join_tokens(words);
}

std::vector<std::string> Vocabulary::words() const { return {tokens_.begin() + kReservedTokens, tokens_.end()}; }

}  // namespace compcap
