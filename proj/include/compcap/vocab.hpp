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

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace compcap {

inline constexpr std::size_t kPad = 0;
inline constexpr std::size_t kBos = 1;
inline constexpr std::size_t kEos = 2;
inline constexpr std::size_t kUnk = 3;
inline constexpr std::size_t kReservedTokens = 4;

class Vocabulary {
 public:
  Vocabulary();
  /// Reserved tokens followed by `tokens` in order; duplicates are rejected.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  /// Most frequent tokens first (ties alphabetical), at most max_size entries
  /// including the reserved ones.
  static Vocabulary build(const std::vector<std::string>& captions, std::size_t max_size);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t index(std::string_view token) const;
  bool contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

  /// Caption text to ids (no BOS/EOS); unknown words map to UNK.
  std::vector<std::size_t> encode(std::string_view caption) const;
  /// Ids to text, stopping at EOS and skipping PAD/BOS.
  std::string decode(const std::vector<std::size_t>& ids) const;

  /// Non-reserved tokens in id order.
  std::vector<std::string> words() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace compcap
