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

#include <string>
#include <string_view>
#include <vector>

namespace compcap {

/// Lowercases and splits on anything that is not a letter, digit or an
/// intra-word hyphen ("dark-red" stays one token, "cat -" does not).
std::vector<std::string> tokenize(std::string_view text);

/// Tokens joined by single spaces.
std::string join_tokens(const std::vector<std::string>& tokens);

/// tokenize + join: lowercase, punctuation stripped, whitespace collapsed.
std::string normalize_caption(std::string_view text);

}  // namespace compcap
