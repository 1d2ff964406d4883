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

namespace compcap {

/// Raw 20-byte SHA-1 digest.
std::string sha1_digest(std::string_view data);
/// Lowercase hex SHA-1 digest.
std::string sha1_hex(std::string_view data);
std::string sha1_file(const std::string& path);

std::string read_file(const std::string& path);
/// Writes through a temporary sibling file and renames it into place.
void write_file(const std::string& path, std::string_view data);

}  // namespace compcap
