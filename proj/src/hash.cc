// Copyright 2026 The agridp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "agridp/hash.h"

#include <charconv>
#include <fstream>
#include <iterator>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace agridp {

std::string FingerprintToHex(std::uint64_t fp) {
  return absl::StrFormat("%016x", fp);
}

absl::StatusOr<std::uint64_t> FingerprintFromHex(std::string_view hex) {
  std::uint64_t out = 0;
  const char* end = hex.data() + hex.size();
  auto [ptr, ec] = std::from_chars(hex.data(), end, out, 16);
  if (hex.size() != 16 || ec != std::errc() || ptr != end) {
    return absl::InvalidArgumentError(
        absl::StrCat("malformed fingerprint '", std::string(hex), "'"));
  }
  return out;
}

absl::StatusOr<std::uint64_t> HashFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  Fnv1aHasher h;
  h.AddBytes(bytes);
  return h.digest();
}

}  // namespace agridp
