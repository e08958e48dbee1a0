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

#ifndef AGRIDP_HASH_H_
#define AGRIDP_HASH_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

#include "absl/status/statusor.h"

namespace agridp {

// Incremental 64-bit FNV-1a over a canonical little-endian byte stream.
class Fnv1aHasher {
 public:
  void AddBytes(std::span<const unsigned char> bytes) {
    for (unsigned char b : bytes) {
      state_ ^= b;
      state_ *= 0x100000001b3ULL;
    }
  }

  void AddU64(std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    AddBytes(buf);
  }

  void AddDouble(double v) { AddU64(std::bit_cast<std::uint64_t>(v)); }

  void AddDoubles(std::span<const double> vs) {
    for (double v : vs) AddDouble(v);
  }

  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t Fnv1a64(std::string_view s) {
  Fnv1aHasher h;
  h.AddBytes({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
  return h.digest();
}

// Fingerprints are exchanged as 16 lowercase hex digits.
std::string FingerprintToHex(std::uint64_t fp);
absl::StatusOr<std::uint64_t> FingerprintFromHex(std::string_view hex);

// Hash of a file's bytes; used by run manifests.
absl::StatusOr<std::uint64_t> HashFile(const std::string& path);

}  // namespace agridp

#endif  // AGRIDP_HASH_H_
