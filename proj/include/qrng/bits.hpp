// Copyright 2026 The selftest-qrng Authors
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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qrng {

/// Packed bit string. Bit i lives in word i / 64 at position i % 64, so the
/// byte image is little-endian bit order within bytes (bit i of the stream
/// is bit i % 8 of byte i / 8). Bits past size() are kept zero.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool v) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    words_[i >> 6] = v ? (words_[i >> 6] | mask) : (words_[i >> 6] & ~mask);
  }
  void push_back(bool v);
  void append(const BitVector& other);

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  /// Copies bits [offset, offset + count).
  BitVector slice(std::size_t offset, std::size_t count) const;
  std::size_t popcount() const;

  BitVector& operator^=(const BitVector& other);
  friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }
  bool operator==(const BitVector&) const = default;

  std::vector<std::uint8_t> to_bytes() const;
  /// Takes the first `bits` bits of `bytes`; `bits` defaults to all of them.
  static BitVector from_bytes(std::span<const std::uint8_t> bytes, std::size_t bits);
  static BitVector from_bytes(std::span<const std::uint8_t> bytes) { return from_bytes(bytes, bytes.size() * 8); }
  static BitVector from_string(const std::string& zeros_and_ones);

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

BitVector read_bit_file(const std::string& path, std::size_t bits);
BitVector read_bit_file(const std::string& path);
void write_bit_file(const std::string& path, const BitVector& bits);

}  // namespace qrng
