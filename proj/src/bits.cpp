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

#include "qrng/bits.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "qrng/core_model.hpp"

namespace qrng {

void BitVector::push_back(bool v) {
  if ((size_ & 63) == 0) words_.push_back(0);
  ++size_;
  set(size_ - 1, v);
}

void BitVector::append(const BitVector& other) {
  const std::size_t old = size_;
  size_ += other.size_;
  words_.resize((size_ + 63) / 64, 0);
  const unsigned shift = old & 63;
  const std::size_t base = old >> 6;
  for (std::size_t w = 0; w < other.words_.size(); ++w) {
    const std::uint64_t word = other.words_[w];
    words_[base + w] |= word << shift;
    if (shift != 0 && base + w + 1 < words_.size()) words_[base + w + 1] |= word >> (64 - shift);
  }
}

BitVector BitVector::slice(std::size_t offset, std::size_t count) const {
  if (offset + count > size_) throw Error("bit slice out of range");
  BitVector out(count);
  const unsigned shift = offset & 63;
  const std::size_t base = offset >> 6;
  for (std::size_t w = 0; w < out.words_.size(); ++w) {
    std::uint64_t word = words_[base + w] >> shift;
    if (shift != 0 && base + w + 1 < words_.size()) word |= words_[base + w + 1] << (64 - shift);
    out.words_[w] = word;
  }
  if (count & 63) out.words_.back() &= (std::uint64_t{1} << (count & 63)) - 1;
  return out;
}

std::size_t BitVector::popcount() const {
  std::size_t n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

BitVector& BitVector::operator^=(const BitVector& other) {
  if (other.size_ != size_) throw Error("bit vectors differ in length");
  for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= other.words_[w];
  return *this;
}

std::vector<std::uint8_t> BitVector::to_bytes() const {
  std::vector<std::uint8_t> out((size_ + 7) / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(words_[i >> 3] >> (8 * (i & 7)));
  }
  return out;
}

BitVector BitVector::from_bytes(std::span<const std::uint8_t> bytes, std::size_t bits) {
  if (bits > bytes.size() * 8) throw Error("requested more bits than the buffer holds");
  BitVector out(bits);
  const std::size_t nbytes = (bits + 7) / 8;
  for (std::size_t i = 0; i < nbytes; ++i) {
    out.words_[i >> 3] |= std::uint64_t{bytes[i]} << (8 * (i & 7));
  }
  if (bits & 63) out.words_.back() &= (std::uint64_t{1} << (bits & 63)) - 1;
  return out;
}

BitVector BitVector::from_string(const std::string& s) {
  BitVector out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw Error("bit string may only contain '0' and '1'");
    out.set(i, s[i] == '1');
  }
  return out;
}

BitVector read_bit_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return BitVector::from_bytes(bytes);
}

BitVector read_bit_file(const std::string& path, std::size_t bits) {
  BitVector all = read_bit_file(path);
  if (all.size() < bits) {
    throw Error(path + ": holds " + std::to_string(all.size()) + " bits, need " + std::to_string(bits));
  }
  return all.slice(0, bits);
}

void write_bit_file(const std::string& path, const BitVector& bits) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  const auto bytes = bits.to_bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path);
}

}  // namespace qrng
