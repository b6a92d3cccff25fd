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
#include <vector>

#include "qrng/bits.hpp"

namespace qrng {

/// Seeded Toeplitz hashing over GF(2).
///
/// For input length k and output length l the seed holds k + l - 1 bits and
/// defines T[i][j] = seed[l - 1 + j - i]: the first row is
/// seed[l-1 .. k+l-1) and the first column is seed[0 .. l) read upwards.
/// output_i = XOR_j T[i][j] & input_j.
namespace toeplitz {

/// Word-level reference route, O(k l / 64).
BitVector multiply_direct(const BitVector& input, const BitVector& seed, std::size_t out_len);
/// Same product as an integer convolution through a real FFT, O((k + l) log(k + l)).
BitVector multiply_fft(const BitVector& input, const BitVector& seed, std::size_t out_len);

std::size_t seed_length(std::size_t in_len, std::size_t out_len);

}  // namespace toeplitz

/// Validates lengths and dispatches to the faster route for the size.
/// Throws Error naming the expected lengths when out_len < 1, in_len <
/// out_len or the seed is not exactly in_len + out_len - 1 bits.
BitVector toeplitz_extract(const BitVector& input, const BitVector& seed, std::size_t out_len);

/// floor(min_entropy_bits - 2 log2(1 / eps_extract)), clamped at 0.
std::uint64_t output_length(double min_entropy_bits, double eps_extract);

/// Inputs up to this many bits are hashed in one piece.
inline constexpr std::size_t kMaxChunkBits = std::size_t{1} << 20;

struct ExtractionChunk {
  std::size_t in_offset;
  std::size_t in_len;
  std::size_t out_len;
  std::size_t seed_offset;
  std::size_t seed_len;
};

/// Splits an extraction of `out_len` bits from `in_len` input bits into
/// near-equal input chunks of at most `max_chunk` bits. Output bits are
/// apportioned to chunks in proportion to their input length, and each
/// chunk consumes its own consecutive seed segment.
std::vector<ExtractionChunk> plan_chunks(std::size_t in_len, std::size_t out_len,
                                         std::size_t max_chunk = kMaxChunkBits);
std::size_t chunked_seed_length(std::size_t in_len, std::size_t out_len, std::size_t max_chunk = kMaxChunkBits);

/// Chunked extraction; output is the concatenation of chunk outputs in
/// chunk order. `threads` > 1 hashes chunks concurrently.
BitVector extract(const BitVector& input, const BitVector& seed, std::size_t out_len,
                  std::size_t max_chunk = kMaxChunkBits, unsigned threads = 1);

}  // namespace qrng
