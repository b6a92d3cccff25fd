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

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>

#include "qrng/bits.hpp"
#include "qrng/core_model.hpp"
#include "qrng/optics.hpp"

namespace qrng {

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256 of the canonical JSON text of the parameters.
Digest params_digest(const DeviceParams& params);
std::string to_hex(const Digest& digest);

struct RoundLogHeader {
  static constexpr std::array<char, 4> kMagic{'Q', 'R', 'N', 'G'};
  static constexpr std::uint8_t kVersion = 1;
  /// magic(4) + version(1) + n(8) + seed(8) + digest(32)
  static constexpr std::size_t kSize = 53;

  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  Digest digest{};

  bool operator==(const RoundLogHeader&) const = default;
};

/// Recorded rounds of one run.
///
/// Binary layout: "QRNG", version u8, n u64 LE, seed u64 LE, 32-byte params
/// digest, then 2 bits per round (x at stream bit 2i, b at stream bit 2i+1,
/// stream bit j stored at bit j % 8 of payload byte j / 8), zero-padded to a
/// byte boundary.
class RoundLog {
 public:
  RoundLog() = default;
  RoundLog(std::uint64_t seed, const Digest& digest) : seed_(seed), digest_(digest) {}

  void push_back(const RoundRecord& r) {
    bits_.push_back(r.x != 0);
    bits_.push_back(r.b != 0);
  }

  std::uint64_t size() const { return bits_.size() / 2; }
  RoundRecord operator[](std::uint64_t i) const {
    return {static_cast<std::uint8_t>(bits_.get(2 * i)), static_cast<std::uint8_t>(bits_.get(2 * i + 1))};
  }

  RoundLogHeader header() const { return {size(), seed_, digest_}; }
  const BitVector& packed() const { return bits_; }

  /// The output string b_1 .. b_n.
  BitVector outputs() const;
  /// Rounds [first, first + count) as a standalone log with the same header fields.
  RoundLog slice(std::uint64_t first, std::uint64_t count) const;
  CorrelationCounts counts() const;

  void write(std::ostream& out) const;
  void write_file(const std::string& path) const;
  /// Reads a whole log; parse errors as for RoundLogReader.
  static RoundLog read_file(const std::string& path);

  static RoundLog from_packed(const RoundLogHeader& header, BitVector packed);

  bool operator==(const RoundLog&) const = default;

 private:
  std::uint64_t seed_ = 0;
  Digest digest_{};
  BitVector bits_;
};

/// Source of rounds in protocol order.
class RoundSource {
 public:
  virtual ~RoundSource() = default;
  /// Fills a prefix of `out`; returns 0 at end of stream.
  virtual std::size_t read(std::span<RoundRecord> out) = 0;
};

/// Streaming reader over a RoundLog file. Throws Error with messages
/// "bad magic", "unsupported version N", "truncated header",
/// "no data" (n = 0) and "truncated at round i".
class RoundLogReader final : public RoundSource {
 public:
  explicit RoundLogReader(const std::string& path);

  const RoundLogHeader& header() const { return header_; }
  std::size_t read(std::span<RoundRecord> out) override;
  std::uint64_t rounds_read() const { return next_round_; }

 private:
  std::ifstream in_;
  RoundLogHeader header_;
  std::uint64_t next_round_ = 0;
  std::uint8_t pending_byte_ = 0;
};

/// Simulated rounds, optionally bounded to `limit` rounds.
class SimulatedSource final : public RoundSource {
 public:
  SimulatedSource(const DeviceParams& params, std::uint64_t seed, DriftModel drift, std::uint64_t limit)
      : sim_(params, seed, drift), remaining_(limit) {}

  std::size_t read(std::span<RoundRecord> out) override;

 private:
  RoundSimulator sim_;
  std::uint64_t remaining_;
};

/// In-memory log viewed as a stream.
class LogSource final : public RoundSource {
 public:
  explicit LogSource(const RoundLog& log) : log_(log) {}
  std::size_t read(std::span<RoundRecord> out) override;

 private:
  const RoundLog& log_;
  std::uint64_t next_ = 0;
};

struct SampledBlock {
  RoundLog log;
  CorrelationCounts counts;
};

/// Runs the simulated devices n times. Identical arguments reproduce the
/// same log bit for bit. Throws Error for n = 0.
SampledBlock sample_block(const DeviceParams& params, std::uint64_t n, std::uint64_t seed,
                          DriftModel drift = {});

struct IngestedLog {
  RoundLogHeader header;
  CorrelationCounts counts;
};

/// Scans a RoundLog file end to end. When `expected` is given the header
/// digest must match it.
IngestedLog ingest_round_log(const std::string& path, const std::optional<DeviceParams>& expected = {});

}  // namespace qrng
