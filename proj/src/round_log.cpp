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

#include "qrng/round_log.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <vector>

#include <openssl/sha.h>

#include "qrng/json_io.hpp"

namespace qrng {

namespace {

void put_u64(std::uint8_t* dst, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) dst[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_u64(const std::uint8_t* src) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{src[i]} << (8 * i);
  return v;
}

std::array<std::uint8_t, RoundLogHeader::kSize> encode_header(const RoundLogHeader& h) {
  std::array<std::uint8_t, RoundLogHeader::kSize> buf{};
  std::memcpy(buf.data(), RoundLogHeader::kMagic.data(), 4);
  buf[4] = RoundLogHeader::kVersion;
  put_u64(buf.data() + 5, h.n);
  put_u64(buf.data() + 13, h.seed);
  std::memcpy(buf.data() + 21, h.digest.data(), 32);
  return buf;
}

RoundLogHeader read_header(std::istream& in) {
  std::array<std::uint8_t, RoundLogHeader::kSize> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), 4);
  if (in.gcount() != 4 || std::memcmp(buf.data(), RoundLogHeader::kMagic.data(), 4) != 0) {
    throw ParseError("bad magic");
  }
  in.read(reinterpret_cast<char*>(buf.data() + 4), RoundLogHeader::kSize - 4);
  if (static_cast<std::size_t>(in.gcount()) != RoundLogHeader::kSize - 4) throw ParseError("truncated header");
  if (buf[4] != RoundLogHeader::kVersion) throw ParseError("unsupported version " + std::to_string(buf[4]));
  RoundLogHeader h;
  h.n = get_u64(buf.data() + 5);
  h.seed = get_u64(buf.data() + 13);
  std::memcpy(h.digest.data(), buf.data() + 21, 32);
  if (h.n == 0) throw Error("no data");
  return h;
}

}  // namespace

Digest params_digest(const DeviceParams& params) {
  const std::string text = canonical_text(params);
  Digest d;
  SHA256(reinterpret_cast<const unsigned char*>(text.data()), text.size(), d.data());
  return d;
}

std::string to_hex(const Digest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (auto byte : digest) {
    s += kHex[byte >> 4];
    s += kHex[byte & 15];
  }
  return s;
}

BitVector RoundLog::outputs() const {
  const std::uint64_t n = size();
  BitVector out(n);
  auto src = bits_.words();
  auto dst = out.words();
  // Each source word holds 32 rounds; gather the odd (b) bits.
  for (std::size_t w = 0; w < src.size(); ++w) {
    std::uint64_t v = (src[w] >> 1) & 0x5555555555555555ULL;
    v = (v | (v >> 1)) & 0x3333333333333333ULL;
    v = (v | (v >> 2)) & 0x0F0F0F0F0F0F0F0FULL;
    v = (v | (v >> 4)) & 0x00FF00FF00FF00FFULL;
    v = (v | (v >> 8)) & 0x0000FFFF0000FFFFULL;
    v = (v | (v >> 16)) & 0x00000000FFFFFFFFULL;
    dst[w / 2] |= v << (32 * (w & 1));
  }
  return out;
}

RoundLog RoundLog::slice(std::uint64_t first, std::uint64_t count) const {
  RoundLog out(seed_, digest_);
  out.bits_ = bits_.slice(2 * first, 2 * count);
  return out;
}

CorrelationCounts RoundLog::counts() const {
  // Count the four (x, b) pairs with word-level popcounts over the 2-bit lanes.
  CountTable n = CountTable::Zero();
  const auto words = bits_.words();
  const std::uint64_t rounds = size();
  std::uint64_t c[4] = {0, 0, 0, 0};
  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::uint64_t xs = words[w] & 0x5555555555555555ULL;
    const std::uint64_t bs = (words[w] >> 1) & 0x5555555555555555ULL;
    std::uint64_t valid = 0x5555555555555555ULL;
    const std::uint64_t first = static_cast<std::uint64_t>(w) * 32;
    if (first + 32 > rounds) {
      const std::uint64_t live = rounds - first;
      valid &= (std::uint64_t{1} << (2 * live)) - 1;
    }
    c[3] += std::popcount(xs & bs & valid);
    c[1] += std::popcount(xs & ~bs & valid);
    c[2] += std::popcount(~xs & bs & valid);
    c[0] += std::popcount(~xs & ~bs & valid);
  }
  n(0, 0) = c[0];
  n(0, 1) = c[1];
  n(1, 0) = c[2];
  n(1, 1) = c[3];
  return CorrelationCounts(n);
}

void RoundLog::write(std::ostream& out) const {
  const auto head = encode_header(header());
  out.write(reinterpret_cast<const char*>(head.data()), head.size());
  const auto bytes = bits_.to_bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void RoundLog::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write(out);
  if (!out) throw Error("write failed: " + path);
}

RoundLog RoundLog::from_packed(const RoundLogHeader& header, BitVector packed) {
  if (packed.size() != 2 * header.n) throw Error("packed payload length does not match header n");
  RoundLog log(header.seed, header.digest);
  log.bits_ = std::move(packed);
  return log;
}

RoundLog RoundLog::read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  const RoundLogHeader h = read_header(in);
  const std::uint64_t nbytes = (2 * h.n + 7) / 8;
  std::vector<std::uint8_t> payload(nbytes);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(nbytes));
  const auto got = static_cast<std::uint64_t>(in.gcount());
  if (got < nbytes) throw ParseError("truncated at round " + std::to_string(got * 4));
  return from_packed(h, BitVector::from_bytes(payload, 2 * h.n));
}

RoundLogReader::RoundLogReader(const std::string& path) : in_(path, std::ios::binary) {
  if (!in_) throw Error("cannot open " + path);
  header_ = read_header(in_);
}

std::size_t RoundLogReader::read(std::span<RoundRecord> out) {
  std::size_t produced = 0;
  while (produced < out.size() && next_round_ < header_.n) {
    if ((next_round_ & 3) == 0) {
      const int c = in_.get();
      if (c == std::char_traits<char>::eof()) throw ParseError("truncated at round " + std::to_string(next_round_));
      pending_byte_ = static_cast<std::uint8_t>(c);
    }
    const unsigned shift = 2 * (next_round_ & 3);
    out[produced].x = (pending_byte_ >> shift) & 1;
    out[produced].b = (pending_byte_ >> (shift + 1)) & 1;
    ++produced;
    ++next_round_;
  }
  return produced;
}

std::size_t SimulatedSource::read(std::span<RoundRecord> out) {
  const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(remaining_, out.size()));
  sim_.fill(out.first(n));
  remaining_ -= n;
  return n;
}

std::size_t LogSource::read(std::span<RoundRecord> out) {
  const std::uint64_t n = std::min<std::uint64_t>(log_.size() - next_, out.size());
  for (std::uint64_t i = 0; i < n; ++i) out[i] = log_[next_ + i];
  next_ += n;
  return static_cast<std::size_t>(n);
}

SampledBlock sample_block(const DeviceParams& params, std::uint64_t n, std::uint64_t seed, DriftModel drift) {
  if (n == 0) throw Error("block size must be at least 1");
  RoundSimulator sim(params, seed, drift);
  BitVector packed(2 * n);
  auto words = packed.words();
  CountTable counts = CountTable::Zero();
  std::uint64_t word = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const RoundRecord r = sim.next();
    ++counts(r.b, r.x);
    word |= (std::uint64_t{r.x} | (std::uint64_t{r.b} << 1)) << (2 * (i & 31));
    if ((i & 31) == 31) {
      words[i >> 5] = word;
      word = 0;
    }
  }
  if (n & 31) words[n >> 5] = word;

  SampledBlock out;
  out.log = RoundLog::from_packed({n, seed, params_digest(params)}, std::move(packed));
  out.counts = CorrelationCounts(counts);
  return out;
}

IngestedLog ingest_round_log(const std::string& path, const std::optional<DeviceParams>& expected) {
  RoundLogReader reader(path);
  if (expected && reader.header().digest != params_digest(*expected)) {
    throw Error("round log digest does not match the declared device parameters");
  }
  CorrelationCounts counts;
  std::vector<RoundRecord> buf(1 << 16);
  for (std::size_t got; (got = reader.read(buf)) > 0;) {
    for (std::size_t i = 0; i < got; ++i) counts.add(buf[i]);
  }
  return {reader.header(), counts};
}

}  // namespace qrng
