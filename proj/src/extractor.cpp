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

#include "qrng/extractor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <fftw3.h>

#include "qrng/core_model.hpp"

namespace qrng {

namespace {

/// 64 bits of `bits` starting at `offset`, zero past the end.
std::uint64_t word_at(std::span<const std::uint64_t> words, std::size_t offset) {
  const std::size_t w = offset >> 6;
  const unsigned shift = offset & 63;
  std::uint64_t v = w < words.size() ? words[w] >> shift : 0;
  if (shift != 0 && w + 1 < words.size()) v |= words[w + 1] << (64 - shift);
  return v;
}

void check_lengths(std::size_t in_len, std::size_t seed_len, std::size_t out_len) {
  if (out_len < 1) throw Error("output length must be at least 1");
  if (in_len < out_len) {
    throw Error("input length " + std::to_string(in_len) + " is shorter than output length " +
                std::to_string(out_len));
  }
  const std::size_t expected = in_len + out_len - 1;
  if (seed_len != expected) {
    throw Error("seed must hold " + std::to_string(expected) + " bits (input " + std::to_string(in_len) +
                " + output " + std::to_string(out_len) + " - 1), got " + std::to_string(seed_len));
  }
}

// FFTW's planner is not reentrant; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) throw Error("fftw_malloc failed");
  return FftwBuffer<T>(p);
}

/// Forward and inverse plans for one transform size. Plans are created once
/// per size and executed on fresh buffers through the new-array interface,
/// which is thread-safe; buffers come from fftw_malloc so alignment matches.
struct PlanPair {
  fftw_plan forward;
  fftw_plan inverse;
};

const PlanPair& plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto real = fftw_buffer<double>(n);
  auto spectrum = fftw_buffer<fftw_complex>(n / 2 + 1);
  const int size = static_cast<int>(n);
  PlanPair plans{fftw_plan_dft_r2c_1d(size, real.get(), spectrum.get(), FFTW_ESTIMATE),
                 fftw_plan_dft_c2r_1d(size, spectrum.get(), real.get(), FFTW_ESTIMATE)};
  if (plans.forward == nullptr || plans.inverse == nullptr) throw Error("FFTW planning failed");
  return cache.emplace(n, plans).first->second;
}

/// Writes bits as 0.0 / 1.0 into dst[0..bits.size()), reversed if asked.
void load_bits(const BitVector& bits, double* dst, bool reversed) {
  const std::size_t len = bits.size();
  const auto words = bits.words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    const std::uint64_t word = words[w];
    const std::size_t base = 64 * w;
    const std::size_t count = std::min<std::size_t>(64, len - base);
    for (std::size_t b = 0; b < count; ++b) {
      const double v = static_cast<double>((word >> b) & 1);
      dst[reversed ? len - 1 - (base + b) : base + b] = v;
    }
  }
}

/// Smallest 2^a 3^b 5^c that is >= n and even.
std::size_t fft_size(std::size_t n) {
  std::size_t best = std::bit_ceil(std::max<std::size_t>(n, 2));
  for (std::size_t p3 = 1; p3 < best; p3 *= 3) {
    for (std::size_t p35 = p3; p35 < best; p35 *= 5) {
      std::size_t v = p35;
      while (v < n || (v & 1)) v *= 2;
      best = std::min(best, v);
    }
  }
  return best;
}

}  // namespace

namespace toeplitz {

std::size_t seed_length(std::size_t in_len, std::size_t out_len) { return in_len + out_len - 1; }

BitVector multiply_direct(const BitVector& input, const BitVector& seed, std::size_t out_len) {
  check_lengths(input.size(), seed.size(), out_len);
  const auto in = input.words();
  const auto sw = seed.words();
  BitVector out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    // Row i of T is seed[l-1-i .. l-1-i+k).
    const std::size_t row = out_len - 1 - i;
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < in.size(); ++w) acc ^= word_at(sw, row + 64 * w) & in[w];
    // Seed bits past row + k meet zero input padding, so no masking is needed.
    out.set(i, std::popcount(acc) & 1);
  }
  return out;
}

BitVector multiply_fft(const BitVector& input, const BitVector& seed, std::size_t out_len) {
  check_lengths(input.size(), seed.size(), out_len);
  const std::size_t k = input.size();
  const std::size_t n = fft_size(k + out_len - 1);
  const std::size_t spectrum = n / 2 + 1;

  // Per-thread scratch, kept across calls: fresh multi-megabyte buffers
  // would cost more in page faults than the transforms themselves.
  struct Workspace {
    std::size_t capacity = 0;
    FftwBuffer<double> a, b;
    FftwBuffer<fftw_complex> fa, fb;
  };
  thread_local Workspace ws;
  if (ws.capacity < n) {
    ws.a = fftw_buffer<double>(n);
    ws.b = fftw_buffer<double>(n);
    ws.fa = fftw_buffer<fftw_complex>(n / 2 + 1);
    ws.fb = fftw_buffer<fftw_complex>(n / 2 + 1);
    ws.capacity = n;
  }
  double* a = ws.a.get();
  double* b = ws.b.get();
  fftw_complex* fa = ws.fa.get();
  fftw_complex* fb = ws.fb.get();
  const PlanPair& plans = plans_for(n);

  // a = seed, b = reversed input; out_i = (a * b)[k + l - 2 - i].
  std::fill(a + seed.size(), a + n, 0.0);
  std::fill(b + k, b + n, 0.0);
  load_bits(seed, a, false);
  load_bits(input, b, true);
  fftw_execute_dft_r2c(plans.forward, a, fa);
  fftw_execute_dft_r2c(plans.forward, b, fb);
  for (std::size_t j = 0; j < spectrum; ++j) {
    const double re = fa[j][0] * fb[j][0] - fa[j][1] * fb[j][1];
    const double im = fa[j][0] * fb[j][1] + fa[j][1] * fb[j][0];
    fa[j][0] = re;
    fa[j][1] = im;
  }
  fftw_execute_dft_c2r(plans.inverse, fa, a);

  const double scale = 1.0 / static_cast<double>(n);
  BitVector out(out_len);
  double worst = 0.0;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double v = a[k + out_len - 2 - i] * scale;
    const double r = std::nearbyint(v);
    worst = std::max(worst, std::abs(v - r));
    out.set(i, static_cast<std::uint64_t>(r) & 1);
  }
  if (worst >= 0.25) throw Error("FFT rounding error too large for an exact parity");
  return out;
}

}  // namespace toeplitz

BitVector toeplitz_extract(const BitVector& input, const BitVector& seed, std::size_t out_len) {
  check_lengths(input.size(), seed.size(), out_len);
  const double direct_cost = static_cast<double>(input.size()) * static_cast<double>(out_len) / 64.0;
  const double n = static_cast<double>(input.size() + out_len);
  const double fft_cost = 20.0 * n * std::log2(n);
  return direct_cost <= fft_cost ? toeplitz::multiply_direct(input, seed, out_len)
                                 : toeplitz::multiply_fft(input, seed, out_len);
}

std::uint64_t output_length(double min_entropy_bits, double eps_extract) {
  if (!(min_entropy_bits >= 0.0)) throw Error("min-entropy must be nonnegative");
  if (!(eps_extract > 0.0 && eps_extract < 1.0)) throw Error("extractor epsilon out of range");
  const double len = std::floor(min_entropy_bits - 2.0 * std::log2(1.0 / eps_extract));
  return len > 0.0 ? static_cast<std::uint64_t>(len) : 0;
}

std::vector<ExtractionChunk> plan_chunks(std::size_t in_len, std::size_t out_len, std::size_t max_chunk) {
  if (max_chunk == 0) throw Error("chunk size must be positive");
  if (out_len > in_len) throw Error("output length exceeds input length");
  std::vector<ExtractionChunk> chunks;
  if (in_len == 0) return chunks;
  const std::size_t count = (in_len + max_chunk - 1) / max_chunk;
  const std::size_t base = in_len / count;
  const std::size_t extra = in_len % count;

  std::size_t in_offset = 0;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    const auto share = static_cast<std::size_t>(static_cast<unsigned __int128>(out_len) * len / in_len);
    chunks.push_back({in_offset, len, share, 0, 0});
    in_offset += len;
    assigned += share;
  }
  for (auto& ch : chunks) {
    if (assigned == out_len) break;
    if (ch.out_len < ch.in_len) {
      ++ch.out_len;
      ++assigned;
    }
  }
  std::size_t seed_offset = 0;
  for (auto& ch : chunks) {
    ch.seed_offset = seed_offset;
    ch.seed_len = ch.out_len > 0 ? toeplitz::seed_length(ch.in_len, ch.out_len) : 0;
    seed_offset += ch.seed_len;
  }
  return chunks;
}

std::size_t chunked_seed_length(std::size_t in_len, std::size_t out_len, std::size_t max_chunk) {
  std::size_t total = 0;
  for (const auto& ch : plan_chunks(in_len, out_len, max_chunk)) total += ch.seed_len;
  return total;
}

BitVector extract(const BitVector& input, const BitVector& seed, std::size_t out_len, std::size_t max_chunk,
                  unsigned threads) {
  const auto chunks = plan_chunks(input.size(), out_len, max_chunk);
  std::size_t seed_needed = 0;
  for (const auto& ch : chunks) seed_needed += ch.seed_len;
  if (seed.size() < seed_needed) {
    throw Error("seed must hold at least " + std::to_string(seed_needed) + " bits, got " +
                std::to_string(seed.size()));
  }

  std::vector<BitVector> parts(chunks.size());
  auto work = [&](std::size_t c) {
    const auto& ch = chunks[c];
    if (ch.out_len == 0) return;
    parts[c] = toeplitz_extract(input.slice(ch.in_offset, ch.in_len), seed.slice(ch.seed_offset, ch.seed_len),
                                ch.out_len);
  };
  if (threads <= 1 || chunks.size() <= 1) {
    for (std::size_t c = 0; c < chunks.size(); ++c) work(c);
  } else {
    const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(chunks.size()));
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::size_t c = t; c < chunks.size(); c += workers) work(c);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  BitVector out;
  for (const auto& p : parts) out.append(p);
  return out;
}

}  // namespace qrng
