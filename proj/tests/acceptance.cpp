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

// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qrng/certification.hpp"
#include "qrng/classical.hpp"
#include "qrng/extractor.hpp"
#include "qrng/optics.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/round_log.hpp"

namespace {

using namespace qrng;
using Clock = std::chrono::steady_clock;

constexpr double kPi = std::numbers::pi;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int g_failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

DeviceSettings nominal_settings() {
  DeviceSettings s;
  s.alpha_mag = 0.05;  // |alpha|^2 = omega = 0.0025
  s.beta_mag = std::sqrt(99.0);  // (1 - t^2)|beta|^2 = 0.99
  s.eta = 0.55;
  s.t2 = 0.99;
  s.p1 = 0.25;
  return s;
}

BitTable joint_from(const BitTable& conditional, double p1) {
  BitTable j = conditional;
  j.col(0) *= 1.0 - p1;
  j.col(1) *= p1;
  return j;
}

// 1. Closed-form fidelity and Monte Carlo agreement.
void closed_form_fidelity() {
  const DeviceParams p(nominal_settings());
  const double t = std::sqrt(p.t2());
  const double r = std::sqrt(p.r2());
  const double beta = p.beta_mag();
  const double alpha = p.alpha_mag();
  double worst_rel = 0.0;
  for (double phase : {0.0, 0.3, 1.0, kPi / 2, 2.0, kPi}) {
    // x = 0: blocked signal; x = 1: signal interferes with the local oscillator.
    const double q0 = std::exp(-p.eta() * r * r * beta * beta);
    const double amp2 = t * t * alpha * alpha + r * r * beta * beta + 2 * t * r * alpha * beta * std::cos(phase);
    const double q1 = std::exp(-p.eta() * amp2);
    worst_rel = std::max(worst_rel, std::abs(no_click_probability(0, p, phase) - q0) / q0);
    worst_rel = std::max(worst_rel, std::abs(no_click_probability(1, p, phase) - q1) / q1);
  }
  const double eq5 = std::exp(-p.eta() * std::pow(t * alpha + r * beta, 2));
  worst_rel = std::max(worst_rel, std::abs(no_click_probability(1, p, 0.0) - eq5) / eq5);

  const auto start = Clock::now();
  const std::uint64_t n = 10'000'000;
  const auto block = sample_block(p, n, 20190101);
  const double elapsed = seconds_since(start);
  const BitTable exact = conditional_probabilities(p, 0.0);
  double worst_z = 0.0;
  for (int x = 0; x < 2; ++x) {
    const double nx = static_cast<double>(block.counts.n_x(x));
    for (int b = 0; b < 2; ++b) {
      const double q = exact(b, x);
      const double f = static_cast<double>(block.counts(b, x)) / nx;
      worst_z = std::max(worst_z, std::abs(f - q) / std::sqrt(q * (1 - q) / nx));
    }
  }
  const bool ok = worst_rel <= 1e-15 && worst_z <= 5.0 && elapsed <= 10.0;
  report(1, "closed-form fidelity", ok,
         fmt("max relative deviation %.2e (<= 1e-15); n=1e7 max |z| %.2f (<= 5); runtime %.2f s (<= 10)", worst_rel,
             worst_z, elapsed));
}

// 2. Setup inequality violated at alpha = eta t / 2, beta = 1 / r for every efficiency.
void setup_violation() {
  const double t2 = 0.99;
  const double t = std::sqrt(t2);
  const double r = std::sqrt(1 - t2);
  int violated = 0;
  double min_margin = 1e300;
  for (int k = 1; k <= 20; ++k) {
    const double eta = 0.05 * k;
    const auto s = setup_inequality(eta * t / 2, 1 / r, eta, t2);
    if (s.lhs > s.rhs && s.violated) ++violated;
    min_margin = std::min(min_margin, s.lhs - s.rhs);
  }
  const auto half = setup_inequality(0.5 * t / 2, 1 / r, 0.5, t2);
  const bool point_ok = std::abs(half.lhs - 0.1472) <= 1e-4 && std::abs(half.rhs - 0.0619) <= 1e-4;
  report(2, "setup inequality violation", violated == 20 && point_ok,
         fmt("violated for %d/20 efficiencies (min margin %.3e); eta=0.5 lhs %.6f rhs %.6f (targets 0.1472, 0.0619 "
             "+-1e-4)",
             violated, min_margin, half.lhs, half.rhs));
}

// 3. The brute-force classical optimum never exceeds 2 (omega0 + omega1).
void classical_oracle_soundness() {
  const auto start = Clock::now();
  const auto grid = linspace(0.0, 1.0, 20);
  double worst = -1e300;
  for (double w0 : grid) {
    for (double w1 : grid) {
      const auto omega = EnergyBounds::from_per_input(w0, w1, 0.25);
      worst = std::max(worst, classical_max_lhs(omega, 8) - classical_bound(omega));
    }
  }
  const double elapsed = seconds_since(start);
  report(3, "classical oracle soundness", worst <= 1e-9 && elapsed <= 60.0,
         fmt("20x20 grid, m_max=8: max(oracle - bound) %.3e (<= 1e-9); runtime %.2f s (<= 60)", worst, elapsed));
}

// 4. Correlation versus phase: extrema at 0 and pi, Monte Carlo within 5 sigma, bound band emitted.
void correlation_vs_phase() {
  const DeviceParams p(nominal_settings());
  const auto energy = EnergyBounds::from_per_input(0.0, 0.0025, 0.25);
  const int fine = 3600;
  int imax = 0;
  int imin = 0;
  std::vector<double> e(fine);
  for (int k = 0; k < fine; ++k) {
    e[k] = correlation_function(p, 2 * kPi * k / fine);
    if (e[k] > e[imax]) imax = k;
    if (e[k] < e[imin]) imin = k;
  }
  const bool extrema_ok = imax == 0 && imin == fine / 2;

  const auto rows = correlation_figure(p, energy, 50, 1'000'000, 4);
  double worst_z = 0.0;
  bool band_ok = true;
  for (const auto& row : rows) {
    worst_z = std::max(worst_z, std::abs(row.monte_carlo - row.closed_form) / row.monte_carlo_sigma);
    band_ok = band_ok && std::abs(row.classical_bound - 0.005) < 1e-15 && row.classical_lo < row.classical_hi;
  }
  const auto csv = correlation_figure_csv(rows);
  band_ok = band_ok && csv.rfind("phase_rad,E,E_mc,E_mc_sigma,classical_lo,classical_hi,classical_bound\n", 0) == 0;
  report(4, "correlation vs phase", extrema_ok && worst_z <= 5.0 && band_ok,
         fmt("argmax phase %.4f, argmin phase %.4f (expected 0, pi); 50 phases x 1e6 rounds max |z| %.2f (<= 5); "
             "bound band 0.005 %s",
             2 * kPi * imax / fine, 2 * kPi * imin / fine, worst_z, band_ok ? "emitted" : "missing"));
}

// 5. Finite-size min-entropy behaviour.
void min_entropy_behaviour() {
  const double h = 0.117;
  const double eps = 1e-10;
  const auto cfg = load_config(QRNG_SOURCE_DIR "/configs/full_scale.json");
  const double c = cfg.certificate.c;
  const double d = cfg.certificate.d;
  bool monotone = true;
  bool bounded = true;
  double previous = 0.0;
  for (double e = 1.0; e <= 12.0 + 1e-9; e += 0.05) {
    const auto n = static_cast<std::uint64_t>(std::llround(std::pow(10.0, e)));
    const double rate = certified_min_entropy(n, h, c, d, eps) / static_cast<double>(n);
    monotone = monotone && rate >= previous;
    bounded = bounded && rate <= h;
    previous = rate;
  }
  const double limit_gap = h - certified_min_entropy(1'000'000'000'000, h, c, d, eps) / 1e12;
  bool exact = true;
  for (std::uint64_t n : {1ull, 977ull, 100'000'000ull, 1'000'000'000'000ull}) {
    exact = exact && certified_min_entropy(n, h, 0.0, 0.0, eps) == static_cast<double>(n) * h;
  }
  const double shipped = certified_min_entropy(100'000'000, cfg.certificate) / 1e8;
  const bool ok = monotone && bounded && limit_gap >= 0 && limit_gap <= 1e-4 && exact &&
                  std::abs(shipped - 0.1) <= 0.005 && cfg.certificate.h == h && cfg.certificate.epsilon == eps;
  report(5, "min-entropy behaviour", ok,
         fmt("rate nondecreasing %s, <= h %s; h - rate(1e12) %.2e (<= 1e-4); c=d=0 exact %s; shipped (c=%g, d=%g) "
             "rate at n=1e8 %.6f (0.1 +- 0.005)",
             monotone ? "yes" : "no", bounded ? "yes" : "no", limit_gap, exact ? "yes" : "no", c, d, shipped));
}

// 6 and 7 share the desk run: its extracted bits feed the monobit test.
ProtocolResult desk_protocol(bool* ok_out) {
  const auto cfg = load_config(QRNG_SOURCE_DIR "/configs/desk.json");
  const auto start = Clock::now();
  auto first = run_protocol(cfg);
  const double elapsed = seconds_since(start);
  const auto second = run_protocol(cfg);
  std::ostringstream a;
  std::ostringstream b;
  write_report(a, first);
  write_report(b, second);
  const bool identical = a.str() == b.str() && first.extracted.to_bytes() == second.extracted.to_bytes();
  const bool ok = first.blocks.size() == 35 && first.all_passed() && first.summary.total_certified_bits > 0 &&
                  first.summary.total_extracted_bits > 0 && identical && elapsed <= 120.0;
  report(6, "desk-scale protocol", ok,
         fmt("%llu/%llu blocks of 1e6 passed; certified %.0f bits, extracted %llu bits; reruns byte-identical %s; "
             "runtime %.2f s (<= 120)",
             static_cast<unsigned long long>(first.summary.passed),
             static_cast<unsigned long long>(first.summary.blocks), first.summary.total_certified_bits,
             static_cast<unsigned long long>(first.summary.total_extracted_bits), identical ? "yes" : "no", elapsed));
  *ok_out = ok;
  return first;
}

BitVector random_bits(std::size_t n, std::mt19937_64& rng) {
  BitVector v(n);
  for (auto& w : v.words()) w = rng();
  if (n % 64) v.words().back() &= (std::uint64_t{1} << (n % 64)) - 1;
  return v;
}

void extractor_checks(const BitVector& desk_output) {
  std::mt19937_64 rng(7);
  int linear = 0;
  const int trials = 10'000;
  for (int i = 0; i < trials; ++i) {
    const std::size_t k = 1 + rng() % 4096;
    const std::size_t l = 1 + rng() % k;
    const auto seed = random_bits(k + l - 1, rng);
    const auto a = random_bits(k, rng);
    const auto b = random_bits(k, rng);
    if (toeplitz_extract(a ^ b, seed, l) == (toeplitz_extract(a, seed, l) ^ toeplitz_extract(b, seed, l))) ++linear;
  }

  const double n = static_cast<double>(desk_output.size());
  const double ones = static_cast<double>(desk_output.popcount());
  const double z = n > 0 ? (2.0 * ones - n) / std::sqrt(n) : 1e300;

  // Sustained rate: full-scale blocks (1e8 raw bits, 10 % output) in 2^20-bit chunks.
  const std::size_t in_len = 8 * kMaxChunkBits;
  const std::size_t out_len = in_len / 10;
  const auto input = random_bits(in_len, rng);
  const auto seed = random_bits(chunked_seed_length(in_len, out_len), rng);
  const auto start = Clock::now();
  const auto out = extract(input, seed, out_len);
  const double elapsed = seconds_since(start);
  const double rate = static_cast<double>(out.size()) / elapsed;

  const bool ok = linear == trials && n >= 1e6 && std::abs(z) <= 4.0 && rate >= 1.25e6;
  report(7, "extractor", ok,
         fmt("linearity %d/%d triples (k <= 4096); monobit z %.3f over %.0f bits (|z| <= 4, >= 1e6 bits); "
             "sustained %.3g bit/s (>= 1.25e6)",
             linear, trials, z, n, rate));
}

// 8. The monitor alarms within one window of the closed-form crossing under linear phase drift.
void monitoring() {
  const DeviceParams p(nominal_settings());
  const auto energy = EnergyBounds::from_per_input(0.0, 0.0025, 0.25);
  const auto cert = classical_bound_certificate(0.25, 0.04, 1.0, 1.0, 1e-10);
  auto exact_witness = [&](double phase) {
    return witness_value(joint_from(conditional_probabilities(p, phase), 0.25), energy, cert);
  };
  // The witness falls monotonically from phase 0 to pi; bisect for the threshold crossing.
  double lo = 0.0;
  double hi = kPi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (exact_witness(mid) >= cert.h ? lo : hi) = mid;
  }
  const double crossing_phase = 0.5 * (lo + hi);

  const std::uint64_t window = 1'000'000;
  const std::uint64_t windows = 40;
  const double rate = kPi / static_cast<double>(windows * window);
  const auto crossing_round = static_cast<std::uint64_t>(crossing_phase / rate);
  const std::uint64_t crossing_window = crossing_round / window;

  SimulatedSource source(p, 8, DriftModel::linear(rate), windows * window);
  const auto result = monitor(source, cert, energy, window);
  const bool alarmed = result.alarm_window.has_value();
  const long long diff = alarmed ? static_cast<long long>(*result.alarm_window) - static_cast<long long>(crossing_window)
                                 : 1'000'000;
  const bool ok = alarmed && std::llabs(diff) <= 1 && result.windows.front().passed;
  report(8, "real-time monitoring", ok,
         fmt("crossing at phase %.5f rad = window %llu; first failing window %lld (within +-1 window)", crossing_phase,
             static_cast<unsigned long long>(crossing_window),
             alarmed ? static_cast<long long>(*result.alarm_window) : -1LL));
}

}  // namespace

int main() {
  try {
    closed_form_fidelity();
    setup_violation();
    classical_oracle_soundness();
    correlation_vs_phase();
    min_entropy_behaviour();
    bool desk_ok = false;
    const auto desk = desk_protocol(&desk_ok);
    extractor_checks(desk.extracted);
    monitoring();
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%s: %d criterion(s) failed\n", g_failures ? "FAIL" : "PASS", g_failures);
  return g_failures ? 1 : 0;
}
