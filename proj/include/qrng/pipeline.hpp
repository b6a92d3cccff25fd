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

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrng/bits.hpp"
#include "qrng/core_model.hpp"
#include "qrng/optics.hpp"
#include "qrng/round_log.hpp"

namespace qrng {

struct ExtractorSeedConfig {
  enum class Source { kPrng, kFile, kSystem };

  Source source = Source::kPrng;
  /// kPrng only. Reproducible, for testing; not a secret seed.
  std::uint64_t prng_seed = 0;
  /// kFile only; bit-packed, little-endian bit order.
  std::string path;
  /// Reuse one seed for every block. Off unless the operator opts in.
  bool reuse = false;
};

struct FigureOptions {
  std::size_t phases = 50;
  std::uint64_t mc_rounds = 1'000'000;
  /// Unset ranges default to [0, eta t] for |alpha| and [0, 2/r] for |beta|.
  std::optional<std::pair<double, double>> alpha_range;
  std::optional<std::pair<double, double>> beta_range;
  std::size_t steps = 41;
};

struct ProtocolConfig {
  std::uint64_t block_size = 1'000'000;
  std::uint64_t blocks = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  DriftModel drift;
  /// Ingest recorded rounds instead of simulating.
  std::optional<std::string> round_log;
  double eps_extract = 1e-10;
  std::optional<double> pr_pass;
  ExtractorSeedConfig extractor_seed;
  std::uint64_t monitor_window = 1'000'000;
};

struct OutputConfig {
  std::string report;
  std::string bits;
  std::string figures_dir;
  FigureOptions figures;
};

/// Sections device / certificate / protocol / output. The certificate
/// section holds the witness fields, or `gamma_conditional` in place of
/// `gamma`, or `"kind": "classical_bound"` to build the witness from the
/// classical bound; plus the assumed `energy` bounds.
struct Config {
  std::optional<DeviceParams> device;
  WitnessCertificate certificate;
  EnergyBounds energy = EnergyBounds::from_per_input(0.0, 0.0, 0.5);
  ProtocolConfig protocol;
  OutputConfig output;
};

Config config_from_json(const nlohmann::json& j);
Config load_config(const std::string& path);

/// Derives an independent 64-bit seed for stream `index` from `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Verdict for one block of rounds: counts, witness, pass flag, certified
/// min-entropy and extractable length. Failing blocks certify nothing.
CertifiedBlock certify_block(const CorrelationCounts& counts, const EnergyBounds& energy,
                             const WitnessCertificate& cert, double eps_extract,
                             std::optional<double> pr_pass = {});

struct ProtocolSummary {
  std::uint64_t blocks = 0;
  std::uint64_t passed = 0;
  std::uint64_t rounds = 0;
  double total_certified_bits = 0.0;
  std::uint64_t total_extracted_bits = 0;
  double rep_rate_hz = 0.0;

  double pass_rate() const { return blocks ? static_cast<double>(passed) / static_cast<double>(blocks) : 0.0; }
  double certified_rate_per_round() const { return rounds ? total_certified_bits / static_cast<double>(rounds) : 0.0; }
  double extracted_rate_per_round() const {
    return rounds ? static_cast<double>(total_extracted_bits) / static_cast<double>(rounds) : 0.0;
  }
};

struct ProtocolResult {
  std::vector<CertifiedBlock> blocks;
  BitVector extracted;
  ProtocolSummary summary;
  bool all_passed() const { return summary.passed == summary.blocks; }
};

/// Runs every block: rounds -> counts -> witness -> pass test -> certified
/// min-entropy -> output length -> Toeplitz extraction. Failing blocks
/// contribute no output. Deterministic for fixed seeds (except for the
/// system seed source).
ProtocolResult run_protocol(const Config& config);

/// Nominal figures for a block size without running anything.
struct ProtocolPlan {
  std::uint64_t block_size;
  double certified_bits_per_round;
  double extracted_bits_per_round;
  double rep_rate_hz;
  double certified_rate_bps() const { return certified_bits_per_round * rep_rate_hz; }
  double extracted_rate_bps() const { return extracted_bits_per_round * rep_rate_hz; }
};

ProtocolPlan plan_protocol(const Config& config);

nlohmann::json block_record(std::uint64_t index, const CertifiedBlock& block);
nlohmann::json summary_record(const ProtocolSummary& summary);
nlohmann::json plan_record(const ProtocolPlan& plan);
/// Newline-delimited records: one per block, then the summary.
void write_report(std::ostream& out, const ProtocolResult& result);

// --- real-time self-testing -------------------------------------------------

struct WindowVerdict {
  std::uint64_t index = 0;
  std::uint64_t first_round = 0;
  std::uint64_t rounds = 0;
  CorrelationCounts counts;
  double witness_value = 0.0;
  bool passed = false;
  /// False for a trailing window shorter than the configured size.
  bool complete = true;
};

/// Tumbling-window self-test. Each full window yields a verdict as soon as
/// its last round arrives; the first failing window raises the alarm.
class Monitor {
 public:
  /// Throws Error for window < 1000.
  Monitor(const WitnessCertificate& cert, const EnergyBounds& energy, std::uint64_t window);

  std::optional<WindowVerdict> push(const RoundRecord& round);
  /// Flushes a trailing partial window, if any.
  std::optional<WindowVerdict> finish();

  std::optional<std::uint64_t> alarm_window() const { return alarm_; }

 private:
  WindowVerdict close(bool complete);

  WitnessCertificate cert_;
  EnergyBounds energy_;
  std::uint64_t window_;
  CorrelationCounts current_;
  std::uint64_t in_window_ = 0;
  std::uint64_t rounds_seen_ = 0;
  std::uint64_t windows_closed_ = 0;
  std::optional<std::uint64_t> alarm_;
};

struct MonitorReport {
  std::vector<WindowVerdict> windows;
  std::optional<std::uint64_t> alarm_window;
};

MonitorReport monitor(RoundSource& source, const WitnessCertificate& cert, const EnergyBounds& energy,
                      std::uint64_t window);

nlohmann::json window_record(const WindowVerdict& v);

// --- figure data ------------------------------------------------------------

struct CorrelationFigureRow {
  double phase_rad;
  double closed_form;
  double monte_carlo;
  double monte_carlo_sigma;
  double classical_lo;
  double classical_hi;
  double classical_bound;
};

/// Correlation E versus phase: closed form, Monte Carlo estimate with its
/// binomial standard deviation, and the band of E reachable classically
/// given p(0|0) and the bound 2(omega0 + omega1). Phases are 2 pi k / count.
std::vector<CorrelationFigureRow> correlation_figure(const DeviceParams& params, const EnergyBounds& energy,
                                                     std::size_t phases, std::uint64_t rounds_per_phase,
                                                     std::uint64_t seed);
std::string correlation_figure_csv(const std::vector<CorrelationFigureRow>& rows);

struct FigureFiles {
  std::string correlation;
  std::string violation_region;
  std::string entropy_heatmap;
};

/// Writes the three figure CSVs into `dir`. Requires a device section.
FigureFiles emit_figures(const Config& config, const std::string& dir);

}  // namespace qrng
