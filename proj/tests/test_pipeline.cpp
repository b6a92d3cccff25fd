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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "qrng/certification.hpp"
#include "qrng/classical.hpp"
#include "qrng/extractor.hpp"
#include "qrng/json_io.hpp"
#include "qrng/pipeline.hpp"

namespace qrng {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json device_json() {
  return json{{"alpha_mag", 0.05}, {"beta_mag", std::sqrt(99.0)}, {"eta", 0.55}, {"t2", 0.99}, {"p1", 0.25}};
}

json base_config() {
  return json{
      {"device", device_json()},
      {"certificate",
       {{"kind", "classical_bound"},
        {"h", 0.04},
        {"c", 1.0},
        {"d", 1.0},
        {"epsilon", 1e-10},
        {"energy", {{"omega0", 0.0}, {"omega1", 0.0025}, {"p1", 0.25}}}}},
      {"protocol",
       {{"block_size", 200000},
        {"blocks", 4},
        {"seed", 99},
        {"eps_extract", 1e-10},
        {"extractor_seed", {{"source", "prng"}, {"seed", 5}}}}}};
}

std::string report_text(const ProtocolResult& r) {
  std::ostringstream out;
  write_report(out, r);
  return out.str();
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("qrng_pipeline_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST(Config, ParsesTheShippedDeskConfig) {
  const auto cfg = load_config(QRNG_SOURCE_DIR "/configs/desk.json");
  ASSERT_TRUE(cfg.device);
  EXPECT_EQ(cfg.protocol.blocks, 35u);
  EXPECT_EQ(cfg.protocol.block_size, 1'000'000u);
  EXPECT_DOUBLE_EQ(cfg.energy.omega1(), 0.0025);
  EXPECT_DOUBLE_EQ(cfg.certificate.zeta(0), 2.0);
  EXPECT_DOUBLE_EQ(cfg.certificate.gamma(0, 1), -4.0);
}

TEST(Config, ConditionalGammaIsConvertedToJointForm) {
  auto j = base_config();
  j["certificate"] = {{"gamma_conditional", {{1.0, -1.0}, {-1.0, 1.0}}},
                      {"zeta", {2.0, 2.0}},
                      {"c", 1.0},
                      {"d", 1.0},
                      {"h", 0.04},
                      {"epsilon", 1e-10},
                      {"energy", {{"omega0", 0.0}, {"omega1", 0.0025}, {"p1", 0.25}}}};
  const auto cfg = config_from_json(j);
  EXPECT_EQ(cfg.certificate, classical_bound_certificate(0.25, 0.04, 1.0, 1.0, 1e-10));
}

TEST(Config, RejectsBadInput) {
  auto j = base_config();
  j["protocol"]["blok_size"] = 10;
  EXPECT_THROW(config_from_json(j), ParseError);
  j = base_config();
  j["certificate"].erase("energy");
  EXPECT_THROW(config_from_json(j), ParseError);
  j = base_config();
  j["protocol"]["block_size"] = 0;
  EXPECT_THROW(config_from_json(j), ValidationError);
  j = base_config();
  j["protocol"]["drift"] = {{"kind", "spiral"}};
  EXPECT_THROW(config_from_json(j), ParseError);
  j = base_config();
  j["certificate"]["c"] = -1.0;
  EXPECT_THROW(config_from_json(j), ValidationError);
}

TEST(DeriveSeed, DistinctAndStable) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

TEST(CertifyBlock, FailingBlocksCertifyNothing) {
  const auto cert = classical_bound_certificate(0.25, 0.5, 1.0, 1.0, 1e-10);
  CountTable t;
  t << 580, 55, 420, 45;
  const auto b = certify_block(CorrelationCounts(t), EnergyBounds::from_per_input(0, 0.0025, 0.25), cert, 1e-10);
  EXPECT_FALSE(b.passed);
  EXPECT_EQ(b.min_entropy_bits, 0.0);
  EXPECT_EQ(b.extract_len, 0u);
  EXPECT_FALSE(b.epsilon_prime);
}

TEST(CertifyBlock, ReportsEpsilonPrimeOnlyWithPassProbability) {
  const auto cert = classical_bound_certificate(0.25, 0.0, 1.0, 1.0, 1e-10);
  CountTable t;
  t << 58000, 5487, 42000, 4513;
  const auto b = certify_block(CorrelationCounts(t), EnergyBounds::from_per_input(0, 0.0025, 0.25), cert, 1e-10, 0.5);
  ASSERT_TRUE(b.epsilon_prime);
  EXPECT_DOUBLE_EQ(*b.epsilon_prime, 2e-10);
  EXPECT_EQ(b.epsilon, 1e-10);
}

TEST(Protocol, PassingRunConservesBits) {
  const auto cfg = config_from_json(base_config());
  const auto r = run_protocol(cfg);
  ASSERT_EQ(r.blocks.size(), 4u);
  EXPECT_TRUE(r.all_passed());
  std::uint64_t expected = 0;
  for (const auto& b : r.blocks) {
    EXPECT_EQ(b.counts.total(), 200'000u);
    expected += output_length(certified_min_entropy(b.counts.total(), cfg.certificate), cfg.protocol.eps_extract);
  }
  EXPECT_GT(expected, 0u);
  EXPECT_EQ(r.summary.total_extracted_bits, expected);
  EXPECT_EQ(r.extracted.size(), expected);
}

TEST(Protocol, BlindDetectorFailsEveryBlock) {
  auto j = base_config();
  j["device"]["eta"] = 0.0;
  const auto r = run_protocol(config_from_json(j));
  EXPECT_EQ(r.summary.passed, 0u);
  EXPECT_EQ(r.summary.total_extracted_bits, 0u);
  EXPECT_EQ(r.summary.total_certified_bits, 0.0);
  EXPECT_TRUE(r.extracted.empty());
}

TEST(Protocol, ReproducibleAndThreadIndependent) {
  auto j = base_config();
  const auto a = run_protocol(config_from_json(j));
  const auto b = run_protocol(config_from_json(j));
  j["protocol"]["threads"] = 3;
  const auto c = run_protocol(config_from_json(j));
  EXPECT_EQ(report_text(a), report_text(b));
  EXPECT_EQ(a.extracted, b.extracted);
  EXPECT_EQ(report_text(a), report_text(c));
  EXPECT_EQ(a.extracted, c.extracted);
  j["protocol"]["seed"] = 100;
  EXPECT_NE(run_protocol(config_from_json(j)).extracted, a.extracted);
}

TEST(Protocol, ReportHasOneRecordPerBlockThenSummary) {
  const auto text = report_text(run_protocol(config_from_json(base_config())));
  std::istringstream in(text);
  std::string line;
  int blocks = 0;
  json last;
  while (std::getline(in, line)) {
    last = json::parse(line);
    if (last["type"] == "block") {
      ++blocks;
      for (const char* key : {"witness_value", "passed", "n", "epsilon", "min_entropy_bits", "extract_len"}) {
        EXPECT_TRUE(last.contains(key)) << key;
      }
    }
  }
  EXPECT_EQ(blocks, 4);
  EXPECT_EQ(last["type"], "summary");
  EXPECT_EQ(last["passed"], 4);
}

TEST_F(TempDir, IngestedLogGivesTheSameVerdicts) {
  const auto cfg = config_from_json(base_config());
  RoundLog log(0, params_digest(*cfg.device));
  for (std::uint64_t b = 0; b < cfg.protocol.blocks; ++b) {
    const auto block = sample_block(*cfg.device, cfg.protocol.block_size, derive_seed(cfg.protocol.seed, b));
    for (std::uint64_t i = 0; i < block.log.size(); ++i) log.push_back(block.log[i]);
  }
  log.write_file(path("rounds.bin"));
  auto j = base_config();
  j["protocol"]["round_log"] = path("rounds.bin");
  const auto from_log = run_protocol(config_from_json(j));
  const auto simulated = run_protocol(cfg);
  EXPECT_EQ(report_text(from_log), report_text(simulated));
  EXPECT_EQ(from_log.extracted, simulated.extracted);

  j["device"]["eta"] = 0.5;
  EXPECT_THROW(run_protocol(config_from_json(j)), Error);
  j = base_config();
  j["protocol"]["round_log"] = path("rounds.bin");
  j["protocol"]["blocks"] = 5;
  EXPECT_THROW(run_protocol(config_from_json(j)), Error);
}

TEST_F(TempDir, FileSeedIsConsumedSequentially) {
  auto j = base_config();
  j["protocol"]["blocks"] = 2;
  const auto plain = config_from_json(j);
  const auto first = run_protocol(plain);
  std::size_t needed = 0;
  for (const auto& b : first.blocks) needed += chunked_seed_length(plain.protocol.block_size, b.extract_len);
  BitVector seed(needed + 64);
  for (std::size_t i = 0; i < seed.size(); ++i) seed.set(i, (i * 2654435761u >> 7) & 1);
  write_bit_file(path("seed.bin"), seed);
  j["protocol"]["extractor_seed"] = {{"source", "file"}, {"path", path("seed.bin")}};
  const auto r = run_protocol(config_from_json(j));
  EXPECT_EQ(r.summary.total_extracted_bits, first.summary.total_extracted_bits);

  // Too short for both blocks.
  write_bit_file(path("short.bin"), seed.slice(0, needed / 2));
  j["protocol"]["extractor_seed"]["path"] = path("short.bin");
  EXPECT_THROW(run_protocol(config_from_json(j)), Error);
}

TEST(Plan, FullScaleDeclaration) {
  const auto cfg = load_config(QRNG_SOURCE_DIR "/configs/full_scale.json");
  const auto plan = plan_protocol(cfg);
  EXPECT_NEAR(plan.certified_bits_per_round, 0.1, 0.005);
  EXPECT_NEAR(plan.certified_rate_bps(), 1.25e6, 0.005 * 12.5e6);
  EXPECT_LE(plan.extracted_bits_per_round, plan.certified_bits_per_round);
}

DeviceParams nominal_params() { return device_params_from_json(device_json()); }

TEST(Monitor, StationaryStreamPassesEveryWindow) {
  const auto cert = classical_bound_certificate(0.25, 0.04, 1.0, 1.0, 1e-10);
  const auto energy = EnergyBounds::from_per_input(0.0, 0.0025, 0.25);
  SimulatedSource source(nominal_params(), 11, DriftModel::none(), 2'000'000);
  const auto report = monitor(source, cert, energy, 200'000);
  ASSERT_EQ(report.windows.size(), 10u);
  for (const auto& w : report.windows) {
    EXPECT_TRUE(w.passed) << "window " << w.index << " value " << w.witness_value;
    EXPECT_TRUE(w.complete);
    EXPECT_EQ(w.rounds, 200'000u);
  }
  EXPECT_FALSE(report.alarm_window);
}

TEST(Monitor, WindowLargerThanStreamIsIncomplete) {
  const auto cert = classical_bound_certificate(0.25, 0.04, 1.0, 1.0, 1e-10);
  const auto energy = EnergyBounds::from_per_input(0.0, 0.0025, 0.25);
  SimulatedSource source(nominal_params(), 11, DriftModel::none(), 5'000);
  const auto report = monitor(source, cert, energy, 10'000);
  ASSERT_EQ(report.windows.size(), 1u);
  EXPECT_FALSE(report.windows[0].complete);
  EXPECT_EQ(report.windows[0].rounds, 5'000u);
  EXPECT_EQ(window_record(report.windows[0])["complete"], false);
}

TEST(Monitor, RejectsTinyWindows) {
  EXPECT_THROW(Monitor(WitnessCertificate{}, EnergyBounds::from_average(0, 0.5), 999), Error);
}

TEST(Monitor, DriftToDestructiveInterferenceRaisesAlarm) {
  const auto cert = classical_bound_certificate(0.25, 0.04, 1.0, 1.0, 1e-10);
  const auto energy = EnergyBounds::from_per_input(0.0, 0.0025, 0.25);
  const std::uint64_t window = 1'000'000;
  const double rate = std::numbers::pi / (30.0 * window);
  SimulatedSource source(nominal_params(), 21, DriftModel::linear(rate), 30 * window);
  const auto report = monitor(source, cert, energy, window);
  ASSERT_TRUE(report.alarm_window);
  EXPECT_TRUE(report.windows.front().passed);
  EXPECT_FALSE(report.windows.back().passed);
  EXPECT_GT(*report.alarm_window, 0u);
}

TEST(Figures, CorrelationColumnsAndBand) {
  const auto rows = correlation_figure(nominal_params(), EnergyBounds::from_per_input(0, 0.0025, 0.25), 20, 200'000, 3);
  ASSERT_EQ(rows.size(), 20u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.closed_form, correlation_function(nominal_params(), r.phase_rad), 1e-12);
    EXPECT_LE(std::abs(r.monte_carlo - r.closed_form), 5.0 * r.monte_carlo_sigma);
    EXPECT_DOUBLE_EQ(r.classical_bound, 0.005);
    EXPECT_NEAR(r.classical_hi - r.classical_lo, 2 * 0.25 * 0.005, 1e-15);
  }
  EXPECT_EQ(rows[0].phase_rad, 0.0);
  EXPECT_NEAR(rows[10].phase_rad, std::numbers::pi, 1e-15);
}

TEST_F(TempDir, EmitFiguresWritesAllThreeCsvs) {
  auto j = base_config();
  j["output"] = {{"figures", {{"phases", 8}, {"mc_rounds", 10'000}, {"steps", 41}}}};
  const auto files = emit_figures(config_from_json(j), path("fig"));
  for (const auto& p : {files.correlation, files.violation_region, files.entropy_heatmap}) {
    EXPECT_TRUE(fs::exists(p)) << p;
  }
  std::ifstream in(files.violation_region);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "alpha,beta,lhs,rhs,margin");
  // The default grid's centre cell is alpha = eta t / 2, beta = 1 / r.
  const double t = std::sqrt(0.99);
  const double r = std::sqrt(0.01);
  bool found = false;
  for (std::string line; std::getline(in, line);) {
    double a, b, lhs, rhs, margin;
    char c;
    std::istringstream row(line);
    row >> a >> c >> b >> c >> lhs >> c >> rhs >> c >> margin;
    if (std::abs(a - 0.55 * t / 2) < 1e-12 && std::abs(b - 1.0 / r) < 1e-9) {
      found = true;
      EXPECT_GT(margin, kBoundaryTolerance);
    }
  }
  EXPECT_TRUE(found);
}

}  // namespace
}  // namespace qrng
