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

// Command-line front end: simulate, certify, extract, run, monitor, figures, scan.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "qrng/certification.hpp"
#include "qrng/classical.hpp"
#include "qrng/csv.hpp"
#include "qrng/extractor.hpp"
#include "qrng/json_io.hpp"
#include "qrng/optics.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/round_log.hpp"

namespace {

using nlohmann::json;
using namespace qrng;

std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error("range must look like lo:hi, got '" + text + "'");
  return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

DriftModel parse_drift(const std::string& kind, double rate) {
  if (kind == "none") return DriftModel::none();
  if (kind == "linear") return DriftModel::linear(rate);
  if (kind == "random-walk") return DriftModel::random_walk(rate);
  throw Error("drift kind must be none, linear or random-walk");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

struct SimulateArgs {
  std::string config;
  std::string device;
  std::uint64_t n = 1'000'000;
  std::uint64_t seed = 0;
  std::string drift = "none";
  double drift_rate = 0.0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  std::optional<DeviceParams> device;
  DriftModel drift = parse_drift(a.drift, a.drift_rate);
  if (!a.config.empty()) {
    const Config cfg = load_config(a.config);
    device = cfg.device;
    if (a.drift == "none") drift = cfg.protocol.drift;
  }
  if (!a.device.empty()) device = device_params_from_json(read_json_file(a.device));
  if (!device) throw Error("simulate needs --device or a config with a device section");

  const auto t0 = std::chrono::steady_clock::now();
  const auto block = sample_block(*device, a.n, a.seed, drift);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!a.out.empty()) block.log.write_file(a.out);
  json j{{"counts", to_json(block.counts)}, {"seed", a.seed}, {"digest", to_hex(block.log.header().digest)}};
  std::cout << j.dump() << '\n';
  std::fprintf(stderr, "simulated %llu rounds in %.3f s (%.3g rounds/s)\n", static_cast<unsigned long long>(a.n),
               secs, static_cast<double>(a.n) / secs);
  return 0;
}

struct CertifyArgs {
  std::string config;
  std::string log;
  std::string counts;
  std::string certificate;
  std::string energy;
  std::string device;
  double eps_extract = 1e-10;
};

int cmd_certify(const CertifyArgs& a) {
  std::optional<DeviceParams> device;
  std::optional<WitnessCertificate> cert;
  std::optional<EnergyBounds> energy;
  double eps_extract = a.eps_extract;
  std::optional<double> pr_pass;
  if (!a.config.empty()) {
    const Config cfg = load_config(a.config);
    device = cfg.device;
    cert = cfg.certificate;
    energy = cfg.energy;
    eps_extract = cfg.protocol.eps_extract;
    pr_pass = cfg.protocol.pr_pass;
  }
  if (!a.device.empty()) device = device_params_from_json(read_json_file(a.device));
  if (!a.certificate.empty()) cert = certificate_from_json(read_json_file(a.certificate));
  if (!a.energy.empty()) energy = energy_bounds_from_json(read_json_file(a.energy));
  if (!cert || !energy) throw Error("certify needs a certificate and energy bounds (flags or --config)");

  CorrelationCounts counts;
  if (!a.log.empty()) {
    counts = ingest_round_log(a.log, device).counts;
  } else if (!a.counts.empty()) {
    counts = counts_from_json(read_json_file(a.counts));
  } else {
    throw Error("certify needs --log or --counts");
  }
  const CertifiedBlock block = certify_block(counts, *energy, *cert, eps_extract, pr_pass);
  std::cout << block_record(0, block).dump() << '\n';
  return block.passed ? 0 : 1;
}

struct ExtractArgs {
  std::string in;
  std::uint64_t in_bits = 0;
  std::string seed_file;
  std::uint64_t len = 0;
  std::string out;
  unsigned threads = 1;
};

int cmd_extract(const ExtractArgs& a) {
  const BitVector input = a.in_bits ? read_bit_file(a.in, a.in_bits) : read_bit_file(a.in);
  const std::size_t need = chunked_seed_length(input.size(), a.len);
  const BitVector seed = read_bit_file(a.seed_file, need);
  const auto t0 = std::chrono::steady_clock::now();
  const BitVector out = extract(input, seed, a.len, kMaxChunkBits, a.threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_bit_file(a.out, out);
  std::fprintf(stderr, "extracted %zu bits from %zu in %.3f s (%.3g bit/s)\n", out.size(), input.size(), secs,
               static_cast<double>(out.size()) / secs);
  return 0;
}

struct RunArgs {
  std::string config;
  unsigned threads = 0;
  bool plan_only = false;
  std::string report;
  std::string bits;
};

int cmd_run(const RunArgs& a) {
  Config cfg = load_config(a.config);
  if (a.threads) cfg.protocol.threads = a.threads;
  if (!a.report.empty()) cfg.output.report = a.report;
  if (!a.bits.empty()) cfg.output.bits = a.bits;

  if (a.plan_only) {
    std::cout << plan_record(plan_protocol(cfg)).dump() << '\n';
    return 0;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const ProtocolResult result = run_protocol(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream report;
  write_report(report, result);
  write_text(cfg.output.report, report.str());
  if (!cfg.output.bits.empty()) write_bit_file(cfg.output.bits, result.extracted);

  const auto& s = result.summary;
  std::fprintf(stderr,
               "%llu/%llu blocks passed, %.0f certified bits, %llu extracted bits; wall clock %.3f s, "
               "%.3g rounds/s, %.3g extracted bit/s\n",
               static_cast<unsigned long long>(s.passed), static_cast<unsigned long long>(s.blocks),
               s.total_certified_bits, static_cast<unsigned long long>(s.total_extracted_bits), secs,
               static_cast<double>(s.rounds) / secs, static_cast<double>(s.total_extracted_bits) / secs);
  return result.all_passed() ? 0 : 1;
}

struct MonitorArgs {
  std::string config;
  std::string log;
  std::uint64_t window = 0;
  std::uint64_t rounds = 0;
  std::string out;
};

int cmd_monitor(const MonitorArgs& a) {
  const Config cfg = load_config(a.config);
  const std::uint64_t window = a.window ? a.window : cfg.protocol.monitor_window;
  std::unique_ptr<RoundSource> source;
  if (!a.log.empty()) {
    source = std::make_unique<RoundLogReader>(a.log);
  } else {
    if (!cfg.device) throw Error("monitor needs --log or a config with a device section");
    const std::uint64_t rounds = a.rounds ? a.rounds : cfg.protocol.block_size * cfg.protocol.blocks;
    source = std::make_unique<SimulatedSource>(*cfg.device, cfg.protocol.seed, cfg.protocol.drift, rounds);
  }
  const MonitorReport report = monitor(*source, cfg.certificate, cfg.energy, window);
  std::ostringstream out;
  for (const auto& v : report.windows) out << window_record(v).dump() << '\n';
  if (report.alarm_window) {
    const auto& w = report.windows[*report.alarm_window];
    out << json{{"type", "alarm"}, {"window", w.index}, {"first_round", w.first_round},
                {"witness_value", w.witness_value}}
               .dump()
        << '\n';
  }
  write_text(a.out, out.str());
  return report.alarm_window ? 1 : 0;
}

struct FiguresArgs {
  std::string config;
  std::string out_dir;
};

int cmd_figures(const FiguresArgs& a) {
  const Config cfg = load_config(a.config);
  const std::string dir = !a.out_dir.empty() ? a.out_dir : (cfg.output.figures_dir.empty() ? "figures" : cfg.output.figures_dir);
  const FigureFiles files = emit_figures(cfg, dir);
  std::cout << json{{"correlation", files.correlation},
                    {"violation_region", files.violation_region},
                    {"entropy_heatmap", files.entropy_heatmap}}
                   .dump()
            << '\n';
  return 0;
}

struct ScanArgs {
  std::string kind = "violation";
  double eta = 0.5;
  double t2 = 0.99;
  double p1 = 0.25;
  std::string alpha_range = "0:0.5";
  std::string beta_range = "0:20";
  std::size_t steps = 41;
  std::string device;
  std::size_t phases = 50;
  std::string out;
};

int cmd_scan(const ScanArgs& a) {
  if (a.kind == "phase") {
    if (a.device.empty()) throw Error("phase scan needs --device");
    const DeviceParams params = device_params_from_json(read_json_file(a.device));
    std::vector<double> grid(a.phases);
    for (std::size_t k = 0; k < a.phases; ++k) {
      grid[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(a.phases);
    }
    std::ostringstream out;
    out << "phase_rad,E\n";
    for (const auto& row : scan_correlation_vs_phase(params, grid)) write_csv_row(out, {row.phase_rad, row.correlation});
    write_text(a.out, out.str());
    return 0;
  }
  const auto [alo, ahi] = parse_range(a.alpha_range);
  const auto [blo, bhi] = parse_range(a.beta_range);
  const auto alpha = linspace(alo, ahi, a.steps);
  const auto beta = linspace(blo, bhi, a.steps);
  if (a.kind == "violation") {
    write_text(a.out, scan_violation_region(a.eta, a.t2, alpha, beta).to_csv());
  } else if (a.kind == "entropy") {
    write_text(a.out, honest_entropy_heatmap(a.eta, a.t2, a.p1, alpha, beta).to_csv());
  } else {
    throw Error("scan kind must be violation, entropy or phase");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-testing QRNG pipeline: simulate, certify and extract energy-bounded randomness"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate rounds of the prepare-and-measure setup");
  simulate->add_option("--config", sim.config, "Config file (device and drift sections)");
  simulate->add_option("--device", sim.device, "DeviceParams JSON file");
  simulate->add_option("-n,--rounds", sim.n, "Number of rounds")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Generator seed");
  simulate->add_option("--drift", sim.drift, "none | linear | random-walk");
  simulate->add_option("--drift-rate", sim.drift_rate, "Radians per round (linear) or per-round stddev");
  simulate->add_option("--out", sim.out, "RoundLog output file");

  CertifyArgs cert;
  auto* certify = app.add_subcommand("certify", "Self-test one block and report its certified min-entropy");
  certify->add_option("--config", cert.config, "Config file");
  certify->add_option("--log", cert.log, "RoundLog file");
  certify->add_option("--counts", cert.counts, "Counts JSON file");
  certify->add_option("--certificate", cert.certificate, "WitnessCertificate JSON file");
  certify->add_option("--energy", cert.energy, "EnergyBounds JSON file");
  certify->add_option("--device", cert.device, "DeviceParams JSON; checked against the log digest");
  certify->add_option("--eps-extract", cert.eps_extract, "Extractor error for the output length");

  ExtractArgs ext;
  auto* extract_cmd = app.add_subcommand("extract", "Toeplitz-hash a raw bit file");
  extract_cmd->add_option("--in", ext.in, "Raw bit-packed input")->required();
  extract_cmd->add_option("--in-bits", ext.in_bits, "Input length in bits (default: whole file)");
  extract_cmd->add_option("--seed-file", ext.seed_file, "Bit-packed seed file")->required();
  extract_cmd->add_option("--len", ext.len, "Output length in bits")->required()->check(CLI::PositiveNumber);
  extract_cmd->add_option("--out", ext.out, "Output file")->required();
  extract_cmd->add_option("--threads", ext.threads, "Chunk-parallel workers");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the full block protocol");
  run_cmd->add_option("--config", run.config, "Config file")->required();
  run_cmd->add_option("--threads", run.threads, "Block-parallel workers (overrides config)");
  run_cmd->add_option("--report", run.report, "Report path (overrides config; '-' for stdout)");
  run_cmd->add_option("--bits", run.bits, "Certified bit file (overrides config)");
  run_cmd->add_flag("--plan-only", run.plan_only, "Print nominal rates for the configured block size and exit");

  MonitorArgs mon;
  auto* monitor_cmd = app.add_subcommand("monitor", "Windowed real-time self-test");
  monitor_cmd->add_option("--config", mon.config, "Config file")->required();
  monitor_cmd->add_option("--log", mon.log, "RoundLog file (default: simulate from config)");
  monitor_cmd->add_option("--window", mon.window, "Rounds per window (overrides config)");
  monitor_cmd->add_option("--rounds", mon.rounds, "Simulated rounds (default: blocks x block_size)");
  monitor_cmd->add_option("--out", mon.out, "Output records (default stdout)");

  FiguresArgs fig;
  auto* figures = app.add_subcommand("figures", "Write correlation, violation-region and entropy CSVs");
  figures->add_option("--config", fig.config, "Config file")->required();
  figures->add_option("--out-dir", fig.out_dir, "Output directory");

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "Grid scans of the setup inequality, honest entropy or E(phase)");
  scan_cmd->add_option("--kind", scan.kind, "violation | entropy | phase");
  scan_cmd->add_option("--eta", scan.eta, "Detection efficiency");
  scan_cmd->add_option("--t2", scan.t2, "Beam-splitter transmittance");
  scan_cmd->add_option("--p1", scan.p1, "Input bias p(x=1) (entropy scan)");
  scan_cmd->add_option("--alpha-range", scan.alpha_range, "lo:hi for |alpha|");
  scan_cmd->add_option("--beta-range", scan.beta_range, "lo:hi for |beta|");
  scan_cmd->add_option("--steps", scan.steps, "Points per axis")->check(CLI::PositiveNumber);
  scan_cmd->add_option("--device", scan.device, "DeviceParams JSON (phase scan)");
  scan_cmd->add_option("--phases", scan.phases, "Phase points (phase scan)")->check(CLI::PositiveNumber);
  scan_cmd->add_option("--out", scan.out, "CSV output (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*certify) return cmd_certify(cert);
    if (*extract_cmd) return cmd_extract(ext);
    if (*run_cmd) return cmd_run(run);
    if (*monitor_cmd) return cmd_monitor(mon);
    if (*figures) return cmd_figures(fig);
    if (*scan_cmd) return cmd_scan(scan);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
