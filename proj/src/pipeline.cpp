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

#include "qrng/pipeline.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "qrng/certification.hpp"
#include "qrng/classical.hpp"
#include "qrng/csv.hpp"
#include "qrng/extractor.hpp"
#include "qrng/json_io.hpp"

namespace qrng {

using nlohmann::json;

namespace {

using detail::get_number;
using detail::require_known_keys;

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(count));
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < count; i += workers) fn(i);
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

std::uint64_t get_count(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string(what) + ": missing field '" + key + "'");
  const bool nonnegative_integer = it->is_number_unsigned() || (it->is_number_integer() && it->get<std::int64_t>() >= 0);
  if (!nonnegative_integer) throw ParseError(std::string(what) + ": field '" + key + "' must be a nonnegative integer");
  return it->get<std::uint64_t>();
}

std::pair<double, double> get_range(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError(std::string(what) + ": range must be [lo, hi]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

DriftModel drift_from_json(const json& j) {
  require_known_keys(j, {"kind", "rate"}, "drift");
  const std::string kind = j.value("kind", "none");
  DriftModel d;
  if (kind == "none") {
    d.kind = DriftModel::Kind::kNone;
  } else if (kind == "linear") {
    d.kind = DriftModel::Kind::kLinear;
  } else if (kind == "random-walk") {
    d.kind = DriftModel::Kind::kRandomWalk;
  } else {
    throw ParseError("drift: kind must be none, linear or random-walk");
  }
  if (j.contains("rate")) d.rate = get_number(j, "rate", "drift");
  validate_drift(d);
  return d;
}

WitnessCertificate certificate_section(const json& j, const std::optional<DeviceParams>& device) {
  json witness = j;
  witness.erase("energy");
  if (witness.value("kind", "") == "classical_bound") {
    require_known_keys(witness, {"kind", "c", "d", "h", "epsilon"}, "certificate");
    if (!device) throw ParseError("certificate: classical_bound needs the device p1");
    return classical_bound_certificate(device->p1(), get_number(witness, "h", "certificate"),
                                       get_number(witness, "c", "certificate"),
                                       get_number(witness, "d", "certificate"),
                                       get_number(witness, "epsilon", "certificate"));
  }
  if (witness.contains("kind")) throw ParseError("certificate: unknown kind");
  if (witness.contains("gamma_conditional")) {
    if (witness.contains("gamma")) throw ParseError("certificate: give gamma or gamma_conditional, not both");
    if (!device) throw ParseError("certificate: gamma_conditional needs the device p1");
    // Parse the conditional table through the joint schema, then convert.
    json as_joint = witness;
    as_joint["gamma"] = as_joint["gamma_conditional"];
    as_joint.erase("gamma_conditional");
    WitnessCertificate cert = certificate_from_json(as_joint);
    cert.gamma = joint_gamma_from_conditional(cert.gamma, device->p1());
    return cert;
  }
  return certificate_from_json(witness);
}

class SeedProvider {
 public:
  explicit SeedProvider(const ExtractorSeedConfig& cfg) : cfg_(cfg) {
    if (cfg.source == ExtractorSeedConfig::Source::kFile) pool_ = read_bit_file(cfg.path);
  }

  BitVector next(std::size_t bits, std::uint64_t block) {
    switch (cfg_.source) {
      case ExtractorSeedConfig::Source::kPrng: {
        std::mt19937_64 rng(derive_seed(cfg_.prng_seed, cfg_.reuse ? 0 : block));
        BitVector seed(bits);
        for (auto& w : seed.words()) w = rng();
        return bits % 64 ? seed.slice(0, bits) : seed;
      }
      case ExtractorSeedConfig::Source::kSystem: {
        if (cfg_.reuse && cached_.size() >= bits) return cached_.slice(0, bits);
        std::random_device dev;
        BitVector seed(bits);
        for (auto& w : seed.words()) w = (std::uint64_t{dev()} << 32) | dev();
        seed = bits % 64 ? seed.slice(0, bits) : seed;
        if (cfg_.reuse) cached_ = seed;
        return seed;
      }
      case ExtractorSeedConfig::Source::kFile: {
        const std::size_t offset = cfg_.reuse ? 0 : cursor_;
        if (offset + bits > pool_.size()) {
          throw Error("extractor seed file exhausted at block " + std::to_string(block) + ": need " +
                      std::to_string(offset + bits) + " bits, have " + std::to_string(pool_.size()));
        }
        if (!cfg_.reuse) cursor_ += bits;
        return pool_.slice(offset, bits);
      }
    }
    throw Error("unknown seed source");
  }

 private:
  ExtractorSeedConfig cfg_;
  BitVector pool_;
  BitVector cached_;
  std::size_t cursor_ = 0;
};

RoundLog read_block(RoundLogReader& reader, std::uint64_t n) {
  const auto& h = reader.header();
  RoundLog log(h.seed, h.digest);
  std::vector<RoundRecord> buf(1 << 16);
  std::uint64_t left = n;
  while (left > 0) {
    const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(left, buf.size()));
    const std::size_t got = reader.read(std::span(buf).first(want));
    if (got == 0) throw Error("round log ended inside a block");
    for (std::size_t i = 0; i < got; ++i) log.push_back(buf[i]);
    left -= got;
  }
  return log;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t{out[0]} << 32) | out[1];
}

Config config_from_json(const json& j) {
  require_known_keys(j, {"device", "certificate", "protocol", "output"}, "config");
  Config cfg;
  if (j.contains("device")) cfg.device = device_params_from_json(j["device"]);

  if (!j.contains("certificate")) throw ParseError("config: missing section 'certificate'");
  const json& cert = j["certificate"];
  if (!cert.is_object()) throw ParseError("certificate: expected an object");
  if (!cert.contains("energy")) throw ParseError("certificate: missing field 'energy'");
  cfg.energy = energy_bounds_from_json(cert["energy"]);
  cfg.certificate = certificate_section(cert, cfg.device);

  if (j.contains("protocol")) {
    const json& p = j["protocol"];
    constexpr const char* what = "protocol";
    require_known_keys(p,
                       {"block_size", "blocks", "seed", "threads", "drift", "round_log", "eps_extract", "pr_pass",
                        "extractor_seed", "monitor_window"},
                       what);
    auto& pc = cfg.protocol;
    if (p.contains("block_size")) pc.block_size = get_count(p, "block_size", what);
    if (p.contains("blocks")) pc.blocks = get_count(p, "blocks", what);
    if (p.contains("seed")) pc.seed = get_count(p, "seed", what);
    if (p.contains("threads")) pc.threads = static_cast<unsigned>(get_count(p, "threads", what));
    if (p.contains("drift")) pc.drift = drift_from_json(p["drift"]);
    if (p.contains("round_log")) pc.round_log = p["round_log"].get<std::string>();
    if (p.contains("eps_extract")) pc.eps_extract = get_number(p, "eps_extract", what);
    if (p.contains("pr_pass")) pc.pr_pass = get_number(p, "pr_pass", what);
    if (p.contains("monitor_window")) pc.monitor_window = get_count(p, "monitor_window", what);
    if (p.contains("extractor_seed")) {
      const json& s = p["extractor_seed"];
      require_known_keys(s, {"source", "seed", "path", "reuse"}, "extractor_seed");
      const std::string source = s.value("source", "prng");
      auto& es = pc.extractor_seed;
      if (source == "prng") {
        es.source = ExtractorSeedConfig::Source::kPrng;
      } else if (source == "file") {
        es.source = ExtractorSeedConfig::Source::kFile;
        if (!s.contains("path")) throw ParseError("extractor_seed: file source needs 'path'");
      } else if (source == "system") {
        es.source = ExtractorSeedConfig::Source::kSystem;
      } else {
        throw ParseError("extractor_seed: source must be prng, file or system");
      }
      if (s.contains("seed")) es.prng_seed = get_count(s, "seed", "extractor_seed");
      if (s.contains("path")) es.path = s["path"].get<std::string>();
      if (s.contains("reuse")) es.reuse = s["reuse"].get<bool>();
    }
    if (pc.block_size == 0) throw ValidationError({"block_size must be at least 1"});
    if (!(pc.eps_extract > 0.0 && pc.eps_extract < 1.0)) throw ValidationError({"eps_extract out of range"});
    if (pc.pr_pass && !(*pc.pr_pass > 0.0 && *pc.pr_pass <= 1.0)) throw ValidationError({"pr_pass out of range"});
  }

  if (j.contains("output")) {
    const json& o = j["output"];
    require_known_keys(o, {"report", "bits", "figures_dir", "figures"}, "output");
    cfg.output.report = o.value("report", "");
    cfg.output.bits = o.value("bits", "");
    cfg.output.figures_dir = o.value("figures_dir", "");
    if (o.contains("figures")) {
      const json& f = o["figures"];
      require_known_keys(f, {"phases", "mc_rounds", "alpha_range", "beta_range", "steps"}, "figures");
      auto& fo = cfg.output.figures;
      if (f.contains("phases")) fo.phases = get_count(f, "phases", "figures");
      if (f.contains("mc_rounds")) fo.mc_rounds = get_count(f, "mc_rounds", "figures");
      if (f.contains("steps")) fo.steps = get_count(f, "steps", "figures");
      if (f.contains("alpha_range")) fo.alpha_range = get_range(f["alpha_range"], "figures.alpha_range");
      if (f.contains("beta_range")) fo.beta_range = get_range(f["beta_range"], "figures.beta_range");
    }
  }
  return cfg;
}

Config load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

CertifiedBlock certify_block(const CorrelationCounts& counts, const EnergyBounds& energy,
                             const WitnessCertificate& cert, double eps_extract, std::optional<double> pr_pass) {
  CertifiedBlock block;
  block.counts = counts;
  block.witness_value = witness_value(counts_to_frequencies(counts), energy, cert);
  block.passed = pass_test(block.witness_value, cert);
  block.epsilon = cert.epsilon;
  if (pr_pass) block.epsilon_prime = soundness_accounting(cert.epsilon, *pr_pass).epsilon_prime;
  if (block.passed) {
    block.min_entropy_bits = certified_min_entropy(counts.total(), cert);
    block.extract_len = std::min<std::uint64_t>(output_length(block.min_entropy_bits, eps_extract), counts.total());
  }
  return block;
}

ProtocolResult run_protocol(const Config& config) {
  const auto& pc = config.protocol;
  validate_certificate(config.certificate);
  if (!pc.round_log && !config.device) throw ParseError("config: a device section or protocol.round_log is required");

  std::optional<RoundLogReader> reader;
  if (pc.round_log) {
    reader.emplace(*pc.round_log);
    if (config.device && reader->header().digest != params_digest(*config.device)) {
      throw Error("round log digest does not match the declared device parameters");
    }
    const std::uint64_t available = reader->header().n / pc.block_size;
    if (available < pc.blocks) {
      throw Error("round log holds " + std::to_string(available) + " full blocks, " + std::to_string(pc.blocks) +
                  " requested");
    }
  }

  ProtocolResult result;
  result.summary.rep_rate_hz = config.device ? config.device->rep_rate_hz() : 0.0;
  SeedProvider seeds(pc.extractor_seed);
  const unsigned threads = std::max(1u, pc.threads);

  struct Slot {
    RoundLog log;
    CertifiedBlock verdict;
    BitVector seed;
    BitVector output;
  };

  for (std::uint64_t first = 0; first < pc.blocks; first += threads) {
    const std::size_t batch = static_cast<std::size_t>(std::min<std::uint64_t>(threads, pc.blocks - first));
    std::vector<Slot> slots(batch);
    if (reader) {
      for (std::size_t s = 0; s < batch; ++s) slots[s].log = read_block(*reader, pc.block_size);
    }
    parallel_for(batch, threads, [&](std::size_t s) {
      auto& slot = slots[s];
      if (!reader) {
        slot.log = sample_block(*config.device, pc.block_size, derive_seed(pc.seed, first + s), pc.drift).log;
      }
      slot.verdict = certify_block(slot.log.counts(), config.energy, config.certificate, pc.eps_extract, pc.pr_pass);
    });
    // Seed segments are handed out in block order so file-backed seeds stay deterministic.
    for (std::size_t s = 0; s < batch; ++s) {
      auto& slot = slots[s];
      if (slot.verdict.extract_len == 0) continue;
      slot.seed = seeds.next(chunked_seed_length(pc.block_size, slot.verdict.extract_len), first + s);
    }
    parallel_for(batch, threads, [&](std::size_t s) {
      auto& slot = slots[s];
      if (slot.verdict.extract_len == 0) return;
      slot.output = extract(slot.log.outputs(), slot.seed, slot.verdict.extract_len);
    });
    for (auto& slot : slots) {
      auto& sum = result.summary;
      ++sum.blocks;
      sum.rounds += slot.verdict.counts.total();
      if (slot.verdict.passed) ++sum.passed;
      sum.total_certified_bits += slot.verdict.min_entropy_bits;
      sum.total_extracted_bits += slot.output.size();
      result.extracted.append(slot.output);
      result.blocks.push_back(std::move(slot.verdict));
    }
  }
  return result;
}

ProtocolPlan plan_protocol(const Config& config) {
  const auto n = config.protocol.block_size;
  const double h = certified_min_entropy(n, config.certificate);
  const auto len = output_length(h, config.protocol.eps_extract);
  ProtocolPlan plan;
  plan.block_size = n;
  plan.certified_bits_per_round = h / static_cast<double>(n);
  plan.extracted_bits_per_round = static_cast<double>(len) / static_cast<double>(n);
  plan.rep_rate_hz = config.device ? config.device->rep_rate_hz() : 0.0;
  return plan;
}

json block_record(std::uint64_t index, const CertifiedBlock& b) {
  json j{{"type", "block"},
         {"block", index},
         {"n", b.counts.total()},
         {"counts", to_json(b.counts)},
         {"witness_value", b.witness_value},
         {"passed", b.passed},
         {"epsilon", b.epsilon},
         {"min_entropy_bits", b.min_entropy_bits},
         {"extract_len", b.extract_len}};
  if (b.epsilon_prime) j["epsilon_prime"] = *b.epsilon_prime;
  return j;
}

json summary_record(const ProtocolSummary& s) {
  return json{{"type", "summary"},
              {"blocks", s.blocks},
              {"passed", s.passed},
              {"pass_rate", s.pass_rate()},
              {"rounds", s.rounds},
              {"total_certified_bits", s.total_certified_bits},
              {"total_extracted_bits", s.total_extracted_bits},
              {"certified_bits_per_round", s.certified_rate_per_round()},
              {"extracted_bits_per_round", s.extracted_rate_per_round()},
              {"rep_rate_hz", s.rep_rate_hz},
              {"nominal_certified_rate_bps", s.certified_rate_per_round() * s.rep_rate_hz},
              {"nominal_extracted_rate_bps", s.extracted_rate_per_round() * s.rep_rate_hz}};
}

json plan_record(const ProtocolPlan& p) {
  return json{{"type", "plan"},
              {"block_size", p.block_size},
              {"certified_bits_per_round", p.certified_bits_per_round},
              {"extracted_bits_per_round", p.extracted_bits_per_round},
              {"rep_rate_hz", p.rep_rate_hz},
              {"nominal_certified_rate_bps", p.certified_rate_bps()},
              {"nominal_extracted_rate_bps", p.extracted_rate_bps()}};
}

void write_report(std::ostream& out, const ProtocolResult& result) {
  for (std::size_t i = 0; i < result.blocks.size(); ++i) out << block_record(i, result.blocks[i]).dump() << '\n';
  out << summary_record(result.summary).dump() << '\n';
}

Monitor::Monitor(const WitnessCertificate& cert, const EnergyBounds& energy, std::uint64_t window)
    : cert_(cert), energy_(energy), window_(window) {
  if (window < 1000) throw Error("monitor window must be at least 1000 rounds");
}

WindowVerdict Monitor::close(bool complete) {
  WindowVerdict v;
  v.index = windows_closed_++;
  v.first_round = rounds_seen_ - in_window_;
  v.rounds = in_window_;
  v.counts = current_;
  v.witness_value = witness_value(counts_to_frequencies(current_), energy_, cert_);
  v.passed = pass_test(v.witness_value, cert_);
  v.complete = complete;
  if (!v.passed && !alarm_) alarm_ = v.index;
  current_ = CorrelationCounts();
  in_window_ = 0;
  return v;
}

std::optional<WindowVerdict> Monitor::push(const RoundRecord& round) {
  current_.add(round);
  ++in_window_;
  ++rounds_seen_;
  if (in_window_ < window_) return std::nullopt;
  return close(true);
}

std::optional<WindowVerdict> Monitor::finish() {
  if (in_window_ == 0) return std::nullopt;
  return close(false);
}

MonitorReport monitor(RoundSource& source, const WitnessCertificate& cert, const EnergyBounds& energy,
                      std::uint64_t window) {
  Monitor mon(cert, energy, window);
  MonitorReport report;
  std::vector<RoundRecord> buf(1 << 16);
  for (std::size_t got; (got = source.read(buf)) > 0;) {
    for (std::size_t i = 0; i < got; ++i) {
      if (auto v = mon.push(buf[i])) report.windows.push_back(std::move(*v));
    }
  }
  if (auto v = mon.finish()) report.windows.push_back(std::move(*v));
  report.alarm_window = mon.alarm_window();
  return report;
}

json window_record(const WindowVerdict& v) {
  return json{{"type", "window"},          {"window", v.index},   {"first_round", v.first_round},
              {"rounds", v.rounds},        {"counts", to_json(v.counts)},
              {"witness_value", v.witness_value}, {"passed", v.passed}, {"complete", v.complete}};
}

std::vector<CorrelationFigureRow> correlation_figure(const DeviceParams& params, const EnergyBounds& energy,
                                                     std::size_t phases, std::uint64_t rounds_per_phase,
                                                     std::uint64_t seed) {
  if (phases == 0) throw Error("phase grid is empty");
  const double bound = classical_bound(energy);
  std::vector<CorrelationFigureRow> rows(phases);
  for (std::size_t k = 0; k < phases; ++k) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(phases);
    auto& row = rows[k];
    row.phase_rad = phase;
    row.closed_form = correlation_function(params, phase);
    // E = (1 - 2 p1)(2 p(0|0) - 1) + p1 D with D the signed classical combination, |D| <= bound.
    const double e0 = (1.0 - 2.0 * params.p1()) * (2.0 * no_click_probability(0, params, phase) - 1.0);
    row.classical_lo = e0 - params.p1() * bound;
    row.classical_hi = e0 + params.p1() * bound;
    row.classical_bound = bound;
    if (rounds_per_phase > 0) {
      DeviceSettings s = params.settings();
      s.rel_phase = phase;
      const auto counts = sample_block(DeviceParams(s), rounds_per_phase, derive_seed(seed, k)).counts;
      const double agree = static_cast<double>(counts(0, 0) + counts(1, 1));
      const double n = static_cast<double>(counts.total());
      row.monte_carlo = (2.0 * agree - n) / n;
      row.monte_carlo_sigma = std::sqrt((1.0 - row.closed_form * row.closed_form) / n);
    }
  }
  return rows;
}

std::string correlation_figure_csv(const std::vector<CorrelationFigureRow>& rows) {
  std::ostringstream out;
  out << "phase_rad,E,E_mc,E_mc_sigma,classical_lo,classical_hi,classical_bound\n";
  for (const auto& r : rows) {
    write_csv_row(out, {r.phase_rad, r.closed_form, r.monte_carlo, r.monte_carlo_sigma, r.classical_lo,
                        r.classical_hi, r.classical_bound});
  }
  return out.str();
}

FigureFiles emit_figures(const Config& config, const std::string& dir) {
  if (!config.device) throw ParseError("config: figures need a device section");
  const DeviceParams& params = *config.device;
  const auto& fo = config.output.figures;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir + ": " + ec.message());

  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("write failed: " + path);
  };

  FigureFiles files;
  const std::filesystem::path base(dir);
  files.correlation = (base / "correlation_vs_phase.csv").string();
  files.violation_region = (base / "violation_region.csv").string();
  files.entropy_heatmap = (base / "entropy_heatmap.csv").string();

  write(files.correlation, correlation_figure_csv(correlation_figure(params, config.energy, fo.phases, fo.mc_rounds,
                                                                     config.protocol.seed)));

  const double t = std::sqrt(params.t2());
  const double r = std::sqrt(params.r2());
  const auto [alo, ahi] = fo.alpha_range.value_or(std::pair{0.0, params.eta() * t});
  const auto [blo, bhi] = fo.beta_range.value_or(std::pair{0.0, 2.0 / r});
  const auto alpha = linspace(alo, ahi, fo.steps);
  const auto beta = linspace(blo, bhi, fo.steps);
  write(files.violation_region, scan_violation_region(params.eta(), params.t2(), alpha, beta).to_csv());
  write(files.entropy_heatmap, honest_entropy_heatmap(params.eta(), params.t2(), params.p1(), alpha, beta).to_csv());
  return files;
}

}  // namespace qrng
