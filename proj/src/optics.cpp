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

#include "qrng/optics.hpp"

#include <cmath>

namespace qrng {

void validate_drift(const DriftModel& drift) {
  if (drift.kind != DriftModel::Kind::kNone && !(drift.rate >= 0.0 && std::isfinite(drift.rate))) {
    throw ValidationError({"drift rate must be finite and >= 0"});
  }
}

double signal_amplitude(int x, const DeviceParams& params) {
  if (x == 1) return params.alpha_mag();
  if (std::isinf(params.extinction_db())) return 0.0;
  return params.alpha_mag() * std::pow(10.0, -params.extinction_db() / 20.0);
}

double no_click_probability(int x, const DeviceParams& params, double phase) {
  const double a = signal_amplitude(x, params);
  const double beta = params.beta_mag();
  const double t = std::sqrt(params.t2());
  const double r = std::sqrt(params.r2());
  const double mu = params.t2() * a * a + params.r2() * beta * beta + 2.0 * t * r * a * beta * std::cos(phase);
  // mu is |t a e^{i phase} + r beta|^2 >= 0; clamp rounding noise at destructive interference.
  return (1.0 - params.dark_prob()) * std::exp(-params.eta() * std::max(mu, 0.0));
}

double mean_photon_number(int x, const DeviceParams& params) {
  const double a = signal_amplitude(x, params);
  return a * a;
}

BitTable conditional_probabilities(const DeviceParams& params, double phase) {
  BitTable p;
  for (int x = 0; x < 2; ++x) {
    p(0, x) = no_click_probability(x, params, phase);
    p(1, x) = 1.0 - p(0, x);
  }
  return p;
}

double correlation_function(const DeviceParams& params, double phase) {
  const BitTable p = conditional_probabilities(params, phase);
  const double e0 = p(0, 0) - p(1, 0);
  const double e1 = p(1, 1) - p(0, 1);
  return (1.0 - params.p1()) * e0 + params.p1() * e1;
}

std::vector<PhasePoint> scan_correlation_vs_phase(const DeviceParams& params, std::span<const double> phases) {
  if (phases.empty()) throw Error("phase grid is empty");
  std::vector<PhasePoint> rows;
  rows.reserve(phases.size());
  for (double phase : phases) rows.push_back({phase, correlation_function(params, phase)});
  return rows;
}

RoundSimulator::RoundSimulator(const DeviceParams& params, std::uint64_t seed, DriftModel drift)
    : params_(params),
      drift_(drift),
      rng_(seed),
      step_(0.0, drift.kind == DriftModel::Kind::kRandomWalk && drift.rate > 0.0 ? drift.rate : 1.0),
      phase_(params.rel_phase()) {
  validate_drift(drift);
  no_click_[0] = no_click_probability(0, params_, phase_);
  no_click_[1] = no_click_probability(1, params_, phase_);
}

RoundRecord RoundSimulator::next() {
  switch (drift_.kind) {
    case DriftModel::Kind::kNone:
      break;
    case DriftModel::Kind::kLinear:
      phase_ = params_.rel_phase() + drift_.rate * static_cast<double>(emitted_);
      no_click_[0] = no_click_probability(0, params_, phase_);
      no_click_[1] = no_click_probability(1, params_, phase_);
      break;
    case DriftModel::Kind::kRandomWalk:
      if (emitted_ > 0 && drift_.rate > 0.0) phase_ += step_(rng_);
      no_click_[0] = no_click_probability(0, params_, phase_);
      no_click_[1] = no_click_probability(1, params_, phase_);
      break;
  }
  ++emitted_;
  RoundRecord r;
  r.x = uniform() < params_.p1() ? 1 : 0;
  r.b = uniform() < no_click_[r.x] ? 0 : 1;
  return r;
}

std::size_t RoundSimulator::fill(std::span<RoundRecord> out) {
  for (auto& r : out) r = next();
  return out.size();
}

}  // namespace qrng
