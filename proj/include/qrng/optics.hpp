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
#include <random>
#include <span>
#include <vector>

#include "qrng/core_model.hpp"

namespace qrng {

/// Evolution of the signal/local-oscillator relative phase over rounds.
/// `rate` is radians per round for kLinear and the per-round standard
/// deviation for kRandomWalk; it is ignored for kNone.
struct DriftModel {
  enum class Kind { kNone, kLinear, kRandomWalk };

  Kind kind = Kind::kNone;
  double rate = 0.0;

  static DriftModel none() { return {}; }
  static DriftModel linear(double rate) { return {Kind::kLinear, rate}; }
  static DriftModel random_walk(double stddev) { return {Kind::kRandomWalk, stddev}; }
};

void validate_drift(const DriftModel& drift);

/// Field amplitude reaching the interferometer for input x: |alpha| for
/// x = 1, |alpha| suppressed by the extinction ratio for x = 0.
double signal_amplitude(int x, const DeviceParams& params);

/// Probability that the threshold detector stays silent:
///   (1 - dark_prob) * exp(-eta * (t^2 a_x^2 + r^2 |beta|^2 + 2 t r a_x |beta| cos(phase)))
double no_click_probability(int x, const DeviceParams& params, double phase);

/// Mean photon number leaving the preparation device for input x.
double mean_photon_number(int x, const DeviceParams& params);

/// Closed-form p(b|x), indexed (b, x).
BitTable conditional_probabilities(const DeviceParams& params, double phase);

/// E = sum_x p(x) [p(b = x | x) - p(b != x | x)].
double correlation_function(const DeviceParams& params, double phase);

struct PhasePoint {
  double phase_rad;
  double correlation;
};

/// Throws Error on an empty grid.
std::vector<PhasePoint> scan_correlation_vs_phase(const DeviceParams& params, std::span<const double> phases);

/// Deterministic round generator. Inputs are drawn with bias p1 from a
/// seeded mt19937_64; each output is a Bernoulli click with probability
/// 1 - no_click_probability at the current phase. The stream is a pure
/// function of (params, seed, drift).
class RoundSimulator {
 public:
  RoundSimulator(const DeviceParams& params, std::uint64_t seed, DriftModel drift = {});

  RoundRecord next();
  /// Fills `out` and returns out.size().
  std::size_t fill(std::span<RoundRecord> out);

  double phase() const { return phase_; }
  std::uint64_t rounds_emitted() const { return emitted_; }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  DeviceParams params_;
  DriftModel drift_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> step_;
  double phase_;
  std::uint64_t emitted_ = 0;
  std::array<double, 2> no_click_{};
};

}  // namespace qrng
