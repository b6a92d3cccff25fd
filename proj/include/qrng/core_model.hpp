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
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace qrng {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a value violates its domain invariants. Carries every
/// violation found, not just the first one.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// 2x2 real table indexed (b, x): row = output bit, column = input bit.
using BitTable = Eigen::Matrix2d;
/// 2x2 count table indexed (b, x).
using CountTable = Eigen::Matrix<std::uint64_t, 2, 2>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Raw, unvalidated settings of the simulated optical setup. Amplitudes are
/// in units of sqrt(photons).
struct DeviceSettings {
  double alpha_mag = 0.0;
  double beta_mag = 0.0;
  double rel_phase = 0.0;
  double eta = 1.0;
  double t2 = 0.5;
  double p1 = 0.5;
  double dark_prob = 0.0;
  double extinction_db = kInfinity;
  double rep_rate_hz = 12.5e6;

  bool operator==(const DeviceSettings&) const = default;
};

/// Validated device configuration. Immutable; reflectance r^2 = 1 - t^2 is
/// derived on demand.
class DeviceParams {
 public:
  /// Throws ValidationError listing every out-of-range field.
  explicit DeviceParams(const DeviceSettings& settings);

  double alpha_mag() const { return s_.alpha_mag; }
  double beta_mag() const { return s_.beta_mag; }
  double rel_phase() const { return s_.rel_phase; }
  double eta() const { return s_.eta; }
  double t2() const { return s_.t2; }
  double r2() const { return 1.0 - s_.t2; }
  double p1() const { return s_.p1; }
  double dark_prob() const { return s_.dark_prob; }
  double extinction_db() const { return s_.extinction_db; }
  double rep_rate_hz() const { return s_.rep_rate_hz; }

  const DeviceSettings& settings() const { return s_; }

  bool operator==(const DeviceParams&) const = default;

 private:
  DeviceSettings s_;
};

std::vector<std::string> device_violations(const DeviceSettings& s);

struct RoundRecord {
  std::uint8_t x = 0;
  std::uint8_t b = 0;

  bool operator==(const RoundRecord&) const = default;
};

/// Event counts n[b][x] of a block. The total is always the sum of the
/// cells, so the bookkeeping invariant cannot be broken.
class CorrelationCounts {
 public:
  CorrelationCounts() { n_.setZero(); }
  explicit CorrelationCounts(const CountTable& n) : n_(n) {}

  void add(int x, int b) { ++n_(b, x); }
  void add(const RoundRecord& r) { ++n_(r.b, r.x); }

  std::uint64_t operator()(int b, int x) const { return n_(b, x); }
  std::uint64_t n_x(int x) const { return n_(0, x) + n_(1, x); }
  std::uint64_t total() const { return n_.sum(); }
  const CountTable& table() const { return n_; }

  CorrelationCounts& operator+=(const CorrelationCounts& other) {
    n_ += other.n_;
    return *this;
  }
  bool operator==(const CorrelationCounts& other) const { return n_ == other.n_; }

 private:
  CountTable n_;
};

/// Joint frequencies f(x,b) and conditional frequencies f(b|x), both
/// indexed (b, x). A conditional column is meaningful only when the
/// corresponding input occurred at least once.
struct FrequencyTable {
  BitTable joint;
  BitTable conditional;
  std::array<bool, 2> conditional_defined{false, false};

  bool conditional_complete() const { return conditional_defined[0] && conditional_defined[1]; }
};

/// Throws Error("no data") for an empty block.
FrequencyTable counts_to_frequencies(const CorrelationCounts& counts);

/// Per-input mean photon bounds and the input-averaged bound.
class EnergyBounds {
 public:
  static EnergyBounds from_per_input(double omega0, double omega1, double p1);
  /// Only the averaged bound is assumed; both inputs carry omega_bar, so a
  /// zeta acting on omega_bar decomposes exactly over the inputs.
  static EnergyBounds from_average(double omega_bar, double p1);

  double omega0() const { return omega0_; }
  double omega1() const { return omega1_; }
  double omega(int x) const { return x == 0 ? omega0_ : omega1_; }
  double omega_bar() const { return omega_bar_; }
  double p1() const { return p1_; }

  bool operator==(const EnergyBounds&) const = default;

 private:
  EnergyBounds(double omega0, double omega1, double p1);

  double omega0_;
  double omega1_;
  double omega_bar_;
  double p1_;
};

/// Linear witness gamma[f] - zeta[omega] plus the finite-size constants
/// used to turn a passing witness value into certified min-entropy.
/// gamma acts on joint frequencies f(x,b) and is indexed (b, x).
struct WitnessCertificate {
  BitTable gamma = BitTable::Zero();
  Eigen::Vector2d zeta = Eigen::Vector2d::Zero();
  double c = 1.0;
  double d = 1.0;
  double h = 0.0;
  double epsilon = 1e-10;

  bool operator==(const WitnessCertificate&) const = default;
};

std::vector<std::string> certificate_violations(const WitnessCertificate& cert);

/// Returns the certificate unchanged or throws ValidationError carrying the
/// list of violations.
const WitnessCertificate& validate_certificate(const WitnessCertificate& cert);

/// Converts coefficients written against conditional frequencies f(b|x)
/// into the equivalent joint-frequency form: gamma_joint(b,x) =
/// gamma_cond(b,x) / p(x).
BitTable joint_gamma_from_conditional(const BitTable& gamma_conditional, double p1);

/// Per-block verdict.
struct CertifiedBlock {
  CorrelationCounts counts;
  double witness_value = 0.0;
  bool passed = false;
  double epsilon = 0.0;
  std::optional<double> epsilon_prime;
  double min_entropy_bits = 0.0;
  std::uint64_t extract_len = 0;
};

}  // namespace qrng
