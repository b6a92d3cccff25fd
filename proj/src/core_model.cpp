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

#include "qrng/core_model.hpp"

#include <cmath>
#include <numeric>

namespace qrng {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += "; ";
    out += item;
  }
  return out;
}

bool in_open_unit(double v) { return v > 0.0 && v < 1.0; }

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join(violations)), violations_(std::move(violations)) {}

std::vector<std::string> device_violations(const DeviceSettings& s) {
  std::vector<std::string> v;
  if (!(s.alpha_mag >= 0.0) || !std::isfinite(s.alpha_mag)) v.emplace_back("alpha_mag must be finite and >= 0");
  if (!(s.beta_mag >= 0.0) || !std::isfinite(s.beta_mag)) v.emplace_back("beta_mag must be finite and >= 0");
  if (!std::isfinite(s.rel_phase)) v.emplace_back("rel_phase must be finite");
  if (!(s.eta >= 0.0 && s.eta <= 1.0)) v.emplace_back("eta must lie in [0,1]");
  if (!in_open_unit(s.t2)) v.emplace_back("t2 must lie in (0,1)");
  if (!in_open_unit(s.p1)) v.emplace_back("p1 must lie in (0,1)");
  if (!(s.dark_prob >= 0.0 && s.dark_prob < 1.0)) v.emplace_back("dark_prob must lie in [0,1)");
  if (!(s.extinction_db >= 0.0)) v.emplace_back("extinction_db must be >= 0 or infinite");
  if (!(s.rep_rate_hz > 0.0) || !std::isfinite(s.rep_rate_hz)) v.emplace_back("rep_rate_hz must be > 0");
  return v;
}

DeviceParams::DeviceParams(const DeviceSettings& settings) : s_(settings) {
  auto v = device_violations(settings);
  if (!v.empty()) throw ValidationError(std::move(v));
}

FrequencyTable counts_to_frequencies(const CorrelationCounts& counts) {
  const std::uint64_t total = counts.total();
  if (total == 0) throw Error("no data");

  FrequencyTable f;
  f.joint = counts.table().cast<double>() / static_cast<double>(total);
  f.conditional.setZero();
  for (int x = 0; x < 2; ++x) {
    const std::uint64_t nx = counts.n_x(x);
    if (nx == 0) continue;
    f.conditional_defined[x] = true;
    for (int b = 0; b < 2; ++b) {
      f.conditional(b, x) = static_cast<double>(counts(b, x)) / static_cast<double>(nx);
    }
  }
  return f;
}

EnergyBounds::EnergyBounds(double omega0, double omega1, double p1)
    : omega0_(omega0), omega1_(omega1), omega_bar_((1.0 - p1) * omega0 + p1 * omega1), p1_(p1) {
  std::vector<std::string> v;
  if (!(omega0 >= 0.0) || !std::isfinite(omega0)) v.emplace_back("omega0 must be finite and >= 0");
  if (!(omega1 >= 0.0) || !std::isfinite(omega1)) v.emplace_back("omega1 must be finite and >= 0");
  if (!in_open_unit(p1)) v.emplace_back("p1 must lie in (0,1)");
  if (!v.empty()) throw ValidationError(std::move(v));
}

EnergyBounds EnergyBounds::from_per_input(double omega0, double omega1, double p1) {
  return EnergyBounds(omega0, omega1, p1);
}

EnergyBounds EnergyBounds::from_average(double omega_bar, double p1) {
  EnergyBounds e(omega_bar, omega_bar, p1);
  e.omega_bar_ = omega_bar;
  return e;
}

std::vector<std::string> certificate_violations(const WitnessCertificate& cert) {
  std::vector<std::string> v;
  if (!cert.gamma.allFinite()) v.emplace_back("gamma must be finite");
  if (!cert.zeta.allFinite()) v.emplace_back("zeta must be finite");
  if (!(cert.c > 0.0) || !std::isfinite(cert.c)) v.emplace_back("c must be positive");
  if (!(cert.d > 0.0) || !std::isfinite(cert.d)) v.emplace_back("d must be positive");
  if (!std::isfinite(cert.h)) v.emplace_back("h must be finite");
  if (!in_open_unit(cert.epsilon)) v.emplace_back("epsilon out of range");
  return v;
}

const WitnessCertificate& validate_certificate(const WitnessCertificate& cert) {
  auto v = certificate_violations(cert);
  if (!v.empty()) throw ValidationError(std::move(v));
  return cert;
}

BitTable joint_gamma_from_conditional(const BitTable& gamma_conditional, double p1) {
  if (!in_open_unit(p1)) throw ValidationError({"p1 must lie in (0,1)"});
  BitTable g = gamma_conditional;
  g.col(0) /= (1.0 - p1);
  g.col(1) /= p1;
  return g;
}

}  // namespace qrng
