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

#include "qrng/certification.hpp"

#include <cmath>
#include <sstream>

#include "qrng/csv.hpp"
#include "qrng/optics.hpp"

namespace qrng {

double witness_value(const BitTable& joint, const EnergyBounds& omega, const WitnessCertificate& cert) {
  if (!joint.allFinite() || joint.minCoeff() < -1e-12 || std::abs(joint.sum() - 1.0) > 1e-9) {
    throw Error("joint frequencies are not normalized");
  }
  const double gamma_term = cert.gamma.cwiseProduct(joint).sum();
  const double zeta_term = cert.zeta(0) * omega.omega0() + cert.zeta(1) * omega.omega1();
  return gamma_term - zeta_term;
}

double witness_value(const FrequencyTable& freqs, const EnergyBounds& omega, const WitnessCertificate& cert) {
  return witness_value(freqs.joint, omega, cert);
}

double finite_size_log_term(double epsilon) { return std::log2(2.0 / epsilon); }

double certified_min_entropy(std::uint64_t n, double h, double c, double d, double epsilon) {
  if (n == 0) throw Error("block size must be at least 1");
  if (!(c >= 0.0 && d >= 0.0)) throw Error("finite-size constants must be nonnegative");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("epsilon out of range");
  const double nn = static_cast<double>(n);
  const double l = finite_size_log_term(epsilon);
  const double rate = h - c * std::sqrt(l / nn) - d * l / nn;
  return rate > 0.0 ? nn * rate : 0.0;
}

double certified_min_entropy(std::uint64_t n, const WitnessCertificate& cert) {
  validate_certificate(cert);
  return certified_min_entropy(n, cert.h, cert.c, cert.d, cert.epsilon);
}

SoundnessAccount soundness_accounting(double epsilon, double pr_pass) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("epsilon out of range");
  if (!(pr_pass > 0.0 && pr_pass <= 1.0)) throw Error("pass probability must lie in (0,1]");
  const double eps_prime = epsilon / pr_pass;
  return {epsilon, eps_prime, pr_pass * eps_prime};
}

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

double honest_shannon_entropy(const BitTable& conditional, double p1) {
  double h = 0.0;
  for (int x = 0; x < 2; ++x) {
    const double px = x == 0 ? 1.0 - p1 : p1;
    for (int b = 0; b < 2; ++b) {
      const double p = conditional(b, x);
      if (p > 0.0) h -= px * p * std::log2(p);
    }
  }
  return h;
}

EntropyGrid honest_entropy_heatmap(double eta, double t2, double p1, std::span<const double> alpha,
                                   std::span<const double> beta) {
  if (alpha.empty() || beta.empty()) throw Error("heatmap grid is empty");
  EntropyGrid g;
  g.alpha.assign(alpha.begin(), alpha.end());
  g.beta.assign(beta.begin(), beta.end());
  g.entropy_bits.resize(static_cast<Eigen::Index>(alpha.size()), static_cast<Eigen::Index>(beta.size()));
  DeviceSettings s;
  s.eta = eta;
  s.t2 = t2;
  s.p1 = p1;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    for (std::size_t j = 0; j < beta.size(); ++j) {
      s.alpha_mag = alpha[i];
      s.beta_mag = beta[j];
      const DeviceParams params(s);
      g.entropy_bits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          honest_shannon_entropy(conditional_probabilities(params, 0.0), p1);
    }
  }
  return g;
}

std::string EntropyGrid::to_csv() const {
  std::ostringstream out;
  out << "alpha,beta,entropy_bits\n";
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    for (std::size_t j = 0; j < beta.size(); ++j) {
      write_csv_row(out, {alpha[i], beta[j],
                          entropy_bits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
    }
  }
  return out.str();
}

WitnessCertificate classical_bound_certificate(double p1, double h, double c, double d, double epsilon) {
  BitTable conditional;
  // (b, x): +p(0|0) - p(1|0) - p(0|1) + p(1|1)
  conditional << 1.0, -1.0,
                -1.0, 1.0;
  WitnessCertificate cert;
  cert.gamma = joint_gamma_from_conditional(conditional, p1);
  cert.zeta << 2.0, 2.0;
  cert.c = c;
  cert.d = d;
  cert.h = h;
  cert.epsilon = epsilon;
  return validate_certificate(cert);
}

}  // namespace qrng
