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
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qrng/core_model.hpp"

namespace qrng {

/// gamma[f] - zeta[omega] in bits per round, with f the joint frequencies.
/// Throws Error if `joint` is not a normalized nonnegative table.
double witness_value(const BitTable& joint, const EnergyBounds& omega, const WitnessCertificate& cert);
double witness_value(const FrequencyTable& freqs, const EnergyBounds& omega, const WitnessCertificate& cert);

/// value >= h.
inline bool pass_test(double value, const WitnessCertificate& cert) { return value >= cert.h; }

/// log2(2 / epsilon), the confidence term of the finite-size bound.
double finite_size_log_term(double epsilon);

/// max(0, n (h - c sqrt(L/n) - d L/n)) with L = log2(2/epsilon). Accepts
/// c = d = 0 (no finite-size penalty).
double certified_min_entropy(std::uint64_t n, double h, double c, double d, double epsilon);
double certified_min_entropy(std::uint64_t n, const WitnessCertificate& cert);

struct SoundnessAccount {
  double epsilon;
  double epsilon_prime;
  /// pr_pass * epsilon_prime; equals epsilon.
  double sound_product;
};

/// epsilon' = epsilon / Pr(Pass). Throws Error when pr_pass is not in (0, 1].
SoundnessAccount soundness_accounting(double epsilon, double pr_pass);

/// Binary entropy in bits, with 0 log 0 = 0.
double binary_entropy(double p);

/// -sum_x p(x) sum_b p(b|x) log2 p(b|x) for an honest device without
/// hidden noise. `conditional` is indexed (b, x).
double honest_shannon_entropy(const BitTable& conditional, double p1);

/// Honest-device entropy on an (|alpha|, |beta|) grid with ideal extinction,
/// no dark counts and zero relative phase. Indexed (alpha_index, beta_index).
struct EntropyGrid {
  std::vector<double> alpha;
  std::vector<double> beta;
  Eigen::MatrixXd entropy_bits;

  /// Header `alpha,beta,entropy_bits`, alpha-major.
  std::string to_csv() const;
};

EntropyGrid honest_entropy_heatmap(double eta, double t2, double p1, std::span<const double> alpha,
                                   std::span<const double> beta);

/// Witness built from the classical bound: gamma reproduces
/// p(0|0) - p(1|0) - p(0|1) + p(1|1) on joint frequencies for input bias p1
/// and zeta = (2, 2), so its value is that combination minus 2(omega0 + omega1).
WitnessCertificate classical_bound_certificate(double p1, double h, double c, double d, double epsilon);

}  // namespace qrng
