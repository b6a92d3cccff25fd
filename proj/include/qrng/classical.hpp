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

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qrng/core_model.hpp"

namespace qrng {

/// |p(0|0) - p(1|0) - p(0|1) + p(1|1)| for a conditional table indexed
/// (b, x). Throws Error if a column is not a probability vector.
double classical_lhs(const BitTable& conditional);
/// Same, from observed frequencies; throws if an input never occurred.
double classical_lhs(const FrequencyTable& freqs);

/// 2 (omega0 + omega1).
double classical_bound(const EnergyBounds& omega);

struct SetupInequality {
  double lhs = 0.0;
  double rhs = 0.0;
  bool violated = false;
};

/// Ideal-scheme inequality |exp(-eta |t alpha + r beta|^2) - exp(-eta |r beta|^2)| <= |alpha|^2,
/// evaluated at zero relative phase with perfect extinction and no dark
/// counts regardless of those fields in `params`.
SetupInequality setup_inequality(const DeviceParams& params);
SetupInequality setup_inequality(double alpha, double beta, double eta, double t2);

/// Cells whose margin lies within this distance of zero count as not violated.
inline constexpr double kBoundaryTolerance = 1e-12;

/// Grid over (|alpha|, |beta|); matrices are indexed (alpha_index, beta_index).
struct ParameterGrid {
  std::vector<double> alpha;
  std::vector<double> beta;
  Eigen::MatrixXd lhs;
  Eigen::MatrixXd rhs;
  Eigen::MatrixXd margin;

  bool violated(Eigen::Index i, Eigen::Index j) const { return margin(i, j) > kBoundaryTolerance; }
  /// Header `alpha,beta,lhs,rhs,margin`, alpha-major.
  std::string to_csv() const;
};

/// Evaluates the setup inequality on every (alpha, beta) pair. Throws on an
/// empty axis.
ParameterGrid scan_violation_region(double eta, double t2, std::span<const double> alpha,
                                    std::span<const double> beta);

/// `steps` evenly spaced points covering [lo, hi] inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t steps);

/// Which classical strategies the brute-force oracle admits.
enum class ClassicalModel {
  /// Mixtures of deterministic strategies through shared randomness; the
  /// energy constraint holds on average over the shared variable.
  kSharedRandomness,
  /// A single pair of message distributions (local randomness only) with a
  /// fixed deterministic response.
  kLocalRandomness,
};

/// Brute-force maximum of |p(0|0) - p(1|0) - p(0|1) + p(1|1)| over classical
/// strategies that send an integer photon-count message m in {0..m_max}
/// with mean at most omega_x, decoded by a deterministic response
/// sigma(m) in {+1, -1}. Response patterns are enumerated exhaustively; the
/// remaining linear program over message distributions is solved exactly
/// by enumerating its basic solutions.
double classical_max_lhs(const EnergyBounds& omega, int m_max,
                         ClassicalModel model = ClassicalModel::kSharedRandomness);

}  // namespace qrng
