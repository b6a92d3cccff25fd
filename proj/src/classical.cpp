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

#include "qrng/classical.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "qrng/csv.hpp"

namespace qrng {

namespace {

void require_distribution(const BitTable& p, int x) {
  const double s = p(0, x) + p(1, x);
  if (!(p(0, x) >= -1e-12 && p(1, x) >= -1e-12 && std::abs(s - 1.0) <= 1e-9)) {
    throw Error("conditional column x=" + std::to_string(x) + " is not a probability distribution");
  }
}

constexpr double kFeasibilityTol = 1e-12;
constexpr double kSingularTol = 1e-12;

/// Feasible basic solutions of {q >= 0, sum q = 1, sum m q + s = omega}
/// over messages 0..m_max; each returned vector holds q(0..m_max).
std::vector<Eigen::VectorXd> message_distribution_vertices(double omega, int m_max) {
  const int cols = m_max + 2;  // q(0..m_max), slack
  auto column = [&](int j) -> Eigen::Vector2d {
    if (j == m_max + 1) return {0.0, 1.0};
    return {1.0, static_cast<double>(j)};
  };
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < cols; ++i) {
    for (int j = i + 1; j < cols; ++j) {
      Eigen::Matrix2d basis;
      basis << column(i), column(j);
      const double det = basis.determinant();
      if (std::abs(det) < kSingularTol) continue;
      const Eigen::Vector2d sol = basis.inverse() * Eigen::Vector2d(1.0, omega);
      if (sol.minCoeff() < -kFeasibilityTol) continue;
      Eigen::VectorXd q = Eigen::VectorXd::Zero(m_max + 1);
      if (i <= m_max) q(i) = std::max(sol(0), 0.0);
      if (j <= m_max) q(j) = std::max(sol(1), 0.0);
      out.push_back(std::move(q));
    }
  }
  return out;
}

/// Best value of a deterministic strategy sending m0 for x=0 and m1 for
/// x=1, maximized over responses sigma in {+1,-1}. Only sigma(m0) and
/// sigma(m1) enter the value, so their four sign choices are exhaustive.
Eigen::MatrixXd deterministic_values(int m_max) {
  const int messages = m_max + 1;
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(messages, messages);
  for (int m0 = 0; m0 < messages; ++m0) {
    for (int m1 = 0; m1 < messages; ++m1) {
      double best = 0.0;
      for (const double sigma0 : {1.0, -1.0}) {
        for (const double sigma1 : {1.0, -1.0}) {
          if (m0 == m1 && sigma0 != sigma1) continue;  // one message, one response
          best = std::max(best, std::abs(sigma0 - sigma1));
        }
      }
      v(m0, m1) = best;
    }
  }
  return v;
}

double shared_randomness_max(const EnergyBounds& omega, int m_max) {
  const int messages = m_max + 1;
  const Eigen::MatrixXd value = deterministic_values(m_max);

  // Columns: weights w(m0, m1) of deterministic strategies, then two slacks.
  const int strategies = messages * messages;
  const int cols = strategies + 2;
  Eigen::Matrix3Xd a(3, cols);
  Eigen::VectorXd cost(cols);
  for (int m0 = 0; m0 < messages; ++m0) {
    for (int m1 = 0; m1 < messages; ++m1) {
      const int j = m0 * messages + m1;
      a.col(j) << 1.0, m0, m1;
      cost(j) = value(m0, m1);
    }
  }
  a.col(strategies) << 0.0, 1.0, 0.0;
  a.col(strategies + 1) << 0.0, 0.0, 1.0;
  cost(strategies) = cost(strategies + 1) = 0.0;
  const Eigen::Vector3d rhs(1.0, omega.omega0(), omega.omega1());

  // An LP optimum is attained at a basic feasible solution; enumerate all of them.
  double best = 0.0;
  for (int i = 0; i < cols; ++i) {
    for (int j = i + 1; j < cols; ++j) {
      for (int k = j + 1; k < cols; ++k) {
        Eigen::Matrix3d basis;
        basis << a.col(i), a.col(j), a.col(k);
        const double det = basis.determinant();
        if (std::abs(det) < kSingularTol) continue;
        const Eigen::Vector3d w = basis.inverse() * rhs;
        if (w.minCoeff() < -kFeasibilityTol) continue;
        best = std::max(best, cost(i) * w(0) + cost(j) * w(1) + cost(k) * w(2));
      }
    }
  }
  return best;
}

double local_randomness_max(const EnergyBounds& omega, int m_max) {
  const auto q0 = message_distribution_vertices(omega.omega0(), m_max);
  const auto q1 = message_distribution_vertices(omega.omega1(), m_max);
  const int messages = m_max + 1;
  const std::uint64_t patterns = std::uint64_t{1} << messages;
  Eigen::VectorXd sigma(messages);
  double best = 0.0;
  for (std::uint64_t s = 0; s < patterns; ++s) {
    for (int m = 0; m < messages; ++m) sigma(m) = ((s >> m) & 1) ? -1.0 : 1.0;
    double hi = -kInfinity;
    double lo = kInfinity;
    for (const auto& q : q0) hi = std::max(hi, sigma.dot(q));
    for (const auto& q : q1) lo = std::min(lo, sigma.dot(q));
    best = std::max(best, hi - lo);
  }
  return best;
}

}  // namespace

double classical_lhs(const BitTable& p) {
  require_distribution(p, 0);
  require_distribution(p, 1);
  return std::abs(p(0, 0) - p(1, 0) - p(0, 1) + p(1, 1));
}

double classical_lhs(const FrequencyTable& freqs) {
  if (!freqs.conditional_complete()) throw Error("conditional frequencies undefined for an unused input");
  return classical_lhs(freqs.conditional);
}

double classical_bound(const EnergyBounds& omega) { return 2.0 * (omega.omega0() + omega.omega1()); }

SetupInequality setup_inequality(double alpha, double beta, double eta, double t2) {
  const double t = std::sqrt(t2);
  const double r = std::sqrt(1.0 - t2);
  const double signal = t * alpha + r * beta;
  const double lo = r * beta;
  SetupInequality s;
  s.lhs = std::abs(std::exp(-eta * signal * signal) - std::exp(-eta * lo * lo));
  s.rhs = alpha * alpha;
  s.violated = s.lhs - s.rhs > kBoundaryTolerance;
  return s;
}

SetupInequality setup_inequality(const DeviceParams& params) {
  return setup_inequality(params.alpha_mag(), params.beta_mag(), params.eta(), params.t2());
}

std::vector<double> linspace(double lo, double hi, std::size_t steps) {
  if (steps == 0) throw Error("grid needs at least one step");
  std::vector<double> v(steps);
  if (steps == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t i = 0; i < steps; ++i) {
    v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  v.back() = hi;
  return v;
}

ParameterGrid scan_violation_region(double eta, double t2, std::span<const double> alpha,
                                    std::span<const double> beta) {
  if (alpha.empty() || beta.empty()) throw Error("scan grid is empty");
  ParameterGrid g;
  g.alpha.assign(alpha.begin(), alpha.end());
  g.beta.assign(beta.begin(), beta.end());
  const auto na = static_cast<Eigen::Index>(alpha.size());
  const auto nb = static_cast<Eigen::Index>(beta.size());
  g.lhs.resize(na, nb);
  g.rhs.resize(na, nb);
  g.margin.resize(na, nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < nb; ++j) {
      const auto s = setup_inequality(alpha[i], beta[j], eta, t2);
      g.lhs(i, j) = s.lhs;
      g.rhs(i, j) = s.rhs;
      g.margin(i, j) = s.lhs - s.rhs;
    }
  }
  return g;
}

std::string ParameterGrid::to_csv() const {
  std::ostringstream out;
  out << "alpha,beta,lhs,rhs,margin\n";
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    for (std::size_t j = 0; j < beta.size(); ++j) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      write_csv_row(out, {alpha[i], beta[j], lhs(ii, jj), rhs(ii, jj), margin(ii, jj)});
    }
  }
  return out.str();
}

double classical_max_lhs(const EnergyBounds& omega, int m_max, ClassicalModel model) {
  if (m_max < 2) throw Error("m_max must be at least 2");
  if (m_max > 20) throw Error("m_max above 20 makes strategy enumeration intractable");
  return model == ClassicalModel::kSharedRandomness ? shared_randomness_max(omega, m_max)
                                                     : local_randomness_max(omega, m_max);
}

}  // namespace qrng
