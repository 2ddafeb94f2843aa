#ifndef EMBANDIT_ROUNDING_HPP
#define EMBANDIT_ROUNDING_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <vector>

#include "embandit/errors.hpp"
#include "embandit/optimal_design.hpp"

namespace embandit {

struct AllocationPlan {
  Eigen::VectorXi counts;
  std::int64_t total = 0;
  double realized_max = 0.0;  // max_y y^T M^+ y over the supplied directions
  double bound = 0.0;         // (1+zeta) * max_y ||y||^2_{A(lambda)^+} / N
  double slack = 0.0;         // bound - realized_max (>= 0 when the check holds)
};

/// Minimum sample size for the (1+zeta) rounding guarantee,
/// r_d(zeta) = ceil((d^2 + d + 2) / zeta).
inline std::int64_t min_rounding_support(int d, double zeta) {
  static bool warned = false;
  if ((zeta < 0.1 || zeta > 0.25) && !warned) {
    warned = true;
    std::cerr << "[embandit] warning: zeta=" << zeta
              << " outside the default range [1/10, 1/4]\n";
  }
  const double dd = static_cast<double>(d);
  return static_cast<std::int64_t>(std::ceil((dd * dd + dd + 2.0) / zeta));
}

namespace detail {

// Efficient apportionment: start at ceil((N - s/2) * w), then fix the total
// by incrementing the most under-represented or decrementing the most
// over-represented support atom.
inline void apportion(const std::vector<int>& support,
                      const Eigen::VectorXd& w, std::int64_t n,
                      Eigen::VectorXi& counts) {
  const auto s = static_cast<double>(support.size());
  std::int64_t total = 0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const auto c = static_cast<std::int64_t>(
        std::ceil((static_cast<double>(n) - s / 2.0) * w[static_cast<Eigen::Index>(i)]));
    counts[support[i]] = static_cast<int>(std::max<std::int64_t>(c, 0));
    total += counts[support[i]];
  }
  while (total < n) {
    std::size_t pick = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < support.size(); ++i) {
      const double ratio =
          static_cast<double>(counts[support[i]]) / w[static_cast<Eigen::Index>(i)];
      if (ratio < best) {
        best = ratio;
        pick = i;
      }
    }
    counts[support[pick]] += 1;
    ++total;
  }
  while (total > n) {
    std::size_t pick = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (counts[support[i]] == 0) continue;
      const double ratio = static_cast<double>(counts[support[i]] - 1) /
                           w[static_cast<Eigen::Index>(i)];
      if (ratio > best) {
        best = ratio;
        pick = i;
      }
    }
    counts[support[pick]] -= 1;
    --total;
  }
}

inline double realized_sup(const Eigen::MatrixXd& psi,
                           const Eigen::VectorXi& counts,
                           const DirectionSet& dirs) {
  if (dirs.empty()) return 0.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(psi.cols(), psi.cols());
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      m.noalias() +=
          static_cast<double>(counts[i]) * psi.row(i).transpose() * psi.row(i);
    }
  }
  return sup_mahalanobis(psd_pinv(m), dirs).value;
}

}  // namespace detail

/// Rounds a continuous design into N integer pulls. The realized information
/// matrix is checked against the (1+zeta) guarantee over the supplied
/// directions; a failed check throws GuaranteeViolated.
inline AllocationPlan round_allocation(const DesignWeights& lambda,
                                       std::int64_t n, int d, double zeta,
                                       const Eigen::MatrixXd& psi,
                                       const DirectionSet& dirs) {
  const Eigen::Index k = lambda.weights.size();
  const std::int64_t r = min_rounding_support(d, zeta);
  if (n < r) {
    throw BudgetTooSmall("N=" + std::to_string(n) + " below r_d(zeta)=" +
                         std::to_string(r));
  }

  // Drop dust below zeta / (4 K N) before apportioning.
  const double threshold =
      zeta / (4.0 * static_cast<double>(k) * static_cast<double>(n));
  std::vector<int> support;
  double mass = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (lambda.weights[i] > threshold) {
      support.push_back(static_cast<int>(i));
      mass += lambda.weights[i];
    }
  }
  if (support.empty()) {
    Eigen::Index best = 0;
    lambda.weights.maxCoeff(&best);
    support.push_back(static_cast<int>(best));
    mass = 1.0;
  }
  Eigen::VectorXd w(static_cast<Eigen::Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) {
    w[static_cast<Eigen::Index>(i)] = lambda.weights[support[i]] / mass;
  }

  AllocationPlan plan;
  plan.counts = Eigen::VectorXi::Zero(k);
  plan.total = n;
  detail::apportion(support, w, n, plan.counts);

  plan.bound = dirs.empty()
                   ? 0.0
                   : (1.0 + zeta) * design_objective(lambda, dirs, psi) /
                         static_cast<double>(n);
  plan.realized_max = detail::realized_sup(psi, plan.counts, dirs);

  // Local repair: move single counts toward the worst direction.
  int moves = 0;
  while (!dirs.empty() && plan.realized_max > plan.bound * (1.0 + 1e-9) &&
         moves < 200) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(psi.cols(), psi.cols());
    for (Eigen::Index i = 0; i < k; ++i) {
      if (plan.counts[i] > 0) {
        m.noalias() += static_cast<double>(plan.counts[i]) *
                       psi.row(i).transpose() * psi.row(i);
      }
    }
    const detail::PsdPinv mp = detail::psd_pinv(m);
    const detail::SupResult sup = detail::sup_mahalanobis(mp, dirs);
    Eigen::Index add = 0;
    if (sup.out_of_range) {
      const Eigen::VectorXd y = dirs.directions.row(sup.worst).transpose();
      Eigen::VectorXd ynull = y - mp.q * (mp.q.transpose() * y);
      if (ynull.norm() > 0.0) ynull.normalize();
      (psi * ynull).array().square().maxCoeff(&add);
    } else {
      const Eigen::VectorXd wdir =
          mp.solve(dirs.directions.row(sup.worst).transpose());
      (psi * wdir).array().square().maxCoeff(&add);
    }
    // Take from the most over-allocated atom that is not the target.
    Eigen::Index take = -1;
    double best = -1.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      const Eigen::Index idx = support[i];
      if (idx == add || plan.counts[idx] == 0) continue;
      const double ratio =
          static_cast<double>(plan.counts[idx]) / w[static_cast<Eigen::Index>(i)];
      if (ratio > best) {
        best = ratio;
        take = idx;
      }
    }
    if (take < 0) break;
    plan.counts[take] -= 1;
    plan.counts[add] += 1;
    plan.realized_max = detail::realized_sup(psi, plan.counts, dirs);
    ++moves;
  }

  plan.slack = plan.bound - plan.realized_max;
  if (!dirs.empty() && plan.realized_max > plan.bound * (1.0 + 1e-9)) {
    throw GuaranteeViolated("rounding guarantee failed: realized " +
                            std::to_string(plan.realized_max) + " > bound " +
                            std::to_string(plan.bound));
  }
  return plan;
}

}  // namespace embandit

#endif  // EMBANDIT_ROUNDING_HPP
