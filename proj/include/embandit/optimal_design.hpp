#ifndef EMBANDIT_OPTIMAL_DESIGN_HPP
#define EMBANDIT_OPTIMAL_DESIGN_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "embandit/errors.hpp"

namespace embandit {

inline constexpr double kPinvCutoff = 1e-12;  // relative to largest eigenvalue
inline constexpr double kRangeTol = 1e-8;

struct DesignWeights {
  Eigen::VectorXd weights;  // simplex: nonneg, sums to 1 within 1e-10
};

// Directions y = v - v'. When built from rows of a source matrix the
// (source, provenance) pair enables Gram-based evaluation, which is much
// cheaper than touching each direction vector.
struct DirectionSet {
  Eigen::MatrixXd directions;                    // one row per direction
  std::vector<std::pair<int, int>> provenance;   // source row ids, y = r_i - r_j
  Eigen::MatrixXd source;                        // rows referenced by provenance
  Eigen::MatrixXd source_gram;                   // source * source^T (cached)
  Eigen::MatrixXd span_basis;  // d x r orthonormal basis of span(directions)

  bool empty() const { return directions.rows() == 0; }
  Eigen::Index size() const { return directions.rows(); }
  bool pairwise() const { return source.rows() > 0 && !provenance.empty(); }
};

struct DesignSolution {
  DesignWeights weights;
  double tau = 0.0;    // objective value at the returned weights
  int iterations = 0;
  double gap = 0.0;    // relative duality-gap estimate (oracle: certified slack)
};

/// All nonzero pairwise differences of the given rows, one per unordered
/// pair; exact duplicates and sign flips are not stored twice.
inline DirectionSet difference_set(const Eigen::MatrixXd& embedded_arms) {
  const Eigen::Index k = embedded_arms.rows();
  const Eigen::Index d = embedded_arms.cols();
  if (k < 1) throw Error("difference_set: need at least one arm");

  // Canonical sign: first nonzero coordinate positive. Dedupe exact repeats.
  struct Entry {
    Eigen::VectorXd dir;
    int a, b;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(k * (k - 1) / 2));
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      Eigen::VectorXd y = embedded_arms.row(i) - embedded_arms.row(j);
      if (y.squaredNorm() == 0.0) continue;
      int a = static_cast<int>(i), b = static_cast<int>(j);
      for (Eigen::Index c = 0; c < d; ++c) {
        if (y[c] != 0.0) {
          if (y[c] < 0.0) {
            y = -y;
            std::swap(a, b);
          }
          break;
        }
      }
      entries.push_back({std::move(y), a, b});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& l, const Entry& r) {
    for (Eigen::Index c = 0; c < l.dir.size(); ++c) {
      if (l.dir[c] != r.dir[c]) return l.dir[c] < r.dir[c];
    }
    return false;
  });
  entries.erase(std::unique(entries.begin(), entries.end(),
                            [](const Entry& l, const Entry& r) {
                              return l.dir == r.dir;
                            }),
                entries.end());

  DirectionSet out;
  out.directions.resize(static_cast<Eigen::Index>(entries.size()), d);
  out.provenance.reserve(entries.size());
  for (std::size_t t = 0; t < entries.size(); ++t) {
    out.directions.row(static_cast<Eigen::Index>(t)) = entries[t].dir.transpose();
    out.provenance.emplace_back(entries[t].a, entries[t].b);
  }
  out.source = embedded_arms;
  out.source_gram = embedded_arms * embedded_arms.transpose();

  // Orthonormal basis of the direction span; the range test runs on unit
  // basis vectors because pairwise Gram arithmetic cannot resolve the tiny
  // residuals of near-parallel directions.
  if (out.directions.rows() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.directions,
                                          Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv[i] > 1e-13 * sv[0]) ++r;
    }
    out.span_basis = svd.matrixV().leftCols(r);
  }
  return out;
}

/// G-optimal direction set: the arms themselves.
inline DirectionSet arms_as_directions(const Eigen::MatrixXd& embedded_arms) {
  DirectionSet out;
  out.directions = embedded_arms;
  return out;
}

namespace detail {

// Eigendecomposition-backed pseudo-inverse of a PSD matrix.
struct PsdPinv {
  Eigen::MatrixXd q;         // d x r retained eigenvectors
  Eigen::VectorXd vals;      // retained eigenvalues (positive)
  Eigen::Index full_dim = 0;

  Eigen::Index rank() const { return vals.size(); }

  double quad(const Eigen::VectorXd& y) const {  // y^T A^+ y, no range test
    const Eigen::VectorXd t = q.transpose() * y;
    return (t.array().square() / vals.array()).sum();
  }

  double range_residual2(const Eigen::VectorXd& y) const {
    return (y - q * (q.transpose() * y)).squaredNorm();
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {  // A^+ b
    const Eigen::VectorXd t = (q.transpose() * b).array() / vals.array();
    return q * t;
  }

  Eigen::MatrixXd pinv() const {
    return q * vals.cwiseInverse().asDiagonal() * q.transpose();
  }
};

inline PsdPinv psd_pinv(const Eigen::MatrixXd& a, double rel_cutoff = kPinvCutoff) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const double vmax = ev.size() ? std::max(0.0, ev[ev.size() - 1]) : 0.0;
  const double cutoff = rel_cutoff * vmax;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff && ev[i] > 0.0) ++r;
  }
  PsdPinv out;
  out.full_dim = a.rows();
  out.q.resize(a.rows(), r);
  out.vals.resize(r);
  Eigen::Index w = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > cutoff && ev[i] > 0.0) {
      out.q.col(w) = es.eigenvectors().col(i);
      out.vals[w] = ev[i];
      ++w;
    }
  }
  return out;
}

struct SupResult {
  double value = 0.0;   // +inf when some direction leaves range(A)
  Eigen::Index worst = -1;
  bool out_of_range = false;
};

// sup over directions of y^T A^+ y; Gram path when the set is pairwise.
inline SupResult sup_mahalanobis(const PsdPinv& ap, const DirectionSet& dirs) {
  SupResult res;
  if (dirs.empty()) return res;
  const double inf = std::numeric_limits<double>::infinity();

  if (dirs.pairwise()) {
    // Range test on the span basis: all directions lie in range(A) iff every
    // basis vector does.
    for (Eigen::Index c = 0; c < dirs.span_basis.cols(); ++c) {
      const Eigen::VectorXd b = dirs.span_basis.col(c);
      const double resid2 = ap.range_residual2(b);
      if (resid2 > kRangeTol * kRangeTol) {
        // Report the direction leaning most on the unreached component.
        Eigen::Index worst = 0;
        (dirs.directions * b).cwiseAbs().maxCoeff(&worst);
        res.value = inf;
        res.worst = worst;
        res.out_of_range = true;
        return res;
      }
    }
    // quad_ij = |U_i - U_j|^2 with U = S Q diag(1/sqrt(vals)), via its Gram.
    const Eigen::MatrixXd t = dirs.source * ap.q;
    const Eigen::MatrixXd u =
        t * ap.vals.cwiseSqrt().cwiseInverse().asDiagonal();
    const Eigen::MatrixXd p = u * u.transpose();
    double best = -1.0;
    for (std::size_t idx = 0; idx < dirs.provenance.size(); ++idx) {
      const auto [i, j] = dirs.provenance[idx];
      const double q = p(i, i) + p(j, j) - 2.0 * p(i, j);
      if (q > best) {
        best = q;
        res.worst = static_cast<Eigen::Index>(idx);
      }
    }
    res.value = std::max(best, 0.0);
    return res;
  }

  double best = -1.0;
  for (Eigen::Index idx = 0; idx < dirs.size(); ++idx) {
    const Eigen::VectorXd y = dirs.directions.row(idx).transpose();
    const double n2 = y.squaredNorm();
    if (ap.range_residual2(y) > kRangeTol * kRangeTol * n2) {
      res.value = inf;
      res.worst = idx;
      res.out_of_range = true;
      return res;
    }
    const double q = ap.quad(y);
    if (q > best) {
      best = q;
      res.worst = idx;
    }
  }
  res.value = std::max(best, 0.0);
  return res;
}

inline Eigen::MatrixXd information_matrix(const Eigen::MatrixXd& psi,
                                          const Eigen::VectorXd& lambda) {
  return psi.transpose() * lambda.asDiagonal() * psi;
}

}  // namespace detail

/// sup over the direction set of ||y||^2 in the A(lambda)^+ norm; +inf when a
/// direction falls outside range(A(lambda)).
inline double design_objective(const DesignWeights& lambda,
                               const DirectionSet& dirs,
                               const Eigen::MatrixXd& embedded_arms) {
  if (dirs.empty()) return 0.0;
  const Eigen::MatrixXd a =
      detail::information_matrix(embedded_arms, lambda.weights);
  return detail::sup_mahalanobis(detail::psd_pinv(a), dirs).value;
}

/// Frank-Wolfe minimax design: step 2/(t+2) with a monotonicity guard
/// (halve the step while the objective would increase), uniform start,
/// stop when the relative duality gap drops below tol.
inline DesignSolution solve_design(const Eigen::MatrixXd& embedded_arms,
                                   const DirectionSet& dirs,
                                   int max_iters = 5000, double tol = 1e-3) {
  const Eigen::Index k = embedded_arms.rows();
  DesignSolution sol;
  sol.weights.weights = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  if (dirs.empty()) return sol;

  // Exact span feasibility: every direction must lie in span(embedded arms),
  // tested against the arm matrix itself rather than a weighted A(lambda).
  {
    const Eigen::MatrixXd gram = embedded_arms.transpose() * embedded_arms;
    const detail::PsdPinv span = detail::psd_pinv(gram, 1e-14);
    for (Eigen::Index i = 0; i < dirs.size(); ++i) {
      const Eigen::VectorXd y = dirs.directions.row(i).transpose();
      if (span.range_residual2(y) > kRangeTol * kRangeTol * y.squaredNorm()) {
        throw InfeasibleDirection(
            "direction outside span of embedded arms (index " +
            std::to_string(i) + ")");
      }
    }
  }

  struct Eval {
    double f = 0.0;
    Eigen::Index worst = -1;
    bool oor = false;
    Eigen::VectorXd pick_scores;  // per-arm scores for the FW vertex
  };
  auto evaluate = [&](const Eigen::VectorXd& lam) {
    Eval e;
    const detail::PsdPinv ap =
        detail::psd_pinv(detail::information_matrix(embedded_arms, lam));
    const detail::SupResult sup = detail::sup_mahalanobis(ap, dirs);
    e.f = sup.value;
    e.worst = sup.worst;
    e.oor = sup.out_of_range;
    const Eigen::VectorXd y = dirs.directions.row(sup.worst).transpose();
    if (sup.out_of_range) {
      // Pull toward the arm best aligned with the unreached component.
      Eigen::VectorXd ynull = y - ap.q * (ap.q.transpose() * y);
      const double n = ynull.norm();
      if (n > 0.0) ynull /= n;
      e.pick_scores = (embedded_arms * ynull).array().square();
    } else {
      const Eigen::VectorXd w = ap.solve(y);
      e.pick_scores = (embedded_arms * w).array().square();
    }
    return e;
  };

  Eigen::VectorXd lam = sol.weights.weights;
  Eval cur = evaluate(lam);
  int iters = 0;
  double rel_gap = std::numeric_limits<double>::infinity();

  for (int t = 0; t < max_iters; ++t) {
    Eigen::Index pick = 0;
    const double score_max = cur.pick_scores.maxCoeff(&pick);
    if (!cur.oor) {
      // f(s) >= f(lam) + <grad, s - lam>; <grad, lam> = -f at the worst y.
      const double gap = std::max(0.0, score_max - cur.f);
      rel_gap = gap / std::max(cur.f, 1e-300);
      if (rel_gap < tol) break;
    }

    double gamma = 2.0 / (t + 2.0);
    bool stepped = false;
    for (int h = 0; h < 40; ++h) {
      Eigen::VectorXd cand = (1.0 - gamma) * lam;
      cand[pick] += gamma;
      Eval ce = evaluate(cand);
      if (ce.f <= cur.f + 1e-12 * std::max(1.0, std::abs(cur.f))) {
        lam = std::move(cand);
        cur = std::move(ce);
        stepped = true;
        break;
      }
      gamma *= 0.5;
    }
    ++iters;
    if (!stepped) break;  // no decreasing step exists at this scale
  }

  sol.weights.weights = lam;
  sol.tau = cur.f;
  sol.iterations = iters;
  sol.gap = std::isfinite(rel_gap) ? rel_gap : -1.0;
  return sol;
}

/// Exhaustive simplex-grid reference solver for small instances. The
/// returned gap is a certified slack: the true optimum lies within
/// [tau - gap, tau].
inline DesignSolution brute_force_design_oracle(
    const Eigen::MatrixXd& embedded_arms, const DirectionSet& dirs,
    double grid_step) {
  const int k = static_cast<int>(embedded_arms.rows());
  if (k > 6) throw TooLarge("oracle supports at most 6 arms");
  if (grid_step < 0.02) throw TooLarge("grid step below 0.02");
  const int n = static_cast<int>(std::llround(1.0 / grid_step));

  // Number of grid points: C(n+k-1, k-1).
  double count = 1.0;
  for (int i = 1; i <= k - 1; ++i) {
    count *= static_cast<double>(n + i) / static_cast<double>(i);
  }
  if (count > 1e7) throw TooLarge("simplex grid would exceed 1e7 points");

  DesignSolution best;
  best.tau = std::numeric_limits<double>::infinity();
  best.weights.weights =
      Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  if (dirs.empty()) {
    best.tau = 0.0;
    return best;
  }

  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  long long visited = 0;
  Eigen::VectorXd lam(k);

  auto consider = [&]() {
    ++visited;
    for (int i = 0; i < k; ++i) {
      lam[i] = static_cast<double>(counts[static_cast<std::size_t>(i)]) /
               static_cast<double>(n);
    }
    const detail::PsdPinv ap =
        detail::psd_pinv(detail::information_matrix(embedded_arms, lam));
    const detail::SupResult sup = detail::sup_mahalanobis(ap, dirs);
    if (sup.value < best.tau) {
      best.tau = sup.value;
      best.weights.weights = lam;
    }
  };

  // Enumerate compositions of n into k parts.
  auto recurse = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == k - 1) {
      counts[static_cast<std::size_t>(pos)] = remaining;
      consider();
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      counts[static_cast<std::size_t>(pos)] = c;
      self(self, pos + 1, remaining - c);
    }
  };
  recurse(recurse, 0, n);

  best.iterations = static_cast<int>(std::min<long long>(
      visited, std::numeric_limits<int>::max()));

  // Certified slack at the best grid point: for any active worst direction,
  // convexity gives opt >= tau - (max_x (psi_x^T A^+ y*)^2 - tau).
  if (std::isfinite(best.tau)) {
    const detail::PsdPinv ap = detail::psd_pinv(
        detail::information_matrix(embedded_arms, best.weights.weights));
    const detail::SupResult sup = detail::sup_mahalanobis(ap, dirs);
    if (!sup.out_of_range) {
      const Eigen::VectorXd y = dirs.directions.row(sup.worst).transpose();
      const Eigen::VectorXd w = ap.solve(y);
      const double score_max = (embedded_arms * w).array().square().maxCoeff();
      best.gap = std::max(0.0, score_max - best.tau);
    }
  }
  return best;
}

}  // namespace embandit

#endif  // EMBANDIT_OPTIMAL_DESIGN_HPP
