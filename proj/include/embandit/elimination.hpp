#ifndef EMBANDIT_ELIMINATION_HPP
#define EMBANDIT_ELIMINATION_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "embandit/arm_model.hpp"
#include "embandit/embedding.hpp"
#include "embandit/errors.hpp"
#include "embandit/optimal_design.hpp"
#include "embandit/rounding.hpp"

namespace embandit {

struct TraceRound {
  int k = 0;
  int d_k = 0;
  double tau_k = 0.0;
  double eps_k = 0.0;
  std::int64_t n_k = 0;      // scheduled sample size
  std::int64_t pulled = 0;   // actually pulled (0 when a degenerate round skips)
  int entering = 0;          // |S_k| when the round started
  std::vector<int> survivors;  // ids surviving this round's elimination
  std::int64_t cum_pulls = 0;
  double wall_ms = 0.0;
  Eigen::MatrixXd info_matrix;  // neural mode only: alpha I + sum psi psi^T
};

struct RunOutcome {
  int recommended = -1;
  std::int64_t total_pulls = 0;
  bool succeeded = false;  // judged against true means, harness-side
  std::vector<TraceRound> trace;
  std::vector<std::string> notes;
};

/// theta = (sum psi psi^T + ridge I)^{-1} sum psi y from an accumulated
/// information matrix; at ridge 0 a condition number above 1e12 signals an
/// allocation that failed to span.
inline Eigen::VectorXd least_squares_from_information(const Eigen::MatrixXd& a,
                                                      const Eigen::VectorXd& b,
                                                      double ridge) {
  Eigen::MatrixXd areg = a;
  if (ridge > 0.0) areg.diagonal().array() += ridge;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(areg);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double vmin = ev[0];
  const double vmax = ev[ev.size() - 1];
  if (ridge == 0.0 && (vmin <= 0.0 || vmax / vmin > 1e12)) {
    throw SingularInformation("information matrix condition number " +
                              std::to_string(vmin > 0.0 ? vmax / vmin
                                                        : std::numeric_limits<double>::infinity()));
  }
  const Eigen::VectorXd t =
      (es.eigenvectors().transpose() * b).array() / ev.array().max(1e-300);
  return es.eigenvectors() * t;
}

inline Eigen::VectorXd least_squares_estimate(
    const std::vector<std::pair<Eigen::VectorXd, double>>& pulled,
    double ridge = 0.0) {
  if (pulled.empty()) throw Error("least squares needs at least one pull");
  const Eigen::Index d = pulled.front().first.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (const auto& [psi, y] : pulled) {
    a.noalias() += psi * psi.transpose();
    b.noalias() += psi * y;
  }
  return least_squares_from_information(a, b, ridge);
}

namespace detail {

inline double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct PullStats {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  std::int64_t pulled = 0;
};

// Pull counts[i] times per arm, in arm-index order; accumulates the realized
// information matrix and response vector in the embedded space.
inline PullStats pull_allocation(RewardOracle& oracle,
                                 const Eigen::MatrixXd& psi,
                                 const Eigen::VectorXi& counts) {
  PullStats st;
  const Eigen::Index d = psi.cols();
  st.a = Eigen::MatrixXd::Zero(d, d);
  st.b = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts[i] <= 0) continue;
    double ysum = 0.0;
    for (int c = 0; c < counts[i]; ++c) {
      ysum += oracle.pull(static_cast<int>(i));
    }
    const Eigen::VectorXd row = psi.row(i).transpose();
    st.a.noalias() += static_cast<double>(counts[i]) * row * row.transpose();
    st.b.noalias() += ysum * row;
    st.pulled += counts[i];
  }
  return st;
}

// Pairwise elimination: drop x when some survivor x' has
// (psi(x') - psi(x))^T theta >= eps_k + ||psi(x')-psi(x)||_{A^-1} * radius.
inline std::vector<int> eliminate_by_gap(const Eigen::MatrixXd& surv_psi,
                                         const std::vector<int>& survivors,
                                         const PsdPinv& ap,
                                         const Eigen::VectorXd& theta,
                                         double eps_k, double radius) {
  const Eigen::Index s = surv_psi.rows();
  const Eigen::VectorXd v = surv_psi * theta;
  const Eigen::MatrixXd t = surv_psi * ap.q;
  const Eigen::MatrixXd u = t * ap.vals.cwiseSqrt().cwiseInverse().asDiagonal();
  const Eigen::MatrixXd p = u * u.transpose();

  std::vector<int> kept;
  kept.reserve(static_cast<std::size_t>(s));
  for (Eigen::Index x = 0; x < s; ++x) {
    bool out = false;
    for (Eigen::Index o = 0; o < s && !out; ++o) {
      if (o == x) continue;
      const double width =
          std::sqrt(std::max(p(x, x) + p(o, o) - 2.0 * p(x, o), 0.0));
      if (v[o] - v[x] >= eps_k + width * radius) out = true;
    }
    if (!out) kept.push_back(survivors[static_cast<std::size_t>(x)]);
  }
  return kept;
}

struct RoundPlan {
  std::shared_ptr<const EmbeddingPlan> plan;
  double gamma_tilde = 0.0;
};

struct EngineConfig {
  int rounds = 0;  // 0: run until a single survivor remains
  double delta = 0.05;
  double zeta = 0.1;
  int fw_iters = 5000;
  double fw_tol = 1e-3;
  bool enforce_admission = true;
  std::function<RoundPlan(int)> plan_for_round;
};

// Shared mechanics of the elimination family: per round, design over the
// survivors' difference set (weights over all arms), round, pull, estimate,
// eliminate by confidence gap.
inline RunOutcome run_elimination(RewardOracle& oracle, const EngineConfig& cfg) {
  RunOutcome out;
  const int k_arms = oracle.arms().num_arms();
  std::vector<int> survivors(oracle.arms().ids);

  const int max_rounds = cfg.rounds > 0 ? cfg.rounds : 64;
  for (int k = 1; k <= max_rounds; ++k) {
    const double t0 = now_ms();
    const double delta_k = cfg.delta / (static_cast<double>(k) * k);
    const RoundPlan rp = cfg.plan_for_round(k);
    const Eigen::MatrixXd& psi = rp.plan->psi;
    const int d_k = rp.plan->d;
    const double two_pow = std::pow(2.0, -k);

    TraceRound tr;
    tr.k = k;
    tr.d_k = d_k;
    tr.entering = static_cast<int>(survivors.size());

    Eigen::MatrixXd surv_psi(static_cast<Eigen::Index>(survivors.size()),
                             psi.cols());
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      surv_psi.row(static_cast<Eigen::Index>(i)) = psi.row(survivors[i]);
    }
    const DirectionSet dirs = difference_set(surv_psi);

    if (dirs.empty()) {
      // Degenerate survivor set: no pairs to test, nothing to learn.
      tr.tau_k = 0.0;
      tr.eps_k = 2.0 * rp.gamma_tilde;
      tr.n_k = min_rounding_support(d_k, cfg.zeta);
      tr.pulled = 0;
      tr.survivors = survivors;
      tr.cum_pulls = oracle.ledger().total;
      tr.wall_ms = now_ms() - t0;
      out.trace.push_back(std::move(tr));
      if (cfg.rounds == 0) break;
      continue;
    }

    const DesignSolution sol =
        solve_design(psi, dirs, cfg.fw_iters, cfg.fw_tol);
    tr.tau_k = sol.tau;

    const double eps_k =
        2.0 * rp.gamma_tilde +
        rp.gamma_tilde * std::sqrt((1.0 + cfg.zeta) * sol.tau);
    tr.eps_k = eps_k;
    if (cfg.enforce_admission && eps_k > 0.5 * two_pow * (1.0 + 1e-6)) {
      throw Error("admission check failed at round " + std::to_string(k) +
                  ": eps_k=" + std::to_string(eps_k) + " > 2^-k/2=" +
                  std::to_string(0.5 * two_pow));
    }

    const double s = static_cast<double>(survivors.size());
    const double log_term = std::log(s * s / delta_k);
    const double quota = std::ceil((2.0 * (1.0 + cfg.zeta) * sol.tau *
                                    log_term) /
                                   ((two_pow - eps_k) * (two_pow - eps_k)));
    const std::int64_t n_k =
        std::max(static_cast<std::int64_t>(quota),
                 min_rounding_support(d_k, cfg.zeta));
    tr.n_k = n_k;

    const AllocationPlan alloc =
        round_allocation(sol.weights, n_k, d_k, cfg.zeta, psi, dirs);
    const PullStats stats = pull_allocation(oracle, psi, alloc.counts);
    tr.pulled = stats.pulled;

    const Eigen::VectorXd theta =
        least_squares_from_information(stats.a, stats.b, 0.0);
    const PsdPinv ap = psd_pinv(stats.a);
    const double radius = std::sqrt(2.0 * log_term);
    survivors = eliminate_by_gap(surv_psi, survivors, ap, theta, eps_k, radius);

    tr.survivors = survivors;
    tr.cum_pulls = oracle.ledger().total;
    tr.wall_ms = now_ms() - t0;
    out.trace.push_back(std::move(tr));

    if (cfg.rounds == 0 && survivors.size() <= 1) break;
  }

  out.recommended = survivors.empty() ? -1 : survivors.front();
  out.total_pulls = oracle.ledger().total;
  (void)k_arms;
  return out;
}

}  // namespace detail

/// Arm elimination with adaptive embedding: per round the embedding dimension
/// is the effective dimension at tolerance 4 * 2^-k.
inline RunOutcome adaptive_eliminate(const ArmSet& arms, RewardOracle& oracle,
                                     const EmbeddingProvider& provider,
                                     double eps, double delta, double zeta) {
  (void)arms;
  // Reachability before any pull.
  effective_dimension(provider.gamma_at, eps, provider.d_max);

  auto cache = std::make_shared<std::map<int, std::shared_ptr<EmbeddingPlan>>>();
  detail::EngineConfig cfg;
  cfg.rounds = static_cast<int>(std::ceil(std::log2(2.0 / eps)));
  cfg.delta = delta;
  cfg.zeta = zeta;
  cfg.plan_for_round = [&provider, cache](int k) {
    const double level = 4.0 * std::pow(2.0, -k);
    const int d_k = effective_dimension(provider.gamma_at, level, provider.d_max);
    auto it = cache->find(d_k);
    if (it == cache->end()) {
      it = cache->emplace(d_k, std::make_shared<EmbeddingPlan>(
                                   provider.plan_at(d_k)))
               .first;
    }
    return detail::RoundPlan{it->second, it->second->gamma_tilde};
  };
  return detail::run_elimination(oracle, cfg);
}

/// Arm elimination with one fixed embedding; runs ceil(log2(2/gamma(d)))
/// rounds and outputs a gamma(d)-optimal arm. A plan with gamma_tilde = 0 is
/// exact, so the run degenerates to full-information elimination: stop after
/// ceil(log2(2/eps_if_exact)) rounds when given, else at a single survivor.
inline RunOutcome fixed_eliminate(const ArmSet& arms, RewardOracle& oracle,
                                  const EmbeddingPlan& plan, double delta,
                                  double zeta, double eps_if_exact = 0.0) {
  (void)arms;
  auto shared_plan = std::make_shared<EmbeddingPlan>(plan);
  detail::EngineConfig cfg;
  cfg.delta = delta;
  cfg.zeta = zeta;
  cfg.plan_for_round = [shared_plan](int) {
    return detail::RoundPlan{shared_plan, shared_plan->gamma_tilde};
  };

  if (plan.gamma_tilde > 0.0) {
    const double gamma = gamma_of_d(plan.gamma_tilde, plan.d, zeta);
    cfg.rounds = std::max(
        static_cast<int>(std::ceil(std::log2(2.0 / gamma))), 0);
  } else {
    cfg.plan_for_round = [shared_plan](int) {
      return detail::RoundPlan{shared_plan, 0.0};
    };
    cfg.rounds = eps_if_exact > 0.0
                     ? static_cast<int>(std::ceil(std::log2(2.0 / eps_if_exact)))
                     : 0;
  }
  return detail::run_elimination(oracle, cfg);
}

/// Full-dimension baseline: identity embedding, zero misspecification.
inline RunOutcome rage_eliminate(const ArmSet& arms, RewardOracle& oracle,
                                 double eps, double delta, double zeta) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(arms.features);
  const Eigen::VectorXd& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > 1e-12 * sv[0]) ++rank;
  }
  if (rank < arms.dim()) {
    throw RankDeficit("feature matrix has rank " + std::to_string(rank) +
                      " < D=" + std::to_string(arms.dim()) +
                      "; project first");
  }

  auto plan = std::make_shared<EmbeddingPlan>();
  plan->psi = arms.features;
  plan->d = arms.dim();
  plan->gamma_tilde = 0.0;
  plan->gamma = 0.0;
  plan->zeta = zeta;

  detail::EngineConfig cfg;
  cfg.rounds = static_cast<int>(std::ceil(std::log2(2.0 / eps)));
  cfg.delta = delta;
  cfg.zeta = zeta;
  cfg.plan_for_round = [plan](int) { return detail::RoundPlan{plan, 0.0}; };
  return detail::run_elimination(oracle, cfg);
}

struct RecommendationStream {
  std::vector<std::pair<int, int>> items;  // (round, recommended arm id)
  auto begin() const { return items.begin(); }
  auto end() const { return items.end(); }
};

struct UnknownMisspecResult {
  RecommendationStream recommendations;
  RunOutcome outcome;
};

/// Fixed embedding with unknown misspecification level: no width term in the
/// elimination margin, a 2^-k threshold against the running favourite, and a
/// per-round recommendation stream with no certified stopping time.
inline UnknownMisspecResult unknown_misspec_eliminate(
    const ArmSet& arms, RewardOracle& oracle, const Eigen::MatrixXd& psi,
    double delta, double zeta, int round_budget) {
  if (round_budget < 1) throw Error("round budget must be >= 1");
  const int d = static_cast<int>(psi.cols());

  UnknownMisspecResult res;
  std::vector<int> survivors(arms.ids);
  int recommended = survivors.front();

  for (int k = 1; k <= round_budget; ++k) {
    const double t0 = detail::now_ms();
    const double delta_k = delta / (static_cast<double>(k) * k);
    const double threshold = std::pow(2.0, -k);

    TraceRound tr;
    tr.k = k;
    tr.d_k = d;
    tr.entering = static_cast<int>(survivors.size());

    Eigen::MatrixXd surv_psi(static_cast<Eigen::Index>(survivors.size()),
                             psi.cols());
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      surv_psi.row(static_cast<Eigen::Index>(i)) = psi.row(survivors[i]);
    }
    const DirectionSet dirs = difference_set(surv_psi);

    if (dirs.empty()) {
      recommended = survivors.front();
      res.recommendations.items.emplace_back(k, recommended);
      tr.n_k = min_rounding_support(d, zeta);
      tr.survivors = survivors;
      tr.cum_pulls = oracle.ledger().total;
      tr.wall_ms = detail::now_ms() - t0;
      res.outcome.trace.push_back(std::move(tr));
      continue;
    }

    const DesignSolution sol = solve_design(psi, dirs);
    tr.tau_k = sol.tau;
    const double s = static_cast<double>(survivors.size());
    const double log_term = std::log(s * s / delta_k);
    const double quota =
        std::ceil(std::pow(2.0, 2 * k) * 8.0 * (1.0 + zeta) * sol.tau *
                  log_term);
    const std::int64_t n_k =
        std::max(static_cast<std::int64_t>(quota),
                 min_rounding_support(d, zeta));
    tr.n_k = n_k;

    const AllocationPlan alloc =
        round_allocation(sol.weights, n_k, d, zeta, psi, dirs);
    const detail::PullStats stats =
        detail::pull_allocation(oracle, psi, alloc.counts);
    tr.pulled = stats.pulled;

    const Eigen::VectorXd theta =
        least_squares_from_information(stats.a, stats.b, 0.0);

    // Favourite by estimated value; eliminate against it with margin 2^-k.
    const Eigen::VectorXd v = surv_psi * theta;
    Eigen::Index best = 0;
    v.maxCoeff(&best);
    recommended = survivors[static_cast<std::size_t>(best)];
    res.recommendations.items.emplace_back(k, recommended);

    std::vector<int> kept;
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      if (v[best] - v[static_cast<Eigen::Index>(i)] < threshold) {
        kept.push_back(survivors[i]);
      }
    }
    survivors = std::move(kept);

    tr.survivors = survivors;
    tr.cum_pulls = oracle.ledger().total;
    tr.wall_ms = detail::now_ms() - t0;
    res.outcome.trace.push_back(std::move(tr));
  }

  res.outcome.recommended = recommended;
  res.outcome.total_pulls = oracle.ledger().total;
  return res;
}

/// Model-free successive elimination with Hoeffding widths.
inline RunOutcome action_eliminate(const ArmSet& arms, RewardOracle& oracle,
                                   double eps, double delta) {
  const int k_arms = arms.num_arms();
  if (k_arms < 2) throw Error("action elimination needs at least two arms");

  RunOutcome out;
  std::vector<int> survivors(arms.ids);
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(k_arms);
  std::int64_t per_arm = 0;

  for (std::int64_t t = 1;; ++t) {
    for (int id : survivors) sums[id] += oracle.pull(id);
    per_arm = t;

    const double u = std::sqrt(
        std::log(4.0 * k_arms * static_cast<double>(t) * t / delta) /
        (2.0 * static_cast<double>(t)));

    double best_mean = -std::numeric_limits<double>::infinity();
    for (int id : survivors) {
      best_mean = std::max(best_mean, sums[id] / static_cast<double>(t));
    }
    std::vector<int> kept;
    for (int id : survivors) {
      if (best_mean - sums[id] / static_cast<double>(t) < 2.0 * u) {
        kept.push_back(id);
      }
    }

    const bool changed = kept.size() != survivors.size();
    survivors = std::move(kept);
    const bool stop = 2.0 * u <= eps || survivors.size() <= 1;

    if (changed || stop) {  // trace change-points only; rounds are tiny
      TraceRound tr;
      tr.k = static_cast<int>(t);
      tr.d_k = 0;
      tr.n_k = static_cast<std::int64_t>(survivors.size());
      tr.pulled = 0;
      tr.entering = static_cast<int>(survivors.size());
      tr.survivors = survivors;
      tr.cum_pulls = oracle.ledger().total;
      out.trace.push_back(std::move(tr));
    }
    if (stop) break;
  }

  // Recommend the best empirical survivor.
  int rec = survivors.front();
  for (int id : survivors) {
    if (sums[id] > sums[rec]) rec = id;
  }
  out.recommended = rec;
  out.total_pulls = oracle.ledger().total;
  (void)per_arm;
  return out;
}

/// Instance-dependent complexity rho*_d(eps) (tilde variant divides by the
/// linear-component gap instead of the true gap). Small instances only.
inline double complexity_rho(const ArmSet& arms, const Eigen::VectorXd& means,
                             const EmbeddingPlan& plan, double eps, bool tilde,
                             const Eigen::VectorXd* theta_d = nullptr) {
  const int k = arms.num_arms();
  if (k > 30) throw TooLarge("complexity evaluator supports K <= 30");
  if (tilde && theta_d == nullptr) {
    throw Error("tilde mode needs the low-dimensional reward vector");
  }

  int star = 0;
  for (int i = 1; i < k; ++i) {
    if (means[i] > means[star]) star = i;
  }

  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < k; ++i) {
    if (i == star) continue;
    Eigen::VectorXd y = (plan.psi.row(star) - plan.psi.row(i)).transpose();
    const double gap = tilde ? y.dot(*theta_d) : means[star] - means[i];
    const double denom = std::max(gap, eps);
    y /= denom;
    if (y.squaredNorm() > 0.0) dirs.push_back(std::move(y));
  }
  if (dirs.empty()) return 0.0;

  DirectionSet ds;
  ds.directions.resize(static_cast<Eigen::Index>(dirs.size()), plan.psi.cols());
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    ds.directions.row(static_cast<Eigen::Index>(i)) = dirs[i].transpose();
  }
  return solve_design(plan.psi, ds, 20000, 1e-4).tau;
}

}  // namespace embandit

#endif  // EMBANDIT_ELIMINATION_HPP
