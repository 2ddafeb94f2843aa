#ifndef EMBANDIT_NEURAL_HPP
#define EMBANDIT_NEURAL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "embandit/arm_model.hpp"
#include "embandit/elimination.hpp"
#include "embandit/embedding.hpp"
#include "embandit/errors.hpp"
#include "embandit/optimal_design.hpp"
#include "embandit/rng.hpp"
#include "embandit/rounding.hpp"

namespace embandit {

/// Width-m depth-L ReLU network f(x) = sqrt(m) W_L relu(W_{L-1} ... relu(W_1 x)).
/// Initialized with duplicated blocks and an antisymmetric output layer so
/// that f(x; theta_0) = 0 for inputs whose halves mirror each other.
struct NetworkParams {
  std::vector<Eigen::MatrixXd> layers;  // W_1 (m x d), hidden (m x m), W_L (1 x m)
  int width = 0;
  int depth = 0;

  std::int64_t param_count() const {
    std::int64_t p = 0;
    for (const auto& w : layers) p += w.size();
    return p;
  }
};

inline NetworkParams init_params(int d, int m, int depth, std::uint64_t seed) {
  if (m < 2 || m % 2 != 0) throw OddWidth("width must be even and >= 2");
  if (d < 2 || d % 2 != 0) throw OddDim("input dimension must be even and >= 2");
  if (depth < 2) throw Error("depth must be >= 2");

  Rng rng(seed);
  const double hidden_sd = std::sqrt(4.0 / m);
  const double out_sd = std::sqrt(2.0 / m);

  auto block_duplicated = [&](int rows, int cols) {
    // [[W, 0], [0, W]] with W of half size.
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(rows, cols);
    const int hr = rows / 2, hc = cols / 2;
    Eigen::MatrixXd w(hr, hc);
    for (int i = 0; i < hr; ++i) {
      for (int j = 0; j < hc; ++j) w(i, j) = rng.normal(0.0, hidden_sd);
    }
    full.block(0, 0, hr, hc) = w;
    full.block(hr, hc, hr, hc) = w;
    return full;
  };

  NetworkParams theta;
  theta.width = m;
  theta.depth = depth;
  theta.layers.push_back(block_duplicated(m, d));
  for (int l = 2; l <= depth - 1; ++l) {
    theta.layers.push_back(block_duplicated(m, m));
  }
  Eigen::MatrixXd wl(1, m);
  for (int j = 0; j < m / 2; ++j) {
    const double v = rng.normal(0.0, out_sd);
    wl(0, j) = v;
    wl(0, j + m / 2) = -v;
  }
  theta.layers.push_back(std::move(wl));
  return theta;
}

inline double forward(const NetworkParams& theta, const Eigen::VectorXd& x) {
  Eigen::VectorXd h = x;
  for (int l = 0; l < theta.depth - 1; ++l) {
    h = (theta.layers[static_cast<std::size_t>(l)] * h).cwiseMax(0.0);
  }
  return std::sqrt(static_cast<double>(theta.width)) *
         (theta.layers.back() * h)(0);
}

/// Batched forward over rows of x.
inline Eigen::VectorXd forward_batch(const NetworkParams& theta,
                                     const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h = x;
  for (int l = 0; l < theta.depth - 1; ++l) {
    h = (h * theta.layers[static_cast<std::size_t>(l)].transpose()).cwiseMax(0.0);
  }
  return std::sqrt(static_cast<double>(theta.width)) *
         (h * theta.layers.back().transpose()).col(0);
}

/// Gradient of the scalar output w.r.t. all weights, kept in rank-one
/// factored form: dW_l = delta_l a_{l-1}^T and dW_L = sqrt(m) a_{L-1}^T.
struct ParamGradient {
  std::vector<Eigen::VectorXd> activ;   // a_0 = x, ..., a_{L-1}
  std::vector<Eigen::VectorXd> delta;   // delta_1 .. delta_{L-1}
  double out_scale = 0.0;               // sqrt(m)

  // <g, g'> without materializing the p-vector.
  double dot(const ParamGradient& o) const {
    double total = 0.0;
    for (std::size_t l = 0; l < delta.size(); ++l) {
      total += delta[l].dot(o.delta[l]) * activ[l].dot(o.activ[l]);
    }
    total += out_scale * o.out_scale * activ.back().dot(o.activ.back());
    return total;
  }

  // Flat p-vector in [vec(W_1); ...; vec(W_L)] order (column-major blocks).
  Eigen::VectorXd flatten() const {
    std::vector<Eigen::MatrixXd> mats;
    for (std::size_t l = 0; l < delta.size(); ++l) {
      mats.push_back(delta[l] * activ[l].transpose());
    }
    mats.push_back(out_scale * activ.back().transpose());
    std::int64_t p = 0;
    for (const auto& m : mats) p += m.size();
    Eigen::VectorXd flat(p);
    std::int64_t at = 0;
    for (const auto& m : mats) {
      flat.segment(at, m.size()) =
          Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
      at += m.size();
    }
    return flat;
  }
};

inline ParamGradient grad_param(const NetworkParams& theta,
                                const Eigen::VectorXd& x) {
  const int depth = theta.depth;
  ParamGradient g;
  g.out_scale = std::sqrt(static_cast<double>(theta.width));

  std::vector<Eigen::VectorXd> pre(static_cast<std::size_t>(depth - 1));
  g.activ.resize(static_cast<std::size_t>(depth));
  g.activ[0] = x;
  for (int l = 0; l < depth - 1; ++l) {
    pre[static_cast<std::size_t>(l)] =
        theta.layers[static_cast<std::size_t>(l)] * g.activ[static_cast<std::size_t>(l)];
    g.activ[static_cast<std::size_t>(l) + 1] =
        pre[static_cast<std::size_t>(l)].cwiseMax(0.0);
  }

  g.delta.resize(static_cast<std::size_t>(depth - 1));
  // Subgradient 0 at kinks: mask strictly positive preactivations.
  auto mask = [](const Eigen::VectorXd& z) {
    return (z.array() > 0.0).cast<double>().matrix().eval();
  };
  Eigen::VectorXd d = g.out_scale * theta.layers.back().transpose();
  d = d.cwiseProduct(mask(pre[static_cast<std::size_t>(depth - 2)]));
  g.delta[static_cast<std::size_t>(depth - 2)] = d;
  for (int l = depth - 3; l >= 0; --l) {
    d = theta.layers[static_cast<std::size_t>(l) + 1].transpose() * d;
    d = d.cwiseProduct(mask(pre[static_cast<std::size_t>(l)]));
    g.delta[static_cast<std::size_t>(l)] = d;
  }
  return g;
}

struct TrainOptions {
  double stall_rel_tol = 0.0;  // > 0 enables early stopping
  int stall_window = 25;
};

/// J steps of full-batch gradient descent on
/// L(theta) = sum_j (f(x_j) - y_j)^2 / 2 + m alpha |theta - theta_0|^2 / 2.
/// Duplicate inputs are merged into weighted form; the trajectory (when
/// requested) holds the exact loss at every visited iterate.
inline NetworkParams train_gradient_descent(
    const NetworkParams& theta0,
    const std::vector<std::pair<Eigen::VectorXd, double>>& data, double alpha,
    double eta, int steps, std::vector<double>* loss_trajectory = nullptr,
    const TrainOptions& opts = {}) {
  if (steps < 1) throw Error("gradient descent needs at least one step");
  if (!(eta >= 0.0)) throw Error("step size must be nonnegative");
  if (data.empty()) throw Error("gradient descent needs data");

  const int depth = theta0.depth;
  const double m = static_cast<double>(theta0.width);

  // Merge repeated inputs: sum (f - y)^2 over duplicates equals
  // c f^2 - 2 s f + q with c = count, s = sum y, q = sum y^2.
  struct VecLess {
    bool operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
      for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
      }
      return false;
    }
  };
  std::map<Eigen::VectorXd, std::array<double, 3>, VecLess> merged;
  for (const auto& [x, y] : data) {
    auto& e = merged[x];
    e[0] += 1.0;
    e[1] += y;
    e[2] += y * y;
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(merged.size());
  Eigen::MatrixXd xs(rows, data.front().first.size());
  Eigen::VectorXd cnt(rows), ysum(rows);
  double ysq = 0.0;
  {
    Eigen::Index r = 0;
    for (const auto& [x, e] : merged) {
      xs.row(r) = x.transpose();
      cnt[r] = e[0];
      ysum[r] = e[1];
      ysq += e[2];
      ++r;
    }
  }

  NetworkParams theta = theta0;
  std::vector<Eigen::MatrixXd> acts(static_cast<std::size_t>(depth));
  std::vector<Eigen::MatrixXd> masks(static_cast<std::size_t>(depth - 1));

  auto loss_and_forward = [&]() {
    acts[0] = xs;
    for (int l = 0; l < depth - 1; ++l) {
      const Eigen::MatrixXd z =
          acts[static_cast<std::size_t>(l)] *
          theta.layers[static_cast<std::size_t>(l)].transpose();
      masks[static_cast<std::size_t>(l)] =
          (z.array() > 0.0).cast<double>().matrix();
      acts[static_cast<std::size_t>(l) + 1] = z.cwiseMax(0.0);
    }
    const Eigen::VectorXd f =
        std::sqrt(m) * (acts[static_cast<std::size_t>(depth - 1)] *
                        theta.layers.back().transpose())
                           .col(0);
    double fit = 0.5 * (cnt.array() * f.array().square()).sum() -
                 (ysum.array() * f.array()).sum() + 0.5 * ysq;
    double reg = 0.0;
    for (std::size_t l = 0; l < theta.layers.size(); ++l) {
      reg += (theta.layers[l] - theta0.layers[l]).squaredNorm();
    }
    return std::make_pair(fit + 0.5 * m * alpha * reg, f);
  };

  auto [loss, f] = loss_and_forward();
  if (loss_trajectory) loss_trajectory->push_back(loss);
  const double initial = loss;
  double window_best = loss;
  int since_best = 0;

  for (int j = 0; j < steps; ++j) {
    // dL/df_a = c_a f_a - s_a.
    const Eigen::VectorXd r = cnt.cwiseProduct(f) - ysum;

    std::vector<Eigen::MatrixXd> grads(theta.layers.size());
    Eigen::MatrixXd d =
        (std::sqrt(m) * r) * theta.layers.back();  // rows x m
    d = d.cwiseProduct(masks[static_cast<std::size_t>(depth - 2)]);
    grads.back() = std::sqrt(m) *
                   (r.transpose() * acts[static_cast<std::size_t>(depth - 1)]);
    for (int l = depth - 2; l >= 0; --l) {
      grads[static_cast<std::size_t>(l)] =
          d.transpose() * acts[static_cast<std::size_t>(l)];
      if (l > 0) {
        d = (d * theta.layers[static_cast<std::size_t>(l)])
                .cwiseProduct(masks[static_cast<std::size_t>(l) - 1]);
      }
    }
    for (std::size_t l = 0; l < theta.layers.size(); ++l) {
      grads[l] += m * alpha * (theta.layers[l] - theta0.layers[l]);
      theta.layers[l] -= eta * grads[l];
    }

    std::tie(loss, f) = loss_and_forward();
    if (loss_trajectory) loss_trajectory->push_back(loss);
    if (!std::isfinite(loss) || loss > 1e6 * initial + 1e-12) {
      throw Diverged("loss " + std::to_string(loss) + " from initial " +
                     std::to_string(initial) + "; reduce eta");
    }
    if (opts.stall_rel_tol > 0.0) {
      if (loss < window_best * (1.0 - opts.stall_rel_tol)) {
        window_best = loss;
        since_best = 0;
      } else if (++since_best >= opts.stall_window) {
        break;
      }
    }
  }
  return theta;
}

/// NTK gram over unit-norm arms via the arc-cosine closed forms. H follows
/// the halved combination (Htilde + Sigma)/2; the raw gradient gram
/// <g, g'>/m concentrates on gradient_limit() = 2H - Sigma instead.
struct NtkGram {
  Eigen::MatrixXd h;            // (Htilde^(L) + Sigma^(L)) / 2
  Eigen::MatrixXd sigma_final;  // Sigma^(L)
  Eigen::VectorXd eigenvalues;  // of h, descending, clipped at 0
  double lambda_0 = 0.0;        // smallest eigenvalue of h before clipping

  Eigen::MatrixXd gradient_limit() const { return 2.0 * h - sigma_final; }
};

inline NtkGram ntk_gram(const Eigen::MatrixXd& arms, int depth) {
  const Eigen::Index k = arms.rows();
  if (depth < 2) throw Error("depth must be >= 2");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(arms.row(i).norm() - 1.0) > 1e-8) {
      throw NotUnitNorm("arm " + std::to_string(i) + " has norm " +
                        std::to_string(arms.row(i).norm()));
    }
  }

  Eigen::MatrixXd sigma = arms * arms.transpose();
  Eigen::MatrixXd htilde = sigma;
  for (int l = 1; l < depth; ++l) {
    Eigen::MatrixXd sigma_next(k, k);
    Eigen::MatrixXd e11(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double sii = sigma(i, i), sjj = sigma(j, j);
        const double denom = std::sqrt(std::max(sii * sjj, 0.0));
        const double c =
            denom > 0.0 ? std::clamp(sigma(i, j) / denom, -1.0, 1.0) : 0.0;
        const double th = std::acos(c);
        const double s =
            denom * (std::sin(th) + (std::numbers::pi - th) * c) /
            std::numbers::pi;
        const double e = (std::numbers::pi - th) / std::numbers::pi;
        sigma_next(i, j) = sigma_next(j, i) = s;
        e11(i, j) = e11(j, i) = e;
      }
    }
    htilde = htilde.cwiseProduct(e11) + sigma_next;
    sigma = std::move(sigma_next);
  }

  NtkGram gram;
  gram.h = 0.5 * (htilde + sigma);
  gram.h = 0.5 * (gram.h + gram.h.transpose()).eval();
  gram.sigma_final = std::move(sigma);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram.h);
  const Eigen::VectorXd& ev = es.eigenvalues();
  gram.lambda_0 = ev[0];
  const double vmax = std::max(ev[k - 1], 0.0);
  if (ev[0] < -1e-8 * vmax) {
    throw NotPSD("ntk gram has eigenvalue " + std::to_string(ev[0]));
  }
  gram.eigenvalues.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    gram.eigenvalues[i] = std::max(ev[k - 1 - i], 0.0);
  }
  return gram;
}

/// min{d >= 1 : sum_{i>d} lambda_i(H) <= eps}; always defined since the tail
/// at d = K is empty.
inline int neural_effective_dimension(const NtkGram& gram, double eps) {
  if (!(eps > 0.0)) throw Error("neural effective dimension needs eps > 0");
  const Eigen::Index k = gram.eigenvalues.size();
  double tail = gram.eigenvalues.sum();
  for (int d = 1; d <= k; ++d) {
    tail -= gram.eigenvalues[d - 1];
    if (tail <= eps) return d;
  }
  return static_cast<int>(k);
}

struct NeuralConfig {
  double alpha = 0.01;       // ridge
  double eps_bar = 0.01;     // gradient-spectrum truncation tolerance
  double alloc_scale = 0.0;  // A; 0 = set to 2 * d_1 at round one
  double eta = 1e-4;
  int max_gd_steps = 6000;
  double rkhs_bound = 0.0;   // S
  double zeta = 0.1;
  double delta = 0.05;
  double eps = 0.1;
  bool theory_schedule = false;
  TrainOptions train = {1e-7, 25};
};

/// Parameter schedule driven by the gram spectrum; width requirements are
/// far beyond desk scale, so runs using it carry a note in the outcome.
inline NeuralConfig theory_neural_config(const NtkGram& gram, int k_arms,
                                         int depth, double rkhs_bound,
                                         double zeta, double delta,
                                         double eps) {
  NeuralConfig cfg;
  cfg.zeta = zeta;
  cfg.delta = delta;
  cfg.eps = eps;
  cfg.rkhs_bound = rkhs_bound;
  cfg.theory_schedule = true;
  const double kk = static_cast<double>(k_arms);
  cfg.alpha = std::min(1.0, std::log(kk * kk) / rkhs_bound);
  const int n = std::max(1, static_cast<int>(std::ceil(std::log(1.0 / eps))));
  const double delta_n = delta / (8.0 * n * n);
  const double r_full = static_cast<double>(
      min_rounding_support(k_arms, zeta));
  const double lg = std::log(kk * kk / delta_n);
  const double e2 = std::min(
      {cfg.alpha * cfg.alpha / (r_full * r_full * depth),
       eps * eps / ((1.0 + zeta) * kk * rkhs_bound),
       std::pow(eps, 7) * std::pow(cfg.alpha, 3) /
           (std::pow(1.0 + zeta, 3) * kk * kk * kk * lg * lg * lg * depth *
            depth)});
  cfg.eps_bar = std::sqrt(e2);
  cfg.alloc_scale =
      static_cast<double>(neural_effective_dimension(gram, e2 / kk));
  return cfg;
}

namespace detail {

// Empirical gradient gram at the current parameters: M_ij = <g_i, g_j>/m.
inline Eigen::MatrixXd gradient_gram(const NetworkParams& theta,
                                     const Eigen::MatrixXd& arms) {
  const Eigen::Index k = arms.rows();
  std::vector<ParamGradient> grads;
  grads.reserve(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    grads.push_back(grad_param(theta, arms.row(i).transpose()));
  }
  Eigen::MatrixXd m(k, k);
  const double width = static_cast<double>(theta.width);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      m(i, j) = m(j, i) =
          grads[static_cast<std::size_t>(i)].dot(
              grads[static_cast<std::size_t>(j)]) /
          width;
    }
  }
  return m;
}

struct GradientEmbedding {
  Eigen::MatrixXd psi;  // K x d_k
  int d_k = 0;
};

// SVD of the gradient feature matrix via its K x K gram: singular values
// e_i = sqrt(lambda_i(G G^T)); psi(x_i) = (e_1 u_i1, ..., e_d u_id) with
// d minimal such that the discarded singular values sum to <= eps_bar.
inline GradientEmbedding truncate_gradient_features(const Eigen::MatrixXd& gram,
                                                    double eps_bar) {
  const Eigen::Index k = gram.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (gram + gram.transpose()));
  Eigen::VectorXd e(k);
  Eigen::MatrixXd u(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    e[i] = std::sqrt(std::max(es.eigenvalues()[k - 1 - i], 0.0));
    u.col(i) = es.eigenvectors().col(k - 1 - i);
  }
  embandit::detail::fix_column_signs(u);

  double tail = e.sum();
  int d = static_cast<int>(k);
  for (int c = 1; c <= k; ++c) {
    tail -= e[c - 1];
    if (tail <= eps_bar) {
      d = c;
      break;
    }
  }
  GradientEmbedding ge;
  ge.d_k = d;
  ge.psi = u.leftCols(d) * e.head(d).asDiagonal();
  return ge;
}

}  // namespace detail

/// Neural arm elimination: gradient-feature truncation, transductive design
/// in the truncated space, retraining from theta_0 each round, elimination
/// by network value gaps with threshold 2^-k/8 + 3 eps/8.
inline RunOutcome neural_eliminate(const ArmSet& arms, RewardOracle& oracle,
                                   const NeuralConfig& config, int m, int depth,
                                   std::uint64_t seed) {
  const int k_arms = arms.num_arms();
  const int dim = arms.dim();
  for (int i = 0; i < k_arms; ++i) {
    if (std::abs(arms.features.row(i).norm() - 1.0) > 1e-8) {
      throw NotUnitNorm("arm " + std::to_string(i) + " is not unit norm");
    }
  }

  NeuralConfig cfg = config;
  RunOutcome out;
  if (cfg.theory_schedule) {
    out.notes.push_back(
        "theory schedule requested: width requirement not met at desk scale");
  }

  const NetworkParams theta0 = init_params(dim, m, depth, seed);
  NetworkParams theta = theta0;
  std::vector<int> survivors(arms.ids);
  const int rounds =
      std::max(1, static_cast<int>(std::ceil(std::log(1.0 / cfg.eps))));

  for (int k = 1; k <= rounds; ++k) {
    const double t0 = detail::now_ms();
    const double delta_k = cfg.delta / (8.0 * k * k);

    const Eigen::MatrixXd gram = detail::gradient_gram(theta, arms.features);
    const detail::GradientEmbedding ge =
        detail::truncate_gradient_features(gram, cfg.eps_bar);
    if (cfg.alloc_scale <= 0.0) cfg.alloc_scale = 2.0 * ge.d_k;

    TraceRound tr;
    tr.k = k;
    tr.d_k = ge.d_k;
    tr.entering = static_cast<int>(survivors.size());

    Eigen::MatrixXd surv_psi(static_cast<Eigen::Index>(survivors.size()),
                             ge.psi.cols());
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      surv_psi.row(static_cast<Eigen::Index>(i)) = ge.psi.row(survivors[i]);
    }
    const DirectionSet dirs = difference_set(surv_psi);

    if (dirs.empty()) {
      tr.n_k = min_rounding_support(ge.d_k, cfg.zeta);
      tr.survivors = survivors;
      tr.cum_pulls = oracle.ledger().total;
      tr.wall_ms = detail::now_ms() - t0;
      out.trace.push_back(std::move(tr));
      continue;
    }

    const DesignSolution sol = solve_design(ge.psi, dirs);
    tr.tau_k = sol.tau;

    const double kk = static_cast<double>(k_arms);
    const double quota =
        std::ceil(std::pow(2.0, 2 * k) * cfg.alloc_scale * (1.0 + cfg.zeta) *
                  std::log(kk * kk / delta_k));
    const std::int64_t n_k =
        std::max(static_cast<std::int64_t>(quota),
                 min_rounding_support(ge.d_k, cfg.zeta));
    tr.n_k = n_k;

    const AllocationPlan alloc =
        round_allocation(sol.weights, n_k, ge.d_k, cfg.zeta, ge.psi, dirs);

    std::vector<std::pair<Eigen::VectorXd, double>> data;
    data.reserve(static_cast<std::size_t>(n_k));
    for (Eigen::Index i = 0; i < alloc.counts.size(); ++i) {
      for (int c = 0; c < alloc.counts[i]; ++c) {
        data.emplace_back(arms.features.row(i).transpose(),
                          oracle.pull(static_cast<int>(i)));
      }
    }
    tr.pulled = static_cast<std::int64_t>(data.size());

    // Retrain from theta_0; halve the step on divergence at desk scale.
    double eta_k = cfg.eta;
    int steps_k = cfg.max_gd_steps;
    if (cfg.theory_schedule) {
      eta_k = 1.0 / (m * cfg.alpha +
                     static_cast<double>(n_k) * m * depth);
      const double target = cfg.eps * cfg.eps * cfg.alpha /
                            (static_cast<double>(n_k) * depth * 64.0);
      steps_k = static_cast<int>(std::clamp(
          std::ceil(-std::log(std::max(target, 1e-300)) /
                    (eta_k * m * cfg.alpha)),
          1.0, 2.0e5));
    }
    for (int attempt = 0;; ++attempt) {
      try {
        theta = train_gradient_descent(theta0, data, cfg.alpha, eta_k, steps_k,
                                       nullptr, cfg.train);
        if (attempt > 0) {
          out.notes.push_back("round " + std::to_string(k) +
                              ": step size reduced to " +
                              std::to_string(eta_k));
        }
        break;
      } catch (const Diverged&) {
        if (attempt >= 12) throw;
        eta_k *= 0.5;
      }
    }

    // Eliminate by value gaps among survivors.
    const Eigen::VectorXd f = forward_batch(theta, arms.features);
    double best = -std::numeric_limits<double>::infinity();
    for (int id : survivors) best = std::max(best, f[id]);
    const double threshold = std::pow(2.0, -k) / 8.0 + 3.0 * cfg.eps / 8.0;
    std::vector<int> kept;
    for (int id : survivors) {
      if (best - f[id] < threshold) kept.push_back(id);
    }
    survivors = std::move(kept);

    // A_k = alpha I + sum psi psi^T over this round's allocation.
    Eigen::MatrixXd a_k =
        cfg.alpha * Eigen::MatrixXd::Identity(ge.d_k, ge.d_k);
    for (Eigen::Index i = 0; i < alloc.counts.size(); ++i) {
      if (alloc.counts[i] > 0) {
        a_k.noalias() += static_cast<double>(alloc.counts[i]) *
                         ge.psi.row(i).transpose() * ge.psi.row(i);
      }
    }
    tr.info_matrix = std::move(a_k);
    tr.survivors = survivors;
    tr.cum_pulls = oracle.ledger().total;
    tr.wall_ms = detail::now_ms() - t0;
    out.trace.push_back(std::move(tr));
  }

  out.recommended = survivors.empty() ? -1 : survivors.front();
  out.total_pulls = oracle.ledger().total;
  return out;
}

/// Maps raw features into the admissible arm format: coordinates duplicated
/// into mirrored halves and scaled to unit norm.
inline ArmSet mirror_and_normalize(const ArmSet& arms) {
  ArmSet out;
  out.ids = arms.ids;
  const int d = arms.dim();
  out.features.resize(arms.num_arms(), 2 * d);
  for (int i = 0; i < arms.num_arms(); ++i) {
    const double norm = arms.features.row(i).norm();
    if (norm <= 0.0) {
      throw NotUnitNorm("arm " + std::to_string(i) +
                        " has zero feature vector");
    }
    const Eigen::RowVectorXd half =
        arms.features.row(i) / (norm * std::sqrt(2.0));
    out.features.row(i).head(d) = half;
    out.features.row(i).tail(d) = half;
  }
  return out;
}

}  // namespace embandit

#endif  // EMBANDIT_NEURAL_HPP
