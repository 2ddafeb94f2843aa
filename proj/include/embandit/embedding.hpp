#ifndef EMBANDIT_EMBEDDING_HPP
#define EMBANDIT_EMBEDDING_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "embandit/arm_model.hpp"
#include "embandit/errors.hpp"

namespace embandit {

/// Feature map psi_d plus its misspecification bound gamma_tilde(d) and the
/// induced worst-case identified gap gamma(d).
struct EmbeddingPlan {
  Eigen::MatrixXd psi;  // K x d, row i = psi_d(x_i)
  int d = 0;
  double gamma_tilde = 0.0;
  double gamma = 0.0;
  double zeta = 0.1;            // the zeta gamma was computed at
  Eigen::MatrixXd right_basis;  // D x d, SVD plans only; theta_d = basis^T theta*
};

/// gamma(d) = (16 + 8 sqrt(4 (1+zeta) d)) * gamma_tilde, using the
/// 4(1+zeta)d stand-in for the transductive design value.
inline double gamma_of_d(double gamma_tilde, int d, double zeta) {
  return (16.0 + 8.0 * std::sqrt(4.0 * (1.0 + zeta) * static_cast<double>(d))) *
         gamma_tilde;
}

namespace detail {

// Sign-fix: largest-magnitude entry of each column made positive. The paired
// matrix (if any) is flipped in lockstep.
inline void fix_column_signs(Eigen::MatrixXd& m, Eigen::MatrixXd* paired = nullptr) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    Eigen::Index at = 0;
    m.col(c).cwiseAbs().maxCoeff(&at);
    if (m(at, c) < 0.0) {
      m.col(c) = -m.col(c);
      if (paired) paired->col(c) = -paired->col(c);
    }
  }
}

}  // namespace detail

/// SVD embedding for constrained linear bandits: psi_d(x_i) = (sigma_j u_ij),
/// gamma_tilde(d) = C * sum of discarded singular values.
inline EmbeddingPlan svd_embed(const ArmSet& arms, int d, double norm_bound_c,
                               double zeta = 0.1) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      arms.features, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() ? 1e-12 * sv[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) ++rank;
  }
  if (d < 1 || d > rank) {
    throw RankDeficit("d=" + std::to_string(d) + " exceeds rank " +
                      std::to_string(rank));
  }

  Eigen::MatrixXd u = svd.matrixU().leftCols(d);
  Eigen::MatrixXd v = svd.matrixV().leftCols(d);
  detail::fix_column_signs(u, &v);

  EmbeddingPlan plan;
  plan.d = d;
  plan.zeta = zeta;
  plan.psi = u * sv.head(d).asDiagonal();
  plan.right_basis = std::move(v);
  plan.gamma_tilde = norm_bound_c * sv.tail(sv.size() - d).sum();
  plan.gamma = gamma_of_d(plan.gamma_tilde, d, zeta);
  return plan;
}

/// Known Mercer spectrum: eigenvalue decay plus evaluable eigenfunctions.
struct SpectrumModel {
  enum class Kind { AnalyticPoly, AnalyticExp, Explicit };
  Kind kind = Kind::Explicit;
  double c_k = 1.0;
  double beta = 0.0;
  Eigen::VectorXd mu;  // explicit list, nonincreasing and nonnegative
  std::function<double(int, const Eigen::VectorXd&)> phi;  // phi_j(x), j >= 1
  double c_phi = 1.0;

  double mu_at(int j) const {  // j >= 1
    switch (kind) {
      case Kind::AnalyticPoly:
        return c_k * std::pow(static_cast<double>(j), -beta);
      case Kind::AnalyticExp:
        return c_k * std::exp(-beta * static_cast<double>(j));
      case Kind::Explicit:
        return j <= mu.size() ? mu[j - 1] : 0.0;
    }
    return 0.0;
  }

  // sqrt of the tail mass entering gamma_tilde(d) = c_phi * sqrt_tail(d).
  // Exponential decay: exact geometric tail. Polynomial decay: the integral
  // bound sqrt(C_k) d^(1-beta) / (beta-1), which is what the d_eff growth
  // rates are stated against. Explicit lists: direct suffix sum.
  double sqrt_tail(int d) const {
    switch (kind) {
      case Kind::AnalyticPoly:
        return std::sqrt(c_k) *
               std::pow(static_cast<double>(d), 1.0 - beta) / (beta - 1.0);
      case Kind::AnalyticExp:
        return std::sqrt(c_k * std::exp(-beta * static_cast<double>(d + 1)) /
                         (1.0 - std::exp(-beta)));
      case Kind::Explicit: {
        double tail = 0.0;
        for (Eigen::Index j = d; j < mu.size(); ++j) tail += mu[j];
        return std::sqrt(std::max(tail, 0.0));
      }
    }
    return 0.0;
  }

  void validate() const {
    if (kind == Kind::AnalyticPoly && !(beta > 1.5)) {
      throw Error("polynomial eigenvalue decay requires beta > 3/2");
    }
    if (kind == Kind::AnalyticExp && !(beta > 0.0)) {
      throw Error("exponential eigenvalue decay requires beta > 0");
    }
    if (kind == Kind::Explicit) {
      for (Eigen::Index j = 0; j < mu.size(); ++j) {
        if (mu[j] < 0.0) throw Error("explicit eigenvalues must be nonnegative");
        if (j > 0 && mu[j] > mu[j - 1] + 1e-15) {
          throw Error("explicit eigenvalues must be nonincreasing");
        }
      }
    }
  }
};

inline SpectrumModel analytic_exp_spectrum(double c_k, double beta) {
  SpectrumModel s;
  s.kind = SpectrumModel::Kind::AnalyticExp;
  s.c_k = c_k;
  s.beta = beta;
  s.validate();
  return s;
}

inline SpectrumModel analytic_poly_spectrum(double c_k, double beta) {
  SpectrumModel s;
  s.kind = SpectrumModel::Kind::AnalyticPoly;
  s.c_k = c_k;
  s.beta = beta;
  s.validate();
  return s;
}

inline SpectrumModel explicit_spectrum(Eigen::VectorXd mu) {
  SpectrumModel s;
  s.kind = SpectrumModel::Kind::Explicit;
  s.mu = std::move(mu);
  s.validate();
  return s;
}

/// Sine eigenfunction family phi_j(x) = sin((2j-1) pi x / 2) applied to the
/// first coordinate; sup |phi_j| = 1.
inline std::function<double(int, const Eigen::VectorXd&)> sine_eigenfunctions() {
  return [](int j, const Eigen::VectorXd& x) {
    return std::sin((2.0 * j - 1.0) * std::numbers::pi * x[0] / 2.0);
  };
}

/// Mercer feature map psi_d(x) = [sqrt(mu_1) phi_1(x), ...,
/// sqrt(mu_d) phi_d(x)], gamma_tilde = C_phi * sqrt(tail mass).
inline EmbeddingPlan kernel_mercer_embed(const ArmSet& arms,
                                         const SpectrumModel& spectrum, int d,
                                         double zeta = 0.1) {
  if (d < 1) throw Error("embedding dimension must be >= 1");
  if (!spectrum.phi) throw Error("spectrum has no eigenfunctions");
  spectrum.validate();

  const int k = arms.num_arms();
  EmbeddingPlan plan;
  plan.d = d;
  plan.zeta = zeta;
  plan.psi.resize(k, d);
  for (int i = 0; i < k; ++i) {
    const Eigen::VectorXd x = arms.features.row(i).transpose();
    for (int j = 1; j <= d; ++j) {
      plan.psi(i, j - 1) = std::sqrt(spectrum.mu_at(j)) * spectrum.phi(j, x);
    }
  }
  plan.gamma_tilde = spectrum.c_phi * spectrum.sqrt_tail(d);
  plan.gamma = gamma_of_d(plan.gamma_tilde, d, zeta);
  return plan;
}

struct GaussianKernel {
  double gamma_k = 1.0;  // K(x, x') = exp(-gamma_k |x - x'|^2)
};

namespace detail {

inline Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& x, double gamma_k) {
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd g = -2.0 * x * x.transpose();
  g.colwise() += sq;
  g.rowwise() += sq.transpose();
  return (-gamma_k * g.cwiseMax(0.0)).array().exp();
}

struct GramEigen {
  Eigen::MatrixXd u;       // columns sorted by descending eigenvalue
  Eigen::VectorXd values;  // descending, clipped at 0
};

inline GramEigen psd_eigen_desc(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (g + g.transpose()));
  const Eigen::Index n = g.rows();
  const double vmax = es.eigenvalues()[n - 1];
  const double vmin = es.eigenvalues()[0];
  if (vmin < -1e-8 * std::max(vmax, 0.0)) {
    throw NotPSD("gram matrix has eigenvalue " + std::to_string(vmin));
  }
  GramEigen out;
  out.u.resize(n, n);
  out.values.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = std::max(es.eigenvalues()[n - 1 - i], 0.0);
    out.u.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  detail::fix_column_signs(out.u);
  return out;
}

}  // namespace detail

/// Empirical kernel embedding from the eigendecomposition of the K x K gram
/// matrix; gamma_tilde = scale_c * sqrt(tail eigenvalue sum) under the
/// unit-RKHS-norm convention.
inline EmbeddingPlan empirical_kernel_embed(const ArmSet& arms,
                                            const GaussianKernel& kernel, int d,
                                            double scale_c = 1.0,
                                            double zeta = 0.1) {
  const int k = arms.num_arms();
  if (d < 1 || d > k) throw Error("empirical embedding needs 1 <= d <= K");
  const Eigen::MatrixXd gram =
      detail::gaussian_gram(arms.features, kernel.gamma_k);
  const detail::GramEigen eig = detail::psd_eigen_desc(gram);

  EmbeddingPlan plan;
  plan.d = d;
  plan.zeta = zeta;
  plan.psi = eig.u.leftCols(d) * eig.values.head(d).cwiseSqrt().asDiagonal();
  plan.gamma_tilde = scale_c * std::sqrt(eig.values.tail(k - d).sum());
  plan.gamma = gamma_of_d(plan.gamma_tilde, d, zeta);
  return plan;
}

/// Smallest d with gamma(d) <= eps. gamma need not be monotone (the tail
/// shrinks while the sqrt(d) factor grows), so the scan is exhaustive.
inline int effective_dimension(const std::function<double(int)>& gamma_fn,
                               double eps, int d_max) {
  if (!(eps > 0.0)) throw Error("effective_dimension needs eps > 0");
  for (int d = 1; d <= d_max; ++d) {
    if (gamma_fn(d) <= eps) return d;
  }
  throw NotReachable("gamma(d) > " + std::to_string(eps) + " for all d <= " +
                     std::to_string(d_max));
}

/// Lazily caches plans per dimension; gamma_at is cheap for scans.
struct EmbeddingProvider {
  std::function<EmbeddingPlan(int)> plan_at;
  std::function<double(int)> gamma_at;
  int d_max = 0;
};

inline EmbeddingProvider make_svd_provider(const ArmSet& arms, double norm_bound_c,
                                           double zeta, int d_max = 0) {
  auto arms_copy = std::make_shared<ArmSet>(arms);
  // One SVD up front; per-d gammas from singular-value suffix sums.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(arms.features);
  const Eigen::VectorXd sv = svd.singularValues();
  const double cutoff = sv.size() ? 1e-12 * sv[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) ++rank;
  }
  auto suffix = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(sv.size()) + 1, 0.0);
  for (Eigen::Index i = sv.size() - 1; i >= 0; --i) {
    (*suffix)[static_cast<std::size_t>(i)] =
        (*suffix)[static_cast<std::size_t>(i) + 1] + sv[i];
  }

  EmbeddingProvider p;
  const int default_max = std::min({arms.num_arms(), arms.dim(), 512});
  p.d_max = std::min(rank, d_max > 0 ? d_max : default_max);
  p.gamma_at = [suffix, norm_bound_c, zeta](int d) {
    const double gt =
        d < static_cast<int>(suffix->size())
            ? norm_bound_c * (*suffix)[static_cast<std::size_t>(d)]
            : 0.0;
    return gamma_of_d(gt, d, zeta);
  };
  p.plan_at = [arms_copy, norm_bound_c, zeta](int d) {
    return svd_embed(*arms_copy, d, norm_bound_c, zeta);
  };
  return p;
}

inline EmbeddingProvider make_empirical_kernel_provider(
    const ArmSet& arms, const GaussianKernel& kernel, double scale_c,
    double zeta, int d_max = 0) {
  const Eigen::MatrixXd gram =
      detail::gaussian_gram(arms.features, kernel.gamma_k);
  auto eig = std::make_shared<detail::GramEigen>(detail::psd_eigen_desc(gram));
  const int k = arms.num_arms();
  auto suffix = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(k) + 1, 0.0);
  for (int i = k - 1; i >= 0; --i) {
    (*suffix)[static_cast<std::size_t>(i)] =
        (*suffix)[static_cast<std::size_t>(i) + 1] + eig->values[i];
  }

  EmbeddingProvider p;
  const int default_max = std::min({arms.num_arms(), arms.dim(), 512});
  p.d_max = std::min(k, d_max > 0 ? d_max : default_max);
  p.gamma_at = [suffix, scale_c, zeta, k](int d) {
    const double gt =
        d <= k ? scale_c * std::sqrt((*suffix)[static_cast<std::size_t>(d)])
               : 0.0;
    return gamma_of_d(gt, d, zeta);
  };
  p.plan_at = [eig, scale_c, zeta, k](int d) {
    EmbeddingPlan plan;
    plan.d = d;
    plan.zeta = zeta;
    plan.psi =
        eig->u.leftCols(d) * eig->values.head(d).cwiseSqrt().asDiagonal();
    plan.gamma_tilde = scale_c * std::sqrt(eig->values.tail(k - d).sum());
    plan.gamma = gamma_of_d(plan.gamma_tilde, d, zeta);
    return plan;
  };
  return p;
}

inline EmbeddingProvider make_mercer_provider(const ArmSet& arms,
                                              SpectrumModel spectrum,
                                              double zeta, int d_max = 10000) {
  auto arms_copy = std::make_shared<ArmSet>(arms);
  auto spec = std::make_shared<SpectrumModel>(std::move(spectrum));
  EmbeddingProvider p;
  p.d_max = d_max;
  p.gamma_at = [spec, zeta](int d) {
    return gamma_of_d(spec->c_phi * spec->sqrt_tail(d), d, zeta);
  };
  p.plan_at = [arms_copy, spec, zeta](int d) {
    return kernel_mercer_embed(*arms_copy, *spec, d, zeta);
  };
  return p;
}

}  // namespace embandit

#endif  // EMBANDIT_EMBEDDING_HPP
