#ifndef EMBANDIT_ARM_MODEL_HPP
#define EMBANDIT_ARM_MODEL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "embandit/errors.hpp"
#include "embandit/rng.hpp"

namespace embandit {

/// Arm feature matrix: one row per arm, D columns.
struct ArmSet {
  Eigen::MatrixXd features;  // K x D
  std::vector<int> ids;      // unique, index-stable

  int num_arms() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
};

enum class NoiseKind { Gaussian, Bernoulli };

struct RewardModel {
  Eigen::VectorXd means;  // in [-1,1]; in [0,1] for bernoulli
  NoiseKind noise = NoiseKind::Gaussian;

  // Ties broken by lowest index.
  int best_arm() const {
    int best = 0;
    for (int i = 1; i < means.size(); ++i) {
      if (means[i] > means[best]) best = i;
    }
    return best;
  }

  double gap(int arm) const { return means[best_arm()] - means[arm]; }
};

struct PullLedger {
  std::vector<std::int64_t> per_arm;
  std::int64_t total = 0;
  std::int64_t cap = 10'000'000;

  explicit PullLedger(int num_arms, std::int64_t cap_ = 10'000'000)
      : per_arm(static_cast<std::size_t>(num_arms), 0), cap(cap_) {}
};

// One oracle instance is owned by exactly one trial. Each observation is a
// pure function of (seed, total-so-far), so replaying a pull schedule
// reproduces the exact reward stream.
class RewardOracle {
 public:
  RewardOracle(ArmSet arms, RewardModel model, std::uint64_t seed,
               std::int64_t cap = 10'000'000)
      : arms_(std::move(arms)),
        model_(std::move(model)),
        seed_(seed),
        ledger_(arms_.num_arms(), cap) {}

  double pull(int arm) {
    if (ledger_.total >= ledger_.cap) {
      throw CapExceeded("pull cap reached at " + std::to_string(ledger_.cap));
    }
    const std::uint64_t counter = static_cast<std::uint64_t>(ledger_.total);
    ledger_.per_arm[static_cast<std::size_t>(arm)] += 1;
    ledger_.total += 1;
    const double mean = model_.means[arm];
    if (model_.noise == NoiseKind::Gaussian) {
      return mean + counter_normal(seed_, counter);
    }
    return counter_uniform(seed_, counter) < mean ? 1.0 : 0.0;
  }

  const ArmSet& arms() const { return arms_; }
  const RewardModel& model() const { return model_; }
  const PullLedger& ledger() const { return ledger_; }
  std::int64_t remaining() const { return ledger_.cap - ledger_.total; }

 private:
  ArmSet arms_;
  RewardModel model_;
  std::uint64_t seed_;
  PullLedger ledger_;
};

namespace detail {

inline std::vector<int> iota_ids(int k) {
  std::vector<int> ids(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) ids[static_cast<std::size_t>(i)] = i;
  return ids;
}

inline int matrix_rank(const Eigen::MatrixXd& m) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-12);
  return static_cast<int>(qr.rank());
}

inline Eigen::VectorXd random_unit(Rng& rng, int d) {
  Eigen::VectorXd v(d);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < d; ++i) v[i] = rng.normal();
    norm2 = v.squaredNorm();
  } while (norm2 == 0.0);
  return v / std::sqrt(norm2);
}

// Two principal arms plus perturbed clones, span(X) = R^D enforced by
// resampling perturbation coordinates (Appendix-F style construction).
inline std::pair<ArmSet, RewardModel> two_cluster_instance(int k, int d,
                                                           std::uint64_t seed,
                                                           bool linear) {
  if (k < 4 || k % 2 != 0) {
    throw DimensionTooSmall("arm count must be even and >= 4");
  }
  if (d < 2) throw DimensionTooSmall("dimension must be >= 2");
  if (k < d) {
    throw DimensionTooSmall("cannot span R^" + std::to_string(d) + " with " +
                            std::to_string(k) + " arms");
  }

  Rng rng(seed);
  const Eigen::VectorXd u = random_unit(rng, d);
  Eigen::VectorXd v = random_unit(rng, d);
  v -= v.dot(u) * u;
  while (v.norm() < 1e-9) {
    v = random_unit(rng, d);
    v -= v.dot(u) * u;
  }
  v.normalize();

  Eigen::VectorXd x1, x2, theta;
  if (linear) {
    // x1 = theta*, <theta*, x1> = 0.8; x2 in span{theta*, v} with projection
    // exactly 0.4 and the same norm as x1.
    theta = std::sqrt(0.8) * u;
    x1 = theta;
    x2 = 0.5 * theta + std::sqrt(0.8 - 0.2) * v;
  } else {
    // Rewards are 2-norms: h(x1) = 0.8, h(x2) = 0.4.
    x1 = 0.8 * u;
    x2 = 0.4 * v;
  }

  Eigen::MatrixXd x(k, d);
  x.row(0) = x1.transpose();
  x.row(1) = x2.transpose();
  const int half = k / 2;
  std::vector<int> coord(static_cast<std::size_t>(k), 0);
  std::vector<double> eta(static_cast<std::size_t>(k), 0.0);
  for (int i = 2; i < k; ++i) {
    coord[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(
        static_cast<std::uint64_t>(d)));
    eta[static_cast<std::size_t>(i)] = rng.normal(0.0, 1e-5);
  }

  auto assemble = [&]() {
    for (int i = 2; i < k; ++i) {
      const Eigen::VectorXd& base = (i <= half) ? x1 : x2;
      Eigen::VectorXd row = base;
      row[coord[static_cast<std::size_t>(i)]] +=
          eta[static_cast<std::size_t>(i)];
      x.row(i) = row.transpose();
    }
  };
  assemble();

  // Resample perturbation coordinates until full rank, preferring clones
  // whose coordinate duplicates another one.
  int attempts = 0;
  const int max_attempts = 100 * d;
  while (matrix_rank(x) < d) {
    if (++attempts > max_attempts) {
      throw DimensionTooSmall("could not span R^" + std::to_string(d) +
                              " after " + std::to_string(max_attempts) +
                              " resampling attempts");
    }
    std::vector<int> occupancy(static_cast<std::size_t>(d), 0);
    for (int i = 2; i < k; ++i) {
      occupancy[static_cast<std::size_t>(coord[static_cast<std::size_t>(i)])]++;
    }
    std::vector<int> candidates;
    for (int i = 2; i < k; ++i) {
      if (occupancy[static_cast<std::size_t>(coord[static_cast<std::size_t>(i)])] > 1) {
        candidates.push_back(i);
      }
    }
    const int i =
        candidates.empty()
            ? 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 2)))
            : candidates[rng.below(candidates.size())];
    coord[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(
        static_cast<std::uint64_t>(d)));
    eta[static_cast<std::size_t>(i)] = rng.normal(0.0, 1e-5);
    assemble();
  }

  // Clones of the best base arm must not beat it: orient each perturbation
  // toward non-increasing reward (sign flips preserve the span).
  for (int i = 2; i <= half; ++i) {
    const int c = coord[static_cast<std::size_t>(i)];
    double& e = eta[static_cast<std::size_t>(i)];
    if (linear) {
      if (e * theta[c] > 0.0) e = -e;
    } else {
      for (int tries = 0; tries < 1000; ++tries) {
        if (2.0 * e * x1[c] + e * e > 0.0) e = -e;
        if (2.0 * e * x1[c] + e * e <= 0.0) break;
        e = rng.normal(0.0, 1e-5);  // quadratic term dominated; rare
      }
    }
  }
  assemble();

  RewardModel model;
  model.noise = NoiseKind::Bernoulli;
  model.means.resize(k);
  for (int i = 0; i < k; ++i) {
    model.means[i] = linear ? x.row(i).dot(theta) : x.row(i).norm();
  }

  ArmSet arms{std::move(x), iota_ids(k)};
  return {std::move(arms), std::move(model)};
}

}  // namespace detail

inline std::pair<ArmSet, RewardModel> make_synthetic_linear(
    int k, int d, std::uint64_t seed) {
  return detail::two_cluster_instance(k, d, seed, /*linear=*/true);
}

inline std::pair<ArmSet, RewardModel> make_synthetic_nonlinear(
    int k, int d, std::uint64_t seed) {
  return detail::two_cluster_instance(k, d, seed, /*linear=*/false);
}

/// High-dimensional instance where full-dimension exploration pays Omega(D):
/// X = {x1} u {x1 + eta e_i} u {x2 + eta e_i}, x1 = -1/sqrt(D), theta* = x1.
struct HardInstanceInfo {
  double eta = 0.0;
  bool unit_x1 = false;          // ||x1|| = 1
  bool inner_ok = false;         // <x1,x2> = 1 - 2 eps
  bool coords_negative = false;  // <x1,e_i> < 0
  bool eta_small = false;        // 8*sqrt(2)*(2+sqrt(5D))*D*eta <= eps
};

inline std::pair<ArmSet, RewardModel> make_hard_instance(
    int d, double eps, std::uint64_t /*seed*/, HardInstanceInfo* info = nullptr) {
  if (d < 2) throw DimensionTooSmall("dimension must be >= 2");
  if (!(eps > 0.0 && eps < 0.25)) {
    throw DimensionTooSmall("eps must lie in (0, 1/4)");
  }
  const double dd = static_cast<double>(d);
  const double eta =
      eps / (8.0 * std::sqrt(2.0) * (2.0 + std::sqrt(5.0 * dd)) * dd);

  const Eigen::VectorXd x1 =
      Eigen::VectorXd::Constant(d, -1.0 / std::sqrt(dd));
  const Eigen::VectorXd x2 = (1.0 - 2.0 * eps) * x1;

  const int k = 2 * d + 1;
  Eigen::MatrixXd x(k, d);
  x.row(0) = x1.transpose();
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd row = x1;
    row[i] += eta;
    x.row(1 + i) = row.transpose();
  }
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd row = x2;
    row[i] += eta;
    x.row(1 + d + i) = row.transpose();
  }

  RewardModel model;
  model.noise = NoiseKind::Gaussian;
  model.means = x * x1;  // theta* = x1

  if (info) {
    info->eta = eta;
    info->unit_x1 = std::abs(x1.norm() - 1.0) < 1e-12;
    info->inner_ok = std::abs(x1.dot(x2) - (1.0 - 2.0 * eps)) < 1e-12;
    info->coords_negative = (x1.array() < 0.0).all();
    info->eta_small =
        8.0 * std::sqrt(2.0) * (2.0 + std::sqrt(5.0 * dd)) * dd * eta <=
        eps + 1e-15;
  }

  ArmSet arms{std::move(x), detail::iota_ids(k)};
  return {std::move(arms), std::move(model)};
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Loads an arm set from CSV: header row with feature columns f0..f{D-1}
/// and an optional "mean" column. Rows containing non-finite values are
/// dropped; unparseable cells raise ParseError(line, column).
inline std::pair<ArmSet, std::optional<RewardModel>> load_arms_csv(
    const std::string& path,
    const std::optional<std::string>& reward_column = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0, 0);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file", 1, 1);
  const auto header = detail::split_csv_line(line);

  std::vector<int> feature_cols;          // column index per feature j
  int mean_col = -1;
  const std::string mean_name = reward_column.value_or("mean");
  std::vector<int> feature_index(header.size(), -1);
  int d = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = detail::trim(header[c]);
    if (name == mean_name) {
      mean_col = static_cast<int>(c);
      continue;
    }
    if (name.size() >= 2 && name[0] == 'f') {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
      }
      if (digits) {
        const int j = std::stoi(name.substr(1));
        if (j >= static_cast<int>(feature_index.size()))
          feature_index.resize(static_cast<std::size_t>(j) + 1, -1);
        feature_index[static_cast<std::size_t>(j)] = static_cast<int>(c);
        d = std::max(d, j + 1);
        continue;
      }
    }
    throw ParseError("unexpected column '" + name + "'", 1,
                     static_cast<long>(c + 1));
  }
  for (int j = 0; j < d; ++j) {
    if (feature_index[static_cast<std::size_t>(j)] < 0) {
      throw ParseError("missing feature column f" + std::to_string(j), 1, 1);
    }
  }
  if (d == 0) throw ParseError("no feature columns", 1, 1);
  if (reward_column && mean_col < 0) {
    throw ParseError("missing reward column '" + mean_name + "'", 1, 1);
  }

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> means;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) +
                           " cells, got " + std::to_string(cells.size()),
                       line_no, 1);
    }
    auto parse_cell = [&](int c) {
      const std::string s = detail::trim(cells[static_cast<std::size_t>(c)]);
      try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        throw ParseError("cannot parse '" + s + "'", line_no,
                         static_cast<long>(c + 1));
      }
    };

    Eigen::VectorXd row(d);
    bool finite = true;
    for (int j = 0; j < d; ++j) {
      row[j] = parse_cell(feature_index[static_cast<std::size_t>(j)]);
      if (!std::isfinite(row[j])) finite = false;
    }
    double mean = 0.0;
    if (mean_col >= 0) {
      mean = parse_cell(mean_col);
      if (!std::isfinite(mean)) finite = false;
    }
    if (!finite) continue;  // reject rows with non-finite values
    if (mean_col >= 0 && (mean < -1.0 || mean > 1.0)) {
      throw MeanOutOfRange("mean " + std::to_string(mean) +
                           " outside [-1,1] at line " +
                           std::to_string(line_no));
    }
    rows.push_back(std::move(row));
    if (mean_col >= 0) means.push_back(mean);
  }

  ArmSet arms;
  arms.features.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    arms.features.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  arms.ids = detail::iota_ids(static_cast<int>(rows.size()));

  std::optional<RewardModel> model;
  if (mean_col >= 0 && reward_column) {
    RewardModel m;
    m.noise = NoiseKind::Gaussian;
    m.means = Eigen::Map<Eigen::VectorXd>(means.data(),
                                          static_cast<Eigen::Index>(means.size()));
    model = std::move(m);
  }
  return {std::move(arms), std::move(model)};
}

}  // namespace embandit

#endif  // EMBANDIT_ARM_MODEL_HPP
