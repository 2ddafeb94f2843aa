#ifndef EMBANDIT_HARNESS_HPP
#define EMBANDIT_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "embandit/arm_model.hpp"
#include "embandit/elimination.hpp"
#include "embandit/embedding.hpp"
#include "embandit/errors.hpp"
#include "embandit/neural.hpp"

namespace embandit {

enum class AlgorithmKind { Adaptive, Fixed, Unknown, Neural, Rage, Action };
enum class DatasetKind { SyntheticLinear, SyntheticNonlinear, HardInstance, Csv };
enum class EmbeddingKind { Svd, KernelGaussian, KernelMercer, Empirical };

struct EmbeddingChoice {
  EmbeddingKind kind = EmbeddingKind::Svd;
  double norm_bound_c = 1.0;  // svd
  double gamma_k = 1.0;       // gaussian gram
  double scale_c = 1.0;       // empirical gamma_tilde scaling knob
  bool mercer_exp = true;     // mercer decay family
  double mercer_c_k = 1.0;
  double mercer_beta = 1.0;
};

struct ExperimentConfig {
  AlgorithmKind algorithm = AlgorithmKind::Adaptive;
  DatasetKind dataset = DatasetKind::SyntheticLinear;
  std::string csv_path;
  int k = 20;
  int d = 20;
  double eps = 0.1;
  double delta = 0.05;
  double zeta = 0.1;
  int trials = 50;
  std::uint64_t seed0 = 0;
  std::int64_t max_pulls = 10'000'000;
  EmbeddingChoice embedding;
  int embed_d = 0;       // fixed/unknown: 0 = effective dimension at eps
  int round_budget = 8;  // unknown-misspecification round cap
  int workers = 0;       // 0 = hardware concurrency
  struct Neural {
    int m = 128;
    int depth = 3;
    double alpha = 0.01;
    double eps_bar = 0.01;
    double eta = 1e-4;
    int max_gd_steps = 6000;
    double alloc_scale = 0.0;
  } neural;
};

struct TrialRecord {
  std::string algorithm;
  std::uint64_t seed = 0;
  std::int64_t pulls = 0;
  bool succeeded = false;
  int rounds = 0;
  std::vector<int> d_sequence;
  std::int64_t wall_ms = 0;
};

inline const char* algorithm_name(AlgorithmKind a) {
  switch (a) {
    case AlgorithmKind::Adaptive: return "adaptive";
    case AlgorithmKind::Fixed: return "fixed";
    case AlgorithmKind::Unknown: return "unknown";
    case AlgorithmKind::Neural: return "neural";
    case AlgorithmKind::Rage: return "rage";
    case AlgorithmKind::Action: return "action";
  }
  return "?";
}

// ---- success judgement (harness-side; never visible to the algorithms) ----

inline bool all_eps_optimal(const std::vector<int>& ids,
                            const RewardModel& model, double eps) {
  const double best = model.means[model.best_arm()];
  for (int id : ids) {
    if (best - model.means[id] > eps + 1e-12) return false;
  }
  return true;
}

/// Pulls consumed when the survivor set first contains only eps-optimal
/// arms; -1 when that never happens within the trace.
inline std::int64_t empirical_sample_complexity(const RunOutcome& outcome,
                                                const RewardModel& model,
                                                double eps) {
  std::vector<int> everyone(static_cast<std::size_t>(model.means.size()));
  for (std::size_t i = 0; i < everyone.size(); ++i) everyone[i] = static_cast<int>(i);
  if (all_eps_optimal(everyone, model, eps)) return 0;
  for (const TraceRound& tr : outcome.trace) {
    if (!tr.survivors.empty() && all_eps_optimal(tr.survivors, model, eps)) {
      return tr.cum_pulls;
    }
  }
  return -1;
}

inline void judge_outcome(RunOutcome& outcome, const RewardModel& model,
                          double eps) {
  if (outcome.trace.empty()) {
    std::vector<int> everyone(static_cast<std::size_t>(model.means.size()));
    for (std::size_t i = 0; i < everyone.size(); ++i) everyone[i] = static_cast<int>(i);
    outcome.succeeded = all_eps_optimal(everyone, model, eps);
    return;
  }
  const auto& last = outcome.trace.back().survivors;
  outcome.succeeded = !last.empty() && all_eps_optimal(last, model, eps);
}

// ---- configuration ----

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

inline EmbeddingChoice parse_embedding(const std::string& raw) {
  EmbeddingChoice e;
  std::string name = raw;
  std::string args;
  const auto open = raw.find('(');
  if (open != std::string::npos) {
    if (raw.back() != ')') throw ConfigError("embedding", "missing ')'");
    name = raw.substr(0, open);
    args = raw.substr(open + 1, raw.size() - open - 2);
  }
  name = lower(name);
  const auto parts = split(args, ',');
  auto num = [&](std::size_t i, double fallback) {
    if (i >= parts.size() || parts[i].empty()) return fallback;
    try {
      return std::stod(parts[i]);
    } catch (const std::exception&) {
      throw ConfigError("embedding", "cannot parse '" + parts[i] + "'");
    }
  };
  if (name == "svd") {
    e.kind = EmbeddingKind::Svd;
    e.norm_bound_c = num(0, 1.0);
  } else if (name == "kernel-gaussian") {
    e.kind = EmbeddingKind::KernelGaussian;
    e.gamma_k = num(0, 1.0);
    e.scale_c = num(1, 1.0);
  } else if (name == "empirical") {
    e.kind = EmbeddingKind::Empirical;
    e.gamma_k = num(0, 1.0);
    e.scale_c = num(1, 1.0);
  } else if (name == "kernel-mercer") {
    e.kind = EmbeddingKind::KernelMercer;
    if (parts.empty()) throw ConfigError("embedding", "kernel-mercer needs a spectrum");
    const auto spec = split(parts[0], ':');
    if (spec.size() != 1 && spec.empty()) {
      throw ConfigError("embedding", "bad mercer spectrum");
    }
    e.mercer_exp = lower(spec[0]) != "poly";
    if (lower(spec[0]) != "poly" && lower(spec[0]) != "exp") {
      throw ConfigError("embedding", "mercer decay must be exp or poly");
    }
    e.mercer_c_k = num(1, 1.0);
    e.mercer_beta = num(2, e.mercer_exp ? 1.0 : 3.0);
  } else {
    throw ConfigError("embedding", "unknown embedding '" + name + "'");
  }
  return e;
}

}  // namespace detail

inline void validate(const ExperimentConfig& cfg) {
  if (!(cfg.eps > 0.0 && cfg.eps < 1.0)) throw ConfigError("eps", "must lie in (0,1)");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta", "must lie in (0,1)");
  if (!(cfg.zeta >= 0.05 && cfg.zeta <= 0.5)) {
    throw ConfigError("zeta", "must lie in [0.05, 0.5]");
  }
  if (cfg.zeta < 0.1 || cfg.zeta > 0.25) {
    std::cerr << "[embandit] warning: zeta=" << cfg.zeta
              << " outside the paper range [1/10, 1/4]\n";
  }
  if (cfg.trials < 1) throw ConfigError("trials", "must be >= 1");
  if (cfg.dataset == DatasetKind::Csv && cfg.csv_path.empty()) {
    throw ConfigError("dataset", "csv path is empty");
  }
  if (cfg.dataset == DatasetKind::SyntheticLinear ||
      cfg.dataset == DatasetKind::SyntheticNonlinear) {
    if (cfg.k < 4 || cfg.k % 2 != 0) {
      throw ConfigError("K", "synthetic generators need even K >= 4");
    }
  }
  if (cfg.neural.m % 2 != 0) throw ConfigError("neural.m", "width must be even");
}

/// Flat key=value configuration; '#' starts a comment line.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  long line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = embandit::detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected key=value");
    }
    const std::string key = embandit::detail::trim(t.substr(0, eq));
    const std::string value = embandit::detail::trim(t.substr(eq + 1));
    auto as_int = [&](long long lo, long long hi) {
      try {
        const long long v = std::stoll(value);
        if (v < lo || v > hi) {
          throw ConfigError(key, "value " + value + " outside [" +
                                     std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]");
        }
        return v;
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception&) {
        throw ConfigError(key, "cannot parse integer '" + value + "'");
      }
    };
    auto as_double = [&]() {
      try {
        return std::stod(value);
      } catch (const std::exception&) {
        throw ConfigError(key, "cannot parse number '" + value + "'");
      }
    };

    if (key == "algorithm") {
      const std::string v = detail::lower(value);
      if (v == "adaptive") cfg.algorithm = AlgorithmKind::Adaptive;
      else if (v == "fixed") cfg.algorithm = AlgorithmKind::Fixed;
      else if (v == "unknown") cfg.algorithm = AlgorithmKind::Unknown;
      else if (v == "neural") cfg.algorithm = AlgorithmKind::Neural;
      else if (v == "rage") cfg.algorithm = AlgorithmKind::Rage;
      else if (v == "action") cfg.algorithm = AlgorithmKind::Action;
      else throw ConfigError(key, "unknown algorithm '" + value + "'");
    } else if (key == "dataset") {
      std::string v = detail::lower(value);
      if (v == "synthetic-linear") cfg.dataset = DatasetKind::SyntheticLinear;
      else if (v == "synthetic-nonlinear") cfg.dataset = DatasetKind::SyntheticNonlinear;
      else if (v == "hard-instance") cfg.dataset = DatasetKind::HardInstance;
      else if (v.rfind("csv(", 0) == 0 && v.back() == ')') {
        cfg.dataset = DatasetKind::Csv;
        cfg.csv_path = value.substr(4, value.size() - 5);
      } else {
        throw ConfigError(key, "unknown dataset '" + value + "'");
      }
    } else if (key == "K") {
      cfg.k = static_cast<int>(as_int(2, 1'000'000));
    } else if (key == "D") {
      cfg.d = static_cast<int>(as_int(1, 1'000'000));
    } else if (key == "eps") {
      cfg.eps = as_double();
    } else if (key == "delta") {
      cfg.delta = as_double();
    } else if (key == "zeta") {
      cfg.zeta = as_double();
    } else if (key == "trials") {
      cfg.trials = static_cast<int>(as_int(1, 1'000'000));
    } else if (key == "seed0") {
      cfg.seed0 = static_cast<std::uint64_t>(as_int(0, std::numeric_limits<long long>::max()));
    } else if (key == "max_pulls") {
      cfg.max_pulls = as_int(1, std::numeric_limits<long long>::max());
    } else if (key == "embedding") {
      cfg.embedding = detail::parse_embedding(value);
    } else if (key == "embed_d") {
      cfg.embed_d = static_cast<int>(as_int(0, 1'000'000));
    } else if (key == "round_budget") {
      cfg.round_budget = static_cast<int>(as_int(1, 64));
    } else if (key == "workers") {
      cfg.workers = static_cast<int>(as_int(0, 4096));
    } else if (key == "neural.m") {
      cfg.neural.m = static_cast<int>(as_int(2, 1 << 20));
    } else if (key == "neural.L") {
      cfg.neural.depth = static_cast<int>(as_int(2, 64));
    } else if (key == "neural.alpha") {
      cfg.neural.alpha = as_double();
    } else if (key == "neural.eps_bar") {
      cfg.neural.eps_bar = as_double();
    } else if (key == "neural.eta") {
      cfg.neural.eta = as_double();
    } else if (key == "neural.max_gd_steps") {
      cfg.neural.max_gd_steps = static_cast<int>(as_int(1, 10'000'000));
    } else if (key == "neural.A") {
      cfg.neural.alloc_scale = as_double();
    } else {
      throw ConfigError(key, "unknown configuration key");
    }
  }
  validate(cfg);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---- trial execution ----

namespace detail {

inline std::pair<ArmSet, RewardModel> build_instance(const ExperimentConfig& cfg,
                                                     std::uint64_t seed) {
  switch (cfg.dataset) {
    case DatasetKind::SyntheticLinear:
      return make_synthetic_linear(cfg.k, cfg.d, seed);
    case DatasetKind::SyntheticNonlinear:
      return make_synthetic_nonlinear(cfg.k, cfg.d, seed);
    case DatasetKind::HardInstance:
      return make_hard_instance(cfg.d, cfg.eps, seed);
    case DatasetKind::Csv: {
      auto [arms, model] = load_arms_csv(cfg.csv_path, std::string("mean"));
      if (!model) throw ConfigError("dataset", "csv has no mean column");
      return {std::move(arms), std::move(*model)};
    }
  }
  throw ConfigError("dataset", "unhandled dataset kind");
}

inline EmbeddingProvider build_provider(const ExperimentConfig& cfg,
                                        const ArmSet& arms) {
  switch (cfg.embedding.kind) {
    case EmbeddingKind::Svd:
      return make_svd_provider(arms, cfg.embedding.norm_bound_c, cfg.zeta);
    case EmbeddingKind::KernelGaussian:
    case EmbeddingKind::Empirical:
      return make_empirical_kernel_provider(
          arms, GaussianKernel{cfg.embedding.gamma_k}, cfg.embedding.scale_c,
          cfg.zeta);
    case EmbeddingKind::KernelMercer: {
      SpectrumModel spec = cfg.embedding.mercer_exp
                               ? analytic_exp_spectrum(cfg.embedding.mercer_c_k,
                                                       cfg.embedding.mercer_beta)
                               : analytic_poly_spectrum(
                                     cfg.embedding.mercer_c_k,
                                     cfg.embedding.mercer_beta);
      spec.phi = sine_eigenfunctions();
      spec.c_phi = 1.0;
      return make_mercer_provider(arms, std::move(spec), cfg.zeta);
    }
  }
  throw ConfigError("embedding", "unhandled embedding kind");
}

inline std::uint64_t oracle_seed(std::uint64_t trial_seed) {
  return mix_seed(trial_seed, 0x6f7261636c65ULL);  // disjoint from generators
}

}  // namespace detail

/// Runs one seeded trial; deterministic given (cfg, seed).
inline TrialRecord run_single_trial(const ExperimentConfig& cfg,
                                    std::uint64_t seed) {
  TrialRecord rec;
  rec.algorithm = algorithm_name(cfg.algorithm);
  rec.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();

  auto [arms, model] = detail::build_instance(cfg, seed);
  if (cfg.algorithm == AlgorithmKind::Neural) {
    arms = mirror_and_normalize(arms);
  }
  RewardOracle oracle(arms, model, detail::oracle_seed(seed), cfg.max_pulls);

  RunOutcome outcome;
  bool errored = false;
  try {
    switch (cfg.algorithm) {
      case AlgorithmKind::Adaptive: {
        const EmbeddingProvider provider = detail::build_provider(cfg, arms);
        outcome = adaptive_eliminate(arms, oracle, provider, cfg.eps,
                                     cfg.delta, cfg.zeta);
        break;
      }
      case AlgorithmKind::Fixed: {
        const EmbeddingProvider provider = detail::build_provider(cfg, arms);
        const int d = cfg.embed_d > 0
                          ? cfg.embed_d
                          : effective_dimension(provider.gamma_at, cfg.eps,
                                                provider.d_max);
        const EmbeddingPlan plan = provider.plan_at(d);
        outcome = fixed_eliminate(arms, oracle, plan, cfg.delta, cfg.zeta,
                                  cfg.eps);
        break;
      }
      case AlgorithmKind::Unknown: {
        const EmbeddingProvider provider = detail::build_provider(cfg, arms);
        const int d = cfg.embed_d > 0
                          ? cfg.embed_d
                          : effective_dimension(provider.gamma_at, cfg.eps,
                                                provider.d_max);
        const EmbeddingPlan plan = provider.plan_at(d);
        outcome = unknown_misspec_eliminate(arms, oracle, plan.psi, cfg.delta,
                                            cfg.zeta, cfg.round_budget)
                      .outcome;
        break;
      }
      case AlgorithmKind::Neural: {
        NeuralConfig ncfg;
        ncfg.alpha = cfg.neural.alpha;
        ncfg.eps_bar = cfg.neural.eps_bar;
        ncfg.alloc_scale = cfg.neural.alloc_scale;
        ncfg.eta = cfg.neural.eta;
        ncfg.max_gd_steps = cfg.neural.max_gd_steps;
        ncfg.zeta = cfg.zeta;
        ncfg.delta = cfg.delta;
        ncfg.eps = cfg.eps;
        outcome = neural_eliminate(arms, oracle, ncfg, cfg.neural.m,
                                   cfg.neural.depth, seed);
        break;
      }
      case AlgorithmKind::Rage:
        outcome = rage_eliminate(arms, oracle, cfg.eps, cfg.delta, cfg.zeta);
        break;
      case AlgorithmKind::Action:
        outcome = action_eliminate(arms, oracle, cfg.eps, cfg.delta);
        break;
    }
  } catch (const CapExceeded&) {
    errored = true;
  } catch (const Diverged&) {
    errored = true;
  } catch (const SingularInformation&) {
    errored = true;
  }

  if (errored) {
    rec.succeeded = false;
    rec.pulls = oracle.ledger().total;
    rec.rounds = 0;
  } else {
    judge_outcome(outcome, model, cfg.eps);
    rec.succeeded = outcome.succeeded;
    rec.rounds = static_cast<int>(outcome.trace.size());
    for (const TraceRound& tr : outcome.trace) rec.d_sequence.push_back(tr.d_k);
    if (rec.succeeded) {
      const std::int64_t sc =
          empirical_sample_complexity(outcome, model, cfg.eps);
      rec.pulls = sc >= 0 ? sc : outcome.total_pulls;
    } else {
      rec.pulls = outcome.total_pulls;
    }
  }
  rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rec;
}

/// Trials with seeds seed0 .. seed0+trials-1, fanned out to workers; results
/// are merged in seed order regardless of scheduling.
inline std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const int n = cfg.trials;
  std::vector<TrialRecord> records(static_cast<std::size_t>(n));
  int workers = cfg.workers > 0
                    ? cfg.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n));

  if (workers == 1) {
    for (int i = 0; i < n; ++i) {
      records[static_cast<std::size_t>(i)] =
          run_single_trial(cfg, cfg.seed0 + static_cast<std::uint64_t>(i));
    }
    return records;
  }

  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          records[static_cast<std::size_t>(i)] = run_single_trial(
              cfg, cfg.seed0 + static_cast<std::uint64_t>(i));
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          failed.store(true);
          if (error_message.empty()) error_message = e.what();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) throw Error(error_message);
  return records;
}

// ---- records CSV and summaries ----

inline void write_records_csv(const std::vector<TrialRecord>& records,
                              const std::string& path,
                              bool include_wall = false) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "algorithm,seed,pulls,succeeded,rounds,wall_ms,d_ks\n";
  for (const TrialRecord& r : records) {
    out << r.algorithm << ',' << r.seed << ',' << r.pulls << ','
        << (r.succeeded ? 1 : 0) << ',' << r.rounds << ','
        << (include_wall ? r.wall_ms : 0) << ',';
    for (std::size_t i = 0; i < r.d_sequence.size(); ++i) {
      if (i) out << ';';
      out << r.d_sequence[i];
    }
    out << '\n';
  }
}

inline std::vector<TrialRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0, 0);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty records file", 1, 1);
  std::vector<TrialRecord> records;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (embandit::detail::trim(line).empty()) continue;
    const auto cells = embandit::detail::split_csv_line(line);
    if (cells.size() != 7) {
      throw ParseError("expected 7 cells", line_no, 1);
    }
    TrialRecord r;
    try {
      r.algorithm = cells[0];
      r.seed = std::stoull(cells[1]);
      r.pulls = std::stoll(cells[2]);
      r.succeeded = std::stoi(cells[3]) != 0;
      r.rounds = std::stoi(cells[4]);
      r.wall_ms = std::stoll(cells[5]);
      for (const std::string& p : detail::split(cells[6], ';')) {
        if (!p.empty()) r.d_sequence.push_back(std::stoi(p));
      }
    } catch (const std::exception&) {
      throw ParseError("cannot parse record", line_no, 1);
    }
    records.push_back(std::move(r));
  }
  return records;
}

/// Pull statistics are computed over successful runs only.
struct Summary {
  std::size_t total = 0;
  std::size_t failures = 0;
  double success_rate = 0.0;
  bool has_pull_stats = false;
  double mean_pulls = 0.0;
  double median_pulls = 0.0;
  double q1_pulls = 0.0;
  double q3_pulls = 0.0;
};

inline Summary summarize(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw Error("summarize needs at least one record");
  Summary s;
  s.total = records.size();
  std::vector<double> pulls;
  for (const TrialRecord& r : records) {
    if (r.succeeded) {
      pulls.push_back(static_cast<double>(r.pulls));
    } else {
      ++s.failures;
    }
  }
  s.success_rate =
      static_cast<double>(s.total - s.failures) / static_cast<double>(s.total);
  if (pulls.empty()) return s;

  std::sort(pulls.begin(), pulls.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(pulls.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, pulls.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return pulls[lo] * (1.0 - frac) + pulls[hi] * frac;
  };
  s.has_pull_stats = true;
  s.mean_pulls = 0.0;
  for (double p : pulls) s.mean_pulls += p;
  s.mean_pulls /= static_cast<double>(pulls.size());
  s.median_pulls = quantile(0.5);
  s.q1_pulls = quantile(0.25);
  s.q3_pulls = quantile(0.75);
  return s;
}

inline std::string format_summary(const Summary& s) {
  std::ostringstream out;
  out << "trials=" << s.total << " failures=" << s.failures
      << " success_rate=" << s.success_rate;
  if (s.has_pull_stats) {
    out << " pulls(mean=" << s.mean_pulls << ", median=" << s.median_pulls
        << ", q1=" << s.q1_pulls << ", q3=" << s.q3_pulls << ")";
  } else {
    out << " pulls=absent";
  }
  return out.str();
}

/// Writes an arm set (plus means) in the f0..f{D-1} CSV layout.
inline void write_arms_csv(const ArmSet& arms, const RewardModel* model,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.precision(17);
  for (int j = 0; j < arms.dim(); ++j) {
    if (j) out << ',';
    out << 'f' << j;
  }
  if (model) out << ",mean";
  out << '\n';
  for (int i = 0; i < arms.num_arms(); ++i) {
    for (int j = 0; j < arms.dim(); ++j) {
      if (j) out << ',';
      out << arms.features(i, j);
    }
    if (model) out << ',' << model->means[i];
    out << '\n';
  }
}

}  // namespace embandit

#endif  // EMBANDIT_HARNESS_HPP
