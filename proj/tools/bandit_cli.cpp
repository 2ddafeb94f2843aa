// Command-line harness: run seeded experiment batches, summarize record
// files, and emit synthetic datasets in the f0..f{D-1} CSV layout.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "embandit/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bandit pure exploration harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  std::string out_path = "records.csv";
  bool timings = false;
  run->add_option("--config", config_path, "flat key=value config file")
      ->required();
  run->add_option("--out", out_path, "output records CSV");
  run->add_flag("--timings", timings,
                "record wall-clock times (breaks byte-identical reruns)");

  auto* summ = app.add_subcommand("summarize", "summarize a records CSV");
  std::string in_path;
  summ->add_option("--in", in_path, "records CSV")->required();

  auto* gen = app.add_subcommand("gen-dataset", "write a synthetic dataset CSV");
  std::string kind = "synthetic-linear";
  std::string gen_out = "arms.csv";
  int k = 20, d = 20;
  double eps = 0.1;
  std::uint64_t seed = 0;
  gen->add_option("--kind", kind,
                  "synthetic-linear | synthetic-nonlinear | hard-instance");
  gen->add_option("--out", gen_out, "output CSV path");
  gen->add_option("--k", k, "number of arms");
  gen->add_option("--d", d, "feature dimension");
  gen->add_option("--eps", eps, "hard-instance accuracy parameter");
  gen->add_option("--seed", seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const embandit::ExperimentConfig cfg = embandit::load_config(config_path);
      const auto records = embandit::run_experiment(cfg);
      embandit::write_records_csv(records, out_path, timings);
      std::cout << embandit::format_summary(embandit::summarize(records))
                << "\n";
    } else if (*summ) {
      const auto records = embandit::read_records_csv(in_path);
      std::cout << embandit::format_summary(embandit::summarize(records))
                << "\n";
    } else if (*gen) {
      std::pair<embandit::ArmSet, embandit::RewardModel> instance = [&] {
        if (kind == "synthetic-linear") {
          return embandit::make_synthetic_linear(k, d, seed);
        }
        if (kind == "synthetic-nonlinear") {
          return embandit::make_synthetic_nonlinear(k, d, seed);
        }
        if (kind == "hard-instance") {
          return embandit::make_hard_instance(d, eps, seed);
        }
        throw embandit::ConfigError("kind", "unknown dataset kind '" + kind + "'");
      }();
      embandit::write_arms_csv(instance.first, &instance.second, gen_out);
      std::cout << "wrote " << instance.first.num_arms() << " arms x "
                << instance.first.dim() << " features to " << gen_out << "\n";
    }
  } catch (const embandit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
