// sbandit: designs, certificates and simulation runs from the command line.
//
// Exit codes: 0 success, 2 configuration error, 3 any other failure.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sbandit/design.hpp"
#include "sbandit/errors.hpp"
#include "sbandit/feature_io.hpp"
#include "sbandit/harness.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitFailure = 3;

int run_design(const std::string& path, long anchor, double fw_tol) {
  const sbandit::FeatureSet features = sbandit::read_features(path);
  const sbandit::DeoResult res =
      sbandit::deo(features, anchor, sbandit::GOptimalOptions{fw_tol, 0});
  std::cout << "arm_index,probability\n";
  for (Eigen::Index i = 0; i < res.policy.num_arms(); ++i) {
    std::cout << i << ',' << sbandit::format_double(res.policy[i]) << '\n';
  }
  const auto& c = res.certificate;
  std::cout << "certificate,max_anchor_norm=" << sbandit::format_double(c.max_anchor_norm)
            << ",max_centered_norm=" << sbandit::format_double(c.max_centered_norm)
            << ",support_size=" << c.support_size << ",effective_dim=" << c.effective_dim
            << '\n';
  return 0;
}

struct RunOverrides {
  std::string config;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::optional<long> reps;
  std::optional<unsigned> threads;
  std::string out;
};

sbandit::ExperimentConfig load_with_overrides(const RunOverrides& o) {
  sbandit::ExperimentConfig cfg = sbandit::load_config(o.config);
  if (!o.mode.empty()) cfg.mode = sbandit::parse_mode(o.mode);
  if (o.seed) cfg.base_seed = *o.seed;
  if (o.reps) cfg.replications = *o.reps;
  if (o.threads) cfg.threads = *o.threads;
  if (!o.out.empty()) cfg.output = o.out;
  return cfg;
}

int run_experiment(const RunOverrides& o) {
  const sbandit::ExperimentConfig cfg = load_with_overrides(o);
  const sbandit::ExperimentSummary summary = sbandit::run_experiment(cfg);
  if (summary.certificate) {
    const auto& c = *summary.certificate;
    std::cout << "max_anchor_norm=" << sbandit::format_double(c.max_anchor_norm)
              << " max_centered_norm=" << sbandit::format_double(c.max_centered_norm)
              << " support_size=" << c.support_size << '\n';
  } else {
    long successes = 0;
    double regret = 0.0;
    for (const auto& r : summary.replications) {
      successes += r.success ? 1 : 0;
      regret += r.final_regret;
    }
    const double n = static_cast<double>(summary.replications.size());
    std::cout << "replications=" << summary.replications.size() << " successes=" << successes
              << " mean_final_regret=" << sbandit::format_double(regret / n) << '\n';
  }
  for (const auto& f : summary.files) std::cout << "wrote " << f.string() << '\n';
  return 0;
}

int validate_config(const RunOverrides& o) {
  const sbandit::ExperimentConfig cfg = load_with_overrides(o);
  cfg.validate();
  std::cout << sbandit::to_json(cfg).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiparametric linear bandits: designs, elimination runs and experiments"};
  app.set_version_flag("--version", std::string(sbandit::kVersion));
  app.require_subcommand(1);

  std::string design_file;
  long anchor = 0;
  double fw_tol = 1e-3;
  auto* design = app.add_subcommand("design", "Anchored difference design for a feature file");
  design->add_option("features", design_file, "Feature file: header 'd K', then one arm per line")
      ->required()
      ->check(CLI::ExistingFile);
  design->add_option("--anchor", anchor, "Anchor arm (0-based)")->capture_default_str();
  design->add_option("--fw-tol", fw_tol, "Frank-Wolfe tolerance")->capture_default_str();

  RunOverrides overrides;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  auto* validate = app.add_subcommand("validate", "Check a config and print it normalized");
  for (auto* sub : {run, validate}) {
    sub->add_option("--config,-c", overrides.config, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--mode", overrides.mode, "regret|pac|bai|design-cert|error-scaling");
    sub->add_option("--seed", overrides.seed, "Base seed");
    sub->add_option("--reps", overrides.reps, "Number of replications");
    sub->add_option("--threads", overrides.threads, "Worker threads (0: all cores)");
    sub->add_option("--out", overrides.out, "Output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*design) return run_design(design_file, anchor, fw_tol);
    if (*run) return run_experiment(overrides);
    if (*validate) return validate_config(overrides);
  } catch (const sbandit::ConfigError& e) {
    std::cerr << "config error [" << e.field() << "]: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
