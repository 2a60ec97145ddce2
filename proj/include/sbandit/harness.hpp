#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbandit/environment.hpp"
#include "sbandit/sbe.hpp"

namespace sbandit {

inline constexpr const char* kVersion = "0.3.0";

enum class Mode { Regret, Pac, Bai, DesignCert, ErrorScaling };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);  // throws ConfigError("mode", …)

enum class EnvironmentSource { Explicit, FeaturesFile, Gap, Random, Mab };

struct EnvironmentConfig {
  EnvironmentSource source = EnvironmentSource::Gap;
  std::vector<std::vector<double>> features;  // Explicit: one row per arm
  std::string features_file;                  // FeaturesFile
  std::vector<double> theta_star;             // Explicit, FeaturesFile
  long d = 0;                                 // Gap, Random
  long k = 0;                                 // Gap, Random
  double gap = 0.0;                           // Gap
  std::vector<double> mu;                     // Mab
  std::optional<std::uint64_t> instance_seed;  // generators; default base_seed
  bool fresh_instance_per_replication = false;
  ShiftSpec shift;
  NoiseSpec noise;
};

struct PureExplorationConfig {
  long budget = 0;  // 0: derive from epsilon via pac_budget
  double delta = 0.1;
  std::optional<double> epsilon;
  double c2 = 4.0;
  long snapshot_stride = 1;
};

struct DesignConfig {
  Arm anchor = 0;
  double fw_tol = 1e-3;
};

struct ExperimentConfig {
  Mode mode = Mode::Regret;
  EnvironmentConfig environment;
  SbeConfig sbe;
  /// Sweep over the schedule constant (sets c2 = c3 = c); empty runs sbe as
  /// configured.
  std::vector<double> c_values;
  PureExplorationConfig pure;
  DesignConfig design;
  long replications = 1;
  std::uint64_t base_seed = 0;
  std::string output = "out";
  unsigned threads = 0;  // 0: hardware concurrency
  long trajectory_stride = 1;

  /// Throws ConfigError naming the first missing or invalid field.
  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Builds the environment of one replication: noise keyed by
/// `replication_seed`, generator draws keyed by the instance seed (or by
/// `replication_seed` when fresh instances are requested).
Environment build_environment(const ExperimentConfig& cfg, std::uint64_t replication_seed);

/// Explicit structured form of an environment (features, θ*, shift, noise,
/// seed) and its inverse.
nlohmann::json environment_to_json(const Environment& env);
Environment environment_from_json(const nlohmann::json& j);

struct MetricRow {
  long t = 0;
  int phase = 0;
  Arm arm = 0;
  double reward = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  double e_t = 0.0;         ///< max_i |(x_i − x_anchor)ᵀ(θ̂ − θ*)| at the latest snapshot
  double sqrt_t_e_t = 0.0;  ///< √t·e_t
  Eigen::Index active_size = 0;
};

/// Per-step metrics. Regret uses the true θ* and best arm; e_t is taken
/// from the latest estimate snapshot at or before each round.
std::vector<MetricRow> compute_metrics(const RunRecord& record, const Environment& env);

/// Maximum estimation error of a snapshot.
double snapshot_error(const EstimateSnapshot& snap, const Environment& env);

inline constexpr const char* kTrajectoryHeader =
    "t,replication,phase,arm,reward,inst_regret,cum_regret,e_t,sqrt_t_e_t,active_size";

struct ReplicationSummary {
  long replication = 0;
  std::uint64_t seed = 0;
  double c = 0.0;  // schedule constant for SBE modes
  Arm best_arm = 0;
  double final_regret = 0.0;
  std::optional<Arm> declared_best;
  std::optional<long> declaration_time;
  std::optional<Arm> greedy_arm;      // pure-exploration modes
  std::optional<double> greedy_regret;
  bool success = false;
  double max_sqrt_t_e_t = 0.0;  ///< over t ≥ 100 (all t if shorter)
  long shift_violations = 0;
};

struct ExperimentSummary {
  std::vector<ReplicationSummary> replications;
  std::vector<std::filesystem::path> files;
  std::optional<DesignCertificate> certificate;  // design-cert mode
};

/// Runs every replication (in parallel when threads allow) and writes
/// trajectory.csv, mean_trajectory.csv, summary.csv and manifest.json
/// (design.csv and certificate.csv in design-cert mode) under cfg.output.
/// CSV contents depend only on the configuration, not on thread count.
ExperimentSummary run_experiment(const ExperimentConfig& cfg);

}  // namespace sbandit
