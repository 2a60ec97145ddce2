#include "sbandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "sbandit/errors.hpp"
#include "sbandit/feature_io.hpp"

namespace sbandit {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// JSON access with field-named errors

const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

template <class T>
T read(const json& j, const char* key, T fallback, const std::string& path) {
  const json* v = find(j, key);
  if (!v) return fallback;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) throw ConfigError(path + key, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v->is_number_integer()) throw ConfigError(path + key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0) {
          throw ConfigError(path + key, "must be nonnegative");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v->is_number()) throw ConfigError(path + key, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v->is_string()) throw ConfigError(path + key, "expected a string");
    }
    return v->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + key, e.what());
  }
}

std::vector<double> read_vector(const json& j, const char* key, const std::string& path) {
  const json* v = find(j, key);
  if (!v) return {};
  if (!v->is_array()) throw ConfigError(path + key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number()) throw ConfigError(path + key, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

ShiftSpec parse_shift(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const std::string kind = read<std::string>(j, "kind", "none", path + ".");
  const bool clip = read<bool>(j, "clip", false, path + ".");
  if (kind == "none") return ShiftSpec{ShiftKind::None, 0.0, {}, clip};
  if (kind == "sine") return ShiftSpec::sine(clip);
  if (kind == "log_alternating") return ShiftSpec::log_alternating(clip);
  if (kind == "log_alternating_min") return ShiftSpec::log_alternating_min(clip);
  if (kind == "constant") {
    if (!find(j, "value")) throw ConfigError(path + ".value", "required for a constant shift");
    return ShiftSpec::constant_value(read<double>(j, "value", 0.0, path + "."), clip);
  }
  if (kind == "table") {
    auto table = read_vector(j, "table", path + ".");
    if (table.empty()) throw ConfigError(path + ".table", "must be a nonempty array");
    return ShiftSpec::from_table(std::move(table), clip);
  }
  throw ConfigError(path + ".kind", "unknown shift kind '" + kind + "'");
}

json shift_to_json(const ShiftSpec& s) {
  json j{{"kind", to_string(s.kind)}, {"clip", s.clip_to_unit}};
  if (s.kind == ShiftKind::Constant) j["value"] = s.constant;
  if (s.kind == ShiftKind::Table) j["table"] = s.table;
  return j;
}

NoiseSpec parse_noise(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const std::string kind = read<std::string>(j, "kind", "none", path + ".");
  if (kind == "none") return NoiseSpec::none();
  if (kind == "gaussian") {
    const double sigma = read<double>(j, "sigma", 1.0, path + ".");
    if (!(sigma >= 0.0)) throw ConfigError(path + ".sigma", "must be nonnegative");
    return NoiseSpec::gaussian(sigma);
  }
  if (kind == "bounded_uniform") {
    const double a = read<double>(j, "a", 1.0, path + ".");
    if (!(a >= 0.0)) throw ConfigError(path + ".a", "must be nonnegative");
    return NoiseSpec::bounded_uniform(a);
  }
  throw ConfigError(path + ".kind", "unknown noise kind '" + kind + "'");
}

json noise_to_json(const NoiseSpec& n) {
  json j{{"kind", to_string(n.kind)}};
  if (n.kind == NoiseKind::Gaussian) j["sigma"] = n.scale;
  if (n.kind == NoiseKind::BoundedUniform) j["a"] = n.scale;
  return j;
}

std::string to_string(EnvironmentSource s) {
  switch (s) {
    case EnvironmentSource::Explicit: return "explicit";
    case EnvironmentSource::FeaturesFile: return "file";
    case EnvironmentSource::Gap: return "gap";
    case EnvironmentSource::Random: return "random";
    case EnvironmentSource::Mab: return "mab";
  }
  return "unknown";
}

EnvironmentConfig parse_environment(const json& j) {
  const std::string path = "environment.";
  if (!j.is_object()) throw ConfigError("environment", "expected an object");
  EnvironmentConfig e;
  const std::string gen = read<std::string>(j, "generator", "gap", path);
  if (gen == "explicit") {
    e.source = EnvironmentSource::Explicit;
  } else if (gen == "file") {
    e.source = EnvironmentSource::FeaturesFile;
  } else if (gen == "gap") {
    e.source = EnvironmentSource::Gap;
  } else if (gen == "random") {
    e.source = EnvironmentSource::Random;
  } else if (gen == "mab") {
    e.source = EnvironmentSource::Mab;
  } else {
    throw ConfigError(path + "generator", "unknown generator '" + gen + "'");
  }

  if (const json* f = find(j, "features")) {
    if (!f->is_array()) throw ConfigError(path + "features", "expected an array of rows");
    for (const auto& row : *f) {
      if (!row.is_array()) throw ConfigError(path + "features", "expected an array of rows");
      std::vector<double> r;
      for (const auto& v : row) {
        if (!v.is_number()) throw ConfigError(path + "features", "non-numeric entry");
        r.push_back(v.get<double>());
      }
      e.features.push_back(std::move(r));
    }
  }
  e.features_file = read<std::string>(j, "features_file", "", path);
  e.theta_star = read_vector(j, "theta_star", path);
  e.d = read<long>(j, "d", 0, path);
  e.k = read<long>(j, "K", 0, path);
  e.gap = read<double>(j, "gap", 0.0, path);
  e.mu = read_vector(j, "mu", path);
  if (find(j, "instance_seed")) {
    e.instance_seed = read<std::uint64_t>(j, "instance_seed", 0, path);
  }
  e.fresh_instance_per_replication =
      read<bool>(j, "fresh_instance_per_replication", false, path);
  if (const json* s = find(j, "shift")) e.shift = parse_shift(*s, path + "shift");
  if (const json* n = find(j, "noise")) e.noise = parse_noise(*n, path + "noise");
  return e;
}

json environment_config_to_json(const EnvironmentConfig& e) {
  json j{{"generator", to_string(e.source)},
         {"shift", shift_to_json(e.shift)},
         {"noise", noise_to_json(e.noise)},
         {"fresh_instance_per_replication", e.fresh_instance_per_replication}};
  switch (e.source) {
    case EnvironmentSource::Explicit:
      j["features"] = e.features;
      j["theta_star"] = e.theta_star;
      break;
    case EnvironmentSource::FeaturesFile:
      j["features_file"] = e.features_file;
      j["theta_star"] = e.theta_star;
      break;
    case EnvironmentSource::Gap:
      j["d"] = e.d;
      j["K"] = e.k;
      j["gap"] = e.gap;
      break;
    case EnvironmentSource::Random:
      j["d"] = e.d;
      j["K"] = e.k;
      break;
    case EnvironmentSource::Mab:
      j["mu"] = e.mu;
      break;
  }
  if (e.instance_seed) j["instance_seed"] = *e.instance_seed;
  return j;
}

// ---------------------------------------------------------------------------
// Output

std::string fmt(double v) { return format_double(v); }

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() +
                  (ec ? ": " + ec.message() : std::string()));
  }
}

bool is_sbe_mode(Mode m) { return m == Mode::Regret || m == Mode::Bai; }

struct ReplicationOutput {
  ReplicationSummary summary;
  std::vector<MetricRow> rows;
};

double max_scaled_error(const std::vector<MetricRow>& rows) {
  const long from = rows.size() >= 100 ? 100 : 1;
  double worst = 0.0;
  for (const auto& r : rows) {
    if (r.t >= from) worst = std::max(worst, r.sqrt_t_e_t);
  }
  return worst;
}

ReplicationOutput run_replication(const ExperimentConfig& cfg, long rep, double c) {
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(rep);
  const Environment env = build_environment(cfg, seed);

  ReplicationOutput out;
  auto& s = out.summary;
  s.replication = rep;
  s.seed = seed;
  s.best_arm = env.best_arm();

  if (is_sbe_mode(cfg.mode)) {
    SbeConfig sbe = cfg.sbe;
    if (c > 0.0) sbe.c2 = sbe.c3 = c;
    s.c = sbe.c2;
    const RunRecord rec = run_sbe(env, sbe, seed);
    out.rows = compute_metrics(rec, env);
    s.final_regret = rec.total_regret();
    s.declared_best = rec.declared_best;
    s.declaration_time = rec.declaration_time;
    s.success = rec.declared_best && *rec.declared_best == env.best_arm();
    s.shift_violations = rec.audit.shift_violations;
  } else {
    const auto& pc = cfg.pure;
    const long budget = pc.budget > 0 ? pc.budget
                                      : pac_budget(env.dim(), env.num_arms(), *pc.epsilon,
                                                   pc.delta, pc.c2);
    PureExplorationOptions opts;
    opts.fw_tol = cfg.design.fw_tol;
    opts.snapshot_stride = cfg.mode == Mode::ErrorScaling ? pc.snapshot_stride : 0;
    const PureExplorationResult res = run_pure_exploration(env, budget, pc.delta, seed, opts);
    out.rows = compute_metrics(res.record, env);
    s.final_regret = res.record.total_regret();
    s.greedy_arm = res.greedy_arm;
    s.greedy_regret = env.regret_of(res.greedy_arm);
    s.success = pc.epsilon ? *s.greedy_regret <= *pc.epsilon : res.greedy_arm == env.best_arm();
    s.shift_violations = res.record.audit.shift_violations;
  }
  s.max_sqrt_t_e_t = max_scaled_error(out.rows);
  return out;
}

template <class T>
std::string optional_field(const std::optional<T>& v) {
  if (!v) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return fmt(*v);
  } else {
    return std::to_string(*v);
  }
}

void write_summary_row(std::ostream& out, const ReplicationSummary& s) {
  out << s.replication << ',' << s.seed << ',' << fmt(s.c) << ',' << s.best_arm << ','
      << fmt(s.final_regret) << ',' << optional_field(s.declared_best) << ','
      << optional_field(s.declaration_time) << ',' << optional_field(s.greedy_arm) << ','
      << optional_field(s.greedy_regret) << ',' << (s.success ? 1 : 0) << ','
      << fmt(s.max_sqrt_t_e_t)
      << ',' << s.shift_violations << '\n';
}

constexpr const char* kSummaryHeader =
    "replication,seed,c,best_arm,final_regret,declared_best,declaration_time,greedy_arm,"
    "greedy_regret,success,max_sqrt_t_e_t,shift_violations";

bool keep_row(long t, long last, long stride) { return t % stride == 0 || t == last; }

// Runs all replications for one schedule constant and writes its CSVs.
std::vector<ReplicationSummary> run_block(const ExperimentConfig& cfg, double c,
                                          const std::filesystem::path& dir,
                                          std::vector<std::filesystem::path>& files) {
  ensure_directory(dir);
  const auto traj_path = dir / "trajectory.csv";
  const auto mean_path = dir / "mean_trajectory.csv";
  const auto summary_path = dir / "summary.csv";
  std::ofstream traj = open_output(traj_path);
  traj << kTrajectoryHeader << '\n';

  unsigned threads = cfg.threads > 0 ? cfg.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, threads);
  const long reps = cfg.replications;

  std::vector<ReplicationSummary> summaries;
  std::vector<long> mean_t;
  std::vector<double> sum_regret, sum_e, sum_scaled;

  for (long first = 0; first < reps; first += threads) {
    const long last = std::min(reps, first + static_cast<long>(threads));
    std::vector<ReplicationOutput> batch(static_cast<std::size_t>(last - first));
    std::vector<std::exception_ptr> errors(batch.size());
    std::atomic<long> next{first};
    auto worker = [&] {
      for (long rep = next++; rep < last; rep = next++) {
        const auto slot = static_cast<std::size_t>(rep - first);
        try {
          batch[slot] = run_replication(cfg, rep, c);
        } catch (...) {
          errors[slot] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < std::min<unsigned>(threads, static_cast<unsigned>(last - first)); ++w) {
      pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }

    // Written in replication order regardless of completion order.
    for (auto& out : batch) {
      const long final_t = out.rows.empty() ? 0 : out.rows.back().t;
      std::size_t kept = 0;
      for (const auto& r : out.rows) {
        if (!keep_row(r.t, final_t, cfg.trajectory_stride)) continue;
        traj << r.t << ',' << out.summary.replication << ',' << r.phase << ',' << r.arm << ','
             << fmt(r.reward) << ',' << fmt(r.inst_regret) << ',' << fmt(r.cum_regret) << ','
             << fmt(r.e_t) << ',' << fmt(r.sqrt_t_e_t) << ',' << r.active_size << '\n';
        if (kept == mean_t.size()) {
          mean_t.push_back(r.t);
          sum_regret.push_back(0.0);
          sum_e.push_back(0.0);
          sum_scaled.push_back(0.0);
        }
        sum_regret[kept] += r.cum_regret;
        sum_e[kept] += r.e_t;
        sum_scaled[kept] += r.sqrt_t_e_t;
        ++kept;
      }
      summaries.push_back(out.summary);
    }
  }
  if (!traj) throw IoError("failed writing " + traj_path.string());

  std::ofstream mean = open_output(mean_path);
  mean << "t,mean_cum_regret,mean_e_t,mean_sqrt_t_e_t\n";
  const double n = static_cast<double>(reps);
  for (std::size_t i = 0; i < mean_t.size(); ++i) {
    mean << mean_t[i] << ',' << fmt(sum_regret[i] / n) << ',' << fmt(sum_e[i] / n) << ','
         << fmt(sum_scaled[i] / n) << '\n';
  }

  std::ofstream summary = open_output(summary_path);
  summary << kSummaryHeader << '\n';
  for (const auto& s : summaries) write_summary_row(summary, s);
  if (!mean || !summary) throw IoError("failed writing results under " + dir.string());

  files.insert(files.end(), {traj_path, mean_path, summary_path});
  return summaries;
}

DesignCertificate run_design_cert(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                  std::vector<std::filesystem::path>& files) {
  ensure_directory(dir);
  const Environment env = build_environment(cfg, cfg.base_seed);
  const DeoResult res = deo(env.features(), cfg.design.anchor,
                            GOptimalOptions{cfg.design.fw_tol, 0});

  const auto design_path = dir / "design.csv";
  std::ofstream design = open_output(design_path);
  design << "arm_index,probability\n";
  for (Eigen::Index i = 0; i < res.policy.num_arms(); ++i) {
    design << i << ',' << fmt(res.policy[i]) << '\n';
  }

  const auto cert_path = dir / "certificate.csv";
  std::ofstream cert = open_output(cert_path);
  const auto& c = res.certificate;
  const double root = std::sqrt(static_cast<double>(c.effective_dim));
  cert << "anchor,max_anchor_norm,max_centered_norm,support_size,effective_dim,"
          "anchor_bound,centered_bound\n";
  cert << res.anchor << ',' << fmt(c.max_anchor_norm) << ',' << fmt(c.max_centered_norm) << ','
       << c.support_size << ',' << c.effective_dim << ',' << fmt(2.0 * root) << ','
       << fmt(4.0 * root) << '\n';
  if (!design || !cert) throw IoError("failed writing design outputs under " + dir.string());
  files.insert(files.end(), {design_path, cert_path});
  return c;
}

std::string c_directory(double c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c_%g", c);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::Regret: return "regret";
    case Mode::Pac: return "pac";
    case Mode::Bai: return "bai";
    case Mode::DesignCert: return "design-cert";
    case Mode::ErrorScaling: return "error-scaling";
  }
  return "unknown";
}

Mode parse_mode(const std::string& name) {
  if (name == "regret") return Mode::Regret;
  if (name == "pac") return Mode::Pac;
  if (name == "bai") return Mode::Bai;
  if (name == "design-cert") return Mode::DesignCert;
  if (name == "error-scaling") return Mode::ErrorScaling;
  throw ConfigError("mode", "unknown mode '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (replications < 1) throw ConfigError("replications", "must be at least 1");
  if (trajectory_stride < 1) throw ConfigError("trajectory_stride", "must be at least 1");
  if (output.empty()) throw ConfigError("output", "must not be empty");

  const auto& e = environment;
  switch (e.source) {
    case EnvironmentSource::Explicit:
      if (e.features.empty()) throw ConfigError("environment.features", "required");
      if (e.theta_star.empty()) throw ConfigError("environment.theta_star", "required");
      break;
    case EnvironmentSource::FeaturesFile:
      if (e.features_file.empty()) throw ConfigError("environment.features_file", "required");
      if (e.theta_star.empty()) throw ConfigError("environment.theta_star", "required");
      break;
    case EnvironmentSource::Gap:
      if (e.d < 1) throw ConfigError("environment.d", "must be at least 1");
      if (e.k < 2) throw ConfigError("environment.K", "must be at least 2");
      if (!(e.gap > 0.0 && e.gap < 2.0)) throw ConfigError("environment.gap", "must lie in (0,2)");
      break;
    case EnvironmentSource::Random:
      if (e.d < 1) throw ConfigError("environment.d", "must be at least 1");
      if (e.k < 2) throw ConfigError("environment.K", "must be at least 2");
      break;
    case EnvironmentSource::Mab:
      if (e.mu.size() < 2) throw ConfigError("environment.mu", "needs at least two means");
      break;
  }

  if (is_sbe_mode(mode)) {
    try {
      sbe.validate();
    } catch (const ConfigError& err) {
      throw ConfigError("sbe." + err.field(), err.what());
    }
    for (double c : c_values) {
      if (!(c > 0.0)) throw ConfigError("sbe.c_values", "entries must be positive");
    }
  }
  if (mode == Mode::Pac || mode == Mode::ErrorScaling) {
    if (!(pure.delta > 0.0 && pure.delta < 1.0)) {
      throw ConfigError("pure_exploration.delta", "must lie in (0,1)");
    }
    if (pure.budget < 0) throw ConfigError("pure_exploration.budget", "must be nonnegative");
    if (pure.budget == 0 && !pure.epsilon) {
      throw ConfigError("pure_exploration.budget", "required unless epsilon is given");
    }
    if (pure.epsilon && !(*pure.epsilon > 0.0)) {
      throw ConfigError("pure_exploration.epsilon", "must be positive");
    }
    if (!(pure.c2 > 0.0)) throw ConfigError("pure_exploration.c2", "must be positive");
    if (pure.snapshot_stride < 1) {
      throw ConfigError("pure_exploration.snapshot_stride", "must be at least 1");
    }
  }
  if (!(design.fw_tol > 0.0)) throw ConfigError("design.fw_tol", "must be positive");
  if (design.anchor < 0) throw ConfigError("design.anchor", "must be nonnegative");
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  ExperimentConfig cfg;
  cfg.mode = parse_mode(read<std::string>(j, "mode", "regret", ""));
  cfg.replications = read<long>(j, "replications", 1, "");
  cfg.base_seed = read<std::uint64_t>(j, "base_seed", 0, "");
  cfg.output = read<std::string>(j, "output", "out", "");
  cfg.threads = read<unsigned>(j, "threads", 0, "");
  cfg.trajectory_stride = read<long>(j, "trajectory_stride", 1, "");

  if (const json* e = find(j, "environment")) {
    cfg.environment = parse_environment(*e);
  } else {
    throw ConfigError("environment", "required");
  }

  if (const json* s = find(j, "sbe")) {
    if (!s->is_object()) throw ConfigError("sbe", "expected an object");
    const std::string p = "sbe.";
    auto& sbe = cfg.sbe;
    sbe.delta = read<double>(*s, "delta", sbe.delta, p);
    sbe.horizon = read<long>(*s, "horizon", sbe.horizon, p);
    sbe.c2 = read<double>(*s, "c2", sbe.c2, p);
    sbe.c3 = read<double>(*s, "c3", sbe.c3, p);
    sbe.fw_tol = read<double>(*s, "fw_tol", sbe.fw_tol, p);
    const std::string schedule = read<std::string>(*s, "schedule", "fixed", p);
    if (schedule == "fixed") {
      sbe.schedule = Schedule::Fixed;
    } else if (schedule == "adaptive") {
      sbe.schedule = Schedule::Adaptive;
    } else {
      throw ConfigError("sbe.schedule", "expected 'fixed' or 'adaptive'");
    }
    const std::string arms = read<std::string>(*s, "arm_count", "active", p);
    if (arms == "active") {
      sbe.arm_count = ArmCountInLog::Active;
    } else if (arms == "original") {
      sbe.arm_count = ArmCountInLog::Original;
    } else {
      throw ConfigError("sbe.arm_count", "expected 'active' or 'original'");
    }
    cfg.c_values = read_vector(*s, "c_values", p);
  }

  if (const json* pe = find(j, "pure_exploration")) {
    if (!pe->is_object()) throw ConfigError("pure_exploration", "expected an object");
    const std::string p = "pure_exploration.";
    auto& pc = cfg.pure;
    pc.budget = read<long>(*pe, "budget", pc.budget, p);
    pc.delta = read<double>(*pe, "delta", pc.delta, p);
    if (find(*pe, "epsilon")) pc.epsilon = read<double>(*pe, "epsilon", 0.0, p);
    pc.c2 = read<double>(*pe, "c2", pc.c2, p);
    pc.snapshot_stride = read<long>(*pe, "snapshot_stride", pc.snapshot_stride, p);
  }

  if (const json* d = find(j, "design")) {
    if (!d->is_object()) throw ConfigError("design", "expected an object");
    cfg.design.anchor = read<long>(*d, "anchor", 0, "design.");
    cfg.design.fw_tol = read<double>(*d, "fw_tol", cfg.design.fw_tol, "design.");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["mode"] = to_string(cfg.mode);
  j["replications"] = cfg.replications;
  j["base_seed"] = cfg.base_seed;
  j["output"] = cfg.output;
  j["threads"] = cfg.threads;
  j["trajectory_stride"] = cfg.trajectory_stride;
  j["environment"] = environment_config_to_json(cfg.environment);
  j["sbe"] = {{"delta", cfg.sbe.delta},
              {"horizon", cfg.sbe.horizon},
              {"c2", cfg.sbe.c2},
              {"c3", cfg.sbe.c3},
              {"fw_tol", cfg.sbe.fw_tol},
              {"schedule", cfg.sbe.schedule == Schedule::Fixed ? "fixed" : "adaptive"},
              {"arm_count", cfg.sbe.arm_count == ArmCountInLog::Active ? "active" : "original"},
              {"c_values", cfg.c_values}};
  j["pure_exploration"] = {{"budget", cfg.pure.budget},
                           {"delta", cfg.pure.delta},
                           {"c2", cfg.pure.c2},
                           {"snapshot_stride", cfg.pure.snapshot_stride}};
  if (cfg.pure.epsilon) j["pure_exploration"]["epsilon"] = *cfg.pure.epsilon;
  j["design"] = {{"anchor", cfg.design.anchor}, {"fw_tol", cfg.design.fw_tol}};
  return j;
}

Environment build_environment(const ExperimentConfig& cfg, std::uint64_t replication_seed) {
  const auto& e = cfg.environment;
  const std::uint64_t instance_seed = e.fresh_instance_per_replication
                                          ? replication_seed
                                          : e.instance_seed.value_or(cfg.base_seed);
  switch (e.source) {
    case EnvironmentSource::Explicit:
    case EnvironmentSource::FeaturesFile: {
      FeatureSet features = e.source == EnvironmentSource::Explicit
                                ? FeatureSet::from_rows(e.features)
                                : read_features(e.features_file);
      if (static_cast<Eigen::Index>(e.theta_star.size()) != features.dim()) {
        throw ConfigError("environment.theta_star", "length does not match the feature dimension");
      }
      const Vector theta = Eigen::Map<const Vector>(e.theta_star.data(),
                                                    static_cast<Eigen::Index>(e.theta_star.size()));
      return Environment(std::move(features), theta, e.shift, e.noise, replication_seed);
    }
    case EnvironmentSource::Gap:
      return make_gap_instance(e.d, e.k, e.gap, instance_seed, e.shift, e.noise)
          .reseeded(replication_seed);
    case EnvironmentSource::Random:
      return make_random_instance(e.d, e.k, instance_seed, e.shift, e.noise)
          .reseeded(replication_seed);
    case EnvironmentSource::Mab: {
      const Vector mu = Eigen::Map<const Vector>(e.mu.data(), static_cast<Eigen::Index>(e.mu.size()));
      return make_mab_embedding(mu, e.shift, e.noise, replication_seed).env;
    }
  }
  throw ConfigError("environment.generator", "unsupported");
}

json environment_to_json(const Environment& env) {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < env.num_arms(); ++i) {
    const Vector x = env.features().arm(i);
    rows.emplace_back(x.data(), x.data() + x.size());
  }
  const Vector& th = env.theta_star();
  return json{{"generator", "explicit"},
              {"features", rows},
              {"theta_star", std::vector<double>(th.data(), th.data() + th.size())},
              {"shift", shift_to_json(env.shift())},
              {"noise", noise_to_json(env.noise())},
              {"seed", env.seed()}};
}

Environment environment_from_json(const json& j) {
  EnvironmentConfig e = parse_environment(j);
  if (e.source != EnvironmentSource::Explicit) {
    throw ConfigError("environment.generator", "expected an explicit environment");
  }
  ExperimentConfig cfg;
  cfg.environment = std::move(e);
  const std::uint64_t seed = read<std::uint64_t>(j, "seed", 0, "environment.");
  return build_environment(cfg, seed);
}

// ---------------------------------------------------------------------------
// Metrics and runs

double snapshot_error(const EstimateSnapshot& snap, const Environment& env) {
  const Vector err = snap.theta_hat - env.theta_star();
  const Matrix& x = env.features().matrix();
  const double anchor_value = x.col(snap.anchor).dot(err);
  double worst = 0.0;
  for (Arm i : snap.arms) worst = std::max(worst, std::abs(x.col(i).dot(err) - anchor_value));
  return worst;
}

std::vector<MetricRow> compute_metrics(const RunRecord& record, const Environment& env) {
  std::vector<double> errors;
  errors.reserve(record.snapshots.size());
  for (const auto& s : record.snapshots) errors.push_back(snapshot_error(s, env));

  std::vector<MetricRow> rows;
  rows.reserve(record.steps.size());
  std::size_t snap = 0;
  bool have_snapshot = false;
  double cum = 0.0;
  for (const auto& st : record.steps) {
    while (snap < record.snapshots.size() && record.snapshots[snap].t <= st.t) {
      ++snap;
      have_snapshot = true;
    }
    MetricRow r;
    r.t = st.t;
    r.phase = st.phase;
    r.arm = st.arm;
    r.reward = st.reward;
    r.inst_regret = env.regret_of(st.arm);
    cum += r.inst_regret;
    r.cum_regret = cum;
    r.e_t = have_snapshot ? errors[snap - 1] : 0.0;
    r.sqrt_t_e_t = std::sqrt(static_cast<double>(st.t)) * r.e_t;
    r.active_size = st.active_size;
    rows.push_back(r);
  }
  return rows;
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::filesystem::path root(cfg.output);
  ensure_directory(root);
  const std::string started = utc_now();

  ExperimentSummary summary;
  if (cfg.mode == Mode::DesignCert) {
    summary.certificate = run_design_cert(cfg, root, summary.files);
  } else if (is_sbe_mode(cfg.mode) && !cfg.c_values.empty()) {
    for (double c : cfg.c_values) {
      auto block = run_block(cfg, c, root / c_directory(c), summary.files);
      summary.replications.insert(summary.replications.end(), block.begin(), block.end());
    }
  } else {
    summary.replications = run_block(cfg, 0.0, root, summary.files);
  }

  json manifest;
  manifest["tool"] = "sbandit";
  manifest["version"] = kVersion;
  manifest["config"] = to_json(cfg);
  std::vector<std::uint64_t> seeds;
  for (long r = 0; r < cfg.replications; ++r) seeds.push_back(cfg.base_seed + static_cast<std::uint64_t>(r));
  manifest["seeds"] = seeds;
  manifest["seed_rule"] = "replication seed = base_seed + replication index";
  manifest["started_at"] = started;
  manifest["finished_at"] = utc_now();
  std::vector<std::string> names;
  for (const auto& f : summary.files) names.push_back(f.lexically_relative(root).string());
  manifest["files"] = names;

  const auto manifest_path = root / "manifest.json";
  std::ofstream out = open_output(manifest_path);
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + manifest_path.string());
  summary.files.push_back(manifest_path);
  return summary;
}

}  // namespace sbandit
