// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sbandit/design.hpp"
#include "sbandit/environment.hpp"
#include "sbandit/estimator.hpp"
#include "sbandit/harness.hpp"
#include "sbandit/linalg.hpp"
#include "sbandit/log.hpp"
#include "sbandit/random.hpp"
#include "sbandit/sbe.hpp"

using namespace sbandit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

// Inverse-CDF arm draw.
Arm draw(const Vector& p, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  Arm last = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    acc += p(i);
    last = i;
    if (u < acc) return i;
  }
  return last;
}

// ---------------------------------------------------------------------------

Outcome covariance_identity() {
  Rng rng = make_rng(1001, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(uniform01(rng) * 8);
    const Eigen::Index k = 1 + static_cast<Eigen::Index>(uniform01(rng) * 30);
    const FeatureSet f(oracle::random_ball(rng, d, k));
    const DesignPolicy p(oracle::random_simplex(rng, k));
    const double diff =
        (policy_moments(f, p).covariance.matrix() - covariance_pairwise(f, p).matrix()).norm();
    worst = std::max(worst, diff);
  }
  return {worst <= 1e-10, format("max Frobenius gap %.3e over 100 policies", worst)};
}

Outcome deo_certificate() {
  Rng rng = make_rng(1002, 0);
  int bad = 0;
  double worst_anchor = 0.0;
  double worst_centered = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(uniform01(rng) * 9);
    const Eigen::Index k = d + 1 + static_cast<Eigen::Index>(uniform01(rng) * (50 - d));
    const FeatureSet f(oracle::random_ball(rng, d, k));
    const DeoResult r = deo(f);
    const auto& c = r.certificate;
    const double root = std::sqrt(static_cast<double>(c.effective_dim));
    const auto cap = static_cast<std::size_t>(c.effective_dim * (c.effective_dim + 1) / 2 + 1);
    worst_anchor = std::max(worst_anchor, c.max_anchor_norm / (2.0 * root));
    worst_centered = std::max(worst_centered, c.max_centered_norm / (4.0 * root));
    if (c.max_anchor_norm > 2.0 * root * 1.001 || c.max_centered_norm > 4.0 * root * 1.001 ||
        c.support_size > cap) {
      ++bad;
    }
  }
  return {bad == 0, format("%d/200 violations; worst anchor/(2√d) %.4f, centered/(4√d) %.4f",
                           bad, worst_anchor, worst_centered)};
}

Outcome g_optimal_value() {
  Rng rng = make_rng(1003, 0);
  int bad = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(uniform01(rng) * 9);
    const Eigen::Index k = d + static_cast<Eigen::Index>(uniform01(rng) * (50 - d));
    const Matrix x = oracle::random_ball(rng, d, k);
    const GOptimalResult r = g_optimal(FeatureSet(x));
    // Independent evaluation with an explicit inverse.
    const double value = oracle::max_leverage(x, r.policy.probabilities());
    const double ratio = value / static_cast<double>(r.effective_dim);
    worst = std::max(worst, ratio);
    if (r.effective_dim != d || ratio > 1.001) ++bad;
  }
  return {bad == 0, format("%d/100 violations; worst max norm²/d_eff %.7f", bad, worst)};
}

Outcome extended_norm() {
  Rng rng = make_rng(1004, 0);
  int bad = 0;
  double worst_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 3 + static_cast<Eigen::Index>(uniform01(rng) * 8);
    const Eigen::Index rank = 1 + static_cast<Eigen::Index>(uniform01(rng) * (d - 1));
    const auto rd = oracle::random_rank_deficient(rng, d, rank);
    const PsdMatrix a(rd.a);
    Vector coef(rank);
    for (Eigen::Index i = 0; i < rank; ++i) coef(i) = standard_normal(rng);
    const Vector x = rd.basis * coef;
    const NormResult n = weighted_inv_norm(a, x);
    if (!n.in_range()) {
      ++bad;
      continue;
    }
    double previous_err = std::numeric_limits<double>::infinity();
    double previous_val = 0.0;
    for (double lambda : {1e-4, 1e-6, 1e-8}) {
      const double v = oracle::ridge_norm(rd.a, x, lambda);
      const double err = std::abs(v - n.value());
      if (!(err <= previous_err) || !(v >= previous_val)) ++bad;
      previous_err = err;
      previous_val = v;
    }
    const double rel = previous_err / n.value();
    worst_rel = std::max(worst_rel, rel);
    if (rel > 1e-4) ++bad;

    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = standard_normal(rng);
    const Vector outside = x + (Matrix::Identity(d, d) - rd.basis * rd.basis.transpose()) * z;
    if (!weighted_inv_norm(a, outside).is_infinite()) ++bad;
  }
  return {bad == 0, format("%d violations; worst relative gap at λ=1e-8: %.3e", bad, worst_rel)};
}

Outcome comparability() {
  const double delta = 0.1;
  const Environment env = make_gap_instance(5, 10, 0.5, 1005);
  const FeatureSet& f = env.features();
  const double d = static_cast<double>(f.dim());
  long t = 2000;
  for (int i = 0; i < 100; ++i) {
    const long next = std::max(2000L, static_cast<long>(std::ceil(50.0 * d * std::log(d * t / delta))));
    if (next == t) break;
    t = next;
  }
  const DeoResult design = deo(f);
  const PolicyMoments mom = policy_moments(f, design.policy);
  const double lambda = std::log(static_cast<double>(t) / delta) / static_cast<double>(t);
  Matrix sigma = mom.covariance.matrix();
  sigma.diagonal().array() += lambda;
  const PsdMatrix population(sigma);

  int held = 0;
  const int seeds = 500;
  for (int seed = 0; seed < seeds; ++seed) {
    Rng rng = make_rng(static_cast<std::uint64_t>(seed), 1005);
    EstimatorState est(f.dim());
    for (long s = 0; s < t; ++s) est.update(center(f, mom.mean, draw(design.policy.probabilities(), rng)), 0.0);
    Matrix emp = est.gram().matrix() / static_cast<double>(t);
    emp.diagonal().array() += lambda;
    held += psd_sandwich(PsdMatrix(emp), population, 0.5, 1.5);
  }
  return {held >= 495, format("sandwich held in %d/%d seeds at t=%ld", held, seeds, t)};
}

Outcome error_scaling() {
  const long horizon = 100000;
  std::string detail;
  bool pass = true;
  for (auto [d, k] : {std::pair<long, long>{5, 30}, {30, 30}}) {
    const double bound = 10.0 * std::sqrt(static_cast<double>(d) * std::log(static_cast<double>(k)));
    for (const ShiftSpec& shift : {ShiftSpec::sine(), ShiftSpec::log_alternating()}) {
      double worst = 0.0;
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Environment env =
            make_random_instance(d, k, 1006 + seed, shift, NoiseSpec::gaussian(1.0)).reseeded(seed);
        PureExplorationOptions opts;
        opts.snapshot_stride = 1;
        const PureExplorationResult r = run_pure_exploration(env, horizon, 0.1, seed, opts);
        for (const MetricRow& row : compute_metrics(r.record, env)) {
          if (row.t >= 100) worst = std::max(worst, row.sqrt_t_e_t);
        }
      }
      pass = pass && worst <= bound;
      detail += format("(d=%ld,K=%ld,%s) max √t·e_t %.2f ≤ %.2f; ", d, k,
                       to_string(shift.kind).c_str(), worst, bound);
    }
  }
  return {pass, detail};
}

Outcome pac_rate() {
  const double eps = 0.2;
  const double delta = 0.1;
  const long budget = pac_budget(3, 8, eps, delta, 4.0);
  int good = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Environment env =
        make_random_instance(3, 8, 1007 + seed, ShiftSpec::sine(), NoiseSpec::gaussian(1.0))
            .reseeded(seed);
    const PureExplorationResult r = run_pure_exploration(env, budget, delta, seed);
    good += env.regret_of(r.greedy_arm) <= eps;
  }
  return {good >= 180, format("ε-optimal in %d/200 seeds with budget %ld", good, budget)};
}

struct SbeStudy {
  Environment env = make_gap_instance(5, 10, 0.5, 1008);
  SbeConfig cfg;
  std::vector<std::pair<ShiftSpec, std::vector<RunRecord>>> runs;

  SbeStudy() {
    cfg.delta = 0.05;
    cfg.c2 = 1.0;
    cfg.horizon = 100000;
    for (const ShiftSpec& shift : {ShiftSpec::sine(), ShiftSpec::log_alternating()}) {
      const Environment shifted(env.features(), env.theta_star(), shift, NoiseSpec::gaussian(1.0),
                                0, TiePolicy::Error);
      std::vector<RunRecord> recs;
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        recs.push_back(run_sbe(shifted.reseeded(seed), cfg, seed));
      }
      runs.emplace_back(shift, std::move(recs));
    }
  }
};

SbeStudy& sbe_study() {
  static SbeStudy study;
  return study;
}

Outcome sbe_regret() {
  SbeStudy& s = sbe_study();
  const double d = 5.0;
  const double bound = 20.0 * std::sqrt(d * s.cfg.horizon * std::log(10.0));
  bool pass = true;
  std::string detail;
  for (const auto& [shift, recs] : s.runs) {
    int correct = 0;
    int nonzero_after = 0;
    double worst_regret = 0.0;
    for (const RunRecord& rec : recs) {
      const bool declared = rec.declared_best && *rec.declaration_time < s.cfg.horizon;
      correct += declared && *rec.declared_best == s.env.best_arm();
      if (declared) {
        for (const StepLog& st : rec.steps) {
          if (st.t > *rec.declaration_time && st.inst_regret != 0.0) ++nonzero_after;
        }
      }
      worst_regret = std::max(worst_regret, rec.total_regret());
    }
    pass = pass && correct >= 19 && nonzero_after == 0 && worst_regret <= bound;
    detail += format("%s: correct %d/20, nonzero post-declaration steps %d, max regret %.1f ≤ %.1f; ",
                     to_string(shift.kind).c_str(), correct, nonzero_after, worst_regret, bound);
  }
  return {pass, detail};
}

Outcome sbe_flattening() {
  SbeStudy& s = sbe_study();
  long schedule = 0;
  const int last_phase = static_cast<int>(std::ceil(std::log2(4.0 / 0.5))) + 1;
  for (int l = 1; l <= last_phase; ++l) schedule += phase_length(l, 5, 10, s.cfg);
  const long tau_bound = 4 * schedule;

  bool pass = true;
  std::string detail;
  for (const auto& [shift, recs] : s.runs) {
    int flat = 0;
    int successful = 0;
    long worst_tau = 0;
    const Environment shifted(s.env.features(), s.env.theta_star(), shift,
                              NoiseSpec::gaussian(1.0), 0, TiePolicy::Error);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const RunRecord& rec = recs[i];
      if (!rec.declared_best || *rec.declared_best != s.env.best_arm()) continue;
      ++successful;
      const long tau = *rec.declaration_time;
      worst_tau = std::max(worst_tau, tau);
      const long t = tau + 1;
      // Runs are prefix-consistent in the horizon, so a longer rerun extends
      // the same trajectory.
      SbeConfig longer = s.cfg;
      longer.horizon = std::max(s.cfg.horizon, 4 * t);
      const RunRecord ext =
          longer.horizon == s.cfg.horizon ? rec : run_sbe(shifted.reseeded(i), longer, i);
      const double r_t = ext.steps[static_cast<std::size_t>(t - 1)].cum_regret;
      const double r_4t = ext.steps[static_cast<std::size_t>(4 * t - 1)].cum_regret;
      flat += r_4t - r_t == 0.0 && ext.steps[static_cast<std::size_t>(t - 1)].cum_regret ==
                                       rec.steps[static_cast<std::size_t>(t - 1)].cum_regret;
    }
    pass = pass && flat == successful && worst_tau <= tau_bound;
    detail += format("%s: flat in %d/%d successful seeds, max τ %ld ≤ %ld; ",
                     to_string(shift.kind).c_str(), flat, successful, worst_tau, tau_bound);
  }
  return {pass, detail};
}

Outcome adaptive_dominance() {
  SbeConfig fixed;
  fixed.delta = 0.1;
  SbeConfig adaptive = fixed;
  adaptive.schedule = Schedule::Adaptive;
  int bad = 0;
  for (int l = 1; l <= 15; ++l) {
    bad += phase_length(l, 4, 16, adaptive) > phase_length(l, 4, 16, fixed);
  }
  return {bad == 0, format("%d/15 phases with adaptive > fixed (d=4, K=16)", bad)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "sbandit_acceptance_determinism";
  fs::remove_all(root);
  nlohmann::json regret{{"mode", "regret"},
                        {"replications", 3},
                        {"base_seed", 11},
                        {"environment",
                         {{"generator", "gap"},
                          {"d", 5},
                          {"K", 10},
                          {"gap", 0.5},
                          {"instance_seed", 1008},
                          {"shift", {{"kind", "log_alternating"}}},
                          {"noise", {{"kind", "gaussian"}, {"sigma", 1.0}}}}},
                        {"sbe", {{"delta", 0.05}, {"horizon", 20000}, {"c_values", {1, 2}}}}};
  nlohmann::json scaling{{"mode", "error-scaling"},
                         {"replications", 2},
                         {"base_seed", 3},
                         {"environment",
                          {{"generator", "random"},
                           {"d", 5},
                           {"K", 30},
                           {"fresh_instance_per_replication", true},
                           {"shift", {{"kind", "sine"}}},
                           {"noise", {{"kind", "gaussian"}, {"sigma", 1.0}}}}},
                         {"pure_exploration", {{"budget", 5000}, {"delta", 0.1}}}};
  int compared = 0;
  int differing = 0;
  for (auto* cfg : {&regret, &scaling}) {
    std::vector<fs::path> dirs;
    for (int pass = 0; pass < 2; ++pass) {
      const fs::path out = root / (cfg->at("mode").get<std::string>() + std::to_string(pass));
      (*cfg)["output"] = out.string();
      (*cfg)["threads"] = pass + 1;
      run_experiment(parse_config(*cfg));
      dirs.push_back(out);
    }
    for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
      if (entry.path().extension() != ".csv") continue;
      const fs::path rel = fs::relative(entry.path(), dirs[0]);
      ++compared;
      differing += slurp(entry.path()) != slurp(dirs[1] / rel);
    }
  }
  fs::remove_all(root);
  return {compared > 0 && differing == 0,
          format("%d CSV files compared across repeated runs, %d differ", compared, differing)};
}

}  // namespace

int main() {
  set_warning_handler({});
  const std::vector<Criterion> criteria{
      {1, "covariance pairwise identity", 1.0, covariance_identity},
      {2, "design certificate bounds", 30.0, deo_certificate},
      {3, "G-optimal value", 30.0, g_optimal_value},
      {4, "extended norm limit consistency", 5.0, extended_norm},
      {5, "second-moment comparability", 120.0, comparability},
      {6, "estimation error scaling", 600.0, error_scaling},
      {7, "pure-exploration PAC rate", 300.0, pac_rate},
      {8, "SBE regret and best-arm identification", 900.0, sbe_regret},
      {9, "gap-dependent flattening", 900.0, sbe_flattening},
      {10, "adaptive schedule dominance", 1.0, adaptive_dominance},
      {11, "determinism", 600.0, determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.time_limit_s;
    const bool pass = out.pass && in_time;
    failures += !pass;
    std::printf("%s criterion %d: %s | %s| %.2fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", c.id,
                c.name.c_str(), out.detail.c_str(), secs, c.time_limit_s,
                in_time ? "" : " over time limit");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
