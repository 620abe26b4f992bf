#pragma once

// Batch runner for the two-landmark experiment. Simulation k draws its world
// from derive_seed(root, 0, k) and its prior samples from
// derive_seed(root, 1, k), so records do not depend on the worker count.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fgred/redundancy.hpp"
#include "fgred/slam/alignment.hpp"
#include "fgred/slam/pose_graph.hpp"
#include "fgred/slam/world.hpp"

namespace fgred::experiment {

struct ExperimentConfig {
  slam::SimConfig sim;
  int n_sims = 500;
  int mc_samples = static_cast<int>(kDefaultMcSamples);
  std::vector<QualityKind> kinds{QualityKind::WB, QualityKind::Wass};
  std::string output_dir = "out";
  std::uint64_t root_seed = 42;
  int permutation_shuffles = 10000;

  void validate() const {
    sim.validate();
    if (n_sims < 1) throw Error("experiment config: n_sims must be >= 1");
    if (mc_samples < 100) throw Error("experiment config: mc_samples must be >= 100");
    if (kinds.empty()) throw Error("experiment config: kinds must not be empty");
    if (permutation_shuffles < 1) throw Error("experiment config: permutation_shuffles must be >= 1");
  }

  bool wants(QualityKind k) const { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); }
};

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json kinds = nlohmann::json::array();
  for (auto k : c.kinds) kinds.push_back(to_string(k));
  nlohmann::json sim = slam::config_to_json(c.sim);
  sim.erase("seed");  // per-simulation seeds come from root_seed
  return {{"sim", sim},
          {"n_sims", c.n_sims},
          {"mc_samples", c.mc_samples},
          {"kinds", kinds},
          {"output_dir", c.output_dir},
          {"root_seed", c.root_seed},
          {"permutation_shuffles", c.permutation_shuffles}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "sim") c.sim = slam::config_from_json(v);
      else if (key == "n_sims") c.n_sims = v.get<int>();
      else if (key == "mc_samples") c.mc_samples = v.get<int>();
      else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "root_seed") c.root_seed = v.get<std::uint64_t>();
      else if (key == "permutation_shuffles") c.permutation_shuffles = v.get<int>();
      else if (key == "kinds") {
        c.kinds.clear();
        for (const auto& k : v) c.kinds.push_back(parse_quality_kind(k.get<std::string>()));
      } else {
        throw Error("experiment config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

struct SimRecord {
  std::uint64_t sim_id = 0;
  double r_wb = std::numeric_limits<double>::quiet_NaN();
  double r_wb_se = std::numeric_limits<double>::quiet_NaN();
  double r_wass = std::numeric_limits<double>::quiet_NaN();
  double r_wass_se = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 2> q_wb{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  std::array<double, 2> q_wass{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double wc_ate = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 2> mean_dist{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  std::array<std::vector<double>, 2> posewise_dist;  // X_1..X_n to each landmark
  std::array<bool, 2> converged{false, false};
  std::string error;  // non-empty when the simulation failed outright

  bool valid() const { return error.empty() && converged[0] && converged[1]; }
};

/// Everything a single simulation produces, for callers that need more than
/// the record (tests, world dumps).
struct SimOutcome {
  SimRecord record;
  slam::SimWorld world;
  slam::NonlinearGraph graph;
  slam::SubgraphSolutions solutions;
};

inline SimOutcome run_simulation_detailed(const ExperimentConfig& config, std::uint64_t sim_id) {
  SimOutcome out;
  SimRecord& rec = out.record;
  rec.sim_id = sim_id;
  slam::SimConfig sim = config.sim;
  sim.seed = derive_seed(config.root_seed, 0, sim_id);
  try {
    out.world = slam::simulate_world(sim);
    const auto& w = out.world;
    for (std::size_t s = 0; s < 2; ++s) {
      double total = 0.0;
      for (std::size_t i = 1; i < w.truth_poses.size(); ++i) {
        const double d = (w.truth_poses[i].translation() - w.landmarks[s]).norm();
        rec.posewise_dist[s].push_back(d);
        total += d;
      }
      rec.mean_dist[s] = total / static_cast<double>(rec.posewise_dist[s].size());
    }
    out.graph = slam::build_nonlinear_graph(w);
    out.solutions = slam::solve_subgraphs(out.graph, slam::initial_values(out.graph));
    const auto& sol = out.solutions;
    for (std::size_t s = 0; s < 2; ++s) rec.converged[s] = sol.base.converged && sol.sources[s].converged;
    if (!rec.valid()) return out;

    const std::vector<slam::Pose2> truth(w.truth_poses.begin() + 1, w.truth_poses.end());
    std::vector<std::vector<slam::Pose2>> estimates;
    for (const auto& r : sol.sources) estimates.emplace_back(r.values.poses.begin() + 1, r.values.poses.end());
    rec.wc_ate = slam::wc_ate(truth, estimates);

    const SupplementedGraph pg = slam::landmark_pose_graph(out.graph, sol);
    const Antichain alpha = slam::landmark_antichain(out.graph);
    const auto samples =
        sample_prior(pg, derive_seed(config.root_seed, 1, sim_id), static_cast<std::size_t>(config.mc_samples));
    for (int s = 0; s < 2; ++s) {
      const IndexSet j{slam::landmark_factor(out.graph, s)};
      if (config.wants(QualityKind::WB)) rec.q_wb[static_cast<std::size_t>(s)] = quality(pg, j, QualityKind::WB);
      if (config.wants(QualityKind::Wass)) rec.q_wass[static_cast<std::size_t>(s)] = quality(pg, j, QualityKind::Wass);
    }
    if (config.wants(QualityKind::WB)) {
      const auto est = redundancy_on_samples(pg, alpha, QualityKind::WB, samples);
      rec.r_wb = est.value;
      rec.r_wb_se = est.std_error;
    }
    if (config.wants(QualityKind::Wass)) {
      const auto est = redundancy_on_samples(pg, alpha, QualityKind::Wass, samples);
      rec.r_wass = est.value;
      rec.r_wass_se = est.std_error;
    }
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.converged = {false, false};
  }
  return out;
}

inline SimRecord run_simulation(const ExperimentConfig& config, std::uint64_t sim_id) {
  return run_simulation_detailed(config, sim_id).record;
}

/// Runs every simulation on `jobs` workers (0 = hardware concurrency) and
/// returns records ordered by sim_id. `on_done` is called from worker threads.
inline std::vector<SimRecord> run_experiment(const ExperimentConfig& config, unsigned jobs = 1,
                                             const std::function<void(const SimOutcome&)>& on_done = {}) {
  config.validate();
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto n = static_cast<std::size_t>(config.n_sims);
  std::vector<SimRecord> records(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      SimOutcome out = run_simulation_detailed(config, k);
      if (on_done) on_done(out);
      records[k] = std::move(out.record);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::min<std::size_t>(jobs, n); ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return records;
}

}  // namespace fgred::experiment
