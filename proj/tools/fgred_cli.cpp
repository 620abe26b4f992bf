// fgred: run the two-landmark redundancy experiment and its checks.
//
//   fgred simulate --config cfg.json --seed 42 --out out --jobs 4
//   fgred analyze  --out out
//   fgred report   --out out
//   fgred oracle   --seed 7
//   fgred evaluate --graph g.json --antichain "2;3" --kind wass
//
// Exit codes: 0 ok, 1 configuration error, 2 I/O error,
// 3 more than 20% of simulations failed, 4 oracle mismatch.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fgred/experiment/report.hpp"
#include "fgred/graph_io.hpp"

namespace fs = std::filesystem;
using namespace fgred;
using namespace fgred::experiment;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;
constexpr int kExitFailedSims = 3;
constexpr int kExitOracle = 4;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned jobs = 1;
};

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text(c.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw Error(c.config_path + ": " + e.what());
    }
    cfg = experiment::config_from_json(j);
  }
  if (c.seed) cfg.root_seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  cfg.validate();
  return cfg;
}

/// Config stored next to the records by `simulate`, unless one is given.
ExperimentConfig config_for_outputs(const Common& c) {
  Common copy = c;
  if (copy.config_path.empty() && !c.out.empty() && fs::exists(fs::path(c.out) / "config.json")) {
    copy.config_path = (fs::path(c.out) / "config.json").string();
  }
  return load_config(copy);
}

bool too_many_failures(const std::vector<SimRecord>& records) {
  std::size_t failed = 0;
  for (const auto& r : records) failed += !r.valid();
  return 5 * failed > records.size();
}

int cmd_simulate(const Common& c, bool save_worlds) {
  const ExperimentConfig cfg = load_config(c);
  const fs::path out(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  if (save_worlds) {
    fs::create_directories(out / "worlds", ec);
    if (ec) throw IoError("cannot create " + (out / "worlds").string() + ": " + ec.message());
  }
  std::function<void(const SimOutcome&)> dump;
  if (save_worlds) {
    dump = [&](const SimOutcome& o) {
      std::ostringstream name;
      name << "world_" << std::setw(5) << std::setfill('0') << o.record.sim_id << ".json";
      write_text(out / "worlds" / name.str(), slam::world_to_json(o.world).dump(1) + "\n");
    };
  }
  const auto records = run_experiment(cfg, c.jobs, dump);
  write_text(out / "records.csv", records_to_csv(records));
  write_text(out / "config.json", experiment::config_to_json(cfg).dump(2) + "\n");
  std::size_t failed = 0;
  for (const auto& r : records) failed += !r.valid();
  std::cout << "simulated " << records.size() << " worlds (" << failed << " failed) -> " << out.string() << "\n";
  return too_many_failures(records) ? kExitFailedSims : 0;
}

int cmd_analyze(const Common& c, bool with_plots) {
  const ExperimentConfig cfg = config_for_outputs(c);
  const fs::path out(cfg.output_dir);
  const auto records = records_from_csv(read_text(out / "records.csv"));
  const Summary s = correlation_report(records, cfg.permutation_shuffles, cfg.root_seed);
  const nlohmann::json j = summary_to_json(s);
  write_text(out / "summary.json", j.dump(2) + "\n");
  if (with_plots) {
    for (const auto& [name, svg] : report_svgs(records)) write_text(out / name, svg);
  }
  std::cout << j.dump(2) << "\n";
  return too_many_failures(records) ? kExitFailedSims : 0;
}

/// One-dimensional graphs where the redundancy integral has a quadrature
/// reference: Monte Carlo must agree within 3 standard errors.
int cmd_oracle(const Common& c, int instances, int samples) {
  const std::uint64_t seed = c.seed.value_or(7);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.2, 4.0);
  int failures = 0;
  for (int t = 0; t < instances; ++t) {
    std::vector<LinearFactor> f;
    f.emplace_back(Matrix::Ones(1, 1), Vector::Constant(1, u(rng) - 2.0), SymMatrix(Matrix::Constant(1, 1, u(rng))), 1);
    const int n_sources = 2 + t % 3;
    IndexSet base{0};
    std::vector<IndexSet> sources;
    for (int s = 0; s < n_sources; ++s) {
      f.emplace_back(Matrix::Ones(1, 1), Vector::Constant(1, u(rng)), SymMatrix(Matrix::Constant(1, 1, u(rng))), 1);
      sources.push_back({static_cast<std::size_t>(s + 1)});
    }
    const SupplementedGraph g(std::move(f), base, 1, 1);
    const Antichain alpha(sources);
    for (auto kind : {QualityKind::WB, QualityKind::Wass}) {
      const double quad = redundancy_quadrature_1d(g, alpha, kind);
      const auto mc = redundancy_mc(g, alpha, kind, static_cast<std::size_t>(samples), derive_seed(seed, 3, t));
      const double z = (mc.value - quad) / mc.std_error;
      const bool ok = std::abs(z) <= 3.0;
      failures += !ok;
      std::cout << (ok ? "PASS" : "FAIL") << " instance " << t << " " << to_string(kind) << " " << alpha.str()
                << " quadrature=" << quad << " mc=" << mc.value << " se=" << mc.std_error << " z=" << z << "\n";
    }
  }
  std::cout << failures << " mismatches\n";
  return failures ? kExitOracle : 0;
}

Antichain parse_antichain(const std::string& text) {
  // "1,2;3" -> {{1,2},{3}}
  std::vector<IndexSet> sources;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ';');) {
    IndexSet src;
    std::stringstream ps(part);
    for (std::string item; std::getline(ps, item, ',');) {
      try {
        src.push_back(static_cast<std::size_t>(std::stoull(item)));
      } catch (const std::logic_error&) {
        throw Error("bad antichain entry '" + item + "'");
      }
    }
    sources.push_back(src);
  }
  return Antichain(sources);
}

int cmd_evaluate(const Common& c, const std::string& graph_path, const std::string& antichain,
                 const std::string& kind_name, int samples) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(graph_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(graph_path + ": " + e.what());
  }
  const SupplementedGraph g = graph_from_json(j);
  const Antichain alpha = parse_antichain(antichain);
  const QualityKind kind = parse_quality_kind(kind_name);
  const auto est = redundancy_mc(g, alpha, kind, static_cast<std::size_t>(samples), c.seed.value_or(0));
  nlohmann::json q;
  for (const auto& src : alpha.sources()) q[to_string(src)] = quality(g, src, kind);
  const nlohmann::json out{{"antichain", alpha.str()}, {"kind", to_string(kind)}, {"redundancy", est.value},
                           {"std_error", est.std_error}, {"n_samples", est.n_samples}, {"qualities", q}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Redundancy of supplemental information in linear-Gaussian factor graphs"};
  app.require_subcommand(1);
  Common common;
  const auto add_common = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--config", common.config_path, "experiment config JSON");
    sub->add_option("--seed", common.seed, "root seed (overrides the config)");
    sub->add_option("--out", common.out, "output directory (overrides the config)");
    if (with_jobs) sub->add_option("--jobs", common.jobs, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  };

  bool save_worlds = false;
  auto* simulate = app.add_subcommand("simulate", "run the batch and write records.csv and config.json");
  add_common(simulate, true);
  simulate->add_flag("--save-worlds", save_worlds, "also write every simulated world as JSON");

  auto* analyze = app.add_subcommand("analyze", "compute summary.json from records.csv");
  add_common(analyze, false);
  auto* report = app.add_subcommand("report", "summary.json plus SVG scatter plots");
  add_common(report, false);

  int oracle_instances = 20, oracle_samples = 20000;
  auto* oracle = app.add_subcommand("oracle", "1D quadrature vs Monte Carlo redundancy checks");
  add_common(oracle, false);
  oracle->add_option("--instances", oracle_instances)->check(CLI::PositiveNumber);
  oracle->add_option("--samples", oracle_samples)->check(CLI::Range(2, 100000000));

  std::string graph_path, antichain, kind = "wass";
  int eval_samples = static_cast<int>(kDefaultMcSamples);
  auto* evaluate = app.add_subcommand("evaluate", "redundancy of an antichain on a graph JSON file");
  add_common(evaluate, false);
  evaluate->add_option("--graph", graph_path)->required();
  evaluate->add_option("--antichain", antichain, "sources separated by ';', factors by ','")->required();
  evaluate->add_option("--kind", kind, "wb or wass");
  evaluate->add_option("--samples", eval_samples)->check(CLI::Range(2, 100000000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(common, save_worlds);
    if (*analyze) return cmd_analyze(common, false);
    if (*report) return cmd_analyze(common, true);
    if (*oracle) return cmd_oracle(common, oracle_instances, oracle_samples);
    if (*evaluate) return cmd_evaluate(common, graph_path, antichain, kind, eval_samples);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
