#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <regex>
#include <stack>

#include "fgred/experiment/report.hpp"

using namespace fgred;
using namespace fgred::experiment;

namespace {

ExperimentConfig small_config(int n_sims) {
  ExperimentConfig c;
  c.n_sims = n_sims;
  c.mc_samples = 2000;
  c.permutation_shuffles = 500;
  c.root_seed = 7;
  return c;
}

/// Brute-force Spearman: Pearson on ranks computed by counting.
double spearman_by_counting(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Minimal XML check: every opened element is closed in order.
bool balanced_xml(const std::string& s) {
  std::stack<std::string> open;
  const std::regex tag(R"(<(/?)([A-Za-z][A-Za-z0-9:_-]*)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[3] == "/") continue;
    if (m[1] == "/") {
      if (open.empty() || open.top() != m[2]) return false;
      open.pop();
    } else {
      open.push(m[2]);
    }
  }
  return open.empty();
}

SimRecord fake_record(std::uint64_t id, double r, double wc, double d0, double d1) {
  SimRecord rec;
  rec.sim_id = id;
  rec.r_wb = r;
  rec.r_wb_se = 0.01;
  rec.r_wass = 2 * r;
  rec.r_wass_se = 0.02;
  rec.q_wb = {r + 1, r + 2};
  rec.q_wass = {r + 3, r + 4};
  rec.wc_ate = wc;
  rec.mean_dist = {d0, d1};
  rec.converged = {true, true};
  return rec;
}

}  // namespace

TEST(Stats, SpearmanExamples) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(spearman(a, {10, 20, 30, 40, 50}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, {-1, -4, -9, -16, -25}), -1.0);
  EXPECT_TRUE(std::isnan(spearman(a, {3, 3, 3, 3, 3})));
  EXPECT_TRUE(std::isnan(spearman({1}, {2})));
  EXPECT_THROW(spearman(a, {1, 2}), DimensionError);
}

TEST(Stats, SpearmanMatchesCountingWithTies) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> u(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a, b;
    for (int k = 0; k < 25; ++k) {
      a.push_back(u(rng));
      b.push_back(u(rng) + 0.5 * a.back());
    }
    EXPECT_NEAR(spearman(a, b), spearman_by_counting(a, b), 1e-12);
  }
}

TEST(Stats, PermutationPValue) {
  std::vector<double> a, b;
  for (int k = 0; k < 40; ++k) {
    a.push_back(k);
    b.push_back(-k);
  }
  EXPECT_DOUBLE_EQ(permutation_p_negative(a, b, 999, 3), 1.0 / 1000.0);
  EXPECT_DOUBLE_EQ(permutation_p_negative(a, a, 999, 3), 1.0);
  EXPECT_EQ(permutation_p_negative(a, b, 200, 5), permutation_p_negative(a, b, 200, 5));
}

TEST(Stats, MedianAndZscore) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
  const auto z = zscore({1, 2, 3});
  EXPECT_DOUBLE_EQ(z[0], -1.0);
  EXPECT_DOUBLE_EQ(z[2], 1.0);
  EXPECT_EQ(zscore({5, 5}), (std::vector<double>{0, 0}));
}

TEST(Csv, HeaderAndRoundTrip) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<SimRecord> recs;
  for (std::uint64_t k = 0; k < 20; ++k) recs.push_back(fake_record(k, u(rng), std::exp(u(rng)), 5 + u(rng), 5 + u(rng)));
  recs[3].converged[1] = false;
  recs[4].r_wb = std::numeric_limits<double>::quiet_NaN();
  const std::string csv = records_to_csv(recs);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  for (std::size_t rows = 0; std::getline(in, line); ++rows) {
    EXPECT_EQ(static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1, kCsvColumns);
  }
  const auto back = records_from_csv(csv);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t k = 0; k < recs.size(); ++k) {
    EXPECT_EQ(back[k].sim_id, recs[k].sim_id);
    EXPECT_EQ(back[k].converged, recs[k].converged);
    const auto near = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || std::abs(x - y) <= 1e-9; };
    EXPECT_TRUE(near(back[k].r_wb, recs[k].r_wb));
    EXPECT_TRUE(near(back[k].r_wass_se, recs[k].r_wass_se));
    EXPECT_TRUE(near(back[k].q_wass[1], recs[k].q_wass[1]));
    EXPECT_TRUE(near(back[k].wc_ate, recs[k].wc_ate));
    EXPECT_TRUE(near(back[k].mean_dist[0], recs[k].mean_dist[0]));
  }
  EXPECT_EQ(records_to_csv(back), csv);
}

TEST(Csv, Malformed) {
  EXPECT_THROW(records_from_csv("wrong,header\n"), Error);
  EXPECT_THROW(records_from_csv(std::string(kCsvHeader) + "\n1,2,3\n"), Error);
}

TEST(Report, TooFewValidRecords) {
  std::vector<SimRecord> recs;
  for (std::uint64_t k = 0; k < 40; ++k) recs.push_back(fake_record(k, k, 1.0 / (1 + k), k, k));
  for (std::size_t k = 0; k < 15; ++k) recs[k].converged[0] = false;
  EXPECT_THROW(correlation_report(recs, 100, 1), Error);
}

TEST(Report, SummaryShapeAndTrends) {
  std::vector<SimRecord> recs;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const double r = static_cast<double>(k);
    recs.push_back(fake_record(k, r, 100.0 - r, 50.0 - 0.3 * r, 60.0 - 0.4 * r));
  }
  const Summary s = correlation_report(recs, 999, 1);
  EXPECT_EQ(s.n_valid, 100u);
  EXPECT_DOUBLE_EQ(s.kinds.at("wass").vs_wcate.rho, -1.0);
  EXPECT_DOUBLE_EQ(s.kinds.at("wb").vs_max_dist.rho, -1.0);
  EXPECT_DOUBLE_EQ(s.kinds.at("wass").vs_wcate.p_negative, 1.0 / 1000.0);
  EXPECT_LT(s.kinds.at("wass").quartiles.top, s.kinds.at("wass").quartiles.bottom);
  EXPECT_TRUE(s.kinds.at("wass").top_decile.both_below());
  const auto j = summary_to_json(s);
  for (const char* key : {"spearman_rwass_wcate", "spearman_rwb_wcate", "spearman_r_dist", "quartile_medians",
                          "top_decile", "p_values_negative", "n_valid"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_TRUE(j["undefined"].empty());
}

TEST(Report, ConstantRedundancyIsReportedUndefined) {
  std::vector<SimRecord> recs;
  for (std::uint64_t k = 0; k < 40; ++k) recs.push_back(fake_record(k, 1.0, static_cast<double>(k), k, k));
  const Summary s = correlation_report(recs, 100, 1);
  EXPECT_FALSE(s.kinds.at("wb").vs_wcate.defined());
  EXPECT_EQ(s.undefined.size(), 4u);
  EXPECT_TRUE(summary_to_json(s)["spearman_rwb_wcate"].is_null());
}

TEST(Report, SvgWellFormed) {
  std::vector<SimRecord> recs;
  for (std::uint64_t k = 0; k < 50; ++k) recs.push_back(fake_record(k, std::sin(k), 1.0 + std::cos(k), 3 + k % 7, 4));
  recs[0].converged[0] = false;
  const auto svgs = report_svgs(recs);
  ASSERT_EQ(svgs.size(), 2u);
  for (const auto& [name, svg] : svgs) {
    EXPECT_EQ(svg.rfind("<svg", 0) == 0 || svg.rfind("<?xml", 0) == 0, true) << name;
    EXPECT_TRUE(balanced_xml(svg)) << name;
    EXPECT_EQ(svg.find("nan"), std::string::npos) << name;
  }
}

TEST(ExperimentConfig, JsonErrors) {
  EXPECT_THROW(experiment::config_from_json({{"n_sims", 0}}), Error);
  EXPECT_THROW(experiment::config_from_json({{"mystery", 1}}), Error);
  EXPECT_THROW(experiment::config_from_json({{"kinds", {"kl"}}}), Error);
  EXPECT_THROW(experiment::config_from_json({{"sim", {{"n_poses", "ten"}}}}), Error);
  EXPECT_THROW(experiment::config_from_json(nlohmann::json::array()), Error);
  const auto c = experiment::config_from_json({{"n_sims", 3}, {"kinds", {"wass"}}});
  EXPECT_EQ(c.n_sims, 3);
  EXPECT_FALSE(c.wants(QualityKind::WB));
  EXPECT_EQ(experiment::config_to_json(experiment::config_from_json(experiment::config_to_json(c))),
            experiment::config_to_json(c));
}

TEST(RunSimulation, NoiselessSingleSim) {
  ExperimentConfig c = small_config(1);
  c.sim.noiseless = true;
  const SimRecord r = run_simulation(c, 0);
  ASSERT_TRUE(r.valid()) << r.error;
  EXPECT_LT(r.wc_ate, 1e-10);
  for (int s = 0; s < 2; ++s) {
    EXPECT_GT(r.q_wb[static_cast<std::size_t>(s)], 0.0);
    EXPECT_GT(r.q_wass[static_cast<std::size_t>(s)], 0.0);
  }
  EXPECT_EQ(r.posewise_dist[0].size(), 10u);
}

TEST(RunSimulation, RedundancyBoundedByQualities) {
  const ExperimentConfig c = small_config(20);
  for (const auto& r : run_experiment(c, 2)) {
    ASSERT_TRUE(r.valid()) << r.error;
    // The minimum of the specific qualities is at most either one, in expectation.
    EXPECT_LE(r.r_wass, std::min(r.q_wass[0], r.q_wass[1]) + 4 * r.r_wass_se);
    EXPECT_LE(r.r_wb, std::min(r.q_wb[0], r.q_wb[1]) + 4 * r.r_wb_se);
    EXPECT_GE(r.r_wb_se, 0.0);
  }
}

TEST(RunExperiment, DeterministicAcrossRunsAndWorkers) {
  const ExperimentConfig c = small_config(12);
  const std::string one = records_to_csv(run_experiment(c, 1));
  EXPECT_EQ(records_to_csv(run_experiment(c, 1)), one);
  EXPECT_EQ(records_to_csv(run_experiment(c, 3)), one);
  EXPECT_EQ(records_to_csv(run_experiment(c, 8)), one);
  ExperimentConfig d = c;
  d.root_seed = 8;
  EXPECT_NE(records_to_csv(run_experiment(d, 1)), one);
}

TEST(RunExperiment, QualitiesDropWhenWorldGrows) {
  ExperimentConfig near = small_config(100);
  ExperimentConfig far = near;
  far.sim.C = 2 * near.sim.C;
  const auto a = run_experiment(near, 0), b = run_experiment(far, 0);
  double qa_wb = 0, qb_wb = 0, qa_wass = 0, qb_wass = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_TRUE(a[k].valid() && b[k].valid());
    qa_wb += a[k].q_wb[0] + a[k].q_wb[1];
    qb_wb += b[k].q_wb[0] + b[k].q_wb[1];
    qa_wass += a[k].q_wass[0] + a[k].q_wass[1];
    qb_wass += b[k].q_wass[0] + b[k].q_wass[1];
  }
  EXPECT_LT(qb_wb, qa_wb);
  EXPECT_LT(qb_wass, qa_wass);
}

// Self-redundancy on one simulation in twenty of the default batch: the
// redundancy of a single landmark equals its quality within 3 standard errors.
TEST(RunExperiment, SelfRedundancySpotCheck) {
  const ExperimentConfig c;  // defaults
  int checks = 0;
  for (std::uint64_t id = 0; id < static_cast<std::uint64_t>(c.n_sims); id += 20) {
    const SimOutcome o = run_simulation_detailed(c, id);
    ASSERT_TRUE(o.record.valid()) << o.record.error;
    const SupplementedGraph pg = slam::landmark_pose_graph(o.graph, o.solutions);
    for (int s = 0; s < 2; ++s) {
      const IndexSet j{slam::landmark_factor(o.graph, s)};
      const Antichain single({j});
      for (auto kind : {QualityKind::WB, QualityKind::Wass}) {
        const auto est = redundancy_mc(pg, single, kind, static_cast<std::size_t>(c.mc_samples),
                                       derive_seed(c.root_seed, 1, id));
        EXPECT_LE(std::abs(est.value - quality(pg, j, kind)), 3 * est.std_error)
            << "sim " << id << " landmark " << s << " " << to_string(kind);
        ++checks;
      }
    }
  }
  EXPECT_EQ(checks, 100);
}
