#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fgred/factor_graph.hpp"
#include "fgred/graph_io.hpp"
#include "test_support.hpp"

using namespace fgred;
using fgred::testing::random_graph;
using fgred::testing::scalar_graph;

namespace {

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

LinearFactor scalar_factor(Matrix a, double z, double gamma) {
  return LinearFactor(std::move(a), Vector::Constant(1, z), SymMatrix(Matrix::Constant(1, 1, gamma)), 1);
}

/// Uniformly random subset of `from`.
IndexSet random_subset(const IndexSet& from, std::mt19937_64& rng) {
  IndexSet out;
  for (auto k : from)
    if (rng() & 1u) out.push_back(k);
  return out;
}

}  // namespace

TEST(LinearFactor, ShapeChecks) {
  EXPECT_THROW(LinearFactor(Matrix::Zero(2, 2), Vector::Zero(1), SymMatrix::identity(2), 1), DimensionError);
  EXPECT_THROW(LinearFactor(Matrix::Zero(1, 3), Vector::Zero(1), SymMatrix::identity(1), 2), DimensionError);
  EXPECT_THROW(LinearFactor(Matrix::Ones(1, 2), Vector::Zero(1), SymMatrix(Matrix::Constant(1, 1, -1.0)), 1),
               NotPositiveDefinite);
}

TEST(LinearFactor, ArgumentVariables) {
  Matrix a = Matrix::Zero(2, 6);
  a(0, 2) = 1.0;
  a(1, 5) = -1.0;
  const LinearFactor f(a, Vector::Zero(2), SymMatrix::identity(2), 2);
  EXPECT_EQ(f.arg_vars(), (IndexSet{1, 2}));
  EXPECT_THROW(LinearFactor(a, Vector::Zero(2), SymMatrix::identity(2), 2, {1}), DimensionError);
  EXPECT_NO_THROW(LinearFactor(a, Vector::Zero(2), SymMatrix::identity(2), 2, {0, 1, 2}));
}

TEST(StackSubgraph, Examples) {
  const SupplementedGraph g = scalar_graph(1.0, 0.0, {2.0}, {3.0});
  const SubgraphInfo empty = stack_subgraph(g, {});
  EXPECT_EQ(empty.delta(0, 0), 0.0);
  EXPECT_EQ(empty.weighted_rhs(0), 0.0);
  const SubgraphInfo one = stack_subgraph(g, {1});
  EXPECT_DOUBLE_EQ(one.delta(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(one.weighted_rhs(0), 6.0);
  EXPECT_THROW(stack_subgraph(g, {7}), DimensionError);
}

TEST(StackSubgraph, AdditiveOverDisjointSets) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_graph({1 + trial % 4, 4}, rng);
    IndexSet all(g.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    IndexSet j, k;
    for (auto idx : all) {
      const auto r = rng() % 3;
      if (r == 0) j.push_back(idx);
      else if (r == 1) k.push_back(idx);
    }
    IndexSet u = j;
    u.insert(u.end(), k.begin(), k.end());
    u = make_index_set(u);
    const Matrix lhs = g.stack(u).delta.matrix();
    const Matrix rhs = g.stack(j).delta.matrix() + g.stack(k).delta.matrix();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
  }
}

TEST(StackSubgraph, LoewnerMonotone) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_graph({1 + trial % 4, 4}, rng);
    const IndexSet j = random_subset(g.supplemental(), rng);
    const IndexSet jp = random_subset(j, rng);
    const SymMatrix diff = g.stack(j).delta - g.stack(jp).delta;
    EXPECT_GE(diff.min_eigenvalue(), -1e-10);
  }
}

TEST(PriorBelief, Examples) {
  {
    std::vector<LinearFactor> f;
    f.emplace_back(Matrix::Identity(2, 2), Vector::Constant(2, 5.0), SymMatrix::identity(2), 1);
    const SupplementedGraph g(std::move(f), {0}, 2, 1);
    EXPECT_TRUE(g.prior().mean().isApprox(Vector::Constant(2, 5.0)));
    EXPECT_TRUE(g.prior().info().matrix().isApprox(Matrix::Identity(2, 2)));
  }
  {
    std::vector<LinearFactor> f;
    f.push_back(scalar_factor(Matrix::Ones(1, 1), 0.0, 1.0));
    f.push_back(scalar_factor(Matrix::Ones(1, 1), 2.0, 1.0));
    const SupplementedGraph g(std::move(f), {0, 1}, 1, 1);
    EXPECT_DOUBLE_EQ(prior_belief(g).mean()(0), 1.0);
    EXPECT_DOUBLE_EQ(prior_belief(g).info()(0, 0), 2.0);
  }
  {
    std::vector<LinearFactor> f;
    f.push_back(scalar_factor(row({1, 0}), 3.0, 1.0));
    f.push_back(scalar_factor(row({0, 1}), 4.0, 1.0));
    const SupplementedGraph g(std::move(f), {0, 1}, 2, 1);
    EXPECT_NEAR(g.prior().mean()(0), 3.0, 1e-15);
    EXPECT_NEAR(g.prior().mean()(1), 4.0, 1e-15);
    EXPECT_TRUE(g.prior().info().matrix().isApprox(Matrix::Identity(2, 2)));
  }
}

TEST(PriorBelief, RankDeficientBaseRejected) {
  std::vector<LinearFactor> f;
  f.push_back(scalar_factor(row({1, 0}), 3.0, 1.0));
  f.push_back(scalar_factor(row({0, 1}), 4.0, 1.0));
  try {
    SupplementedGraph g(std::move(f), {0}, 2, 1);
    FAIL() << "expected rejection";
  } catch (const NotPositiveDefinite& e) {
    EXPECT_NE(std::string(e.what()).find("base graph not full-rank"), std::string::npos);
  }
}

TEST(PosteriorBelief, Examples) {
  const SupplementedGraph g = scalar_graph(1.0, 0.0, {1.0}, {2.0});
  const GaussianBelief empty = posterior_belief(g, {});
  EXPECT_EQ(empty.mean(), g.prior().mean());
  EXPECT_EQ(empty.info().matrix(), g.prior().info().matrix());
  const GaussianBelief post = posterior_belief(g, {1});
  EXPECT_DOUBLE_EQ(post.mean()(0), 1.0);
  EXPECT_DOUBLE_EQ(post.info()(0, 0), 2.0);
  EXPECT_THROW(posterior_belief(g, {0}), Error);
}

TEST(PosteriorBelief, FullSupplementMatchesDirectStacking) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_graph({1 + trial % 4, 3}, rng);
    const GaussianBelief post = posterior_belief(g, g.supplemental());
    IndexSet all(g.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    const SubgraphInfo full = g.stack(all);
    const Vector direct_mean = full.delta.matrix().ldlt().solve(full.weighted_rhs);
    EXPECT_LT((post.info().matrix() - full.delta.matrix()).norm(), 1e-9 * full.delta.matrix().norm());
    EXPECT_LT((post.mean() - direct_mean).norm(), 1e-9 * std::max(1.0, direct_mean.norm()));
  }
}

TEST(MutualInformation, Examples) {
  const SupplementedGraph g = scalar_graph(1.0, 0.0, {1.0});
  EXPECT_EQ(mutual_information(g, {}), 0.0);
  EXPECT_NEAR(mutual_information(g, {1}), 0.5 * std::log(2.0), 1e-15);

  std::vector<LinearFactor> f;
  f.emplace_back(Matrix::Identity(2, 2), Vector::Zero(2), SymMatrix::identity(2), 1);
  f.push_back(scalar_factor(row({1, 0}), 0.0, 3.0));
  const SupplementedGraph g2(std::move(f), {0}, 2, 1);
  EXPECT_NEAR(mutual_information(g2, {1}), std::log(2.0), 1e-15);
}

// Entropy of N(0, s^2) by Simpson quadrature of -p ln p.
TEST(MutualInformation, MatchesEntropyDifferenceQuadrature1d) {
  auto entropy = [](double var) {
    const double s = std::sqrt(var);
    const int n = 20000;
    const double lo = -12 * s, hi = 12 * s, h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = lo + i * h;
      const double p = std::exp(-0.5 * x * x / var) / std::sqrt(2 * M_PI * var);
      const double term = p > 0 ? -p * std::log(p) : 0.0;
      acc += term * (i == 0 || i == n ? 1 : (i % 2 ? 4 : 2));
    }
    return acc * h / 3.0;
  };
  const SupplementedGraph g = scalar_graph(1.0, 0.0, {1.0});
  EXPECT_NEAR(mutual_information(g, {1}), entropy(1.0) - entropy(0.5), 1e-5);
}

TEST(MutualInformation, MonotoneAndMatchesAlternativeForm) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = random_graph({1 + trial % 4, 4}, rng);
    const IndexSet j = random_subset(g.supplemental(), rng);
    const IndexSet jp = random_subset(j, rng);
    EXPECT_LE(mutual_information(g, jp), mutual_information(g, j) + 1e-10);
    const Index n = g.state_dim();
    const Matrix alt = Matrix::Identity(n, n) + g.stack(j).delta.matrix() * g.prior().info().matrix().inverse();
    const double alt_mi = 0.5 * std::log(alt.determinant());
    EXPECT_NEAR(mutual_information(g, j), alt_mi, 1e-9 * std::max(1.0, alt_mi));
  }
}

TEST(SamplePrior, MomentsAndDeterminism) {
  std::mt19937_64 rng(10);
  const auto g = random_graph({3, 2}, rng);
  const std::size_t count = 100000;
  const auto xs = sample_prior(g, 42, count);
  ASSERT_EQ(xs.size(), count);
  Vector mean = Vector::Zero(3);
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(count);
  Matrix cov = Matrix::Zero(3, 3);
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  cov /= static_cast<double>(count - 1);
  const Matrix truth_cov = g.prior().info().matrix().inverse();
  for (Index i = 0; i < 3; ++i) {
    EXPECT_LE(std::abs(mean(i) - g.prior().mean()(i)), 4.0 * std::sqrt(truth_cov(i, i) / count));
  }
  EXPECT_LT((cov - truth_cov).norm() / truth_cov.norm(), 0.05);
  const auto again = sample_prior(g, 42, 5);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(again[i], xs[i]);
  EXPECT_THROW(sample_prior(g, 1, 0), Error);
}

TEST(SampleMeasurements, Moments) {
  std::mt19937_64 rng(12);
  const auto g = random_graph({2, 2}, rng);
  const IndexSet j = g.supplemental();
  const Vector x = Vector::Constant(2, 0.7);
  const fgred::testing::SupplementalSampler ref(g, j);
  const Vector mean_truth = ref.a * x;
  const Matrix cov_truth = ref.gamma.inverse();
  const Index r = mean_truth.size();
  const int count = 100000;
  Vector mean = Vector::Zero(r);
  Matrix second = Matrix::Zero(r, r);
  std::vector<Vector> draws;
  draws.reserve(count);
  for (int i = 0; i < count; ++i) draws.push_back(sample_measurements(g, j, x, 1000 + i));
  for (const auto& z : draws) mean += z;
  mean /= count;
  for (const auto& z : draws) second += (z - mean) * (z - mean).transpose();
  second /= (count - 1);
  for (Index i = 0; i < r; ++i) EXPECT_LE(std::abs(mean(i) - mean_truth(i)), 4.0 * std::sqrt(cov_truth(i, i) / count));
  EXPECT_LT((second - cov_truth).norm() / cov_truth.norm(), 0.05);
  EXPECT_EQ(sample_measurements(g, j, x, 7), sample_measurements(g, j, x, 7));
}

TEST(SampleMeasurements, VanishingNoise) {
  std::vector<LinearFactor> f;
  f.emplace_back(Matrix::Identity(2, 2), Vector::Zero(2), SymMatrix::identity(2), 1);
  f.emplace_back(row({1, -2}), Vector::Zero(1), SymMatrix(Matrix::Constant(1, 1, 1e8)), 1);
  const SupplementedGraph g(std::move(f), {0}, 2, 1);
  Vector x(2);
  x << 0.5, 0.25;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    EXPECT_LT(std::abs(sample_measurements(g, {1}, x, seed)(0)), 1e-3);
  }
}

TEST(GraphJson, RoundTrip) {
  std::mt19937_64 rng(13);
  const auto g = random_graph({3, 3}, rng);
  const auto j = graph_to_json(g);
  const auto back = graph_from_json(nlohmann::json::parse(j.dump()));
  ASSERT_EQ(back.size(), g.size());
  EXPECT_EQ(back.base(), g.base());
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_EQ(back.factor(k).A(), g.factor(k).A());
    EXPECT_EQ(back.factor(k).z(), g.factor(k).z());
  }
  EXPECT_TRUE(back.prior().mean().isApprox(g.prior().mean(), 1e-14));
}

TEST(GraphJson, Errors) {
  EXPECT_THROW(graph_from_json(nlohmann::json::parse(R"({"var_dim":1})")), Error);
  EXPECT_THROW(graph_from_json(nlohmann::json::parse(
                   R"({"var_dim":1,"n_vars":1,"factors":[{"A":[[1],[1,2]],"z":[0],"gamma":[[1]]}],"base":[0]})")),
               Error);
}
