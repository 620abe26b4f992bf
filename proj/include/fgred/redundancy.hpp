#pragma once

// Specific-quality functions and target-integral redundancy.
//
// Both metrics evaluate a source J pointwise at a target state x through a
// specific quality S_J(x), and define
//   Q(J)     = E_{x ~ p_X} S_J(x)
//   R(alpha) = E_{x ~ p_X} min_{J in alpha} S_J(x).
//
// WB   : S_J(x) = I(Z_J; X) - 1/2 [tr(M'_J) - ||x - mu_B||^2_{M_J}]       (nats)
//        M_J  = Lambda_B - Lambda_B Lambda_J^-1 Lambda_B,  M'_J = Delta_J Lambda_J^-1
// WASS : S_J(x) = tr(N'_J) + ||mu_B - x||^2_{N_J}                           (state units^2)
//        N'_J = Lambda_B^-1 - Lambda_J^-1 - Lambda_J^-1 Delta_J Lambda_J^-1
//        N_J  = I - Lambda_B Lambda_J^-2 Lambda_B
// with Lambda_J = Lambda_B + Delta_J. The N' term uses Delta_J (the
// supplemental information only); with that choice E[S^Wass] = Q^Wass holds
// exactly.
//
// Every S_J is a quadratic in x centred on mu_B, so they are all represented
// as QuadraticQuality{offset, weight, centre}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fgred/factor_graph.hpp"
#include "fgred/lattice.hpp"
#include "fgred/random.hpp"

namespace fgred {

enum class QualityKind { WB, Wass };

inline std::string to_string(QualityKind k) { return k == QualityKind::WB ? "wb" : "wass"; }

inline QualityKind parse_quality_kind(const std::string& s) {
  if (s == "wb" || s == "WB") return QualityKind::WB;
  if (s == "wass" || s == "WASS" || s == "Wass") return QualityKind::Wass;
  throw Error("unknown quality kind '" + s + "' (expected wb or wass)");
}

struct WbCoefficients {
  double mi = 0.0;
  SymMatrix M;
  /// Symmetric part of Delta_J Lambda_J^-1; only its trace enters S^WB.
  SymMatrix M_prime;
};

struct WassCoefficients {
  SymMatrix N;
  SymMatrix N_prime;
};

namespace detail {

/// Lambda_B^-1, Lambda_J^-1 and Delta_J for a supplemental set.
struct PosteriorTerms {
  Matrix prior_info;
  Matrix prior_cov;
  Matrix delta;
  Matrix post_cov;
  double logdet_post;
};

inline PosteriorTerms posterior_terms(const SupplementedGraph& graph, const IndexSet& j) {
  graph.check_supplemental(j);
  const GaussianBelief& prior = graph.prior();
  const Index n = graph.state_dim();
  const SymMatrix delta = graph.stack(j).delta;
  const Cholesky post(prior.info() + delta);
  return {prior.info().matrix(), prior.factor().solve(Matrix(Matrix::Identity(n, n))), delta.matrix(),
          post.solve(Matrix(Matrix::Identity(n, n))), post.logdet()};
}

}  // namespace detail

inline WbCoefficients wb_coefficients(const SupplementedGraph& graph, const IndexSet& j) {
  const Index n = graph.state_dim();
  if (j.empty()) {
    graph.check_supplemental(j);
    return {0.0, SymMatrix::zero(n), SymMatrix::zero(n)};
  }
  const auto t = detail::posterior_terms(graph, j);
  // Lambda_B - Lambda_B Lambda_J^-1 Lambda_B == Lambda_B Lambda_J^-1 Delta_J, which avoids the cancellation.
  const Matrix m = t.prior_info * t.post_cov * t.delta;
  const Matrix m_prime = t.delta * t.post_cov;
  const double mi = std::max(0.0, 0.5 * (t.logdet_post - graph.prior().factor().logdet()));
  return {mi, SymMatrix::symmetrize(m), SymMatrix::symmetrize(m_prime)};
}

inline WassCoefficients wass_coefficients(const SupplementedGraph& graph, const IndexSet& j) {
  const Index n = graph.state_dim();
  if (j.empty()) {
    graph.check_supplemental(j);
    return {SymMatrix::zero(n), SymMatrix::zero(n)};
  }
  const auto t = detail::posterior_terms(graph, j);
  // G = Lambda_J^-1 Delta_J; Lambda_J^-1 Lambda_B = I - G, so N = G + G^T - G^T G.
  const Matrix g = t.post_cov * t.delta;
  const Matrix n_mat = g + g.transpose() - g.transpose() * g;
  // Lambda_B^-1 - Lambda_J^-1 - Lambda_J^-1 Delta Lambda_J^-1 == G Lambda_B^-1 G^T (PSD by construction).
  const Matrix n_prime = g * t.prior_cov * g.transpose();
  return {SymMatrix::symmetrize(n_mat), SymMatrix::symmetrize(n_prime)};
}

inline double specific_info_wb(const WbCoefficients& c, const Vector& mu_b, const Vector& x) {
  if (mu_b.size() != x.size()) throw DimensionError("specific_info_wb: dimension mismatch");
  return c.mi - 0.5 * (c.M_prime.trace() - mahalanobis_sq(Vector(x - mu_b), c.M));
}

/// N_J need not be PSD when Lambda_B and Delta_J do not commute, so the
/// quadratic term is evaluated without a PSD check.
inline double specific_wer(const WassCoefficients& c, const Vector& mu_b, const Vector& x) {
  if (mu_b.size() != x.size()) throw DimensionError("specific_wer: dimension mismatch");
  return c.N_prime.trace() + quadratic_form(Vector(mu_b - x), c.N);
}

inline double quality(const SupplementedGraph& graph, const IndexSet& j, QualityKind kind) {
  if (kind == QualityKind::WB) return mutual_information(graph, j);
  graph.check_supplemental(j);
  if (j.empty()) return 0.0;
  const auto t = detail::posterior_terms(graph, j);
  // Lambda_B^-1 - Lambda_J^-1 == Lambda_B^-1 Delta_J Lambda_J^-1
  return std::max(0.0, 2.0 * (t.prior_cov * t.delta * t.post_cov).trace());
}

/// S(x) = offset + (x - centre)^T weight (x - centre).
struct QuadraticQuality {
  double offset = 0.0;
  SymMatrix weight;
  Vector centre;

  double operator()(const Vector& x) const {
    const Vector d = x - centre;
    return offset + d.dot(weight.matrix() * d);
  }
};

inline QuadraticQuality specific_quality(const SupplementedGraph& graph, const IndexSet& j, QualityKind kind) {
  const Vector& mu_b = graph.prior().mean();
  if (kind == QualityKind::WB) {
    const auto c = wb_coefficients(graph, j);
    return {c.mi - 0.5 * c.M_prime.trace(), 0.5 * c.M, mu_b};
  }
  const auto c = wass_coefficients(graph, j);
  return {c.N_prime.trace(), c.N, mu_b};
}

struct RedundancyEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  QualityKind kind = QualityKind::WB;
  /// Position (in alpha.sources()) of the minimizing source for every sample.
  std::vector<std::uint32_t> argmin;
};

inline constexpr std::size_t kDefaultMcSamples = 10000;

namespace detail {

inline std::vector<QuadraticQuality> source_qualities(const SupplementedGraph& graph, const Antichain& alpha,
                                                      QualityKind kind) {
  std::vector<QuadraticQuality> out;
  out.reserve(alpha.size());
  for (const auto& j : alpha.sources()) out.push_back(specific_quality(graph, j, kind));
  return out;
}

}  // namespace detail

/// Mean of min_J S_J(x) over the supplied states (common random numbers for
/// comparing antichains on one sample set).
inline RedundancyEstimate redundancy_on_samples(const SupplementedGraph& graph, const Antichain& alpha,
                                                QualityKind kind, const std::vector<Vector>& samples) {
  if (samples.size() < 2) throw Error("redundancy estimate needs at least 2 samples");
  const auto s = detail::source_qualities(graph, alpha, kind);
  RedundancyEstimate est;
  est.kind = kind;
  est.n_samples = samples.size();
  est.argmin.resize(samples.size());
  // Welford running mean/variance.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double v = s[k](samples[i]);
      if (v < best) {
        best = v;
        arg = static_cast<std::uint32_t>(k);
      }
    }
    est.argmin[i] = arg;
    const double d = best - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (best - mean);
  }
  const auto n = static_cast<double>(samples.size());
  est.value = mean;
  est.std_error = std::sqrt(m2 / (n - 1.0)) / std::sqrt(n);
  return est;
}

inline RedundancyEstimate redundancy_mc(const SupplementedGraph& graph, const Antichain& alpha, QualityKind kind,
                                        std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 2) throw Error("redundancy_mc: n_samples must be at least 2");
  for (const auto& j : alpha.sources()) graph.check_supplemental(j);
  return redundancy_on_samples(graph, alpha, kind, sample_prior(graph, seed, n_samples));
}

/// Deterministic oracle for one-dimensional state spaces: integrates
/// p(x) min_J S_J(x) piecewise between the crossing points of the quadratics
/// with adaptive Gauss-Kronrod quadrature.
inline double redundancy_quadrature_1d(const SupplementedGraph& graph, const Antichain& alpha, QualityKind kind) {
  if (graph.state_dim() != 1) {
    throw DimensionError("redundancy_quadrature_1d: state dimension is " + std::to_string(graph.state_dim()) +
                         ", expected 1");
  }
  const auto s = detail::source_qualities(graph, alpha, kind);
  const double sigma = 1.0 / std::sqrt(graph.prior().info()(0, 0));

  // In u = x - mu each S_k is c_k + w_k u^2; pairwise crossings at u^2 = (c_j - c_i) / (w_i - w_j).
  std::vector<double> cuts;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t k = i + 1; k < s.size(); ++k) {
      const double dw = s[i].weight(0, 0) - s[k].weight(0, 0);
      const double dc = s[k].offset - s[i].offset;
      if (dw != 0.0 && dc / dw > 0.0) {
        const double r = std::sqrt(dc / dw);
        cuts.push_back(-r);
        cuts.push_back(r);
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
  auto integrand = [&](double u) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : s) best = std::min(best, q.offset + q.weight(0, 0) * u * u);
    return norm * std::exp(-0.5 * u * u / (sigma * sigma)) * best;
  };
  using Gk = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> edges;
  edges.push_back(-inf);
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(inf);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    total += Gk::integrate(integrand, edges[k], edges[k + 1], 20, 1e-12);
  }
  return total;
}

}  // namespace fgred
