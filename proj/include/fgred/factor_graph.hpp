#pragma once

// Linear Gaussian factors and supplemented factor graphs.
//
// A factor j contributes exp(-1/2 ||A_j x - z_j||^2_{Gamma_j}). Factors are
// split into a base set B, whose product defines the prior p(x), and the
// supplemental set (everything else). A supplemental subset J defines the
// posterior p(x | z_{B u J}) with information Lambda_B + Delta_J.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fgred/gauss.hpp"
#include "fgred/random.hpp"

namespace fgred {

/// Sorted, duplicate-free list of factor (or predictor) indices.
using IndexSet = std::vector<std::size_t>;

inline IndexSet make_index_set(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline bool is_subset(const IndexSet& a, const IndexSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline bool intersects(const IndexSet& a, const IndexSet& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

inline std::string to_string(const IndexSet& s) {
  std::string out = "{";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(s[k]);
  }
  return out + "}";
}

class LinearFactor {
 public:
  /// Derives the argument variables from the nonzero column blocks of A.
  LinearFactor(Matrix a, Vector z, SymMatrix gamma, Index var_dim)
      : a_(std::move(a)), z_(std::move(z)), gamma_(std::move(gamma)), var_dim_(var_dim) {
    validate_shapes();
    for (Index v = 0; v < a_.cols() / var_dim_; ++v) {
      if (a_.middleCols(v * var_dim_, var_dim_).cwiseAbs().maxCoeff() > 0.0) {
        args_.push_back(static_cast<std::size_t>(v));
      }
    }
  }

  /// Explicit argument list; columns outside those blocks must be zero.
  LinearFactor(Matrix a, Vector z, SymMatrix gamma, Index var_dim, IndexSet args)
      : a_(std::move(a)), z_(std::move(z)), gamma_(std::move(gamma)), var_dim_(var_dim),
        args_(make_index_set(std::move(args))) {
    validate_shapes();
    const auto n_vars = static_cast<std::size_t>(a_.cols() / var_dim_);
    for (std::size_t v = 0; v < n_vars; ++v) {
      if (std::binary_search(args_.begin(), args_.end(), v)) continue;
      if (a_.middleCols(static_cast<Index>(v) * var_dim_, var_dim_).cwiseAbs().maxCoeff() > 0.0) {
        throw DimensionError("LinearFactor: nonzero columns for variable " + std::to_string(v) +
                             " which is not in the argument list " + to_string(args_));
      }
    }
    if (!args_.empty() && args_.back() >= n_vars) {
      throw DimensionError("LinearFactor: argument index " + std::to_string(args_.back()) + " out of range");
    }
  }

  const Matrix& A() const { return a_; }
  const Vector& z() const { return z_; }
  const SymMatrix& gamma() const { return gamma_; }
  const IndexSet& arg_vars() const { return args_; }
  Index var_dim() const { return var_dim_; }
  Index rows() const { return a_.rows(); }
  Index state_dim() const { return a_.cols(); }

 private:
  void validate_shapes() const {
    if (var_dim_ <= 0) throw DimensionError("LinearFactor: var_dim must be positive");
    if (a_.rows() != z_.size() || z_.size() != gamma_.dim()) {
      throw DimensionError("LinearFactor: rows(A)=" + std::to_string(a_.rows()) + ", dim(z)=" +
                           std::to_string(z_.size()) + ", dim(gamma)=" + std::to_string(gamma_.dim()) +
                           " must agree");
    }
    if (a_.cols() % var_dim_ != 0) {
      throw DimensionError("LinearFactor: column count " + std::to_string(a_.cols()) +
                           " is not a multiple of var_dim " + std::to_string(var_dim_));
    }
    Cholesky check(gamma_);  // precision must be positive definite
  }

  Matrix a_;
  Vector z_;
  SymMatrix gamma_;
  Index var_dim_;
  IndexSet args_;
};

/// Delta_J = A_J^T Gamma_J A_J and the information-vector term A_J^T Gamma_J z_J.
struct SubgraphInfo {
  SymMatrix delta;
  Vector weighted_rhs;
};

class SupplementedGraph {
 public:
  SupplementedGraph(std::vector<LinearFactor> factors, IndexSet base, Index n_vars, Index var_dim)
      : factors_(std::move(factors)), base_(make_index_set(std::move(base))), n_vars_(n_vars), var_dim_(var_dim) {
    if (n_vars_ <= 0 || var_dim_ <= 0) throw DimensionError("SupplementedGraph: n_vars and var_dim must be positive");
    for (std::size_t j = 0; j < factors_.size(); ++j) {
      if (factors_[j].state_dim() != state_dim()) {
        throw DimensionError("SupplementedGraph: factor " + std::to_string(j) + " has " +
                             std::to_string(factors_[j].state_dim()) + " columns, expected " +
                             std::to_string(state_dim()));
      }
    }
    check_range(base_);
    for (std::size_t j = 0; j < factors_.size(); ++j) {
      if (!std::binary_search(base_.begin(), base_.end(), j)) supplemental_.push_back(j);
    }
    const SubgraphInfo b = stack(base_);
    try {
      const Cholesky chol(b.delta);
      prior_.emplace(chol.solve(b.weighted_rhs), b.delta);
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite(std::string("base graph not full-rank: ") + e.what());
    }
  }

  const std::vector<LinearFactor>& factors() const { return factors_; }
  const LinearFactor& factor(std::size_t j) const { return factors_.at(j); }
  std::size_t size() const { return factors_.size(); }
  const IndexSet& base() const { return base_; }
  const IndexSet& supplemental() const { return supplemental_; }
  Index n_vars() const { return n_vars_; }
  Index var_dim() const { return var_dim_; }
  Index state_dim() const { return n_vars_ * var_dim_; }

  /// (mu_B, Lambda_B), computed once at construction.
  const GaussianBelief& prior() const { return *prior_; }

  SubgraphInfo stack(const IndexSet& j) const {
    check_range(j);
    Matrix delta = Matrix::Zero(state_dim(), state_dim());
    Vector rhs = Vector::Zero(state_dim());
    for (std::size_t k : j) {
      const LinearFactor& f = factors_[k];
      const Matrix at_gamma = f.A().transpose() * f.gamma().matrix();
      delta.noalias() += at_gamma * f.A();
      rhs.noalias() += at_gamma * f.z();
    }
    return {SymMatrix::symmetrize(delta), rhs};
  }

  void check_range(const IndexSet& j) const {
    for (std::size_t k : j) {
      if (k >= factors_.size()) {
        throw DimensionError("factor index " + std::to_string(k) + " out of range (graph has " +
                             std::to_string(factors_.size()) + " factors)");
      }
    }
  }

  void check_supplemental(const IndexSet& j) const {
    check_range(j);
    if (intersects(j, base_)) {
      throw Error("index set " + to_string(j) + " intersects the base set " + to_string(base_));
    }
  }

 private:
  std::vector<LinearFactor> factors_;
  IndexSet base_;
  IndexSet supplemental_;
  Index n_vars_;
  Index var_dim_;
  std::optional<GaussianBelief> prior_;
};

inline SubgraphInfo stack_subgraph(const SupplementedGraph& graph, const IndexSet& j) { return graph.stack(j); }

inline GaussianBelief prior_belief(const SupplementedGraph& graph) { return graph.prior(); }

/// Posterior after adding supplemental factors J: Lambda = Lambda_B + Delta_J,
/// mu = Lambda^-1 (Lambda_B mu_B + A_J^T Gamma_J z_J). Empty J gives the prior.
inline GaussianBelief posterior_belief(const SupplementedGraph& graph, const IndexSet& j) {
  graph.check_supplemental(j);
  if (j.empty()) return graph.prior();
  const SubgraphInfo s = graph.stack(j);
  const GaussianBelief& prior = graph.prior();
  const SymMatrix info = prior.info() + s.delta;
  const Cholesky chol(info);
  return GaussianBelief(chol.solve(Vector(prior.info().matrix() * prior.mean() + s.weighted_rhs)), info);
}

/// I(Z_J; X) = 1/2 (ln|Lambda_B + Delta_J| - ln|Lambda_B|), in nats.
inline double mutual_information(const SupplementedGraph& graph, const IndexSet& j) {
  graph.check_supplemental(j);
  if (j.empty()) return 0.0;
  const SymMatrix post = graph.prior().info() + graph.stack(j).delta;
  return std::max(0.0, 0.5 * (logdet_pd(post) - graph.prior().factor().logdet()));
}

inline std::vector<Vector> sample_prior(const SupplementedGraph& graph, std::uint64_t seed, std::size_t count) {
  if (count == 0) throw Error("sample_prior: count must be at least 1");
  Rng rng(seed);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_information_form(graph.prior(), rng));
  return out;
}

/// Stacked draw z_J with z_j ~ N(A_j x, Gamma_j^-1) independently per factor.
inline Vector sample_measurements(const SupplementedGraph& graph, const IndexSet& j, const Vector& x,
                                  std::uint64_t seed) {
  graph.check_range(j);
  if (x.size() != graph.state_dim()) throw DimensionError("sample_measurements: state dimension mismatch");
  Index rows = 0;
  for (std::size_t k : j) rows += graph.factor(k).rows();
  Vector z(rows);
  Rng rng(seed);
  Index at = 0;
  for (std::size_t k : j) {
    const LinearFactor& f = graph.factor(k);
    const Cholesky chol(f.gamma());
    const Vector w = standard_normal(f.rows(), rng);
    z.segment(at, f.rows()) = f.A() * x + Vector(chol.lower().triangularView<Eigen::Lower>().transpose().solve(w));
    at += f.rows();
  }
  return z;
}

}  // namespace fgred
