#pragma once

// Dense symmetric matrices and information-form Gaussian primitives.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fgred {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// Smallest Cholesky pivot accepted, relative to the largest diagonal entry.
inline constexpr double kPivotTolerance = 1e-10;
/// Relative asymmetry accepted when wrapping user-supplied matrices.
inline constexpr double kSymmetryTolerance = 1e-10;
/// Eigenvalues down to -kPsdTolerance * max(1, |lambda_max|) count as PSD.
inline constexpr double kPsdTolerance = 1e-10;

namespace detail {

inline std::string dims(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace detail

/// Square symmetric matrix. Construction averages M and M^T so products that
/// drift off symmetry in floating point stay exactly symmetric downstream.
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Wraps a user-supplied matrix; rejects non-square or visibly asymmetric input.
  explicit SymMatrix(const Matrix& m) {
    if (m.rows() != m.cols()) {
      throw DimensionError("SymMatrix: matrix is not square (" + detail::dims(m) + ")");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = m.size() == 0 ? 0.0 : (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * scale) {
      std::ostringstream os;
      os << "SymMatrix: matrix is not symmetric (max |M - M^T| = " << asym << ")";
      throw DimensionError(os.str());
    }
    m_ = 0.5 * (m + m.transpose());
  }

  /// Symmetric part of an internally computed product, no tolerance check.
  static SymMatrix symmetrize(const Matrix& m) {
    if (m.rows() != m.cols()) {
      throw DimensionError("SymMatrix: matrix is not square (" + detail::dims(m) + ")");
    }
    SymMatrix s;
    s.m_ = 0.5 * (m + m.transpose());
    return s;
  }

  static SymMatrix zero(Index n) { return symmetrize(Matrix::Zero(n, n)); }
  static SymMatrix identity(Index n) { return symmetrize(Matrix::Identity(n, n)); }
  static SymMatrix diagonal(const Vector& d) { return symmetrize(d.asDiagonal().toDenseMatrix()); }

  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }

  /// Smallest eigenvalue (symmetric eigensolver).
  double min_eigenvalue() const {
    if (dim() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }

  bool is_psd() const {
    if (dim() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double scale = std::max(1.0, std::abs(ev(ev.size() - 1)));
    return ev(0) >= -kPsdTolerance * scale;
  }

  friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    check_same(a, b);
    return symmetrize(a.m_ + b.m_);
  }
  friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    check_same(a, b);
    return symmetrize(a.m_ - b.m_);
  }
  friend SymMatrix operator*(double s, const SymMatrix& a) { return symmetrize(s * a.m_); }

 private:
  static void check_same(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) {
      throw DimensionError("SymMatrix: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                           std::to_string(b.dim()) + ")");
    }
  }

  Matrix m_;
};

/// Cholesky factorization M = L L^T with an explicit pivot tolerance, so a
/// failure can name the leading minor that broke.
class Cholesky {
 public:
  explicit Cholesky(const SymMatrix& m) : l_(Matrix::Zero(m.dim(), m.dim())) {
    const Matrix& a = m.matrix();
    const Index n = a.rows();
    const double scale = n == 0 ? 1.0 : std::max(1e-300, a.diagonal().cwiseAbs().maxCoeff());
    for (Index j = 0; j < n; ++j) {
      double pivot = a(j, j) - l_.row(j).head(j).squaredNorm();
      if (!(pivot > kPivotTolerance * scale)) {
        std::ostringstream os;
        os << "matrix is not positive definite: leading minor " << (j + 1) << " of " << n
           << " has pivot " << pivot;
        throw NotPositiveDefinite(os.str());
      }
      const double ljj = std::sqrt(pivot);
      l_(j, j) = ljj;
      for (Index i = j + 1; i < n; ++i) {
        l_(i, j) = (a(i, j) - l_.row(i).head(j).dot(l_.row(j).head(j))) / ljj;
      }
    }
  }

  const Matrix& lower() const { return l_; }
  Index dim() const { return l_.rows(); }

  double logdet() const { return 2.0 * l_.diagonal().array().log().sum(); }

  Vector solve(const Vector& b) const {
    if (b.size() != dim()) throw DimensionError("Cholesky::solve: dimension mismatch");
    const auto tri = l_.triangularView<Eigen::Lower>();
    Vector y = tri.solve(b);
    return tri.transpose().solve(y);
  }

  Matrix solve(const Matrix& b) const {
    if (b.rows() != dim()) throw DimensionError("Cholesky::solve: dimension mismatch");
    const auto tri = l_.triangularView<Eigen::Lower>();
    Matrix y = tri.solve(b);
    return tri.transpose().solve(y);
  }

  SymMatrix inverse() const { return SymMatrix::symmetrize(solve(Matrix(Matrix::Identity(dim(), dim())))); }

 private:
  Matrix l_;
};

/// Information-form Gaussian N(mean, info^-1). The factorization of the
/// information matrix is computed once and kept.
class GaussianBelief {
 public:
  GaussianBelief(Vector mean, SymMatrix info) : mean_(std::move(mean)), info_(std::move(info)), chol_(info_) {
    if (mean_.size() != info_.dim()) {
      throw DimensionError("GaussianBelief: mean has dimension " + std::to_string(mean_.size()) +
                           " but information matrix has dimension " + std::to_string(info_.dim()));
    }
  }

  const Vector& mean() const { return mean_; }
  const SymMatrix& info() const { return info_; }
  const Cholesky& factor() const { return chol_; }
  Index dim() const { return mean_.size(); }
  SymMatrix covariance() const { return chol_.inverse(); }

 private:
  Vector mean_;
  SymMatrix info_;
  Cholesky chol_;
};

/// v^T M v without any PSD check. Used for forms that are not PSD in general.
inline double quadratic_form(const Vector& v, const SymMatrix& m) {
  if (v.size() != m.dim()) {
    throw DimensionError("quadratic_form: vector dimension " + std::to_string(v.size()) +
                         " does not match matrix dimension " + std::to_string(m.dim()));
  }
  return v.dot(m.matrix() * v);
}

/// Squared Mahalanobis norm ||v||^2_M for a PSD weight M, clamped at zero.
inline double mahalanobis_sq(const Vector& v, const SymMatrix& m) {
  if (v.size() != m.dim()) {
    throw DimensionError("mahalanobis_sq: vector dimension " + std::to_string(v.size()) +
                         " does not match matrix dimension " + std::to_string(m.dim()));
  }
  if (!m.is_psd()) {
    std::ostringstream os;
    os << "mahalanobis_sq: weight matrix has negative eigenvalue " << m.min_eigenvalue();
    throw NotPositiveDefinite(os.str());
  }
  return std::max(0.0, v.dot(m.matrix() * v));
}

/// ln|M| for positive definite M.
inline double logdet_pd(const SymMatrix& m) { return Cholesky(m).logdet(); }

namespace detail {

inline void check_posterior_dims(const GaussianBelief& prior, const SymMatrix& delta, const Vector& x) {
  if (delta.dim() != prior.dim() || x.size() != prior.dim()) {
    throw DimensionError("posterior moments: prior dimension " + std::to_string(prior.dim()) +
                         ", delta dimension " + std::to_string(delta.dim()) + ", state dimension " +
                         std::to_string(x.size()));
  }
}

}  // namespace detail

/// E(mu_post | x) = (Lambda_B + Delta)^-1 (Lambda_B mu_B + Delta x).
inline Vector conditional_mean_posterior(const GaussianBelief& prior, const SymMatrix& delta, const Vector& x) {
  detail::check_posterior_dims(prior, delta, x);
  const Cholesky post(prior.info() + delta);
  return post.solve(Vector(prior.info().matrix() * prior.mean() + delta.matrix() * x));
}

/// E(||mu_post + m||^2_T | x), where mu_post is the posterior mean after
/// measurements drawn from the supplemental factors given the true state x.
/// The covariance of mu_post given x is post^-1 Delta post^-1.
inline double expected_recentred_quadratic(const GaussianBelief& prior, const SymMatrix& delta,
                                           const SymMatrix& weight, const Vector& offset, const Vector& x) {
  detail::check_posterior_dims(prior, delta, x);
  if (weight.dim() != prior.dim() || offset.size() != prior.dim()) {
    throw DimensionError("expected_recentred_quadratic: weight/offset dimension mismatch");
  }
  const Cholesky post(prior.info() + delta);
  const Matrix post_inv = post.solve(Matrix(Matrix::Identity(prior.dim(), prior.dim())));
  const Matrix cov = post_inv * delta.matrix() * post_inv;
  const Vector mean = post.solve(Vector(prior.info().matrix() * prior.mean() + delta.matrix() * x)) + offset;
  return (weight.matrix() * cov).trace() + mean.dot(weight.matrix() * mean);
}

}  // namespace fgred
