#pragma once

// Nonlinear landmark SLAM graph over absolute pose coordinates (x, y, theta)
// and landmark positions, a dense Gauss-Newton solver, and linearization into
// LinearFactor form with landmarks marginalized out.
//
// Factor layout for n steps:
//   0            anchor prior on X_0                      (base)
//   1..n         odometry X_{i-1} -> X_i                  (base)
//   n+1..2n      range-bearing of L_0 from X_1..X_n       (source 0)
//   2n+1..3n     range-bearing of L_1 from X_1..X_n       (source 1)
//
// State vector: X_0..X_n (three entries each), then L_0, L_1 (two each).

#include <algorithm>
#include <array>
#include <limits>
#include <string>
#include <vector>

#include "fgred/factor_graph.hpp"
#include "fgred/slam/world.hpp"

namespace fgred::slam {

enum class FactorKind { Anchor, Odometry, RangeBearing };

struct NonlinearFactor {
  FactorKind kind;
  int pose = 0;      // anchor: 0; odometry: i (edge i-1 -> i); range-bearing: observing pose
  int landmark = 0;  // range-bearing only
  Eigen::Vector3d measurement = Eigen::Vector3d::Zero();  // range-bearing uses the first two entries
  Eigen::Matrix3d noise = Eigen::Matrix3d::Identity();    // anchor/odometry covariance

  Index rows() const { return kind == FactorKind::RangeBearing ? 2 : 3; }
};

struct Values {
  std::vector<Pose2> poses;
  std::array<Eigen::Vector2d, 2> landmarks{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};

  int n() const { return static_cast<int>(poses.size()) - 1; }
  Index dim() const { return 3 * static_cast<Index>(poses.size()) + 4; }

  Vector to_vector() const {
    Vector v(dim());
    for (std::size_t i = 0; i < poses.size(); ++i) v.segment<3>(3 * static_cast<Index>(i)) = poses[i].vector();
    v.segment<2>(dim() - 4) = landmarks[0];
    v.segment<2>(dim() - 2) = landmarks[1];
    return v;
  }

  static Values from_vector(const Vector& v, int n) {
    if (v.size() != 3 * (n + 1) + 4) throw DimensionError("Values::from_vector: wrong length");
    Values out;
    for (int i = 0; i <= n; ++i) out.poses.push_back(Pose2::from_vector(v.segment<3>(3 * i)));
    out.landmarks[0] = v.segment<2>(3 * (n + 1));
    out.landmarks[1] = v.segment<2>(3 * (n + 1) + 2);
    return out;
  }
};

inline Index pose_col(int i) { return 3 * static_cast<Index>(i); }
inline Index landmark_col(int n, int s) { return 3 * static_cast<Index>(n + 1) + 2 * s; }

struct NonlinearGraph {
  int n = 0;
  std::vector<NonlinearFactor> factors;
  double range_var_coeff = 0.0;
  double bearing_var = 0.0;

  Index state_dim() const { return 3 * static_cast<Index>(n + 1) + 4; }
  Index pose_dim() const { return 3 * static_cast<Index>(n + 1); }
  IndexSet base() const {
    IndexSet b;
    for (int i = 0; i <= n; ++i) b.push_back(static_cast<std::size_t>(i));
    return b;
  }
  /// J_s = {i : (s+1)n < i <= (s+2)n}
  IndexSet source(int s) const {
    IndexSet j;
    for (int i = (s + 1) * n + 1; i <= (s + 2) * n; ++i) j.push_back(static_cast<std::size_t>(i));
    return j;
  }
  IndexSet all() const {
    IndexSet a;
    for (std::size_t k = 0; k < factors.size(); ++k) a.push_back(k);
    return a;
  }
};

inline NonlinearGraph build_nonlinear_graph(const SimWorld& world) {
  const SimConfig& c = world.config;
  NonlinearGraph g;
  g.n = world.n();
  g.range_var_coeff = c.range_var_coeff;
  g.bearing_var = c.bearing_var;
  NonlinearFactor anchor{FactorKind::Anchor, 0, 0, world.truth_poses.front().vector(), Eigen::Matrix3d::Zero()};
  anchor.noise.diagonal() << c.anchor_sigma_xy * c.anchor_sigma_xy, c.anchor_sigma_xy * c.anchor_sigma_xy,
      c.anchor_sigma_theta * c.anchor_sigma_theta;
  g.factors.push_back(anchor);
  for (int i = 1; i <= g.n; ++i) {
    g.factors.push_back({FactorKind::Odometry, i, 0, world.odom_measurements[i - 1].vector(), c.sigma_odom});
  }
  for (int s = 0; s < 2; ++s) {
    for (int i = 1; i <= g.n; ++i) {
      const auto& m = world.rb[s][i - 1];
      g.factors.push_back({FactorKind::RangeBearing, i, s, Eigen::Vector3d(m.range, m.bearing, 0.0)});
    }
  }
  return g;
}

/// Residual z - h(x) (angles wrapped), Jacobian of h over the full state, and
/// the factor precision evaluated at x.
struct FactorEval {
  Vector residual;
  Matrix H;
  SymMatrix gamma;
};

inline FactorEval evaluate_factor(const NonlinearGraph& g, const NonlinearFactor& f, const Values& x) {
  const Index dim = g.state_dim();
  FactorEval e{Vector::Zero(f.rows()), Matrix::Zero(f.rows(), dim), SymMatrix()};
  switch (f.kind) {
    case FactorKind::Anchor: {
      const Pose2& p = x.poses[0];
      e.residual << f.measurement(0) - p.x, f.measurement(1) - p.y, wrap_angle(f.measurement(2) - p.theta);
      e.H.block<3, 3>(0, pose_col(0)).setIdentity();
      e.gamma = SymMatrix::symmetrize(f.noise.inverse());
      break;
    }
    case FactorKind::Odometry: {
      const Pose2& a = x.poses[f.pose - 1];
      const Pose2& b = x.poses[f.pose];
      const Pose2 h = se2_between(a, b);
      e.residual << f.measurement(0) - h.x, f.measurement(1) - h.y, wrap_angle(f.measurement(2) - h.theta);
      const double c = std::cos(a.theta), s = std::sin(a.theta);
      const Eigen::Vector2d d = b.translation() - a.translation();
      Eigen::Matrix2d rt;
      rt << c, s, -s, c;
      Eigen::Vector2d drt;  // d(R^T)/dtheta * d
      drt << -s * d.x() + c * d.y(), -c * d.x() - s * d.y();
      auto ha = e.H.block<3, 3>(0, pose_col(f.pose - 1));
      auto hb = e.H.block<3, 3>(0, pose_col(f.pose));
      ha.topLeftCorner<2, 2>() = -rt;
      ha.block<2, 1>(0, 2) = drt;
      ha(2, 2) = -1.0;
      hb.topLeftCorner<2, 2>() = rt;
      hb(2, 2) = 1.0;
      e.gamma = SymMatrix::symmetrize(f.noise.inverse());
      break;
    }
    case FactorKind::RangeBearing: {
      const Pose2& p = x.poses[f.pose];
      const Eigen::Vector2d& l = x.landmarks[f.landmark];
      const Eigen::Vector2d d = l - p.translation();
      const double r2 = d.squaredNorm();
      if (!(r2 > 1e-18)) throw Error("degenerate range-bearing geometry");
      const double r = std::sqrt(r2);
      const RangeBearing h = observe(p, l);
      e.residual << f.measurement(0) - h.range, wrap_angle(f.measurement(1) - h.bearing);
      const Index pc = pose_col(f.pose), lc = landmark_col(g.n, f.landmark);
      e.H(0, pc) = -d.x() / r;
      e.H(0, pc + 1) = -d.y() / r;
      e.H(0, lc) = d.x() / r;
      e.H(0, lc + 1) = d.y() / r;
      e.H(1, pc) = d.y() / r2;
      e.H(1, pc + 1) = -d.x() / r2;
      e.H(1, pc + 2) = -1.0;
      e.H(1, lc) = -d.y() / r2;
      e.H(1, lc + 1) = d.x() / r2;
      e.gamma = SymMatrix::diagonal(Vector(Eigen::Vector2d(1.0 / (g.range_var_coeff * r2), 1.0 / g.bearing_var)));
      break;
    }
  }
  return e;
}

/// Dead reckoning from the anchor mean; each landmark placed from its first
/// reading.
inline Values initial_values(const NonlinearGraph& g) {
  Values v;
  v.poses.push_back(Pose2::from_vector(g.factors[0].measurement));
  for (int i = 1; i <= g.n; ++i) {
    v.poses.push_back(se2_compose(v.poses.back(), Pose2::from_vector(g.factors[static_cast<std::size_t>(i)].measurement)));
  }
  for (int s = 0; s < 2; ++s) {
    const auto& f = g.factors[static_cast<std::size_t>((s + 1) * g.n + 1)];
    const Pose2& p = v.poses[f.pose];
    const double a = p.theta + f.measurement(1);
    v.landmarks[s] = p.translation() + f.measurement(0) * Eigen::Vector2d(std::cos(a), std::sin(a));
  }
  return v;
}

/// State columns touched by the factors in `subset`, in block units.
inline std::vector<Index> active_columns(const NonlinearGraph& g, const IndexSet& subset) {
  std::vector<bool> used(static_cast<std::size_t>(g.state_dim()), false);
  const auto mark = [&](Index start, Index len) {
    for (Index k = 0; k < len; ++k) used[static_cast<std::size_t>(start + k)] = true;
  };
  for (auto k : subset) {
    const auto& f = g.factors.at(k);
    switch (f.kind) {
      case FactorKind::Anchor: mark(pose_col(0), 3); break;
      case FactorKind::Odometry: mark(pose_col(f.pose - 1), 6); break;
      case FactorKind::RangeBearing:
        mark(pose_col(f.pose), 3);
        mark(landmark_col(g.n, f.landmark), 2);
        break;
    }
  }
  std::vector<Index> cols;
  for (Index c = 0; c < g.state_dim(); ++c)
    if (used[static_cast<std::size_t>(c)]) cols.push_back(c);
  return cols;
}

struct SolveResult {
  Values values;
  bool converged = false;
  int iterations = 0;
  double chi2 = 0.0;  // sum of squared whitened residuals at the returned values
};

inline double chi2(const NonlinearGraph& g, const IndexSet& subset, const Values& x) {
  double total = 0.0;
  for (auto k : subset) {
    const FactorEval e = evaluate_factor(g, g.factors.at(k), x);
    total += e.residual.dot(e.gamma.matrix() * e.residual);
  }
  return total;
}

/// Gauss-Newton on the factors in `subset`, updating only the variables they
/// touch. Stops when the largest update entry is below `tol`.
inline SolveResult solve_gauss_newton(const NonlinearGraph& g, const IndexSet& subset, const Values& init,
                                      int max_iterations = 50, double tol = 1e-8) {
  const std::vector<Index> cols = active_columns(g, subset);
  const auto m = static_cast<Index>(cols.size());
  SolveResult out{init, false, 0, 0.0};
  Vector x = init.to_vector();
  try {
    for (int it = 1; it <= max_iterations; ++it) {
      const Values cur = Values::from_vector(x, g.n);
      Matrix h = Matrix::Zero(m, m);
      Vector b = Vector::Zero(m);
      for (auto k : subset) {
        const FactorEval e = evaluate_factor(g, g.factors.at(k), cur);
        Matrix hj(e.H.rows(), m);
        for (Index c = 0; c < m; ++c) hj.col(c) = e.H.col(cols[static_cast<std::size_t>(c)]);
        const Matrix hg = hj.transpose() * e.gamma.matrix();
        h.noalias() += hg * hj;
        b.noalias() += hg * e.residual;
      }
      const Vector step = Cholesky(SymMatrix::symmetrize(h)).solve(b);
      for (Index c = 0; c < m; ++c) x(cols[static_cast<std::size_t>(c)]) += step(c);
      out.iterations = it;
      if (!step.allFinite()) break;
      if (step.cwiseAbs().maxCoeff() < tol) {
        out.converged = true;
        break;
      }
    }
  } catch (const Error&) {
    out.converged = false;
  }
  out.values = Values::from_vector(x, g.n);
  try {
    out.chi2 = chi2(g, subset, out.values);
  } catch (const Error&) {
    out.chi2 = std::numeric_limits<double>::quiet_NaN();
    out.converged = false;
  }
  return out;
}

/// Linear model of every factor about one point, over the full state:
/// A = H, z = H x0 + (z_meas - h(x0)), Gamma at x0.
struct LinearizedGraph {
  int n = 0;
  std::vector<LinearFactor> factors;

  Index state_dim() const { return 3 * static_cast<Index>(n + 1) + 4; }
  Index pose_dim() const { return 3 * static_cast<Index>(n + 1); }
};

/// Absolute state vector of v with each heading shifted by a multiple of 2 pi
/// to lie within pi of the matching entry of `reference`, so that linear
/// models built about different points share one angle branch.
inline Vector unwrapped_vector(const Values& v, const Vector& reference) {
  Vector x = v.to_vector();
  if (reference.size() != x.size()) throw DimensionError("unwrapped_vector: reference has the wrong length");
  for (Index i = 0; i <= v.n(); ++i) {
    const Index k = pose_col(static_cast<int>(i)) + 2;
    x(k) = reference(k) + wrap_angle(x(k) - reference(k));
  }
  return x;
}

inline LinearizedGraph linearize_to_lfg(const NonlinearGraph& g, const Values& lin_point,
                                        const Vector* angle_reference = nullptr) {
  if (lin_point.n() != g.n) throw DimensionError("linearize_to_lfg: linearization point has the wrong pose count");
  LinearizedGraph out;
  out.n = g.n;
  const Vector x0 = angle_reference ? unwrapped_vector(lin_point, *angle_reference) : lin_point.to_vector();
  for (const auto& f : g.factors) {
    FactorEval e = evaluate_factor(g, f, lin_point);
    Vector z = e.H * x0 + e.residual;
    out.factors.emplace_back(std::move(e.H), std::move(z), std::move(e.gamma), 1);
  }
  return out;
}

/// Pose-only copies of factors that do not touch landmarks.
inline std::vector<LinearFactor> pose_factors(const LinearizedGraph& lin, const IndexSet& indices) {
  std::vector<LinearFactor> out;
  for (auto k : indices) {
    const LinearFactor& f = lin.factors.at(k);
    if (f.A().rightCols(4).cwiseAbs().maxCoeff() > 0.0) {
      throw Error("pose_factors: factor " + std::to_string(k) + " touches a landmark");
    }
    out.emplace_back(Matrix(f.A().leftCols(lin.pose_dim())), f.z(), f.gamma(), 3);
  }
  return out;
}

/// Joint information of `indices` with the landmark block eliminated by Schur
/// complement, returned as one dense pose-only factor with unit precision.
/// Landmarks carry no other prior, so this is their exact marginal.
inline LinearFactor marginalize_landmarks(const LinearizedGraph& lin, const IndexSet& indices) {
  const Index np = lin.pose_dim();
  const Index nl = lin.state_dim() - np;
  Matrix info = Matrix::Zero(lin.state_dim(), lin.state_dim());
  Vector eta = Vector::Zero(lin.state_dim());
  for (auto k : indices) {
    const LinearFactor& f = lin.factors.at(k);
    const Matrix ag = f.A().transpose() * f.gamma().matrix();
    info.noalias() += ag * f.A();
    eta.noalias() += ag * f.z();
  }
  // Only the landmark coordinates that are actually observed are eliminated.
  std::vector<Index> lm;
  for (Index c = 0; c < nl; ++c)
    if (info(np + c, np + c) > 0.0) lm.push_back(np + c);
  Matrix dpp = info.topLeftCorner(np, np);
  Vector ep = eta.head(np);
  if (!lm.empty()) {
    const auto k = static_cast<Index>(lm.size());
    Matrix dll(k, k), dpl(np, k);
    Vector el(k);
    for (Index a = 0; a < k; ++a) {
      el(a) = eta(lm[static_cast<std::size_t>(a)]);
      dpl.col(a) = info.col(lm[static_cast<std::size_t>(a)]).head(np);
      for (Index b = 0; b < k; ++b) dll(a, b) = info(lm[static_cast<std::size_t>(a)], lm[static_cast<std::size_t>(b)]);
    }
    const Cholesky chol(SymMatrix::symmetrize(dll));
    dpp -= dpl * chol.solve(Matrix(dpl.transpose()));
    ep -= dpl * chol.solve(el);
  }
  const SymMatrix delta = SymMatrix::symmetrize(dpp);
  Eigen::SelfAdjointEigenSolver<Matrix> es(delta.matrix());
  const double cut = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Index> keep;
  for (Index i = 0; i < np; ++i)
    if (es.eigenvalues()(i) > cut) keep.push_back(i);
  const auto r = static_cast<Index>(keep.size());
  Matrix a(std::max<Index>(r, 1), np);
  Vector z(std::max<Index>(r, 1));
  if (r == 0) {
    a.setZero();
    z.setZero();
  }
  for (Index row = 0; row < r; ++row) {
    const Index i = keep[static_cast<std::size_t>(row)];
    const double lam = es.eigenvalues()(i);
    a.row(row) = std::sqrt(lam) * es.eigenvectors().col(i).transpose();
    z(row) = es.eigenvectors().col(i).dot(ep) / std::sqrt(lam);
  }
  return LinearFactor(std::move(a), std::move(z), SymMatrix::identity(std::max<Index>(r, 1)), 3);
}

}  // namespace fgred::slam
