#pragma once

#include <algorithm>
#include <vector>

#include <Eigen/Dense>

#include "fgred/gauss.hpp"
#include "fgred/slam/se2.hpp"

namespace fgred::slam {

using Points2 = std::vector<Eigen::Vector2d>;

struct Rigid2 {
  Eigen::Matrix2d R = Eigen::Matrix2d::Identity();
  Eigen::Vector2d t = Eigen::Vector2d::Zero();

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const { return R * p + t; }
};

/// Least-squares rigid motion (no scale) taking source onto target.
inline Rigid2 umeyama_align(const Points2& source, const Points2& target) {
  if (source.size() != target.size()) throw DimensionError("umeyama_align: point counts differ");
  if (source.size() < 2) throw Error("umeyama_align: need at least two points");
  const auto n = static_cast<double>(source.size());
  Eigen::Vector2d ms = Eigen::Vector2d::Zero(), mt = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    ms += source[i];
    mt += target[i];
  }
  ms /= n;
  mt /= n;
  double spread = 0.0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    spread = std::max(spread, (source[i] - ms).cwiseAbs().maxCoeff());
    cov += (target[i] - mt) * (source[i] - ms).transpose();
  }
  if (!(spread > 1e-12 * std::max(1.0, ms.cwiseAbs().maxCoeff()))) {
    throw Error("umeyama_align: degenerate point set (all points coincide)");
  }
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(cov / n, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d s = Eigen::Matrix2d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s(1, 1) = -1.0;
  Rigid2 out;
  out.R = svd.matrixU() * s * svd.matrixV().transpose();
  out.t = mt - out.R * ms;
  return out;
}

inline Points2 translations(const std::vector<Pose2>& poses) {
  Points2 out;
  out.reserve(poses.size());
  for (const auto& p : poses) out.push_back(p.translation());
  return out;
}

/// Per-pose squared translation error after aligning the estimate to truth.
inline std::vector<double> aligned_sq_errors(const std::vector<Pose2>& truth, const std::vector<Pose2>& estimate) {
  if (truth.size() != estimate.size()) throw DimensionError("aligned_sq_errors: trajectory lengths differ");
  const Points2 t = translations(truth), e = translations(estimate);
  const Rigid2 tf = umeyama_align(e, t);
  std::vector<double> out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out.push_back((t[i] - tf.apply(e[i])).squaredNorm());
  return out;
}

inline double aligned_ate(const std::vector<Pose2>& truth, const std::vector<Pose2>& estimate) {
  double total = 0.0;
  for (double v : aligned_sq_errors(truth, estimate)) total += v;
  return total;
}

/// Sum over poses of the largest squared aligned error among the estimates,
/// each estimate aligned to truth on its own.
inline double wc_ate(const std::vector<Pose2>& truth, const std::vector<std::vector<Pose2>>& estimates) {
  if (estimates.empty()) throw Error("wc_ate: no estimates");
  std::vector<double> worst(truth.size(), 0.0);
  for (const auto& est : estimates) {
    const auto e = aligned_sq_errors(truth, est);
    for (std::size_t i = 0; i < e.size(); ++i) worst[i] = std::max(worst[i], e[i]);
  }
  double total = 0.0;
  for (double v : worst) total += v;
  return total;
}

}  // namespace fgred::slam
