#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace fgred::slam {

/// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(a, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  Eigen::Vector2d translation() const { return {x, y}; }
  Eigen::Matrix2d rotation() const {
    const double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix2d r;
    r << c, -s, s, c;
    return r;
  }
  Eigen::Vector3d vector() const { return {x, y, theta}; }
  static Pose2 from_vector(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }

  bool operator==(const Pose2&) const = default;
};

inline Pose2 se2_compose(const Pose2& a, const Pose2& b) {
  const Eigen::Vector2d t = a.translation() + a.rotation() * b.translation();
  return {t(0), t(1), a.theta + b.theta};
}

inline Pose2 se2_inverse(const Pose2& a) {
  const Eigen::Vector2d t = -(a.rotation().transpose() * a.translation());
  return {t(0), t(1), -a.theta};
}

/// a^-1 b
inline Pose2 se2_between(const Pose2& a, const Pose2& b) { return se2_compose(se2_inverse(a), b); }

}  // namespace fgred::slam
