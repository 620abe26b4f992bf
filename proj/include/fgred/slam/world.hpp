#pragma once

// Simulated 2D landmark SLAM worlds: a random-walk trajectory, two landmarks,
// odometry between consecutive poses and a range-bearing reading of each
// landmark from every pose after the first.

#include <array>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgred/gauss.hpp"
#include "fgred/graph_io.hpp"
#include "fgred/random.hpp"
#include "fgred/slam/se2.hpp"

namespace fgred::slam {

struct SimConfig {
  int n_poses = 10;
  double C = 10.0;
  Pose2 step_mean{1.0, 0.0, 0.1};
  Eigen::Matrix3d step_cov = Eigen::Vector3d(0.1 * 0.1, 0.05 * 0.05, 0.2 * 0.2).asDiagonal();
  Eigen::Matrix3d sigma_odom = Eigen::Vector3d(0.1 * 0.1, 0.1 * 0.1, 0.01 * 0.01).asDiagonal();
  double bearing_var = 0.02 * 0.02;
  // Range standard deviation is 3% of the distance.
  double range_var_coeff = 0.03 * 0.03;
  // Prior on X_0 that fixes the gauge of the odometry chain.
  double anchor_sigma_xy = 0.01;
  double anchor_sigma_theta = 0.01;
  // Draw no measurement noise; the noise model is still used for weights.
  bool noiseless = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_poses < 2) throw Error("sim config: n_poses must be >= 2");
    if (!(C > 0.0)) throw Error("sim config: C must be > 0");
    if (!(bearing_var > 0.0) || !(range_var_coeff > 0.0)) throw Error("sim config: variances must be > 0");
    if (!(anchor_sigma_xy > 0.0) || !(anchor_sigma_theta > 0.0)) throw Error("sim config: anchor sigmas must be > 0");
    if (Eigen::LLT<Eigen::Matrix3d>(sigma_odom).info() != Eigen::Success || !sigma_odom.isApprox(sigma_odom.transpose())) {
      throw Error("sim config: sigma_odom must be symmetric positive definite");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(step_cov);
    if (!step_cov.isApprox(step_cov.transpose()) || es.eigenvalues().minCoeff() < -1e-12) {
      throw Error("sim config: step_cov must be symmetric positive semidefinite");
    }
  }
};

struct RangeBearing {
  double range = 0.0;
  double bearing = 0.0;
  bool operator==(const RangeBearing&) const = default;
};

struct SimWorld {
  SimConfig config;
  std::vector<Pose2> truth_poses;               // X_0..X_n
  std::array<Eigen::Vector2d, 2> landmarks;     // L_0, L_1
  std::vector<Pose2> odom_measurements;         // Z_1..Z_n
  std::array<std::vector<RangeBearing>, 2> rb;  // rb[s][i-1] taken from X_i

  int n() const { return static_cast<int>(odom_measurements.size()); }
};

/// Range and bearing of point l seen from pose p.
inline RangeBearing observe(const Pose2& p, const Eigen::Vector2d& l) {
  const Eigen::Vector2d d = l - p.translation();
  return {d.norm(), wrap_angle(std::atan2(d.y(), d.x()) - p.theta)};
}

namespace detail {

inline Eigen::Matrix3d psd_sqrt(const Eigen::Matrix3d& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace detail

inline SimWorld simulate_world(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::uniform_real_distribution<double> box(-config.C, config.C);
  std::uniform_real_distribution<double> half_box(-config.C / 2.0, config.C / 2.0);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  std::normal_distribution<double> nd(0.0, 1.0);
  const auto gauss3 = [&](const Eigen::Matrix3d& root) {
    return Eigen::Vector3d(root * Eigen::Vector3d(nd(rng), nd(rng), nd(rng)));
  };

  SimWorld w;
  w.config = config;
  for (auto& l : w.landmarks) {
    const double lx = box(rng);
    l = {lx, box(rng)};
  }
  const double x0 = half_box(rng);
  const double y0 = half_box(rng);
  w.truth_poses.push_back({x0, y0, heading(rng)});

  const Eigen::Matrix3d step_root = detail::psd_sqrt(config.step_cov);
  const Eigen::Matrix3d odom_root = detail::psd_sqrt(config.sigma_odom);
  const double bearing_sd = std::sqrt(config.bearing_var);
  for (int i = 1; i <= config.n_poses; ++i) {
    const Pose2 eta = Pose2::from_vector(config.step_mean.vector() + gauss3(step_root));
    w.truth_poses.push_back(se2_compose(w.truth_poses.back(), eta));
    // Noise is always drawn so that the random stream does not depend on the flag.
    const Eigen::Vector3d odom_noise = gauss3(odom_root);
    w.odom_measurements.push_back(config.noiseless ? eta : Pose2::from_vector(eta.vector() + odom_noise));
    for (int s = 0; s < 2; ++s) {
      const RangeBearing t = observe(w.truth_poses.back(), w.landmarks[s]);
      const double range_sd = std::sqrt(config.range_var_coeff) * t.range;
      const double er = nd(rng) * range_sd;
      const double eb = nd(rng) * bearing_sd;
      w.rb[s].push_back(config.noiseless ? t : RangeBearing{t.range + er, wrap_angle(t.bearing + eb)});
    }
  }
  return w;
}

// JSON ---------------------------------------------------------------------

inline nlohmann::json pose_to_json(const Pose2& p) { return nlohmann::json::array({p.x, p.y, p.theta}); }

inline Pose2 pose_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("pose must be [x, y, theta]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json config_to_json(const SimConfig& c) {
  return {{"n_poses", c.n_poses},
          {"C", c.C},
          {"step_mean", pose_to_json(c.step_mean)},
          {"step_cov", fgred::detail::matrix_to_json(c.step_cov)},
          {"sigma_odom", fgred::detail::matrix_to_json(c.sigma_odom)},
          {"bearing_var", c.bearing_var},
          {"range_var_coeff", c.range_var_coeff},
          {"anchor_sigma_xy", c.anchor_sigma_xy},
          {"anchor_sigma_theta", c.anchor_sigma_theta},
          {"noiseless", c.noiseless},
          {"seed", c.seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline SimConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("sim config must be a JSON object");
  SimConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_poses") c.n_poses = v.get<int>();
      else if (key == "C") c.C = v.get<double>();
      else if (key == "step_mean") c.step_mean = pose_from_json(v);
      else if (key == "step_cov") c.step_cov = fgred::detail::matrix_from_json(v, "step_cov");
      else if (key == "sigma_odom") c.sigma_odom = fgred::detail::matrix_from_json(v, "sigma_odom");
      else if (key == "bearing_var") c.bearing_var = v.get<double>();
      else if (key == "range_var_coeff") c.range_var_coeff = v.get<double>();
      else if (key == "anchor_sigma_xy") c.anchor_sigma_xy = v.get<double>();
      else if (key == "anchor_sigma_theta") c.anchor_sigma_theta = v.get<double>();
      else if (key == "noiseless") c.noiseless = v.get<bool>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw Error("sim config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("sim config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json world_to_json(const SimWorld& w) {
  nlohmann::json poses = nlohmann::json::array(), odom = nlohmann::json::array();
  for (const auto& p : w.truth_poses) poses.push_back(pose_to_json(p));
  for (const auto& p : w.odom_measurements) odom.push_back(pose_to_json(p));
  nlohmann::json rb = nlohmann::json::array();
  for (const auto& per_landmark : w.rb) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& m : per_landmark) list.push_back({m.range, m.bearing});
    rb.push_back(std::move(list));
  }
  nlohmann::json lms = nlohmann::json::array();
  for (const auto& l : w.landmarks) lms.push_back({l.x(), l.y()});
  return {{"config", config_to_json(w.config)}, {"truth_poses", poses}, {"landmarks", lms},
          {"odom_measurements", odom}, {"rb_measurements", rb}};
}

inline SimWorld world_from_json(const nlohmann::json& j) {
  SimWorld w;
  try {
    w.config = config_from_json(j.at("config"));
    for (const auto& p : j.at("truth_poses")) w.truth_poses.push_back(pose_from_json(p));
    for (const auto& p : j.at("odom_measurements")) w.odom_measurements.push_back(pose_from_json(p));
    const auto& lms = j.at("landmarks");
    const auto& rb = j.at("rb_measurements");
    if (lms.size() != 2 || rb.size() != 2) throw Error("world json: expected two landmarks");
    for (std::size_t s = 0; s < 2; ++s) {
      w.landmarks[s] = {lms[s].at(0).get<double>(), lms[s].at(1).get<double>()};
      for (const auto& m : rb[s]) w.rb[s].push_back({m.at(0).get<double>(), m.at(1).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("world json: ") + e.what());
  }
  const auto n = w.odom_measurements.size();
  if (w.truth_poses.size() != n + 1 || w.rb[0].size() != n || w.rb[1].size() != n ||
      static_cast<int>(n) != w.config.n_poses) {
    throw Error("world json: measurement counts do not match n_poses");
  }
  return w;
}

}  // namespace fgred::slam
