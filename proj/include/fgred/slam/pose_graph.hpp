#pragma once

// Pose-only linear supplemented graph for the two-landmark experiment.
//
// The base factors (anchor, odometry) are linearized about the base solution.
// Each landmark's readings are linearized about the solution of its own
// supplemented subgraph (base + J_s) and then reduced to one dense pose factor
// by eliminating that landmark. Resulting layout:
//   factors 0..n   base, pose-only
//   factor  n+1    landmark 0 readings, marginalized
//   factor  n+2    landmark 1 readings, marginalized

#include <array>

#include "fgred/lattice.hpp"
#include "fgred/slam/nonlinear.hpp"

namespace fgred::slam {

struct SubgraphSolutions {
  SolveResult base;
  std::array<SolveResult, 2> sources;

  bool converged() const { return base.converged && sources[0].converged && sources[1].converged; }
};

inline IndexSet with_source(const NonlinearGraph& g, int s) {
  IndexSet subset = g.base();
  for (auto k : g.source(s)) subset.push_back(k);
  return subset;
}

inline SubgraphSolutions solve_subgraphs(const NonlinearGraph& g, const Values& init) {
  SubgraphSolutions out;
  out.base = solve_gauss_newton(g, g.base(), init);
  for (int s = 0; s < 2; ++s) out.sources[static_cast<std::size_t>(s)] = solve_gauss_newton(g, with_source(g, s), init);
  return out;
}

inline SupplementedGraph landmark_pose_graph(const NonlinearGraph& g, const Values& base_point,
                                             const std::array<Values, 2>& source_points) {
  const Vector reference = base_point.to_vector();
  const LinearizedGraph base_lin = linearize_to_lfg(g, base_point, &reference);
  std::vector<LinearFactor> factors = pose_factors(base_lin, g.base());
  for (int s = 0; s < 2; ++s) {
    const LinearizedGraph lin = linearize_to_lfg(g, source_points[static_cast<std::size_t>(s)], &reference);
    factors.push_back(marginalize_landmarks(lin, g.source(s)));
  }
  return SupplementedGraph(std::move(factors), g.base(), g.n + 1, 3);
}

inline SupplementedGraph landmark_pose_graph(const NonlinearGraph& g, const SubgraphSolutions& sol) {
  return landmark_pose_graph(g, sol.base.values, {sol.sources[0].values, sol.sources[1].values});
}

/// Index of the marginalized factor for landmark s in landmark_pose_graph.
inline std::size_t landmark_factor(const NonlinearGraph& g, int s) { return static_cast<std::size_t>(g.n + 1 + s); }

inline Antichain landmark_antichain(const NonlinearGraph& g) {
  return Antichain({{landmark_factor(g, 0)}, {landmark_factor(g, 1)}});
}

}  // namespace fgred::slam
