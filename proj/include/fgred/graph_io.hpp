#pragma once

// JSON form of a supplemented graph:
//   {"var_dim": N, "n_vars": n,
//    "factors": [{"A": [[...], ...], "z": [...], "gamma": [[...], ...], "args": [...]}, ...],
//    "base": [...]}
// Matrices are arrays of rows. "args" is optional; when present, columns of A
// outside those variable blocks must be zero.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgred/factor_graph.hpp"

namespace fgred {

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw Error(std::string("graph json: '") + what + "' must be an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows == 0 ? Index{0} : static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw Error(std::string("graph json: '") + what + "' has ragged rows");
    }
    for (Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j.at(i).get<double>();
  return v;
}

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace detail

inline nlohmann::json graph_to_json(const SupplementedGraph& g) {
  nlohmann::json factors = nlohmann::json::array();
  for (const auto& f : g.factors()) {
    factors.push_back({{"A", detail::matrix_to_json(f.A())},
                       {"z", detail::vector_to_json(f.z())},
                       {"gamma", detail::matrix_to_json(f.gamma().matrix())},
                       {"args", f.arg_vars()}});
  }
  return {{"var_dim", g.var_dim()}, {"n_vars", g.n_vars()}, {"factors", factors}, {"base", g.base()}};
}

inline SupplementedGraph graph_from_json(const nlohmann::json& j) {
  try {
    const auto var_dim = j.at("var_dim").get<Index>();
    const auto n_vars = j.at("n_vars").get<Index>();
    std::vector<LinearFactor> factors;
    for (const auto& f : j.at("factors")) {
      Matrix a = detail::matrix_from_json(f.at("A"), "A");
      Vector z = detail::vector_from_json(f.at("z"));
      SymMatrix gamma(detail::matrix_from_json(f.at("gamma"), "gamma"));
      if (f.contains("args")) {
        factors.emplace_back(std::move(a), std::move(z), std::move(gamma), var_dim,
                             f.at("args").get<std::vector<std::size_t>>());
      } else {
        factors.emplace_back(std::move(a), std::move(z), std::move(gamma), var_dim);
      }
    }
    return SupplementedGraph(std::move(factors), j.at("base").get<std::vector<std::size_t>>(), n_vars, var_dim);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("graph json: ") + e.what());
  }
}

inline SupplementedGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("graph file '" + path + "': " + e.what());
  }
  return graph_from_json(j);
}

}  // namespace fgred
