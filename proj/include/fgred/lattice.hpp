#pragma once

// Sources, antichains, and the redundancy-lattice order.
//
// A source is a nonempty index set. An antichain is a nonempty collection of
// sources none of which contains another. alpha <= beta iff every source of
// beta contains some source of alpha.

#include <compare>
#include <map>
#include <string>
#include <initializer_list>
#include <vector>

#include "fgred/factor_graph.hpp"

namespace fgred {

class Antichain {
 public:
  /// Validates and canonicalizes (each source sorted, sources sorted).
  Antichain(std::initializer_list<IndexSet> sources) : Antichain(std::vector<IndexSet>(sources)) {}
  explicit Antichain(std::vector<IndexSet> sources) {
    if (sources.empty()) throw Error("antichain: no sources given");
    for (auto& s : sources) {
      s = make_index_set(std::move(s));
      if (s.empty()) throw Error("antichain: empty source");
    }
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    for (std::size_t a = 0; a < sources.size(); ++a) {
      for (std::size_t b = 0; b < sources.size(); ++b) {
        if (a != b && is_subset(sources[a], sources[b])) {
          throw Error("antichain: source " + to_string(sources[a]) + " is contained in " + to_string(sources[b]));
        }
      }
    }
    sources_ = std::move(sources);
  }

  const std::vector<IndexSet>& sources() const { return sources_; }
  std::size_t size() const { return sources_.size(); }

  std::string str() const {
    std::string out = "{";
    for (const auto& s : sources_) out += to_string(s);
    return out + "}";
  }

  friend auto operator<=>(const Antichain&, const Antichain&) = default;
  friend bool operator==(const Antichain&, const Antichain&) = default;

 private:
  std::vector<IndexSet> sources_;
};

inline Antichain validate_antichain(std::vector<IndexSet> sources) { return Antichain(std::move(sources)); }

inline bool antichain_leq(const Antichain& a, const Antichain& b) {
  for (const auto& upper : b.sources()) {
    bool covered = false;
    for (const auto& lower : a.sources()) {
      if (is_subset(lower, upper)) {
        covered = true;
        break;
      }
    }
    if (!covered) return false;
  }
  return true;
}

/// All antichains of nonempty subsets of {0, ..., n-1}. Counts are 1, 4, 18,
/// 166 for n = 1..4, i.e. the Dedekind number minus the empty antichain and
/// the antichain holding only the empty set.
inline std::vector<Antichain> enumerate_antichains(int n) {
  if (n < 1 || n > 4) throw Error("enumerate_antichains: n must be in [1, 4], got " + std::to_string(n));
  const unsigned n_subsets = (1u << n) - 1;  // nonempty subsets, encoded as masks 1..2^n-1
  auto subset = [](unsigned mask) {
    IndexSet s;
    for (unsigned i = 0; mask; ++i, mask >>= 1) {
      if (mask & 1u) s.push_back(i);
    }
    return s;
  };
  std::vector<Antichain> out;
  for (std::uint32_t family = 1; family < (1u << n_subsets); ++family) {
    std::vector<unsigned> masks;
    for (unsigned k = 0; k < n_subsets; ++k) {
      if (family & (1u << k)) masks.push_back(k + 1);
    }
    bool ok = true;
    for (std::size_t a = 0; a < masks.size() && ok; ++a) {
      for (std::size_t b = 0; b < masks.size(); ++b) {
        if (a != b && (masks[a] & masks[b]) == masks[a]) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) continue;
    std::vector<IndexSet> sources;
    for (unsigned m : masks) sources.push_back(subset(m));
    out.emplace_back(std::move(sources));
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct BivariateAtoms {
  double redundancy;
  double unique_first;
  double unique_second;
  double synergy;
};

/// Bivariate Moebius inversion. Keys must be the four antichains over two
/// predictors p < q: {p}{q}, {p}, {q}, {p,q}.
inline BivariateAtoms bivariate_atoms(const std::map<Antichain, double>& values) {
  IndexSet predictors;
  for (const auto& [alpha, v] : values) {
    for (const auto& s : alpha.sources()) predictors.insert(predictors.end(), s.begin(), s.end());
  }
  predictors = make_index_set(std::move(predictors));
  if (predictors.size() != 2) {
    throw Error("bivariate_atoms: expected antichains over exactly two predictors, found " + to_string(predictors));
  }
  const std::size_t p = predictors[0];
  const std::size_t q = predictors[1];
  auto get = [&](std::vector<IndexSet> sources) {
    const Antichain key(std::move(sources));
    const auto it = values.find(key);
    if (it == values.end()) throw Error("bivariate_atoms: missing value for antichain " + key.str());
    return it->second;
  };
  const double red = get({{p}, {q}});
  const double i_p = get({{p}});
  const double i_q = get({{q}});
  const double i_pq = get({{p, q}});
  const double u_p = i_p - red;
  const double u_q = i_q - red;
  return {red, u_p, u_q, i_pq - u_p - u_q - red};
}

}  // namespace fgred
