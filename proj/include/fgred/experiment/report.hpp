#pragma once

// records.csv I/O, batch statistics (summary.json) and SVG scatter plots.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgred/experiment/run.hpp"
#include "fgred/experiment/stats.hpp"

namespace fgred::experiment {

/// Raised for filesystem problems; carries the offending path in the message.
class IoError : public Error {
 public:
  using Error::Error;
};

inline constexpr const char* kCsvHeader =
    "sim_id,r_wb,r_wb_se,r_wass,r_wass_se,q_wb_0,q_wb_1,q_wass_0,q_wass_1,wc_ate,mean_dist_0,mean_dist_1,"
    "converged_0,converged_1";
inline constexpr std::size_t kCsvColumns = 14;

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw Error("records.csv: bad number '" + s + "'");
  return v;
}

}  // namespace detail

inline std::string records_to_csv(const std::vector<SimRecord>& records) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.sim_id;
    for (double v : {r.r_wb, r.r_wb_se, r.r_wass, r.r_wass_se, r.q_wb[0], r.q_wb[1], r.q_wass[0], r.q_wass[1],
                     r.wc_ate, r.mean_dist[0], r.mean_dist[1]}) {
      out << ',' << detail::fmt(v);
    }
    out << ',' << int(r.converged[0]) << ',' << int(r.converged[1]) << '\n';
  }
  return out.str();
}

inline std::vector<SimRecord> records_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error("records.csv: unexpected header");
  std::vector<SimRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (cells.size() != kCsvColumns) {
      throw Error("records.csv: row has " + std::to_string(cells.size()) + " columns, expected " +
                  std::to_string(kCsvColumns));
    }
    SimRecord r;
    try {
      r.sim_id = std::stoull(cells[0]);
      double* fields[] = {&r.r_wb,     &r.r_wb_se,   &r.r_wass,  &r.r_wass_se,    &r.q_wb[0],     &r.q_wb[1],
                          &r.q_wass[0], &r.q_wass[1], &r.wc_ate, &r.mean_dist[0], &r.mean_dist[1]};
      for (std::size_t k = 0; k < 11; ++k) *fields[k] = detail::parse_double(cells[k + 1]);
    } catch (const std::logic_error&) {
      throw Error("records.csv: unparsable row '" + line + "'");
    }
    r.converged = {cells[12] == "1", cells[13] == "1"};
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw IoError("write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Statistics ---------------------------------------------------------------

struct QuartileMedians {
  double top = std::numeric_limits<double>::quiet_NaN();     // median WC-ATE, top redundancy quartile
  double bottom = std::numeric_limits<double>::quiet_NaN();  // median WC-ATE, bottom redundancy quartile
};

struct TopDecile {
  std::array<double, 2> median_mean_dist{std::numeric_limits<double>::quiet_NaN(),
                                         std::numeric_limits<double>::quiet_NaN()};
  std::array<double, 2> batch_median_mean_dist{std::numeric_limits<double>::quiet_NaN(),
                                               std::numeric_limits<double>::quiet_NaN()};
  bool both_below() const {
    return median_mean_dist[0] < batch_median_mean_dist[0] && median_mean_dist[1] < batch_median_mean_dist[1];
  }
};

struct Correlation {
  double rho = std::numeric_limits<double>::quiet_NaN();
  double p_negative = std::numeric_limits<double>::quiet_NaN();
  bool defined() const { return !std::isnan(rho); }
};

/// Per redundancy kind ("wb", "wass").
struct KindSummary {
  Correlation vs_wcate;
  Correlation vs_max_dist;
  QuartileMedians quartiles;
  TopDecile top_decile;
};

struct Summary {
  std::size_t n_records = 0;
  std::size_t n_valid = 0;
  std::map<std::string, KindSummary> kinds;
  std::vector<std::string> undefined;  // correlations that came out NaN
};

inline constexpr std::size_t kMinValidRecords = 30;

namespace detail {

inline QuartileMedians quartile_medians(const std::vector<double>& r, const std::vector<double>& wc) {
  std::vector<std::size_t> idx(r.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });
  const std::size_t q = r.size() / 4;
  std::vector<double> bottom, top;
  for (std::size_t k = 0; k < q; ++k) {
    bottom.push_back(wc[idx[k]]);
    top.push_back(wc[idx[idx.size() - 1 - k]]);
  }
  return {median(top), median(bottom)};
}

inline TopDecile top_decile(const std::vector<double>& r, const std::array<std::vector<double>, 2>& dist) {
  std::vector<std::size_t> idx(r.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
  const std::size_t d = std::max<std::size_t>(1, r.size() / 10);
  TopDecile out;
  for (std::size_t s = 0; s < 2; ++s) {
    std::vector<double> top;
    for (std::size_t k = 0; k < d; ++k) top.push_back(dist[s][idx[k]]);
    out.median_mean_dist[s] = median(top);
    out.batch_median_mean_dist[s] = median(dist[s]);
  }
  return out;
}

}  // namespace detail

inline Summary correlation_report(const std::vector<SimRecord>& records, int shuffles, std::uint64_t seed) {
  Summary s;
  s.n_records = records.size();
  std::vector<double> wc, rwb, rwass, dmax;
  std::array<std::vector<double>, 2> dist;
  for (const auto& r : records) {
    if (!r.valid()) continue;
    wc.push_back(r.wc_ate);
    rwb.push_back(r.r_wb);
    rwass.push_back(r.r_wass);
    dmax.push_back(std::max(r.mean_dist[0], r.mean_dist[1]));
    dist[0].push_back(r.mean_dist[0]);
    dist[1].push_back(r.mean_dist[1]);
  }
  s.n_valid = wc.size();
  if (s.n_valid < kMinValidRecords) {
    throw Error("correlation_report: " + std::to_string(s.n_valid) + " valid records, need at least " +
                std::to_string(kMinValidRecords));
  }
  const auto corr = [&](const std::vector<double>& a, const std::vector<double>& b, std::uint64_t stream,
                        const std::string& name) {
    Correlation c;
    bool finite = true;
    for (double v : a) finite = finite && std::isfinite(v);
    if (finite) {
      c.rho = spearman(a, b);
      if (c.defined()) c.p_negative = permutation_p_negative(a, b, shuffles, derive_seed(seed, 2, stream));
    }
    if (!c.defined()) s.undefined.push_back(name);
    return c;
  };
  std::uint64_t stream = 0;
  for (const auto& [name, r] : {std::pair<std::string, const std::vector<double>&>{"wb", rwb}, {"wass", rwass}}) {
    KindSummary k;
    k.vs_wcate = corr(r, wc, stream++, "spearman_r" + name + "_wcate");
    k.vs_max_dist = corr(r, dmax, stream++, "spearman_r_dist." + name);
    if (k.vs_wcate.defined()) {
      k.quartiles = detail::quartile_medians(r, wc);
      k.top_decile = detail::top_decile(r, dist);
    }
    s.kinds[name] = k;
  }
  return s;
}

inline nlohmann::json summary_to_json(const Summary& s) {
  const auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  nlohmann::json quartiles, top_decile, p_values, dist_corr;
  for (const auto& [name, k] : s.kinds) {
    quartiles[name] = {{"top", num(k.quartiles.top)}, {"bottom", num(k.quartiles.bottom)}};
    top_decile[name] = {{"median_mean_dist_0", num(k.top_decile.median_mean_dist[0])},
                        {"median_mean_dist_1", num(k.top_decile.median_mean_dist[1])},
                        {"batch_median_mean_dist_0", num(k.top_decile.batch_median_mean_dist[0])},
                        {"batch_median_mean_dist_1", num(k.top_decile.batch_median_mean_dist[1])}};
    p_values["r" + name + "_wcate"] = num(k.vs_wcate.p_negative);
    p_values["r" + name + "_dist"] = num(k.vs_max_dist.p_negative);
    dist_corr[name] = num(k.vs_max_dist.rho);
  }
  return {{"n_valid", s.n_valid},
          {"n_records", s.n_records},
          {"spearman_rwass_wcate", num(s.kinds.at("wass").vs_wcate.rho)},
          {"spearman_rwb_wcate", num(s.kinds.at("wb").vs_wcate.rho)},
          {"spearman_r_dist", dist_corr},
          {"quartile_medians", quartiles},
          {"top_decile", top_decile},
          {"p_values_negative", p_values},
          {"undefined", s.undefined}};
}

// SVG ------------------------------------------------------------------------

struct ScatterPanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> colour;  // optional, z-scores mapped onto a blue-red ramp
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string ramp(double z) {
  const double t = std::clamp(0.5 + z / 4.0, 0.0, 1.0);
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", int(255 * t), 60, int(255 * (1.0 - t)));
  return buf;
}

inline std::pair<double, double> finite_range(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double x : v)
    if (std::isfinite(x)) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi == lo) return {lo - 0.5, hi + 0.5};
  const double pad = 0.04 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace detail

inline std::string scatter_svg(const std::vector<ScatterPanel>& panels) {
  const double w = 420, h = 340, ml = 64, mr = 16, mt = 30, mb = 48;
  std::ostringstream o;
  o << std::setprecision(6);
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * static_cast<double>(panels.size())
    << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& pan = panels[p];
    const double ox = w * static_cast<double>(p);
    const auto [x0, x1] = detail::finite_range(pan.x);
    const auto [y0, y1] = detail::finite_range(pan.y);
    const auto px = [&](double v) { return ox + ml + (v - x0) / (x1 - x0) * (w - ml - mr); };
    const auto py = [&](double v) { return mt + (1.0 - (v - y0) / (y1 - y0)) * (h - mt - mb); };
    o << "<g>\n<rect x=\"" << ox + ml << "\" y=\"" << mt << "\" width=\"" << w - ml - mr << "\" height=\""
      << h - mt - mb << "\" fill=\"none\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << ox + w / 2 << "\" y=\"18\" text-anchor=\"middle\">" << detail::svg_escape(pan.title)
      << "</text>\n";
    o << "<text x=\"" << ox + ml + (w - ml - mr) / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">"
      << detail::svg_escape(pan.x_label) << "</text>\n";
    o << "<text transform=\"translate(" << ox + 14 << "," << mt + (h - mt - mb) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << detail::svg_escape(pan.y_label) << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
      const double vx = x0 + (x1 - x0) * t / 4.0, vy = y0 + (y1 - y0) * t / 4.0;
      o << "<text x=\"" << px(vx) << "\" y=\"" << h - mb + 14 << "\" text-anchor=\"middle\">" << vx << "</text>\n";
      o << "<text x=\"" << ox + ml - 4 << "\" y=\"" << py(vy) + 4 << "\" text-anchor=\"end\">" << vy << "</text>\n";
    }
    for (std::size_t i = 0; i < pan.x.size(); ++i) {
      if (!std::isfinite(pan.x[i]) || !std::isfinite(pan.y[i])) continue;
      const std::string fill = pan.colour.empty() ? "#1f5fa8" : detail::ramp(pan.colour[i]);
      o << "<circle cx=\"" << px(pan.x[i]) << "\" cy=\"" << py(pan.y[i]) << "\" r=\"2.2\" fill=\"" << fill
        << "\" fill-opacity=\"0.7\"/>\n";
    }
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// redundancy-vs-wcate.svg and redundancy-vs-distance.svg for the valid records.
inline std::map<std::string, std::string> report_svgs(const std::vector<SimRecord>& records) {
  std::vector<double> wc, rwb, rwass, d0, d1;
  for (const auto& r : records) {
    if (!r.valid()) continue;
    wc.push_back(r.wc_ate);
    rwb.push_back(r.r_wb);
    rwass.push_back(r.r_wass);
    d0.push_back(r.mean_dist[0]);
    d1.push_back(r.mean_dist[1]);
  }
  std::map<std::string, std::string> out;
  out["redundancy-vs-wcate.svg"] = scatter_svg({{"R^WB vs WC-ATE", "R^WB (nats)", "WC-ATE (m^2)", rwb, wc, {}},
                                                {"R^Wass vs WC-ATE", "R^Wass (m^2)", "WC-ATE (m^2)", rwass, wc, {}}});
  out["redundancy-vs-distance.svg"] =
      scatter_svg({{"colour: z-scored R^WB", "mean distance to L0 (m)", "mean distance to L1 (m)", d0, d1, zscore(rwb)},
                   {"colour: z-scored R^Wass", "mean distance to L0 (m)", "mean distance to L1 (m)", d0, d1,
                    zscore(rwass)}});
  return out;
}

}  // namespace fgred::experiment
