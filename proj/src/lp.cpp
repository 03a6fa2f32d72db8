#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "narrmap/coherence.hpp"
#include "narrmap/diagnostics.hpp"
#include "narrmap/extract.hpp"

namespace narrmap {
namespace {

constexpr int kBisectionSteps = 55;
constexpr int kMaxSweeps = 20000;
constexpr double kSweepTolerance = 1e-13;
constexpr double kFeasibilityTolerance = 1e-9;
constexpr double kViolationLimit = 1e-7;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Largest activation an edge may take while keeping minedge >= m.
double edge_cap(double c, double m) {
  if (c >= m) return 1.0;
  return (1.0 - m) / (1.0 - c);
}

// Adjacency over window positions, built once per program.
struct Structure {
  std::size_t width = 0;
  std::vector<std::vector<std::size_t>> in, out;  // LP edge indices
  std::vector<std::size_t> from, to;              // window positions
};

Structure structure_of(const LinearProgram& lp) {
  Structure st;
  st.width = lp.window.size();
  st.in.resize(st.width);
  st.out.resize(st.width);
  for (std::size_t e = 0; e < lp.edges.size(); ++e) {
    const std::size_t a = lp.edges[e].from - lp.source;
    const std::size_t b = lp.edges[e].to - lp.source;
    st.from.push_back(a);
    st.to.push_back(b);
    st.out[a].push_back(e);
    st.in[b].push_back(e);
  }
  return st;
}

// Greatest point of the region cut out by the upper-bounding rows at a fixed
// minedge level. Every such row bounds a variable by a monotone function of
// the others, so the region is closed under componentwise max and its top
// element is the limit of the bound operator applied from all-ones. The
// remaining rows (s out-flow, t in-flow, size, coverage) are monotone the
// other way, so the level is feasible iff this point satisfies them.
struct TopPoint {
  std::vector<double> node;
  std::vector<double> edge;
  std::vector<double> coverage;
  double source_out = 0.0;
  double sink_in = 0.0;
  double size = 0.0;
  double coverage_sum = 0.0;
};

TopPoint top_point(const LinearProgram& lp, const Structure& st, double m) {
  const std::size_t w = st.width;
  std::vector<double> cap(lp.edges.size());
  for (std::size_t e = 0; e < lp.edges.size(); ++e) {
    cap[e] = edge_cap(lp.edges[e].coherence, m);
  }
  std::vector<double> node(w, 1.0);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t p = 1; p + 1 < w; ++p) {
      double inflow = 0.0;
      for (std::size_t e : st.in[p]) inflow += std::min(cap[e], node[st.from[e]]);
      if (inflow < node[p]) {
        change = std::max(change, node[p] - inflow);
        node[p] = inflow;
      }
    }
    for (std::size_t p = w - 1; p-- > 1;) {
      double outflow = 0.0;
      for (std::size_t e : st.out[p]) outflow += std::min(cap[e], node[st.to[e]]);
      if (outflow < node[p]) {
        change = std::max(change, node[p] - outflow);
        node[p] = outflow;
      }
    }
    if (change <= kSweepTolerance) break;
  }
  TopPoint pt;
  pt.edge.resize(lp.edges.size());
  for (std::size_t e = 0; e < lp.edges.size(); ++e) {
    pt.edge[e] = std::min({cap[e], node[st.from[e]], node[st.to[e]]});
  }
  for (std::size_t e : st.out[0]) pt.source_out += pt.edge[e];
  for (std::size_t e : st.in[w - 1]) pt.sink_in += pt.edge[e];
  for (double v : node) pt.size += v;
  pt.coverage.assign(lp.clusters.size(), 0.0);
  for (std::size_t e = 0; e < lp.edges.size(); ++e) {
    for (std::size_t q = 0; q < lp.clusters.size(); ++q) {
      pt.coverage[q] += lp.edges[e].mass[q] * pt.edge[e];
    }
  }
  for (std::size_t q = 0; q < lp.clusters.size(); ++q) {
    pt.coverage[q] = std::min(1.0, pt.coverage[q] / lp.clusters[q].reference);
    pt.coverage_sum += pt.coverage[q];
  }
  pt.node = std::move(node);
  return pt;
}

bool connected(const TopPoint& pt) {
  return pt.source_out >= 1.0 - kFeasibilityTolerance &&
         pt.sink_in >= 1.0 - kFeasibilityTolerance;
}

bool feasible(const LinearProgram& lp, const TopPoint& pt) {
  return connected(pt) &&
         pt.size >= static_cast<double>(lp.config.K) - kFeasibilityTolerance &&
         pt.coverage_sum >= lp.coverage_target - kFeasibilityTolerance;
}

[[noreturn]] void diagnose(const LinearProgram& lp, const TopPoint& pt) {
  if (!connected(pt)) {
    throw InfeasibleError("connectivity",
                          "infeasible: connectivity (no start-end path through "
                          "candidate edges)");
  }
  std::vector<std::string> families, details;
  if (pt.size < static_cast<double>(lp.config.K) - kFeasibilityTolerance) {
    families.push_back("size");
    details.push_back("size (at most " + fmt(pt.size) + " events can be active, K = " +
                      std::to_string(lp.config.K) + ")");
  }
  if (pt.coverage_sum < lp.coverage_target - kFeasibilityTolerance) {
    families.push_back("coverage");
    const double best = pt.coverage_sum / static_cast<double>(lp.clusters.size());
    details.push_back("coverage (best average coverage " + fmt(best) +
                      " < mincover " + fmt(lp.config.mincover) + ")");
  }
  std::string family, detail;
  for (std::size_t i = 0; i < families.size(); ++i) {
    family += (i ? "," : "") + families[i];
    detail += (i ? "; " : "") + details[i];
  }
  if (family.empty()) throw InvariantError("LP diagnosis found no failing family");
  throw InfeasibleError(family, "infeasible: " + detail);
}

}  // namespace

void ExtractionConfig::validate() const {
  if (K < 2) throw InputError("K must be at least 2");
  if (!(mincover > 0.0 && mincover <= 1.0)) {
    throw InputError("mincover must lie in (0, 1]");
  }
  if (!(tau > 0.0 && tau < 1.0)) {
    throw InputError("rounding threshold must lie in (0, 1)");
  }
}

LinearProgram build_lp(const CoherenceTable& table, const TopicModel& topics,
                       std::size_t s, std::size_t t, const ExtractionConfig& config) {
  config.validate();
  if (topics.size() != table.num_events()) {
    throw InputError("topic model and coherence table cover different events");
  }
  if (!(s < t && t < table.num_events())) {
    throw InputError("start event must precede end event");
  }
  LinearProgram lp;
  lp.config = config;
  lp.source = s;
  lp.sink = t;
  const auto add_var = [&lp](std::string name) {
    lp.variables.push_back({std::move(name), 0.0, 1.0});
    return lp.variables.size() - 1;
  };
  lp.minedge_var = add_var("minedge");
  for (std::size_t v = s; v <= t; ++v) {
    lp.window.push_back(v);
    lp.node_var.push_back(add_var("node_" + topics.ids()[v]));
  }
  for (const auto& entry : table) {
    if (entry.i < s || entry.j > t || !(entry.coherence > 0.0)) continue;
    LpEdge e;
    e.from = entry.i;
    e.to = entry.j;
    e.coherence = entry.coherence;
    e.var = add_var("x_" + topics.ids()[entry.i] + "_" + topics.ids()[entry.j]);
    lp.edges.push_back(std::move(e));
  }
  bool s_out = false, t_in = false;
  for (const auto& e : lp.edges) {
    s_out = s_out || e.from == s;
    t_in = t_in || e.to == t;
  }
  if (!s_out || !t_in) {
    throw InfeasibleError("connectivity",
                          std::string("infeasible: connectivity (") +
                              (!s_out ? "start event has no candidate successor"
                                      : "end event has no candidate predecessor") +
                              ")");
  }

  for (std::size_t q = 0; q < topics.k(); ++q) {
    double cmax = 0.0;
    for (const auto& e : lp.edges) {
      cmax += e.coherence * edge_membership(topics, e.from, e.to, q);
    }
    if (!(cmax > 0.0)) {
      warn("cluster " + std::to_string(q) +
           " has no membership mass on candidate edges; dropped from coverage");
      continue;
    }
    LpCluster c;
    c.slot = q;
    c.cmax = cmax;
    c.reference = std::min(1.0, cmax);
    c.var = add_var("cover_" + std::to_string(q));
    lp.clusters.push_back(c);
  }
  if (lp.clusters.empty()) {
    throw InfeasibleError("coverage",
                          "infeasible: coverage (no topic cluster has membership "
                          "mass on candidate edges)");
  }
  for (auto& e : lp.edges) {
    for (const auto& c : lp.clusters) {
      e.mass.push_back(e.coherence * edge_membership(topics, e.from, e.to, c.slot));
    }
  }
  lp.coverage_target = config.mincover * static_cast<double>(lp.clusters.size());

  lp.objective.assign(lp.variables.size(), 0.0);
  lp.objective[lp.minedge_var] = 1.0;

  const auto node_of = [&lp](std::size_t v) { return lp.node_var[v - lp.source]; };
  using RS = RowSense;
  for (const auto& e : lp.edges) {
    lp.rows.push_back({{{lp.minedge_var, 1.0}, {e.var, 1.0 - e.coherence}},
                       RS::kLessEqual, 1.0, "weakest-link"});
  }
  for (const auto& e : lp.edges) {
    lp.rows.push_back({{{e.var, 1.0}, {node_of(e.from), -1.0}}, RS::kLessEqual, 0.0,
                       "coupling"});
    lp.rows.push_back({{{e.var, 1.0}, {node_of(e.to), -1.0}}, RS::kLessEqual, 0.0,
                       "coupling"});
  }
  lp.rows.push_back({{{node_of(s), 1.0}}, RS::kEqual, 1.0, "endpoints"});
  lp.rows.push_back({{{node_of(t), 1.0}}, RS::kEqual, 1.0, "endpoints"});

  const std::size_t w = lp.window.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> in(w), out(w);
  for (const auto& e : lp.edges) {
    out[e.from - s].push_back({e.var, 1.0});
    in[e.to - s].push_back({e.var, 1.0});
  }
  lp.rows.push_back({out[0], RS::kGreaterEqual, 1.0, "connectivity"});
  lp.rows.push_back({in[w - 1], RS::kGreaterEqual, 1.0, "connectivity"});
  for (std::size_t p = 1; p + 1 < w; ++p) {
    auto row_in = in[p];
    row_in.push_back({lp.node_var[p], -1.0});
    lp.rows.push_back({std::move(row_in), RS::kGreaterEqual, 0.0, "connectivity"});
    auto row_out = out[p];
    row_out.push_back({lp.node_var[p], -1.0});
    lp.rows.push_back({std::move(row_out), RS::kGreaterEqual, 0.0, "connectivity"});
  }

  LpRow size{{}, RS::kGreaterEqual, static_cast<double>(config.K), "size"};
  for (std::size_t var : lp.node_var) size.terms.push_back({var, 1.0});
  lp.rows.push_back(std::move(size));

  LpRow average{{}, RS::kGreaterEqual, lp.coverage_target, "coverage"};
  for (std::size_t q = 0; q < lp.clusters.size(); ++q) {
    LpRow row{{{lp.clusters[q].var, lp.clusters[q].reference}}, RS::kLessEqual, 0.0,
              "coverage"};
    for (const auto& e : lp.edges) {
      if (e.mass[q] > 0.0) row.terms.push_back({e.var, -e.mass[q]});
    }
    lp.rows.push_back(std::move(row));
    average.terms.push_back({lp.clusters[q].var, 1.0});
  }
  lp.rows.push_back(std::move(average));
  return lp;
}

LpSolution solve_lp(const LinearProgram& lp) {
  if (lp.window.size() < 2 || lp.node_var.size() != lp.window.size()) {
    throw InvariantError("malformed linear program");
  }
  const Structure st = structure_of(lp);
  TopPoint best = top_point(lp, st, 0.0);
  if (!feasible(lp, best)) diagnose(lp, best);

  double lo = 0.0, hi = 1.0;
  TopPoint at_one = top_point(lp, st, 1.0);
  if (feasible(lp, at_one)) {
    lo = 1.0;
    best = std::move(at_one);
  } else {
    for (int step = 0; step < kBisectionSteps; ++step) {
      const double mid = 0.5 * (lo + hi);
      TopPoint pt = top_point(lp, st, mid);
      if (feasible(lp, pt)) {
        lo = mid;
        best = std::move(pt);
      } else {
        hi = mid;
      }
    }
  }

  LpSolution sol;
  sol.objective = lo;
  sol.node = best.node;
  sol.edge = best.edge;
  sol.coverage = best.coverage;
  sol.values.assign(lp.variables.size(), 0.0);
  sol.values[lp.minedge_var] = lo;
  for (std::size_t p = 0; p < lp.window.size(); ++p) sol.values[lp.node_var[p]] = sol.node[p];
  for (std::size_t e = 0; e < lp.edges.size(); ++e) sol.values[lp.edges[e].var] = sol.edge[e];
  for (std::size_t q = 0; q < lp.clusters.size(); ++q) {
    sol.values[lp.clusters[q].var] = sol.coverage[q];
  }
  const double violation = max_violation(lp, sol.values);
  if (violation > kViolationLimit) {
    throw InvariantError("LP solution violates a constraint by " +
                         std::to_string(violation));
  }
  return sol;
}

double max_violation(const LinearProgram& lp, const std::vector<double>& values) {
  if (values.size() != lp.variables.size()) {
    throw InvariantError("value vector does not match the program");
  }
  double worst = 0.0;
  for (std::size_t v = 0; v < values.size(); ++v) {
    worst = std::max(worst, lp.variables[v].lower - values[v]);
    worst = std::max(worst, values[v] - lp.variables[v].upper);
  }
  for (const auto& row : lp.rows) {
    double lhs = 0.0;
    for (const auto& [var, coef] : row.terms) lhs += coef * values[var];
    switch (row.sense) {
      case RowSense::kLessEqual: worst = std::max(worst, lhs - row.rhs); break;
      case RowSense::kGreaterEqual: worst = std::max(worst, row.rhs - lhs); break;
      case RowSense::kEqual: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

}  // namespace narrmap
