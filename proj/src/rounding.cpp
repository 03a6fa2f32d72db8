#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <numeric>

#include "narrmap/coherence.hpp"
#include "narrmap/diagnostics.hpp"
#include "narrmap/extract.hpp"

namespace narrmap {
namespace {

constexpr double kIntegralTolerance = 1e-9;
constexpr double kCoverageTolerance = 1e-9;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// A subset of the LP candidate edges, evaluated against the st-map rules.
class Selection {
 public:
  explicit Selection(const LinearProgram& lp)
      : lp_(lp), on_(lp.edges.size(), false) {}

  const LinearProgram& lp() const { return lp_; }
  bool on(std::size_t e) const { return on_[e]; }
  void set(std::size_t e, bool value) { on_[e] = value; }

  std::size_t pos(std::size_t corpus_index) const { return corpus_index - lp_.source; }

  // Forward reachability from s and backward from t over selected edges.
  // Edges are sorted by tail, so one pass each way suffices.
  void reach(std::vector<bool>& fwd, std::vector<bool>& bwd) const {
    const std::size_t w = lp_.window.size();
    fwd.assign(w, false);
    bwd.assign(w, false);
    fwd[0] = true;
    bwd[w - 1] = true;
    for (std::size_t e = 0; e < on_.size(); ++e) {
      if (on_[e] && fwd[pos(lp_.edges[e].from)]) fwd[pos(lp_.edges[e].to)] = true;
    }
    for (std::size_t e = on_.size(); e-- > 0;) {
      if (on_[e] && bwd[pos(lp_.edges[e].to)]) bwd[pos(lp_.edges[e].from)] = true;
    }
  }

  std::vector<bool> active_nodes() const {
    std::vector<bool> active(lp_.window.size(), false);
    active.front() = active.back() = true;
    for (std::size_t e = 0; e < on_.size(); ++e) {
      if (!on_[e]) continue;
      active[pos(lp_.edges[e].from)] = true;
      active[pos(lp_.edges[e].to)] = true;
    }
    return active;
  }

  // Active nodes that do not lie on an s-t path.
  std::vector<std::size_t> offending() const {
    std::vector<bool> fwd, bwd;
    reach(fwd, bwd);
    const auto active = active_nodes();
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < active.size(); ++p) {
      if (active[p] && !(fwd[p] && bwd[p])) out.push_back(p);
    }
    return out;
  }

  // Drops every selected edge that is not on an s-t path.
  void prune() {
    std::vector<bool> fwd, bwd;
    reach(fwd, bwd);
    for (std::size_t e = 0; e < on_.size(); ++e) {
      if (on_[e] && !(fwd[pos(lp_.edges[e].from)] && bwd[pos(lp_.edges[e].to)])) {
        on_[e] = false;
      }
    }
  }

  bool connects() const {
    std::vector<bool> fwd, bwd;
    reach(fwd, bwd);
    return fwd.back();
  }

  std::size_t node_count() const {
    const auto active = active_nodes();
    return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
  }

  std::vector<double> cover() const {
    std::vector<double> out(lp_.clusters.size(), 0.0);
    for (std::size_t e = 0; e < on_.size(); ++e) {
      if (!on_[e]) continue;
      for (std::size_t q = 0; q < out.size(); ++q) out[q] += lp_.edges[e].mass[q];
    }
    return out;
  }

  // Average normalized coverage of a raw cover vector, optionally with one
  // more edge switched on.
  double average_of(const std::vector<double>& raw,
                    std::size_t extra = static_cast<std::size_t>(-1)) const {
    double sum = 0.0;
    for (std::size_t q = 0; q < raw.size(); ++q) {
      const double c = raw[q] + (extra < on_.size() ? lp_.edges[extra].mass[q] : 0.0);
      sum += std::min(1.0, c / lp_.clusters[q].reference);
    }
    return sum / static_cast<double>(raw.size());
  }

  double average_coverage() const { return average_of(cover()); }

  double weakest_link() const {
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < on_.size(); ++e) {
      if (on_[e]) w = std::min(w, lp_.edges[e].coherence);
    }
    return w;
  }

  // Assumes the selection has been pruned.
  bool satisfies(double mincover) const {
    return connects() && node_count() >= lp_.config.K &&
           average_coverage() >= mincover - kCoverageTolerance;
  }

 private:
  const LinearProgram& lp_;
  std::vector<bool> on_;
};

// Adds the s-t path whose smallest x*c is largest, used when the thresholded
// edges do not connect the endpoints at all.
void add_widest_path(Selection& sel, const LpSolution& sol) {
  const auto& lp = sel.lp();
  const std::size_t w = lp.window.size();
  std::vector<double> best(w, -1.0);
  std::vector<std::size_t> via(w, lp.edges.size());
  best[0] = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < lp.edges.size(); ++e) {
    const std::size_t a = sel.pos(lp.edges[e].from);
    const std::size_t b = sel.pos(lp.edges[e].to);
    if (best[a] < 0.0) continue;
    const double width = std::min(best[a], sol.edge[e] * lp.edges[e].coherence);
    if (width > best[b]) {
      best[b] = width;
      via[b] = e;
    }
  }
  if (via[w - 1] == lp.edges.size()) {
    throw InfeasibleError("connectivity",
                          "infeasible: connectivity (rounding could not connect start "
                          "and end; lower mincover or K)");
  }
  for (std::size_t p = w - 1; p != 0;) {
    const std::size_t e = via[p];
    sel.set(e, true);
    p = sel.pos(lp.edges[e].from);
  }
}

void repair(Selection& sel, const LpSolution& sol) {
  const auto& lp = sel.lp();
  std::vector<std::size_t> order(lp.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sol.edge[a] * lp.edges[a].coherence > sol.edge[b] * lp.edges[b].coherence;
  });
  for (;;) {
    if (!sel.connects()) add_widest_path(sel, sol);
    const auto bad = sel.offending();
    if (bad.empty()) return;
    std::vector<bool> is_bad(lp.window.size(), false);
    for (std::size_t p : bad) is_bad[p] = true;
    // Only an edge touching an offending node can change its status.
    bool fixed = false;
    for (std::size_t e : order) {
      if (sel.on(e)) continue;
      if (!is_bad[sel.pos(lp.edges[e].from)] && !is_bad[sel.pos(lp.edges[e].to)]) continue;
      sel.set(e, true);
      if (sel.offending().size() < bad.size()) {
        fixed = true;
        break;
      }
      sel.set(e, false);
    }
    if (fixed) continue;
    // No single edge helps: detach the earliest offending internal node.
    const std::size_t victim = bad.front() == 0 ? bad[1] : bad.front();
    for (std::size_t e = 0; e < lp.edges.size(); ++e) {
      if (sel.pos(lp.edges[e].from) == victim || sel.pos(lp.edges[e].to) == victim) {
        sel.set(e, false);
      }
    }
  }
}

void raise_coverage(Selection& sel) {
  const auto& lp = sel.lp();
  const double goal = lp.config.mincover - kCoverageSlack;
  for (;;) {
    const auto raw = sel.cover();
    const double current = sel.average_of(raw);
    if (current >= goal) return;
    std::vector<bool> fwd, bwd;
    sel.reach(fwd, bwd);
    const double weakest = sel.weakest_link();
    std::size_t pick = lp.edges.size();
    double pick_score = 0.0;
    for (std::size_t e = 0; e < lp.edges.size(); ++e) {
      if (sel.on(e)) continue;
      const std::size_t a = sel.pos(lp.edges[e].from);
      const std::size_t b = sel.pos(lp.edges[e].to);
      // Both endpoints already on the map keeps every node on an s-t path.
      if (!(fwd[a] && bwd[a] && fwd[b] && bwd[b])) continue;
      const double gain = sel.average_of(raw, e) - current;
      if (gain <= 1e-15) continue;
      const double loss = std::max(0.0, weakest - lp.edges[e].coherence);
      const double score = gain / (loss + 1e-9);
      if (score > pick_score) {
        pick_score = score;
        pick = e;
      }
    }
    if (pick == lp.edges.size()) return;
    sel.set(pick, true);
  }
}

// All candidate edges with coherence >= theta that lie on an s-t path of
// such edges. Any valid map with weakest link >= theta is contained in it.
Selection threshold_graph(const LinearProgram& lp, double theta) {
  Selection sel(lp);
  for (std::size_t e = 0; e < lp.edges.size(); ++e) {
    sel.set(e, lp.edges[e].coherence >= theta);
  }
  sel.prune();
  return sel;
}

// Largest candidate coherence theta <= ceiling whose threshold graph meets
// size, connectivity and the given coverage level. Feasibility only shrinks
// as theta grows, so binary search over distinct values is exact.
std::optional<double> best_threshold(const LinearProgram& lp, double ceiling,
                                     double mincover) {
  std::vector<double> values;
  for (const auto& e : lp.edges) {
    if (e.coherence <= ceiling + 1e-12) values.push_back(e.coherence);
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  if (values.empty() || !threshold_graph(lp, values.front()).satisfies(mincover)) {
    return std::nullopt;
  }
  std::size_t lo = 0, hi = values.size();  // values[lo] feasible, values[hi] not
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (threshold_graph(lp, values[mid]).satisfies(mincover)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return values[lo];
}

bool integral(const LpSolution& sol) {
  const auto near01 = [](double v) {
    return std::abs(v) <= kIntegralTolerance || std::abs(v - 1.0) <= kIntegralTolerance;
  };
  return std::all_of(sol.edge.begin(), sol.edge.end(), near01) &&
         std::all_of(sol.node.begin(), sol.node.end(), near01);
}

NarrativeMap to_map(const Selection& sel, const Corpus& corpus, const TopicModel& topics) {
  const auto& lp = sel.lp();
  const auto active = sel.active_nodes();
  std::vector<std::size_t> index_of(lp.window.size(), 0);
  NarrativeMap map;
  for (std::size_t p = 0; p < active.size(); ++p) {
    if (!active[p]) continue;
    index_of[p] = map.nodes.size();
    const std::size_t v = lp.window[p];
    const auto dist = topics.distribution(v);
    map.nodes.push_back({corpus[v], v, std::vector<double>(dist.begin(), dist.end())});
  }
  for (std::size_t e = 0; e < lp.edges.size(); ++e) {
    if (!sel.on(e)) continue;
    map.edges.push_back({index_of[sel.pos(lp.edges[e].from)],
                         index_of[sel.pos(lp.edges[e].to)], lp.edges[e].coherence, 0.0});
  }
  map.source = 0;
  map.sink = map.nodes.size() - 1;
  map = normalize_outgoing(std::move(map));
  const auto issues = structure_issues(map);
  if (!issues.empty()) {
    throw InvariantError("rounded map is not a valid st-graph: " + issues.front().detail);
  }
  return map;
}

}  // namespace

NarrativeMap round_solution(const LinearProgram& lp, const LpSolution& sol,
                            const Corpus& corpus, const TopicModel& topics) {
  if (sol.edge.size() != lp.edges.size() || sol.node.size() != lp.window.size()) {
    throw InvariantError("LP solution does not match the program");
  }
  check_aligned(corpus, topics);
  const double tau = lp.config.tau;

  Selection seed(lp);
  for (std::size_t e = 0; e < lp.edges.size(); ++e) seed.set(e, sol.edge[e] >= tau);
  repair(seed, sol);
  raise_coverage(seed);
  seed.prune();

  const double mincover = lp.config.mincover;
  if (integral(sol) && seed.satisfies(mincover)) return to_map(seed, corpus, topics);

  // Lift: the threshold graph at the best feasible level attains the best
  // weakest link any integral map can have. The thresholded seed is kept
  // when it already reaches that level.
  for (const double level : {mincover, mincover - kCoverageSlack}) {
    const auto theta = best_threshold(lp, sol.objective, level);
    if (!theta) continue;
    if (seed.satisfies(level) && seed.weakest_link() >= *theta - 1e-12) {
      return to_map(seed, corpus, topics);
    }
    return to_map(threshold_graph(lp, *theta), corpus, topics);
  }
  if (seed.satisfies(mincover - kCoverageSlack)) return to_map(seed, corpus, topics);
  const Selection all = threshold_graph(lp, 0.0);
  if (!all.connects()) {
    throw InfeasibleError("connectivity", "infeasible: connectivity (rounding could not "
                                          "connect start and end)");
  }
  if (all.node_count() < lp.config.K) {
    throw InfeasibleError("size", "infeasible: size (rounded map cannot reach K = " +
                                      std::to_string(lp.config.K) + " events)");
  }
  throw InfeasibleError("coverage", "infeasible: coverage (rounded map reaches " +
                                        fmt(all.average_coverage()) +
                                        " average coverage, below mincover " +
                                        fmt(mincover) + ")");
}

CoverageReport compute_coverage(const NarrativeMap& map, const CoherenceTable& table,
                                const TopicModel& topics) {
  if (map.source >= map.nodes.size() || map.sink >= map.nodes.size()) {
    throw InputError("map has no valid endpoints");
  }
  const std::size_t s = map.nodes[map.source].corpus_index;
  const std::size_t t = map.nodes[map.sink].corpus_index;
  CoverageReport report;
  std::vector<double> cover;
  for (std::size_t q = 0; q < topics.k(); ++q) {
    double cmax = 0.0;
    for (const auto& e : table) {
      if (e.i < s || e.j > t || !(e.coherence > 0.0)) continue;
      cmax += e.coherence * edge_membership(topics, e.i, e.j, q);
    }
    if (!(cmax > 0.0)) {
      report.degenerate.push_back(q);
      continue;
    }
    double c = 0.0;
    for (const auto& e : map.edges) {
      c += e.coherence * edge_membership(topics, map.nodes[e.from].corpus_index,
                                         map.nodes[e.to].corpus_index, q);
    }
    report.slots.push_back(q);
    report.reference.push_back(std::min(1.0, cmax));
    cover.push_back(c);
  }
  for (std::size_t q = 0; q < cover.size(); ++q) {
    report.normalized.push_back(std::min(1.0, cover[q] / report.reference[q]));
    report.average += report.normalized.back();
  }
  if (!cover.empty()) report.average /= static_cast<double>(cover.size());
  return report;
}

CoverageReport compute_coverage(const NarrativeMap& map,
                                const std::vector<std::size_t>& slots,
                                const std::vector<double>& reference) {
  if (slots.size() != reference.size()) {
    throw InputError("coverage slots and references differ in length");
  }
  CoverageReport report;
  report.slots = slots;
  report.reference = reference;
  for (std::size_t q = 0; q < slots.size(); ++q) {
    if (!(reference[q] > 0.0)) throw InputError("coverage reference must be positive");
    double c = 0.0;
    for (const auto& e : map.edges) {
      const auto& a = map.nodes[e.from].topic_dist;
      const auto& b = map.nodes[e.to].topic_dist;
      if (slots[q] + 1 >= a.size() || slots[q] + 1 >= b.size()) {
        throw InputError("coverage cluster " + std::to_string(slots[q]) +
                         " is outside the stored topic distributions");
      }
      c += e.coherence * std::sqrt(a[slots[q]]) * std::sqrt(b[slots[q]]);
    }
    report.normalized.push_back(std::min(1.0, c / reference[q]));
    report.average += report.normalized.back();
  }
  if (!slots.empty()) report.average /= static_cast<double>(slots.size());
  return report;
}

bool VerifyReport::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const VerifyCheck& c) { return c.passed; });
}

const VerifyCheck* VerifyReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

VerifyReport verify(const NarrativeMap& map, const TopicModel& topics,
                    const CoherenceTable& table, const ExtractionConfig& config) {
  return verify(map, compute_coverage(map, table, topics), config);
}

VerifyReport verify(const NarrativeMap& map, const CoverageReport& coverage,
                    const ExtractionConfig& config) {
  VerifyReport report;
  const auto issues = structure_issues(map);
  for (const char* name :
       {"single-source", "single-sink", "forward-edges", "all-nodes-on-path"}) {
    VerifyCheck check{name, true, ""};
    for (const auto& issue : issues) {
      if (issue.check == name || issue.check == "endpoints") {
        check.passed = false;
        check.detail += (check.detail.empty() ? "" : "; ") + issue.detail;
      }
    }
    report.checks.push_back(std::move(check));
  }
  report.checks.push_back({"node-count", map.nodes.size() >= config.K,
                           std::to_string(map.nodes.size()) + " nodes, K = " +
                               std::to_string(config.K)});
  const double floor = config.mincover - kCoverageSlack;
  report.checks.push_back({"coverage", coverage.average >= floor - 1e-12,
                           "average coverage " + fmt(coverage.average) +
                               ", required " + fmt(floor) + " (mincover " +
                               fmt(config.mincover) + " - " + fmt(kCoverageSlack) +
                               ")"});
  return report;
}

}  // namespace narrmap
