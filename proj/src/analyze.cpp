#include "narrmap/analyze.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "narrmap/diagnostics.hpp"

namespace narrmap {
namespace {

constexpr double kTieTolerance = 1e-12;

std::vector<std::vector<bool>> comparable(const NarrativeMap& map) {
  auto rel = reachability(map);
  const std::size_t n = rel.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const bool c = rel[a][b] || rel[b][a];
      rel[a][b] = rel[b][a] = c;
    }
  }
  return rel;
}

// Maximum bipartite matching on the strict order restricted to `keep`.
// n minus the matching size is the minimum chain cover of that sub-poset.
std::size_t chain_cover(const std::vector<std::vector<bool>>& reach,
                        const std::vector<bool>& keep) {
  const std::size_t n = reach.size();
  std::vector<std::size_t> match_right(n, n);
  std::vector<bool> seen;
  const auto augment = [&](auto&& self, std::size_t u) -> bool {
    for (std::size_t v = 0; v < n; ++v) {
      if (!keep[v] || !reach[u][v] || seen[v]) continue;
      seen[v] = true;
      if (match_right[v] == n || self(self, match_right[v])) {
        match_right[v] = u;
        return true;
      }
    }
    return false;
  };
  std::size_t kept = 0, matched = 0;
  for (std::size_t u = 0; u < n; ++u) {
    if (!keep[u]) continue;
    ++kept;
    seen.assign(n, false);
    if (augment(augment, u)) ++matched;
  }
  return kept - matched;
}

}  // namespace

Route main_route(const NarrativeMap& map) {
  const std::size_t n = map.nodes.size();
  if (map.source >= n || map.sink >= n) throw InvariantError("map has no endpoints");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t e = 0; e < map.edges.size(); ++e) {
    if (map.edges[e].probability > 0.0) out[map.edges[e].from].push_back(e);
  }
  std::vector<double> cost(n, inf);
  cost[map.sink] = 0.0;
  // Chronological node order is a topological order.
  for (std::size_t v = n; v-- > 0;) {
    for (std::size_t e : out[v]) {
      const double c = -std::log(map.edges[e].probability) + cost[map.edges[e].to];
      cost[v] = std::min(cost[v], c);
    }
  }
  if (!std::isfinite(cost[map.source])) {
    throw InvariantError("sink is unreachable from source through positive-probability "
                         "edges");
  }
  const auto tight = [&](std::size_t v, std::size_t e) {
    const double c = -std::log(map.edges[e].probability) + cost[map.edges[e].to];
    return std::isfinite(c) &&
           std::abs(c - cost[v]) <= kTieTolerance * std::max(1.0, std::abs(cost[v]));
  };
  constexpr std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> count(n, 0);
  count[map.sink] = 1;
  for (std::size_t v = n; v-- > 0;) {
    if (v == map.sink) continue;
    for (std::size_t e : out[v]) {
      if (!tight(v, e)) continue;
      const std::uint64_t add = count[map.edges[e].to];
      count[v] = count[v] > cap - add ? cap : count[v] + add;
    }
  }

  Route route;
  route.likelihood = 1.0;
  route.ties = count[map.source];
  std::size_t v = map.source;
  route.nodes.push_back(v);
  while (v != map.sink) {
    std::size_t pick = map.edges.size();
    for (std::size_t e : out[v]) {
      if (!tight(v, e)) continue;
      if (pick == map.edges.size() ||
          map.nodes[map.edges[e].to].event.id < map.nodes[map.edges[pick].to].event.id) {
        pick = e;
      }
    }
    if (pick == map.edges.size()) throw InvariantError("main route search lost the path");
    route.likelihood *= map.edges[pick].probability;
    v = map.edges[pick].to;
    route.nodes.push_back(v);
  }
  return route;
}

std::vector<std::size_t> maximum_antichain_exhaustive(const NarrativeMap& map) {
  const std::size_t n = map.nodes.size();
  if (n > kExhaustiveAntichainLimit) {
    throw InvariantError("exhaustive antichain search limited to " +
                         std::to_string(kExhaustiveAntichainLimit) + " nodes");
  }
  const auto comp = comparable(map);
  std::vector<std::uint32_t> blocked(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (comp[a][b]) blocked[a] |= std::uint32_t{1} << b;
    }
  }
  // Include-first depth-first order visits equal-size sets in lexicographic
  // order, so only strictly larger antichains replace the incumbent.
  std::uint32_t best = 0;
  int best_size = 0;
  const auto search = [&](auto&& self, std::size_t idx, std::uint32_t chosen,
                          std::uint32_t allowed) -> void {
    const int size = std::popcount(chosen);
    if (size > best_size) {
      best_size = size;
      best = chosen;
    }
    if (idx == n) return;
    const std::uint32_t rest = allowed & ~((std::uint32_t{1} << idx) - 1);
    if (size + std::popcount(rest) <= best_size) return;
    const std::uint32_t bit = std::uint32_t{1} << idx;
    if (allowed & bit) self(self, idx + 1, chosen | bit, allowed & ~blocked[idx]);
    self(self, idx + 1, chosen, allowed);
  };
  search(search, 0, 0, n == 32 ? ~0u : (std::uint32_t{1} << n) - 1);
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < n; ++v) {
    if (best & (std::uint32_t{1} << v)) out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> maximum_antichain_by_chains(const NarrativeMap& map) {
  const std::size_t n = map.nodes.size();
  const auto reach = reachability(map);
  const auto comp = comparable(map);
  const std::size_t target = chain_cover(reach, std::vector<bool>(n, true));
  // Greedy in chronological order: take a node whenever some maximum
  // antichain still contains everything taken so far. The best completion
  // of an antichain A has |A| + width(nodes incomparable to all of A).
  std::vector<std::size_t> chosen;
  std::vector<bool> free(n, true);
  for (std::size_t v = 0; v < n && chosen.size() < target; ++v) {
    if (!free[v]) continue;
    std::vector<bool> rest = free;
    rest[v] = false;
    for (std::size_t u = 0; u < n; ++u) {
      if (comp[v][u]) rest[u] = false;
    }
    for (std::size_t u = 0; u <= v; ++u) rest[u] = false;
    if (chosen.size() + 1 + chain_cover(reach, rest) == target) {
      chosen.push_back(v);
      free = std::move(rest);
    } else {
      free[v] = false;
    }
  }
  return chosen;
}

std::vector<std::size_t> maximum_antichain(const NarrativeMap& map) {
  if (map.nodes.size() <= kExhaustiveAntichainLimit) {
    return maximum_antichain_exhaustive(map);
  }
  return maximum_antichain_by_chains(map);
}

std::size_t width(const NarrativeMap& map) {
  return chain_cover(reachability(map), std::vector<bool>(map.nodes.size(), true));
}

Analysis analyze(const NarrativeMap& map) {
  Analysis a;
  a.route = main_route(map);
  a.landmarks = maximum_antichain(map);
  a.width = a.landmarks.size();
  return a;
}

}  // namespace narrmap
