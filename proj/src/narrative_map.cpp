#include "narrmap/narrative_map.hpp"

#include <algorithm>
#include <numeric>

namespace narrmap {

std::vector<std::vector<std::size_t>> NarrativeMap::successors() const {
  std::vector<std::vector<std::size_t>> out(nodes.size());
  for (const auto& e : edges) out[e.from].push_back(e.to);
  return out;
}

std::vector<std::vector<std::size_t>> NarrativeMap::predecessors() const {
  std::vector<std::vector<std::size_t>> out(nodes.size());
  for (const auto& e : edges) out[e.to].push_back(e.from);
  return out;
}

std::size_t NarrativeMap::find(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].event.id == id) return i;
  }
  return nodes.size();
}

void NarrativeMap::canonicalize() {
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return chronologically_before(nodes[a].event, nodes[b].event);
  });
  std::vector<std::size_t> remap(nodes.size());
  std::vector<MapNode> sorted;
  sorted.reserve(nodes.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    remap[order[pos]] = pos;
    sorted.push_back(std::move(nodes[order[pos]]));
  }
  nodes = std::move(sorted);
  for (auto& e : edges) {
    e.from = remap[e.from];
    e.to = remap[e.to];
  }
  if (source < remap.size()) source = remap[source];
  if (sink < remap.size()) sink = remap[sink];
  std::sort(edges.begin(), edges.end(), [](const MapEdge& a, const MapEdge& b) {
    return a.from != b.from ? a.from < b.from : a.to < b.to;
  });
}

std::vector<StructureIssue> structure_issues(const NarrativeMap& map) {
  std::vector<StructureIssue> issues;
  const std::size_t n = map.nodes.size();
  if (n < 2 || map.source >= n || map.sink >= n || map.source == map.sink) {
    issues.push_back({"endpoints", "map needs distinct source and sink nodes"});
    return issues;
  }
  std::vector<std::size_t> indeg(n, 0), outdeg(n, 0);
  for (std::size_t k = 0; k < map.edges.size(); ++k) {
    const auto& e = map.edges[k];
    if (e.from >= n || e.to >= n) {
      issues.push_back({"forward-edges", "edge references a missing node"});
      return issues;
    }
    if (!chronologically_before(map.nodes[e.from].event, map.nodes[e.to].event)) {
      issues.push_back({"forward-edges", "edge " + map.nodes[e.from].event.id +
                                             " -> " + map.nodes[e.to].event.id +
                                             " does not point forward in time"});
    }
    if (k > 0 && map.edges[k - 1].from == e.from && map.edges[k - 1].to == e.to) {
      issues.push_back({"forward-edges", "duplicate edge " +
                                             map.nodes[e.from].event.id + " -> " +
                                             map.nodes[e.to].event.id});
    }
    ++outdeg[e.from];
    ++indeg[e.to];
  }
  for (std::size_t v = 0; v < n; ++v) {
    const std::string& id = map.nodes[v].event.id;
    if (indeg[v] == 0 && v != map.source) {
      issues.push_back({"single-source", "node " + id + " has no incoming edges"});
    }
    if (outdeg[v] == 0 && v != map.sink) {
      issues.push_back({"single-sink", "node " + id + " has no outgoing edges"});
    }
  }
  if (indeg[map.source] != 0) {
    issues.push_back({"single-source", "start node " + map.nodes[map.source].event.id +
                                           " has incoming edges"});
  }
  if (outdeg[map.sink] != 0) {
    issues.push_back({"single-sink", "end node " + map.nodes[map.sink].event.id +
                                         " has outgoing edges"});
  }
  const auto succ = map.successors();
  const auto pred = map.predecessors();
  const auto flood = [n](std::size_t start, const auto& adj) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t w : adj[v]) {
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      }
    }
    return seen;
  };
  const auto from_source = flood(map.source, succ);
  const auto to_sink = flood(map.sink, pred);
  for (std::size_t v = 0; v < n; ++v) {
    if (!from_source[v] || !to_sink[v]) {
      issues.push_back({"all-nodes-on-path", "node " + map.nodes[v].event.id +
                                                 " is not on a start-end path"});
    }
  }
  return issues;
}

std::vector<std::vector<bool>> reachability(const NarrativeMap& map) {
  const std::size_t n = map.nodes.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  const auto succ = map.successors();
  // Nodes are chronological and edges forward, so reverse index order is a
  // reverse topological order.
  for (std::size_t v = n; v-- > 0;) {
    for (std::size_t w : succ[v]) {
      reach[v][w] = true;
      for (std::size_t x = 0; x < n; ++x) {
        if (reach[w][x]) reach[v][x] = true;
      }
    }
  }
  return reach;
}

}  // namespace narrmap
