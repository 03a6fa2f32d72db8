#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "narrmap/corpus.hpp"

namespace narrmap {

struct MapNode {
  Event event;
  // Position in the source corpus; the canonical order key for the map.
  std::size_t corpus_index = 0;
  // Topic distribution (k clusters + noise) carried along so coverage can be
  // recomputed from a stored map.
  std::vector<double> topic_dist;
};

struct MapEdge {
  std::size_t from = 0;  // index into NarrativeMap::nodes
  std::size_t to = 0;
  double coherence = 0.0;
  double probability = 0.0;
};

// Weighted st-DAG. Nodes are stored in chronological order, edges sorted by
// (from, to) and always pointing forward.
struct NarrativeMap {
  std::vector<MapNode> nodes;
  std::vector<MapEdge> edges;
  std::size_t source = 0;  // index into nodes
  std::size_t sink = 0;

  std::size_t size() const { return nodes.size(); }
  std::vector<std::vector<std::size_t>> successors() const;
  std::vector<std::vector<std::size_t>> predecessors() const;
  // Position of the node whose event has this id, or nodes.size().
  std::size_t find(const std::string& id) const;
  // Sorts nodes chronologically, remaps edge endpoints, sorts edges.
  void canonicalize();
};

struct StructureIssue {
  std::string check;
  std::string detail;
};

// Lists every violated st-graph invariant: unique source and sink equal to
// the endpoints, forward-only edges, and every node on a source-sink path.
std::vector<StructureIssue> structure_issues(const NarrativeMap& map);

// Reachability closure: reach[a][b] is true when a directed path a -> b exists
// (a != b).
std::vector<std::vector<bool>> reachability(const NarrativeMap& map);

}  // namespace narrmap
