#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "narrmap/narrative_map.hpp"

namespace narrmap {

struct Route {
  std::vector<std::size_t> nodes;  // node indices from source to sink
  double likelihood = 0.0;         // product of edge probabilities
  // Number of distinct maximum-likelihood routes (saturates at UINT64_MAX).
  std::uint64_t ties = 0;
};

struct Analysis {
  Route route;
  std::vector<std::size_t> landmarks;  // ascending node indices
  std::size_t width = 0;
};

// Maximum-likelihood source-sink path: minimizes the sum of -ln p over edges,
// skipping zero-probability edges. Costs within a relative 1e-12 count as
// ties; among tied routes the lexicographically smallest id sequence wins.
// Throws InvariantError when the sink is unreachable.
Route main_route(const NarrativeMap& map);

// Earliest maximum antichain: among antichains of maximum size, the one whose
// ascending (timestamp, id) sequence is lexicographically smallest. Nodes are
// kept chronological, so this is the smallest ascending index tuple.
// Exhaustive search up to kExhaustiveAntichainLimit nodes, chain-cover based
// greedy search above.
std::vector<std::size_t> maximum_antichain(const NarrativeMap& map);

inline constexpr std::size_t kExhaustiveAntichainLimit = 25;

std::vector<std::size_t> maximum_antichain_exhaustive(const NarrativeMap& map);
std::vector<std::size_t> maximum_antichain_by_chains(const NarrativeMap& map);

// Size of a maximum antichain, computed as the minimum chain cover
// (node count minus a maximum matching on the reachability relation).
std::size_t width(const NarrativeMap& map);

Analysis analyze(const NarrativeMap& map);

}  // namespace narrmap
