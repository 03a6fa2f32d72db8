#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "narrmap/extract.hpp"
#include "narrmap/narrative_map.hpp"

namespace narrmap {

// A map document as written by to_json. The map's probabilities are
// recomputed from the stored coherences; the stored ones are kept aside.
struct StoredMap {
  NarrativeMap map;
  std::vector<double> stored_probability;  // parallel to map.edges
  std::vector<std::string> main_route;
  double route_likelihood = 0.0;
  std::uint64_t route_ties = 0;
  std::vector<std::string> landmarks;
  std::size_t width = 0;
  CoverageReport coverage;
};

// Throws InputError on malformed documents.
StoredMap parse_map_json(std::string_view text);
StoredMap load_map_json(const std::filesystem::path& path);

}  // namespace narrmap
