#pragma once

#include <string>

#include "narrmap/analyze.hpp"
#include "narrmap/extract.hpp"
#include "narrmap/narrative_map.hpp"

namespace narrmap {

struct RenderOptions {
  bool show_sources = true;
  // Edge stroke is 1 + width_scale * probability.
  double width_scale = 4.0;
  bool highlight_route = true;
  bool highlight_landmarks = true;
  bool bold_endpoints = true;

  // Throws InputError unless width_scale > 0.
  void validate() const;
};

// Value as it reads back from the fixed 6-decimal output format.
double quantize(double value);

// Snaps coherences and topic distributions to the output precision and
// recomputes probabilities, so a map read back from JSON is identical.
NarrativeMap output_precision(NarrativeMap map);

// Canonical document: sorted keys, 2-space indent, reals with 6 decimals,
// trailing newline.
std::string to_json(const NarrativeMap& map, const Analysis& analysis,
                    const CoverageReport& coverage);

std::string to_dot(const NarrativeMap& map, const Analysis& analysis,
                   const RenderOptions& options = {});

// Inlines `content` when it is SVG, otherwise shows it as preformatted DOT.
// An empty title becomes "Narrative Map".
std::string to_html(const std::string& content, const std::string& title);

}  // namespace narrmap
