#include "narrmap/render.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "json.hpp"
#include "narrmap/coherence.hpp"
#include "narrmap/diagnostics.hpp"
#include "narrmap/text.hpp"

namespace narrmap {
namespace {

using nlohmann::json;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void emit(std::string& out, const json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(depth + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: sorted keys
        if (!first) out += ",\n";
        first = false;
        out += inner + json(it.key()).dump() + ": ";
        emit(out, it.value(), depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        emit(out, j[i], depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float:
      out += fixed6(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

std::string html_escape(const std::string& s) {
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

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

void RenderOptions::validate() const {
  if (!(width_scale > 0.0)) throw InputError("width_scale must be positive");
}

double quantize(double value) { return std::strtod(fixed6(value).c_str(), nullptr); }

NarrativeMap output_precision(NarrativeMap map) {
  for (auto& node : map.nodes) {
    for (double& p : node.topic_dist) p = quantize(p);
  }
  for (auto& e : map.edges) e.coherence = quantize(e.coherence);
  return normalize_outgoing(std::move(map));
}

std::string to_json(const NarrativeMap& map, const Analysis& analysis,
                    const CoverageReport& coverage) {
  const auto id = [&map](std::size_t v) { return map.nodes.at(v).event.id; };
  json doc = json::object();
  json nodes = json::array();
  for (const auto& n : map.nodes) {
    json node = {{"id", n.event.id},
                 {"timestamp", text::format_iso8601(n.event.timestamp)},
                 {"headline", n.event.headline},
                 {"source", n.event.source},
                 {"index", n.corpus_index},
                 {"topic_dist", n.topic_dist}};
    if (n.event.url) node["url"] = *n.event.url;
    nodes.push_back(std::move(node));
  }
  json edges = json::array();
  for (const auto& e : map.edges) {
    edges.push_back({{"i", id(e.from)},
                     {"j", id(e.to)},
                     {"coherence", e.coherence},
                     {"probability", e.probability}});
  }
  json route = json::array();
  for (std::size_t v : analysis.route.nodes) route.push_back(id(v));
  json landmarks = json::array();
  for (std::size_t v : analysis.landmarks) landmarks.push_back(id(v));
  json clusters = json::array();
  for (std::size_t q = 0; q < coverage.slots.size(); ++q) {
    clusters.push_back({{"cluster", coverage.slots[q]},
                        {"coverage", coverage.normalized[q]},
                        {"reference", coverage.reference[q]}});
  }
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  doc["start"] = id(map.source);
  doc["end"] = id(map.sink);
  doc["main_route"] = std::move(route);
  doc["route_likelihood"] = analysis.route.likelihood;
  doc["route_ties"] = analysis.route.ties;
  doc["landmarks"] = std::move(landmarks);
  doc["width"] = analysis.width;
  doc["coverage"] = {{"average", coverage.average},
                     {"clusters", std::move(clusters)},
                     {"degenerate", coverage.degenerate}};
  std::string out;
  emit(out, doc, 0);
  out += "\n";
  return out;
}

std::string to_dot(const NarrativeMap& map, const Analysis& analysis,
                   const RenderOptions& options) {
  options.validate();
  const std::size_t n = map.nodes.size();
  std::vector<bool> landmark(n, false);
  for (std::size_t v : analysis.landmarks) landmark.at(v) = true;
  std::vector<std::size_t> next_on_route(n, n);
  for (std::size_t k = 0; k + 1 < analysis.route.nodes.size(); ++k) {
    next_on_route.at(analysis.route.nodes[k]) = analysis.route.nodes[k + 1];
  }

  std::ostringstream out;
  out << "digraph narrative_map {\n";
  out << "  rankdir=LR;\n";
  out << "  node [shape=box, style=\"rounded\", fontname=\"Helvetica\"];\n";
  out << "  edge [color=\"#555555\", arrowsize=0.7];\n";
  for (std::size_t v = 0; v < n; ++v) {
    const auto& ev = map.nodes[v].event;
    std::string label = html_escape(text::format_date(ev.timestamp) + " — " + ev.headline);
    if (options.show_sources) label += html_escape(" (" + ev.source + ")");
    const bool endpoint = v == map.source || v == map.sink;
    if (endpoint && options.bold_endpoints) label = "<B>" + label + "</B>";
    out << "  " << dot_quote(ev.id) << " [label=<" << label << ">, tooltip="
        << dot_quote(ev.headline);
    if (landmark[v] && options.highlight_landmarks) {
      out << ", style=\"rounded,filled\", fillcolor=\"palegreen\"";
    }
    out << "];\n";
  }
  for (const auto& e : map.edges) {
    out << "  " << dot_quote(map.nodes[e.from].event.id) << " -> "
        << dot_quote(map.nodes[e.to].event.id) << " [penwidth="
        << number(1.0 + options.width_scale * e.probability);
    if (options.highlight_route && next_on_route[e.from] == e.to) {
      out << ", style=dashed, color=\"#1f5fbf\"";
    }
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_html(const std::string& content, const std::string& title) {
  const std::string name = title.empty() ? "Narrative Map" : title;
  const bool svg = content.find("<svg") != std::string::npos;
  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      << "<title>" << html_escape(name) << "</title>\n<style>\n"
      << "body { font-family: Helvetica, Arial, sans-serif; margin: 2em; }\n"
      << "svg g.node:hover path, svg g.node:hover polygon { stroke-width: 3; }\n"
      << "svg g.node:hover text { font-weight: bold; }\n"
      << "pre { background: #f6f6f6; padding: 1em; overflow-x: auto; }\n"
      << "</style>\n</head>\n<body>\n<h1>" << html_escape(name) << "</h1>\n";
  if (svg) {
    out << "<div class=\"map\">\n" << content << "\n</div>\n";
  } else {
    out << "<p>Render the graph below with Graphviz, for example "
        << "<code>dot -Tsvg map.dot -o map.svg</code>, and open the SVG.</p>\n"
        << "<pre class=\"dot\">" << html_escape(content) << "</pre>\n";
  }
  out << "</body>\n</html>\n";
  return out.str();
}

}  // namespace narrmap
