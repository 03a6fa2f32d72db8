#include "narrmap/map_json.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "narrmap/coherence.hpp"
#include "narrmap/diagnostics.hpp"
#include "narrmap/text.hpp"

namespace narrmap {
namespace {

using nlohmann::json;

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw InputError(where + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) throw InputError(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

double get_number(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number()) throw InputError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t get_count(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw InputError(where + ": field '" + key + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::vector<std::string> get_ids(const json& obj, const char* key) {
  const json& v = field(obj, key, "map");
  if (!v.is_array()) throw InputError(std::string("map: '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) throw InputError(std::string("map: '") + key + "' must hold ids");
    out.push_back(x.get<std::string>());
  }
  return out;
}

}  // namespace

StoredMap parse_map_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("map JSON parse error: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("map JSON must be an object");

  StoredMap out;
  NarrativeMap& map = out.map;
  const json& nodes = field(doc, "nodes", "map");
  if (!nodes.is_array()) throw InputError("map: 'nodes' must be an array");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const json& n = nodes[k];
    const std::string where = "node " + std::to_string(k);
    MapNode node;
    node.event.id = get_string(n, "id", where);
    const auto ts = text::parse_iso8601(get_string(n, "timestamp", where));
    if (!ts) throw InputError(where + ": unparseable timestamp");
    node.event.timestamp = *ts;
    node.event.headline = get_string(n, "headline", where);
    node.event.source = get_string(n, "source", where);
    if (n.contains("url")) node.event.url = get_string(n, "url", where);
    node.corpus_index = static_cast<std::size_t>(get_count(n, "index", where));
    const json& dist = field(n, "topic_dist", where);
    if (!dist.is_array()) throw InputError(where + ": 'topic_dist' must be an array");
    for (const auto& p : dist) {
      if (!p.is_number()) throw InputError(where + ": 'topic_dist' must hold numbers");
      node.topic_dist.push_back(p.get<double>());
    }
    if (!index.emplace(node.event.id, k).second) {
      throw InputError(where + ": duplicate node id '" + node.event.id + "'");
    }
    map.nodes.push_back(std::move(node));
  }
  const auto lookup = [&index](const std::string& id, const std::string& where) {
    const auto it = index.find(id);
    if (it == index.end()) throw InputError(where + ": unknown node id '" + id + "'");
    return it->second;
  };
  map.source = lookup(get_string(doc, "start", "map"), "map start");
  map.sink = lookup(get_string(doc, "end", "map"), "map end");

  const json& edges = field(doc, "edges", "map");
  if (!edges.is_array()) throw InputError("map: 'edges' must be an array");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const json& e = edges[k];
    const std::string where = "edge " + std::to_string(k);
    MapEdge edge;
    edge.from = lookup(get_string(e, "i", where), where);
    edge.to = lookup(get_string(e, "j", where), where);
    edge.coherence = get_number(e, "coherence", where);
    edge.probability = get_number(e, "probability", where);
    if (!(edge.coherence >= 0.0 && edge.coherence <= 1.0)) {
      throw InputError(where + ": coherence outside [0, 1]");
    }
    map.edges.push_back(edge);
  }
  map.canonicalize();
  for (const auto& e : map.edges) out.stored_probability.push_back(e.probability);
  map = normalize_outgoing(std::move(map));

  out.main_route = get_ids(doc, "main_route");
  out.landmarks = get_ids(doc, "landmarks");
  out.route_likelihood = get_number(doc, "route_likelihood", "map");
  out.route_ties = get_count(doc, "route_ties", "map");
  out.width = static_cast<std::size_t>(get_count(doc, "width", "map"));

  const json& cov = field(doc, "coverage", "map");
  out.coverage.average = get_number(cov, "average", "coverage");
  const json& clusters = field(cov, "clusters", "coverage");
  if (!clusters.is_array()) throw InputError("coverage: 'clusters' must be an array");
  for (const auto& c : clusters) {
    out.coverage.slots.push_back(static_cast<std::size_t>(get_count(c, "cluster", "cluster")));
    out.coverage.normalized.push_back(get_number(c, "coverage", "cluster"));
    out.coverage.reference.push_back(get_number(c, "reference", "cluster"));
  }
  const json& degenerate = field(cov, "degenerate", "coverage");
  if (!degenerate.is_array()) throw InputError("coverage: 'degenerate' must be an array");
  for (const auto& d : degenerate) {
    if (!d.is_number_unsigned()) throw InputError("coverage: bad degenerate cluster");
    out.coverage.degenerate.push_back(d.get<std::size_t>());
  }
  return out;
}

StoredMap load_map_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open map file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_map_json(buf.str());
}

}  // namespace narrmap
