#include <doctest.h>

#include <algorithm>
#include <cstdlib>

#include "dot_parser.hpp"
#include "narrmap/analyze.hpp"
#include "narrmap/diagnostics.hpp"
#include "narrmap/map_json.hpp"
#include "narrmap/render.hpp"
#include "oracles.hpp"

using namespace narrmap;
using testing::make_map;
using testing::parse_dot;

namespace {

CoverageReport coverage_of(const NarrativeMap& map) {
  return compute_coverage(map, {0}, {1.0});
}

struct Rendered {
  NarrativeMap map;
  Analysis analysis;
  std::string json, dot;
};

Rendered render(NarrativeMap map, const RenderOptions& options = {}) {
  map = output_precision(std::move(map));
  const Analysis analysis = analyze(map);
  return {map, analysis, to_json(map, analysis, coverage_of(map)),
          to_dot(map, analysis, options)};
}

double penwidth(const testing::DotGraph& g, const std::string& from, const std::string& to) {
  for (const auto& e : g.edges) {
    if (e.from == from && e.to == to) return std::strtod(e.attrs.at("penwidth").c_str(), nullptr);
  }
  FAIL("edge not found");
  return 0.0;
}

bool bold(const std::string& label) { return label.find("<B>") != std::string::npos; }

}  // namespace

TEST_CASE("two-node map renders with bold endpoints") {
  const Rendered r = render(make_map(2, {{0, 1}}));
  const auto g = parse_dot(r.dot);
  CHECK(g.nodes.size() == 2);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].from == "n00");
  CHECK(g.edges[0].to == "n01");
  CHECK(bold(g.nodes.at("n00").at("label")));
  CHECK(bold(g.nodes.at("n01").at("label")));
  // The lone edge is the main route.
  CHECK(g.edges[0].attrs.at("style") == "dashed");
}

TEST_CASE("labels carry date, headline and source") {
  NarrativeMap map = make_map(3, {{0, 1}, {1, 2}});
  map.nodes[1].event.headline = "Markets <slide> & \"fears\"";
  map.nodes[1].event.source = "ft.com";
  const Rendered r = render(map);
  const auto g = parse_dot(r.dot);
  const std::string label = g.nodes.at("n01").at("label");
  CHECK(label.find("2020-01-01") != std::string::npos);
  CHECK(label.find("Markets &lt;slide&gt; &amp; &quot;fears&quot;") != std::string::npos);
  CHECK(label.find("(ft.com)") != std::string::npos);
  CHECK_FALSE(bold(label));

  RenderOptions quiet;
  quiet.show_sources = false;
  quiet.bold_endpoints = false;
  const auto plain = parse_dot(to_dot(r.map, r.analysis, quiet));
  CHECK(plain.nodes.at("n01").at("label").find("ft.com") == std::string::npos);
  CHECK_FALSE(bold(plain.nodes.at("n00").at("label")));
}

TEST_CASE("higher probability means a strictly wider edge") {
  const Rendered r = render(make_map(3, {{0, 1}, {0, 2}, {1, 2}}, {0.2, 0.8, 0.5}));
  const auto g = parse_dot(r.dot);
  CHECK(penwidth(g, "n00", "n02") > penwidth(g, "n00", "n01"));
  CHECK(penwidth(g, "n00", "n01") == doctest::Approx(1.0 + 4.0 * 0.2));
  RenderOptions wide;
  wide.width_scale = 10.0;
  const auto w = parse_dot(to_dot(r.map, r.analysis, wide));
  CHECK(penwidth(w, "n00", "n02") == doctest::Approx(1.0 + 10.0 * 0.8));
  wide.width_scale = 0.0;
  CHECK_THROWS_AS(wide.validate(), InputError);
}

TEST_CASE("landmarks are the only green nodes and the route is dashed") {
  const NarrativeMap fig = make_map(10, {{0, 1}, {1, 3}, {3, 6}, {6, 9},
                                         {0, 2}, {2, 4}, {4, 7}, {7, 8},
                                         {0, 5}, {5, 8}, {8, 9}});
  const Rendered r = render(fig);
  REQUIRE(r.analysis.landmarks.size() == 3);
  const auto g = parse_dot(r.dot);
  std::vector<std::string> green;
  for (const auto& [id, attrs] : g.nodes) {
    const auto fill = attrs.find("fillcolor");
    if (fill != attrs.end() && fill->second == "palegreen") green.push_back(id);
  }
  std::vector<std::string> expected;
  for (std::size_t v : r.analysis.landmarks) expected.push_back(r.map.nodes[v].event.id);
  std::sort(expected.begin(), expected.end());
  CHECK(green == expected);

  std::size_t dashed = 0;
  for (const auto& e : g.edges) {
    const auto style = e.attrs.find("style");
    if (style != e.attrs.end() && style->second == "dashed") ++dashed;
  }
  CHECK(dashed == r.analysis.route.nodes.size() - 1);

  RenderOptions bare;
  bare.highlight_landmarks = false;
  bare.highlight_route = false;
  const auto h = parse_dot(to_dot(r.map, r.analysis, bare));
  for (const auto& [id, attrs] : h.nodes) CHECK(attrs.count("fillcolor") == 0);
  for (const auto& e : h.edges) CHECK(e.attrs.count("style") == 0);
}

TEST_CASE("json of a minimal map") {
  const Rendered r = render(make_map(2, {{0, 1}}));
  const StoredMap stored = parse_map_json(r.json);
  CHECK(stored.map.nodes.size() == 2);
  CHECK(stored.map.edges.size() == 1);
  CHECK(stored.main_route == std::vector<std::string>{"n00", "n01"});
  CHECK(stored.route_likelihood == 1.0);
  CHECK(stored.width == 1);
  CHECK(r.json.back() == '\n');
  CHECK(r.json == render(make_map(2, {{0, 1}})).json);
}

TEST_CASE("json round trip reproduces the map and the document") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    NarrativeMap map = testing::random_st_map(3 + seed % 12, 0.35, seed);
    map.nodes[1 % map.size()].event.url = "https://example.org/a?b=1&c=\"2\"";
    map.nodes[0].event.headline = "Caf\xC3\xA9 \"quoted\" \\ slash\ttab";
    const Rendered r = render(map);
    const StoredMap back = parse_map_json(r.json);
    REQUIRE(back.map.nodes.size() == r.map.nodes.size());
    REQUIRE(back.map.edges.size() == r.map.edges.size());
    for (std::size_t v = 0; v < back.map.size(); ++v) {
      CHECK(back.map.nodes[v].event.id == r.map.nodes[v].event.id);
      CHECK(back.map.nodes[v].event.headline == r.map.nodes[v].event.headline);
      CHECK(back.map.nodes[v].event.url == r.map.nodes[v].event.url);
      CHECK(back.map.nodes[v].event.timestamp == r.map.nodes[v].event.timestamp);
      CHECK(back.map.nodes[v].topic_dist == r.map.nodes[v].topic_dist);
    }
    for (std::size_t e = 0; e < back.map.edges.size(); ++e) {
      CHECK(back.map.edges[e].coherence == r.map.edges[e].coherence);
      CHECK(back.map.edges[e].probability == r.map.edges[e].probability);
    }
    const Analysis again = analyze(back.map);
    CHECK(to_json(back.map, again, coverage_of(back.map)) == r.json);
    CHECK(to_dot(back.map, again) == r.dot);
  }
}

TEST_CASE("quantize matches the printed precision") {
  CHECK(quantize(0.1234564) == 0.123456);
  CHECK(quantize(0.1234566) == 0.123457);
  CHECK(quantize(1.0) == 1.0);
  const NarrativeMap q = output_precision(make_map(3, {{0, 1}, {0, 2}, {1, 2}},
                                                   {0.1234567, 0.7654321, 0.5}));
  CHECK(q.edges[0].coherence == 0.123457);
  CHECK(q.edges[0].probability ==
        doctest::Approx(0.123457 / (0.123457 + 0.765432)).epsilon(1e-15));
}

TEST_CASE("malformed map documents are input errors") {
  CHECK_THROWS_AS(parse_map_json("{"), InputError);
  CHECK_THROWS_AS(parse_map_json("[]"), InputError);
  const std::string good = render(make_map(2, {{0, 1}})).json;
  std::string unknown = good;
  unknown.replace(unknown.find("\"j\": \"n01\""), 11, "\"j\": \"zz\"");
  CHECK_THROWS_AS(parse_map_json(unknown), InputError);
  CHECK_THROWS_AS(load_map_json("/nonexistent/map.json"), InputError);
}

TEST_CASE("html wraps svg inline and dot as preformatted text") {
  const std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\"><g id=\"n1\"/></svg>";
  const std::string inline_svg = to_html(svg, "January");
  CHECK(inline_svg.find(svg) != std::string::npos);
  CHECK(inline_svg.find("<title>January</title>") != std::string::npos);
  CHECK(inline_svg.find("<pre") == std::string::npos);

  const std::string dot = render(make_map(2, {{0, 1}})).dot;
  const std::string pre = to_html(dot, "");
  CHECK(pre.find("<pre class=\"dot\">") != std::string::npos);
  CHECK(pre.find("digraph") != std::string::npos);
  CHECK(pre.find("&lt;B&gt;") != std::string::npos);
  CHECK(pre.find("<title>Narrative Map</title>") != std::string::npos);
}
