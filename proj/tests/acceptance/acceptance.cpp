// One line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>

#include "narrmap/analyze.hpp"
#include "narrmap/coherence.hpp"
#include "narrmap/diagnostics.hpp"
#include "narrmap/extract.hpp"
#include "narrmap/pipeline.hpp"
#include "narrmap/topics.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace narrmap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int number, const char* name, double limit_seconds,
               const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_seconds > 0 && secs >= limit_seconds) {
    o.pass = false;
    o.detail += "; over the " + std::to_string(static_cast<int>(limit_seconds)) + " s limit";
  }
  if (!o.pass) ++failures;
  std::printf("C%-2d %s  %s: %s (%.2f s)\n", number, o.pass ? "PASS" : "FAIL", name,
              o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double weakest_link(const NarrativeMap& map) {
  double w = 1.0;
  for (const auto& e : map.edges) w = std::min(w, e.coherence);
  return w;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("narrmap_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

PipelineConfig synthetic_config(std::size_t events, std::uint64_t seed) {
  const fs::path dir = scratch("pipe_" + std::to_string(seed));
  testing::NewsOptions options;
  options.events = events;
  options.seed = seed;
  std::ofstream(dir / "news.csv") << testing::to_csv(testing::synthetic_news(options));
  PipelineConfig config;
  config.input = dir / "news.csv";
  config.extraction.seed = seed;
  return config;
}

// Argmax over enumerated paths; also checks that scaling every raw weight
// of one tail leaves the returned route alone.
bool route_is_optimal(const NarrativeMap& map, std::size_t scaled_tail) {
  const Route route = main_route(map);
  const auto paths = testing::all_paths(map);
  double best = 0.0;
  for (const auto& p : paths) best = std::max(best, p.likelihood);
  if (std::abs(route.likelihood - best) > 1e-12 * best) return false;
  NarrativeMap scaled = map;
  for (auto& e : scaled.edges) {
    if (e.from == scaled_tail) e.coherence *= 0.29;
  }
  return main_route(normalize_outgoing(scaled)).nodes == route.nodes;
}

std::vector<NarrativeMap> small_pipeline_maps;

}  // namespace

int main() {
  ScopedWarningCapture quiet;

  criterion(1, "chain likelihood 0.7*1.0*0.5*0.3", 1.0, [] {
    NarrativeMap map = testing::make_map(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    const double p[] = {0.7, 1.0, 0.5, 0.3};
    for (std::size_t e = 0; e < 4; ++e) map.edges[e].probability = p[e];
    const Route r = main_route(map);
    return Outcome{std::abs(r.likelihood - 0.105) <= 1e-9 && r.nodes.size() == 5,
                   fmt("likelihood=%.12f", r.likelihood)};
  });

  criterion(2, "antichain figure", 1.0, [] {
    const NarrativeMap map = testing::make_map(
        10, {{0, 1}, {1, 3}, {3, 6}, {6, 9}, {0, 2}, {2, 4}, {4, 7}, {7, 8}, {0, 5}, {5, 8},
             {8, 9}});
    const auto set = maximum_antichain(map);
    const auto brute = testing::brute_force_antichain(map);
    const std::vector<std::size_t> green{1, 2, 5};
    std::string ids;
    for (std::size_t v : set) ids += std::to_string(v + 1) + " ";
    return Outcome{width(map) == 3 && set == green && brute == green &&
                       testing::brute_force_chain_cover(map) == 3,
                   fmt("width=%zu antichain={ %s}", width(map), ids.c_str())};
  });

  criterion(3, "JS anchors", 0, [] {
    const std::vector<double> p{0.6, 0.3, 0.1}, a{0.4, 0.6, 0.0}, b{0.0, 0.0, 1.0};
    const double same = js_similarity(p, p), disjoint = js_similarity(a, b);
    return Outcome{std::abs(same - 1.0) <= 1e-12 && std::abs(disjoint) <= 1e-12,
                   fmt("identical=%.15f disjoint=%.15f", same, disjoint)};
  });

  criterion(4, "oracle optimality on small instances", 60.0, [] {
    int instances = 0, bounded = 0, close = 0, skipped = 0;
    for (std::uint64_t seed = 1; instances < 20 && seed < 1000; ++seed) {
      const std::size_t n = 5 + seed % 4;  // 5..8 events
      const std::size_t k = 2 + seed % 2;
      const testing::Instance inst = testing::random_instance(n, k, 4000 + seed);
      ExtractionConfig cfg;
      cfg.K = 3 + seed % 4;
      const LinearProgram lp = build_lp(inst.table, inst.topics, 0, n - 1, cfg);
      const auto best = testing::integral_optimum(lp, cfg.mincover);
      if (!best) {
        ++skipped;
        continue;
      }
      ++instances;
      const LpSolution sol = solve_lp(lp);
      bounded += sol.objective >= *best - 1e-9;
      const NarrativeMap map = round_solution(lp, sol, inst.corpus, inst.topics);
      close += weakest_link(map) >= 0.95 * *best;
    }
    return Outcome{instances == 20 && bounded == 20 && close >= 16,
                   fmt("LP bound held %d/%d, rounded within 5%% %d/%d (%d infeasible draws "
                       "skipped)",
                       bounded, instances, close, instances, skipped)};
  });

  criterion(5, "st-graph invariants over 50 pipelines", 300.0, [] {
    int valid = 0;
    std::string first_failure;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      const std::size_t events = 10 + (seed * 7) % 31;  // 10..40
      const PipelineConfig config = synthetic_config(events, seed);
      std::string why;
      try {
        const PipelineResult r = run_pipeline(config);
        const NarrativeMap& map = r.map;
        if (!structure_issues(map).empty()) why = "structure";
        if (map.nodes.front().corpus_index != r.endpoints.start ||
            map.nodes.back().corpus_index != r.endpoints.end) {
          why = "endpoints";
        }
        if (map.nodes.size() < config.extraction.K) why = "size";
        if (r.coverage.average < config.extraction.mincover - kCoverageSlack - 1e-12) {
          why = "coverage";
        }
        if (map.nodes.size() <= 15) small_pipeline_maps.push_back(map);
      } catch (const std::exception& e) {
        why = e.what();
      }
      if (why.empty()) {
        ++valid;
      } else if (first_failure.empty()) {
        first_failure = fmt("; seed %d (%zu events): ", static_cast<int>(seed), events) + why;
      }
    }
    return Outcome{valid == 50, fmt("%d/50 valid", valid) + first_failure};
  });

  criterion(6, "width equals minimum chain cover", 60.0, [] {
    int agree = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const NarrativeMap dag = testing::random_dag(1 + seed % 10, 0.1 + 0.05 * (seed % 10), seed);
      agree += width(dag) == testing::brute_force_chain_cover(dag);
    }
    return Outcome{agree == 100, fmt("%d/100 DAGs agree", agree)};
  });

  criterion(7, "main route matches path enumeration", 0, [] {
    int checked = 0, optimal = 0;
    for (const auto& map : small_pipeline_maps) {
      ++checked;
      optimal += route_is_optimal(map, checked % (map.size() - 1));
    }
    const int from_pipelines = checked;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      const NarrativeMap map = testing::random_st_map(2 + seed % 14, 0.35, seed);
      ++checked;
      optimal += route_is_optimal(map, seed % (map.size() - 1));
    }
    return Outcome{checked == optimal && from_pipelines > 0,
                   fmt("%d/%d maps (%d pipeline outputs, %d random)", optimal, checked,
                       from_pipelines, checked - from_pipelines)};
  });

  criterion(8, "case-study scale", 600.0, [] {
    const fs::path dir = scratch("case");
    std::ofstream(dir / "january.csv") << testing::covid_january_csv(2020);
    PipelineConfig config;
    config.input = dir / "january.csv";
    config.top_sources = 5;
    const PipelineResult r = run_pipeline(config);
    const std::size_t n = r.map.nodes.size();
    return Outcome{r.stage.corpus.size() == 102 && n >= 15 && n <= 45 && r.checks.ok(),
                   fmt("%zu events, %zu clusters, map of %zu events, weakest link %.3f, "
                       "coverage %.3f",
                       r.stage.corpus.size(), r.stage.topics.k(), n, weakest_link(r.map),
                       r.coverage.average)};
  });

  criterion(9, "determinism", 0, [] {
    int identical = 0;
    for (std::uint64_t seed : {3u, 17u, 29u}) {
      const PipelineConfig config = synthetic_config(30, seed);
      const PipelineResult a = run_pipeline(config);
      const PipelineResult b = run_pipeline(config);
      identical += a.json == b.json && a.dot == b.dot;
    }
    return Outcome{identical == 3, fmt("%d/3 configurations byte-identical", identical)};
  });

  criterion(10, "coherence zero-product law", 0, [] {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto draw = [&] { return u(rng) < 0.15 ? 0.0 : u(rng); };
    int ok = 0;
    for (int i = 0; i < 10000; ++i) {
      const double a = draw(), b = draw();
      const double a2 = std::min(1.0, a + u(rng) * 0.5), b2 = std::min(1.0, b + u(rng) * 0.5);
      const double c = coherence(a, b);
      const bool zero_law = (c == 0.0) == (a == 0.0 || b == 0.0);
      const bool monotone = coherence(a2, b) >= c && coherence(a, b2) >= c;
      ok += zero_law && monotone;
    }
    return Outcome{ok == 10000, fmt("%d/10000 samples", ok)};
  });

  std::printf("%s\n", failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED");
  return failures ? 1 : 0;
}
