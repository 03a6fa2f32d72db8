#include "narrmap/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "narrmap/diagnostics.hpp"
#include "narrmap/text.hpp"

namespace narrmap {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto s = text::trim(value);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw InputError("setting '" + key + "' expects a non-negative integer, got '" +
                     value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  const std::string s(text::trim(value));
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(out)) {
    throw InputError("setting '" + key + "' expects a number, got '" + value + "'");
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
  if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace

void PipelineConfig::validate() const {
  if (input.empty()) throw InputError("no input corpus given");
  if (embeddings && embed_dim) {
    throw InputError("choose one embedding mode: an embeddings file or embed-dim");
  }
  if (topics && (min_cluster_size || reduce_dim)) {
    throw InputError(
        "choose one topic mode: a topics file or min-cluster-size/reduce-dim");
  }
  if (embed_dim && *embed_dim < 2) throw InputError("embed-dim must be at least 2");
  if (top_sources && *top_sources == 0) throw InputError("top-sources must be positive");
  if (name.empty() || name.find('/') != std::string::npos) {
    throw InputError("output name must be a plain file name");
  }
  extraction.validate();
  render.validate();
}

void apply_setting(PipelineConfig& config, const std::string& raw_key,
                   const std::string& value) {
  std::string key(text::trim(raw_key));
  while (!key.empty() && key.front() == '-') key.erase(key.begin());
  std::replace(key.begin(), key.end(), '_', '-');
  const std::string v(text::trim(value));
  if (key == "input") {
    config.input = v;
  } else if (key == "format") {
    config.format = parse_corpus_format(v);
  } else if (key == "embeddings") {
    config.embeddings = v;
  } else if (key == "embed-dim") {
    config.embed_dim = parse_unsigned(key, v);
  } else if (key == "topics") {
    config.topics = v;
  } else if (key == "min-cluster-size") {
    config.min_cluster_size = parse_unsigned(key, v);
  } else if (key == "reduce-dim") {
    config.reduce_dim = parse_unsigned(key, v);
  } else if (key == "start") {
    config.start = v;
  } else if (key == "end") {
    config.end = v;
  } else if (key == "top-sources") {
    config.top_sources = parse_unsigned(key, v);
  } else if (key == "k-min") {
    config.extraction.K = parse_unsigned(key, v);
  } else if (key == "mincover") {
    config.extraction.mincover = parse_real(key, v);
  } else if (key == "round-threshold") {
    config.extraction.tau = parse_real(key, v);
  } else if (key == "seed") {
    config.extraction.seed = parse_unsigned(key, v);
  } else if (key == "out") {
    config.out = v;
  } else if (key == "name") {
    config.name = v;
  } else if (key == "title") {
    config.title = v;
  } else {
    throw InputError("unknown setting '" + raw_key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw InputError(path.filename().string() + " line " + std::to_string(line_no) +
                       ": expected key=value");
    }
    out.emplace_back(std::string(text::trim(body.substr(0, eq))),
                     std::string(text::trim(body.substr(eq + 1))));
  }
  return out;
}

TopicStage run_topic_stage(const PipelineConfig& config) {
  config.validate();
  Corpus corpus = load_corpus(config.input,
                              config.format.value_or(corpus_format_for(config.input)));
  if (config.top_sources) corpus = filter_top_sources(corpus, *config.top_sources);
  const std::uint64_t seed = config.extraction.seed;

  EmbeddingMatrix embeddings =
      config.embeddings
          ? load_embeddings(corpus, *config.embeddings)
          : builtin_embed(corpus, config.embed_dim.value_or(kDefaultEmbedDim), seed);

  TopicModel topics;
  if (config.topics) {
    topics = load_topics(corpus, *config.topics);
  } else {
    const std::size_t dim = embeddings.dim();
    const std::size_t target =
        config.reduce_dim.value_or(std::min(kDefaultReduceDim, dim - 1));
    const EmbeddingMatrix reduced =
        target >= 2 || config.reduce_dim ? reduce(embeddings, target, seed) : embeddings;
    ClusterOptions options;
    options.min_cluster_size = config.min_cluster_size.value_or(options.min_cluster_size);
    topics = soft_cluster(reduced, options);
    label_clusters(corpus, topics);
  }
  return {std::move(corpus), std::move(embeddings), std::move(topics)};
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  PipelineResult r{run_topic_stage(config), {}, {}, {}, {}, {}, {}, {}, {}, {}, {}, {}};
  const Corpus& corpus = r.stage.corpus;
  r.endpoints = select_endpoints(corpus, config.start, config.end);
  std::optional<CandidateCap> cap;
  if (const auto per_node = default_candidate_cap(corpus.size())) {
    cap = CandidateCap{*per_node, r.endpoints};
  }
  r.table = build_table(corpus, r.stage.embeddings, r.stage.topics, cap);
  r.lp = build_lp(r.table, r.stage.topics, r.endpoints.start, r.endpoints.end,
                  config.extraction);
  r.solution = solve_lp(r.lp);
  r.map = output_precision(round_solution(r.lp, r.solution, corpus, r.stage.topics));
  r.analysis = analyze(r.map);

  // Coverage from the stored node distributions and rounded references, so
  // a reloaded document recomputes the same numbers.
  const CoverageReport full = compute_coverage(r.map, r.table, r.stage.topics);
  std::vector<double> reference;
  for (double ref : full.reference) reference.push_back(quantize(ref));
  r.coverage = compute_coverage(r.map, full.slots, reference);
  r.coverage.degenerate = full.degenerate;

  r.checks = verify(r.map, r.coverage, config.extraction);
  if (!r.checks.ok()) {
    std::vector<std::string> failed;
    for (const auto& c : r.checks.checks) {
      if (!c.passed) failed.push_back(c.name + ": " + c.detail);
    }
    throw InvariantError("extracted map failed verification: " + join(failed, "; "));
  }
  r.json = to_json(r.map, r.analysis, r.coverage);
  r.dot = to_dot(r.map, r.analysis, config.render);
  r.html = to_html(r.dot, config.title);
  return r;
}

std::string pipeline_report(const PipelineResult& r) {
  std::ostringstream out;
  const auto& corpus = r.stage.corpus;
  double weakest = 1.0;
  for (const auto& e : r.map.edges) weakest = std::min(weakest, e.coherence);
  std::vector<std::string> cov, route, landmarks;
  for (double c : r.coverage.normalized) cov.push_back(fmt(c));
  for (std::size_t v : r.analysis.route.nodes) route.push_back(r.map.nodes[v].event.id);
  for (std::size_t v : r.analysis.landmarks) landmarks.push_back(r.map.nodes[v].event.id);
  out << "events=" << corpus.size() << "\n"
      << "clusters=" << r.stage.topics.k() << "\n"
      << "start=" << corpus[r.endpoints.start].id << "\n"
      << "end=" << corpus[r.endpoints.end].id << "\n"
      << "candidate_edges=" << r.lp.edges.size() << "\n"
      << "lp_variables=" << r.lp.variables.size() << "\n"
      << "lp_rows=" << r.lp.rows.size() << "\n"
      << "lp_objective=" << fmt(r.solution.objective) << "\n"
      << "map_nodes=" << r.map.nodes.size() << "\n"
      << "map_edges=" << r.map.edges.size() << "\n"
      << "min_edge_coherence=" << fmt(weakest) << "\n"
      << "coverage_average=" << fmt(r.coverage.average) << "\n"
      << "coverage=" << join(cov, ",") << "\n"
      << "main_route=" << join(route, ",") << "\n"
      << "route_likelihood=" << fmt(r.analysis.route.likelihood) << "\n"
      << "route_ties=" << r.analysis.route.ties << "\n"
      << "width=" << r.analysis.width << "\n"
      << "landmarks=" << join(landmarks, ",") << "\n";
  for (const auto& c : r.checks.checks) {
    out << "check." << c.name << "=" << (c.passed ? "pass" : "fail") << "\n";
  }
  if (r.analysis.route.ties > 1) {
    out << "warning: " << r.analysis.route.ties
        << " routes share the maximum likelihood; reported the lexicographically "
           "smallest\n";
  }
  return out.str();
}

void write_outputs(const PipelineConfig& config, const PipelineResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(config.out, ec);
  if (ec) throw InputError("cannot create output directory " + config.out.string());
  write_file(config.out / (config.name + ".json"), result.json);
  write_file(config.out / (config.name + ".dot"), result.dot);
  write_file(config.out / (config.name + ".html"), result.html);
  write_file(config.out / (config.name + ".report.txt"), pipeline_report(result));
}

std::string topics_report(const TopicStage& stage) {
  const auto& topics = stage.topics;
  std::vector<std::size_t> size(topics.slots(), 0);
  double noise_mass = 0.0;
  for (std::size_t i = 0; i < topics.size(); ++i) {
    ++size[dominant_slot(topics.distribution(i))];
    noise_mass += topics.membership(i, topics.k());
  }
  const double n = static_cast<double>(topics.size());
  std::ostringstream out;
  out << "events=" << topics.size() << "\n" << "clusters=" << topics.k() << "\n";
  for (std::size_t q = 0; q < topics.k(); ++q) {
    out << "cluster." << q << ".size=" << size[q] << "\n";
    if (q < topics.labels.size()) {
      out << "cluster." << q << ".tokens=" << join(topics.labels[q], ",") << "\n";
    }
  }
  out << "noise_events=" << size[topics.k()] << "\n"
      << "noise_fraction=" << fmt(static_cast<double>(size[topics.k()]) / n) << "\n"
      << "mean_noise_mass=" << fmt(noise_mass / n) << "\n";
  return out.str();
}

StoredCheck check_stored_map(const StoredMap& stored) {
  StoredCheck check;
  const NarrativeMap& map = stored.map;
  for (const auto& issue : structure_issues(map)) {
    check.mismatches.push_back("invalid map (" + issue.check + "): " + issue.detail);
  }
  if (!check.mismatches.empty()) return check;

  const auto ids = [&map](const std::vector<std::size_t>& nodes) {
    std::vector<std::string> out;
    for (std::size_t v : nodes) out.push_back(map.nodes[v].event.id);
    return out;
  };
  const Analysis analysis = analyze(map);
  const CoverageReport coverage =
      compute_coverage(map, stored.coverage.slots, stored.coverage.reference);
  const auto route = ids(analysis.route.nodes);
  const auto landmarks = ids(analysis.landmarks);
  // Stored reals carry 6 decimals.
  const auto close = [](double a, double b) { return std::abs(a - b) <= 1.01e-6; };

  for (std::size_t e = 0; e < map.edges.size(); ++e) {
    if (!close(map.edges[e].probability, stored.stored_probability[e])) {
      check.mismatches.push_back("edge " + map.nodes[map.edges[e].from].event.id + " -> " +
                                 map.nodes[map.edges[e].to].event.id +
                                 " probability: stored " +
                                 fmt(stored.stored_probability[e]) + ", recomputed " +
                                 fmt(map.edges[e].probability));
    }
  }
  if (route != stored.main_route) {
    check.mismatches.push_back("main_route: stored " + join(stored.main_route, ",") +
                               ", recomputed " + join(route, ","));
  }
  if (!close(analysis.route.likelihood, stored.route_likelihood)) {
    check.mismatches.push_back("route_likelihood: stored " + fmt(stored.route_likelihood) +
                               ", recomputed " + fmt(analysis.route.likelihood));
  }
  if (analysis.route.ties != stored.route_ties) {
    check.mismatches.push_back("route_ties: stored " + std::to_string(stored.route_ties) +
                               ", recomputed " + std::to_string(analysis.route.ties));
  }
  if (landmarks != stored.landmarks) {
    check.mismatches.push_back("landmarks: stored " + join(stored.landmarks, ",") +
                               ", recomputed " + join(landmarks, ","));
  }
  if (analysis.width != stored.width) {
    check.mismatches.push_back("width: stored " + std::to_string(stored.width) +
                               ", recomputed " + std::to_string(analysis.width));
  }
  if (!close(coverage.average, stored.coverage.average)) {
    check.mismatches.push_back("coverage average: stored " + fmt(stored.coverage.average) +
                               ", recomputed " + fmt(coverage.average));
  }
  for (std::size_t q = 0; q < coverage.normalized.size(); ++q) {
    if (!close(coverage.normalized[q], stored.coverage.normalized[q])) {
      check.mismatches.push_back("coverage of cluster " +
                                 std::to_string(coverage.slots[q]) + ": stored " +
                                 fmt(stored.coverage.normalized[q]) + ", recomputed " +
                                 fmt(coverage.normalized[q]));
    }
  }

  std::vector<std::string> cov;
  for (double c : coverage.normalized) cov.push_back(fmt(c));
  std::ostringstream out;
  out << "map_nodes=" << map.nodes.size() << "\n"
      << "map_edges=" << map.edges.size() << "\n"
      << "main_route=" << join(route, ",") << "\n"
      << "route_likelihood=" << fmt(analysis.route.likelihood) << "\n"
      << "route_ties=" << analysis.route.ties << "\n"
      << "width=" << analysis.width << "\n"
      << "landmarks=" << join(landmarks, ",") << "\n"
      << "coverage_average=" << fmt(coverage.average) << "\n"
      << "coverage=" << join(cov, ",") << "\n"
      << "stored_analysis=" << (check.mismatches.empty() ? "match" : "mismatch") << "\n";
  check.report = out.str();
  return check;
}

}  // namespace narrmap
