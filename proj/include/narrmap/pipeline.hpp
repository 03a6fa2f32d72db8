#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "narrmap/analyze.hpp"
#include "narrmap/coherence.hpp"
#include "narrmap/corpus.hpp"
#include "narrmap/embed.hpp"
#include "narrmap/extract.hpp"
#include "narrmap/map_json.hpp"
#include "narrmap/render.hpp"
#include "narrmap/topics.hpp"

namespace narrmap {

inline constexpr std::size_t kDefaultEmbedDim = 128;
inline constexpr std::size_t kDefaultReduceDim = 8;

struct PipelineConfig {
  std::filesystem::path input;
  std::optional<CorpusFormat> format;  // guessed from the extension when unset

  // Embedding mode: a sidecar file, or the built-in encoder.
  std::optional<std::filesystem::path> embeddings;
  std::optional<std::size_t> embed_dim;

  // Topic mode: a sidecar file, or reduction plus clustering.
  std::optional<std::filesystem::path> topics;
  std::optional<std::size_t> min_cluster_size;
  std::optional<std::size_t> reduce_dim;

  ExtractionConfig extraction;
  std::optional<std::size_t> top_sources;
  std::optional<std::string> start;
  std::optional<std::string> end;
  std::filesystem::path out = ".";
  std::string name = "narrative_map";
  std::string title;
  RenderOptions render;

  // Throws InputError when both modes of a stage are requested or a value is
  // out of range.
  void validate() const;
};

// Applies one `key=value` setting; keys are the long flag names without
// dashes. Throws InputError on unknown keys or malformed values.
void apply_setting(PipelineConfig& config, const std::string& key,
                   const std::string& value);

// Flat key=value file; blank lines and lines starting with '#' are skipped.
std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::filesystem::path& path);

struct TopicStage {
  Corpus corpus;
  EmbeddingMatrix embeddings;
  TopicModel topics;
};

// Phases 1 and 2: load, filter, embed, cluster.
TopicStage run_topic_stage(const PipelineConfig& config);

struct PipelineResult {
  TopicStage stage;
  Endpoints endpoints;
  CoherenceTable table;
  LinearProgram lp;
  LpSolution solution;
  NarrativeMap map;
  Analysis analysis;
  CoverageReport coverage;
  VerifyReport checks;
  std::string json;
  std::string dot;
  std::string html;
};

// Throws InvariantError when the final map fails verification.
PipelineResult run_pipeline(const PipelineConfig& config);

std::string pipeline_report(const PipelineResult& result);

// Writes <name>.json, <name>.dot, <name>.html and <name>.report.txt.
void write_outputs(const PipelineConfig& config, const PipelineResult& result);

std::string topics_report(const TopicStage& stage);

struct StoredCheck {
  std::string report;
  std::vector<std::string> mismatches;
};

// Recomputes route, landmarks, width and coverage of a stored map and lists
// every disagreement with the stored values.
StoredCheck check_stored_map(const StoredMap& stored);

}  // namespace narrmap
