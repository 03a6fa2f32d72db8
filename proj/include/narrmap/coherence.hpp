#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "narrmap/corpus.hpp"
#include "narrmap/embed.hpp"
#include "narrmap/topics.hpp"

namespace narrmap {

struct NarrativeMap;

// Geometric mean of event and topic similarity. Both inputs must lie in
// [0, 1]; the result is zero exactly when either input is zero.
double coherence(double sim_event, double sim_topic);

struct CoherenceEntry {
  std::size_t i = 0;  // earlier event (corpus index)
  std::size_t j = 0;  // later event (corpus index), i < j
  double sim_event = 0.0;
  double sim_topic = 0.0;
  double coherence = 0.0;
};

// Forward pairs sorted by (i, j).
class CoherenceTable {
 public:
  CoherenceTable() = default;
  CoherenceTable(std::size_t num_events, std::vector<CoherenceEntry> entries);

  std::size_t num_events() const { return num_events_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<CoherenceEntry>& entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  const CoherenceEntry* find(std::size_t i, std::size_t j) const;

 private:
  std::size_t num_events_ = 0;
  std::vector<CoherenceEntry> entries_;
  std::vector<std::size_t> row_start_;  // num_events_ + 1 offsets
};

struct CandidateCap {
  // Successors and predecessors kept per event, by descending coherence.
  std::size_t per_node = 20;
  // This pair is always kept.
  Endpoints keep;
};

// No cap up to 150 events, 20 per node above.
std::optional<std::size_t> default_candidate_cap(std::size_t num_events);

// One entry per forward pair. With a cap, a pair survives when it is among
// the top successors of i or the top predecessors of j.
CoherenceTable build_table(const Corpus& corpus, const EmbeddingMatrix& embeddings,
                           const TopicModel& topics,
                           const std::optional<CandidateCap>& cap = std::nullopt);

// Geometric mean of the endpoints' membership in a real cluster (the noise
// slot is not a cluster). Throws InputError when cluster >= topics.k().
double edge_membership(const TopicModel& topics, std::size_t i, std::size_t j,
                       std::size_t cluster);

// Turns raw coherences into per-tail probabilities. Throws InputError when a
// non-sink node's outgoing coherences are all zero.
NarrativeMap normalize_outgoing(NarrativeMap map);

// Debug dump: header `i,j,sim_event,sim_topic,coherence` with event ids.
void write_table_csv(std::ostream& out, const Corpus& corpus,
                     const CoherenceTable& table);

}  // namespace narrmap
