#include "narrmap/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "narrmap/diagnostics.hpp"
#include "narrmap/narrative_map.hpp"

namespace narrmap {

double coherence(double sim_event, double sim_topic) {
  const auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_unit(sim_event) || !in_unit(sim_topic)) {
    throw InputError("coherence: similarities must lie in [0, 1]");
  }
  // sqrt(a) * sqrt(b) rather than sqrt(a * b): the product can underflow to
  // zero for tiny positive inputs.
  return std::sqrt(sim_event) * std::sqrt(sim_topic);
}

CoherenceTable::CoherenceTable(std::size_t num_events,
                               std::vector<CoherenceEntry> entries)
    : num_events_(num_events), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const CoherenceEntry& a, const CoherenceEntry& b) {
              return a.i != b.i ? a.i < b.i : a.j < b.j;
            });
  row_start_.assign(num_events_ + 1, 0);
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& e = entries_[k];
    if (e.i >= e.j || e.j >= num_events_) {
      throw InvariantError("coherence table entry is not a forward pair");
    }
    if (k > 0 && entries_[k - 1].i == e.i && entries_[k - 1].j == e.j) {
      throw InvariantError("duplicate coherence table entry");
    }
    ++row_start_[e.i + 1];
  }
  for (std::size_t i = 0; i < num_events_; ++i) row_start_[i + 1] += row_start_[i];
}

const CoherenceEntry* CoherenceTable::find(std::size_t i, std::size_t j) const {
  if (i >= num_events_) return nullptr;
  const auto first = entries_.begin() + static_cast<std::ptrdiff_t>(row_start_[i]);
  const auto last = entries_.begin() + static_cast<std::ptrdiff_t>(row_start_[i + 1]);
  const auto it = std::lower_bound(first, last, j, [](const CoherenceEntry& e,
                                                      std::size_t target) {
    return e.j < target;
  });
  return it != last && it->j == j ? &*it : nullptr;
}

std::optional<std::size_t> default_candidate_cap(std::size_t num_events) {
  if (num_events <= 150) return std::nullopt;
  return 20;
}

CoherenceTable build_table(const Corpus& corpus, const EmbeddingMatrix& embeddings,
                           const TopicModel& topics,
                           const std::optional<CandidateCap>& cap) {
  check_aligned(corpus, embeddings, "embedding matrix");
  check_aligned(corpus, topics);
  const std::size_t n = corpus.size();
  std::vector<CoherenceEntry> all;
  all.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      CoherenceEntry e;
      e.i = i;
      e.j = j;
      e.sim_event = angular_similarity(embeddings.row(i), embeddings.row(j));
      e.sim_topic = js_similarity(topics.distribution(i), topics.distribution(j));
      e.coherence = coherence(e.sim_event, e.sim_topic);
      all.push_back(e);
    }
  }
  if (!cap) return CoherenceTable(n, std::move(all));
  if (cap->per_node == 0) throw InputError("candidate cap must be positive");

  std::vector<std::vector<std::size_t>> out_edges(n), in_edges(n);
  for (std::size_t k = 0; k < all.size(); ++k) {
    out_edges[all[k].i].push_back(k);
    in_edges[all[k].j].push_back(k);
  }
  std::vector<bool> keep(all.size(), false);
  const auto keep_top = [&](std::vector<std::size_t>& ks) {
    std::stable_sort(ks.begin(), ks.end(), [&](std::size_t a, std::size_t b) {
      return all[a].coherence > all[b].coherence;
    });
    for (std::size_t r = 0; r < ks.size() && r < cap->per_node; ++r) keep[ks[r]] = true;
  };
  for (std::size_t v = 0; v < n; ++v) {
    keep_top(out_edges[v]);
    keep_top(in_edges[v]);
  }
  std::vector<CoherenceEntry> kept;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const bool endpoints = all[k].i == cap->keep.start && all[k].j == cap->keep.end;
    if (keep[k] || endpoints) kept.push_back(all[k]);
  }
  return CoherenceTable(n, std::move(kept));
}

double edge_membership(const TopicModel& topics, std::size_t i, std::size_t j,
                       std::size_t cluster) {
  if (cluster >= topics.k()) {
    throw InputError("edge_membership: cluster " + std::to_string(cluster) +
                     " out of range (k = " + std::to_string(topics.k()) + ")");
  }
  if (i >= topics.size() || j >= topics.size()) {
    throw InputError("edge_membership: event index out of range");
  }
  return std::sqrt(topics.membership(i, cluster)) *
         std::sqrt(topics.membership(j, cluster));
}

NarrativeMap normalize_outgoing(NarrativeMap map) {
  std::vector<double> totals(map.nodes.size(), 0.0);
  for (const auto& e : map.edges) totals[e.from] += e.coherence;
  for (auto& e : map.edges) {
    if (!(totals[e.from] > 0.0)) {
      throw InputError("node " + map.nodes[e.from].event.id +
                       " has only zero-coherence outgoing edges");
    }
    e.probability = e.coherence / totals[e.from];
  }
  return map;
}

void write_table_csv(std::ostream& out, const Corpus& corpus,
                     const CoherenceTable& table) {
  out << "i,j,sim_event,sim_topic,coherence\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& e : table) {
    out << corpus[e.i].id << ',' << corpus[e.j].id << ',' << e.sim_event << ','
        << e.sim_topic << ',' << e.coherence << '\n';
  }
}

}  // namespace narrmap
