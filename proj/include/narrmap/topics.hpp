#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "narrmap/corpus.hpp"
#include "narrmap/embed.hpp"

namespace narrmap {

// Per-event soft membership over k clusters plus a trailing noise slot.
class TopicModel {
 public:
  TopicModel() = default;
  // Rows must be valid distributions of length k + 1 (sum within 1e-9).
  TopicModel(std::vector<std::string> ids, std::size_t k,
             std::vector<double> distributions);

  std::size_t size() const { return ids_.size(); }
  // Number of real clusters; slot k of every row is noise.
  std::size_t k() const { return k_; }
  std::size_t slots() const { return k_ + 1; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> distribution(std::size_t i) const {
    return {dist_.data() + i * slots(), slots()};
  }
  double membership(std::size_t i, std::size_t cluster) const {
    return dist_[i * slots() + cluster];
  }

  // Top descriptive tokens per cluster; plumbing for reports.
  std::vector<std::vector<std::string>> labels;

  friend bool operator==(const TopicModel& a, const TopicModel& b) {
    return a.ids_ == b.ids_ && a.k_ == b.k_ && a.dist_ == b.dist_ &&
           a.labels == b.labels;
  }

 private:
  std::vector<std::string> ids_;
  std::size_t k_ = 0;
  std::vector<double> dist_;
};

// Projects onto the top `target_dim` principal directions of the centered
// matrix. Eigenvector signs are fixed by a seeded reference direction.
EmbeddingMatrix reduce(const EmbeddingMatrix& embeddings, std::size_t target_dim,
                       std::uint64_t seed);

struct ClusterOptions {
  std::size_t min_cluster_size = 3;
  // Linkage cutoff as a percentile of core distances.
  double cutoff_percentile = 90.0;
};

// Density clustering over mutual reachability distances: a single-linkage
// hierarchy where splits count only above the cutoff and only when both sides
// keep min_cluster_size points, clusters picked by excess of mass. Memberships
// are a softmax over negative centroid distances with temperature equal to the
// median pairwise centroid distance; points outside every cluster keep
// residual mass in the noise slot. Throws InfeasibleError when no cluster
// survives.
TopicModel soft_cluster(const EmbeddingMatrix& reduced, std::size_t min_cluster_size,
                        std::uint64_t seed);
TopicModel soft_cluster(const EmbeddingMatrix& reduced, const ClusterOptions& options);

// Fills model.labels with up to `top_n` tokens per cluster, counted over the
// headlines whose dominant slot is that cluster.
void label_clusters(const Corpus& corpus, TopicModel& model, std::size_t top_n = 5);

// Reads a JSON-lines sidecar of {"id": ..., "dist": [...]} records (last slot
// is noise). Rows off by more than 1e-9 are renormalized; a warning is issued
// past 1e-6. Negative or non-finite entries are rejected.
TopicModel load_topics(const Corpus& corpus, const std::filesystem::path& path);

// 1 - JSD(p, q) with base-2 logarithms, so the result lies in [0, 1].
double js_similarity(std::span<const double> p, std::span<const double> q);

// Index of the largest slot (noise included), lowest index on ties.
std::size_t dominant_slot(std::span<const double> dist);

void check_aligned(const Corpus& corpus, const TopicModel& topics);

}  // namespace narrmap
