#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "narrmap/corpus.hpp"

namespace narrmap {

// Dense per-event vectors, rows aligned with corpus order.
class EmbeddingMatrix {
 public:
  enum class Check {
    // Finite entries and strictly positive norm: usable for similarity.
    kDirections,
    // Finite entries only: reduced coordinates used for clustering.
    kCoordinates,
  };

  EmbeddingMatrix() = default;
  // Throws InputError on shape mismatch, non-finite entries, or (for
  // kDirections) a zero row.
  EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim,
                  std::vector<double> data, Check check = Check::kDirections);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// Reads a JSON-lines sidecar of {"id": ..., "vector": [...]} records and
// aligns it with the corpus. Records for ids outside the corpus are ignored.
EmbeddingMatrix load_embeddings(const Corpus& corpus,
                                const std::filesystem::path& path);

// Deterministic fallback encoder: TF-IDF over headline tokens, projected to
// `dim` dimensions by a seeded Gaussian random projection, unit-normalized.
// Headlines without alphabetic tokens get a reserved unknown-token vector.
EmbeddingMatrix builtin_embed(const Corpus& corpus, std::size_t dim,
                              std::uint64_t seed);

// 1 - arccos(cos(u, v)) / pi, with the cosine clamped to [-1, 1].
double angular_similarity(std::span<const double> u, std::span<const double> v);

// Every ordered pair i < j, row-major: entry (i, j) at position
// i * n - i * (i + 1) / 2 + (j - i - 1).
std::vector<double> pairwise_angular_similarity(const EmbeddingMatrix& m);

// Verifies the matrix rows carry exactly the corpus ids in order.
void check_aligned(const Corpus& corpus, const EmbeddingMatrix& m,
                   const char* what);

}  // namespace narrmap
