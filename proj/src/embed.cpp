#include "narrmap/embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <unordered_map>

#include "json.hpp"
#include "narrmap/diagnostics.hpp"
#include "narrmap/text.hpp"

namespace narrmap {
namespace {

constexpr const char* kUnknownToken = "\x01<unk>";

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// splitmix64 finalizer to decorrelate (seed, token) combinations.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in (0, 1) from the top 53 bits; never returns 0.
double uniform_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Standard-normal projection row for a token. Box-Muller on mt19937_64 keeps
// the output independent of the standard library's distribution code.
std::vector<double> token_direction(std::string_view token, std::size_t dim,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed ^ mix(fnv1a64(token))));
  std::vector<double> v(dim);
  for (std::size_t k = 0; k < dim; k += 2) {
    const double u1 = uniform_open(rng);
    const double u2 = uniform_open(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    v[k] = r * std::cos(2.0 * std::numbers::pi * u2);
    if (k + 1 < dim) v[k + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  return v;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim,
                                 std::vector<double> data, Check check)
    : ids_(std::move(ids)), dim_(dim), data_(std::move(data)) {
  if (dim_ == 0) throw InputError("embedding dimension must be positive");
  if (data_.size() != ids_.size() * dim_) {
    throw InputError("embedding data size does not match ids x dim");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const auto r = row(i);
    for (double x : r) {
      if (!std::isfinite(x)) {
        throw InputError("non-finite embedding entry for id '" + ids_[i] + "'");
      }
    }
    if (check == Check::kDirections && norm(r) <= 0.0) {
      throw InputError("zero embedding vector for id '" + ids_[i] + "'");
    }
  }
}

void check_aligned(const Corpus& corpus, const EmbeddingMatrix& m,
                   const char* what) {
  if (m.size() != corpus.size()) {
    throw InputError(std::string(what) + " has " + std::to_string(m.size()) +
                     " rows but the corpus has " + std::to_string(corpus.size()) +
                     " events");
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (m.ids()[i] != corpus[i].id) {
      throw InputError(std::string(what) + " row " + std::to_string(i) +
                       " is '" + m.ids()[i] + "', expected '" + corpus[i].id + "'");
    }
  }
}

EmbeddingMatrix load_embeddings(const Corpus& corpus,
                                const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open embedding sidecar " + path.string());
  std::unordered_map<std::string, std::vector<double>> records;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where =
        path.filename().string() + " line " + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(where + ": JSON parse error: " + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
        !rec.contains("vector") || !rec["vector"].is_array()) {
      throw InputError(where + ": expected {\"id\": string, \"vector\": [numbers]}");
    }
    const std::string id = rec["id"].get<std::string>();
    std::vector<double> v;
    v.reserve(rec["vector"].size());
    for (const auto& x : rec["vector"]) {
      if (x.is_number()) {
        v.push_back(x.get<double>());
      } else if (x.is_null() || (x.is_string() && (x == "NaN" || x == "nan"))) {
        v.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        throw InputError(where + ": non-numeric vector entry");
      }
    }
    if (v.empty()) throw InputError(where + ": empty vector for id '" + id + "'");
    if (dim == 0) dim = v.size();
    if (v.size() != dim) {
      throw InputError(where + ": dimension mismatch for id '" + id + "' (" +
                       std::to_string(v.size()) + " vs " + std::to_string(dim) + ")");
    }
    if (!records.emplace(id, std::move(v)).second) {
      throw InputError(where + ": duplicate id '" + id + "'");
    }
  }
  std::vector<std::string> ids;
  std::vector<double> data;
  data.reserve(corpus.size() * dim);
  for (const auto& ev : corpus) {
    const auto it = records.find(ev.id);
    if (it == records.end()) {
      throw InputError("embedding sidecar is missing id '" + ev.id + "'");
    }
    ids.push_back(ev.id);
    data.insert(data.end(), it->second.begin(), it->second.end());
  }
  if (records.size() > corpus.size()) {
    warn("embedding sidecar has " + std::to_string(records.size() - corpus.size()) +
         " records for ids outside the corpus; ignored");
  }
  return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

EmbeddingMatrix builtin_embed(const Corpus& corpus, std::size_t dim,
                              std::uint64_t seed) {
  if (dim < 2) throw InputError("built-in embedding dimension must be >= 2");
  const std::size_t n = corpus.size();
  std::vector<std::map<std::string, double>> tf(n);
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < n; ++i) {
    auto tokens = text::tokenize(corpus[i].headline);
    const bool usable = std::any_of(tokens.begin(), tokens.end(),
                                    [](const auto& t) { return text::has_letter(t); });
    if (!usable) {
      warn("headline of event '" + corpus[i].id +
           "' has no alphabetic tokens; using the unknown-token vector");
      tokens = {kUnknownToken};
    }
    for (const auto& t : tokens) tf[i][t] += 1.0;
    for (const auto& [t, _] : tf[i]) ++df[t];
  }
  std::map<std::string, std::vector<double>> directions;
  for (const auto& [t, _] : df) directions.emplace(t, token_direction(t, dim, seed));

  std::vector<std::string> ids;
  std::vector<double> data(n * dim, 0.0);
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(corpus[i].id);
    double* out = data.data() + i * dim;
    for (const auto& [t, count] : tf[i]) {
      const double idf =
          std::log((1.0 + nd) / (1.0 + static_cast<double>(df[t]))) + 1.0;
      const double w = count * idf;
      const auto& dir = directions.at(t);
      for (std::size_t k = 0; k < dim; ++k) out[k] += w * dir[k];
    }
    const double len = norm({out, dim});
    if (len > 0.0) {
      for (std::size_t k = 0; k < dim; ++k) out[k] /= len;
    }
  }
  return EmbeddingMatrix(std::move(ids), dim, std::move(data));
}

double angular_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw InputError("angular_similarity: dimension mismatch (" +
                     std::to_string(u.size()) + " vs " + std::to_string(v.size()) + ")");
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += u[k] * v[k];
    uu += u[k] * u[k];
    vv += v[k] * v[k];
  }
  if (uu <= 0.0 || vv <= 0.0) throw InputError("angular_similarity: zero vector");
  const double cosine = std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
  return 1.0 - std::acos(cosine) / std::numbers::pi;
}

std::vector<double> pairwise_angular_similarity(const EmbeddingMatrix& m) {
  const std::size_t n = m.size();
  std::vector<double> out;
  out.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      out.push_back(angular_similarity(m.row(i), m.row(j)));
    }
  }
  return out;
}

}  // namespace narrmap
