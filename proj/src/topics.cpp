#include "narrmap/topics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <tuple>
#include <unordered_map>

#include "json.hpp"
#include "narrmap/diagnostics.hpp"
#include "narrmap/text.hpp"

namespace narrmap {
namespace {

constexpr double kSumTolerance = 1e-9;
constexpr double kWarnTolerance = 1e-6;

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

// Linear interpolation between closest ranks.
double percentile(std::vector<double> values, double pct) {
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values.front();
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

double median(std::vector<double> values) { return percentile(std::move(values), 50.0); }

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct TreeNode {
  std::size_t left = 0, right = 0;
  double height = 0.0;
  std::size_t size = 1;
};

// Single-linkage tree (Prim's spanning tree, merged in ascending order).
// Leaves are 0..n-1, the root is the last node.
std::vector<TreeNode> linkage_tree(const std::vector<double>& d, std::size_t n) {
  struct Link {
    double w;
    std::size_t a, b;
  };
  std::vector<Link> links;
  std::vector<bool> done(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> via(n, 0);
  best[0] = 0.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!done[v] && (u == n || best[v] < best[u])) u = v;
    }
    done[u] = true;
    if (step > 0) links.push_back({best[u], std::min(u, via[u]), std::max(u, via[u])});
    for (std::size_t v = 0; v < n; ++v) {
      if (!done[v] && d[u * n + v] < best[v]) {
        best[v] = d[u * n + v];
        via[v] = u;
      }
    }
  }
  std::sort(links.begin(), links.end(), [](const Link& x, const Link& y) {
    return std::tie(x.w, x.a, x.b) < std::tie(y.w, y.a, y.b);
  });
  std::vector<TreeNode> tree(n);
  DisjointSets sets(n);
  std::vector<std::size_t> top(n);
  std::iota(top.begin(), top.end(), 0);
  for (const auto& link : links) {
    const std::size_t ra = sets.find(link.a), rb = sets.find(link.b);
    TreeNode node{top[ra], top[rb], link.w, tree[top[ra]].size + tree[top[rb]].size};
    tree.push_back(node);
    sets.unite(ra, rb);
    top[sets.find(ra)] = tree.size() - 1;
  }
  return tree;
}

// Excess-of-mass selection over the condensed single-linkage hierarchy.
// Splits only count above `cutoff` and when both sides keep at least
// min_size points; smaller fragments shed above the cutoff are noise. The
// root is a candidate only when it never splits, so a single blob yields one
// cluster.
std::vector<std::vector<std::size_t>> select_clusters(const std::vector<double>& reach,
                                                      std::size_t n, std::size_t min_size,
                                                      double cutoff) {
  double floor = cutoff;
  if (!(floor > 0.0)) {
    floor = std::numeric_limits<double>::infinity();
    for (double x : reach) {
      if (x > 0.0) floor = std::min(floor, x);
    }
    if (!std::isfinite(floor)) {
      // Every point coincides.
      std::vector<std::size_t> all(n);
      std::iota(all.begin(), all.end(), 0);
      return {all};
    }
  }
  const auto tree = linkage_tree(reach, n);
  const auto lambda = [floor](double h) { return 1.0 / std::max(h, floor); };

  struct Cluster {
    double birth = 0.0;
    double stability = 0.0;
    std::vector<std::size_t> children;
    std::vector<std::size_t> members;
  };
  std::vector<Cluster> found(1);
  const auto leave = [&](std::size_t node, std::size_t c, double l, bool member) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      if (x < n) {
        found[c].stability += l - found[c].birth;
        if (member) found[c].members.push_back(x);
      } else {
        stack.push_back(tree[x].left);
        stack.push_back(tree[x].right);
      }
    }
  };
  std::vector<std::pair<std::size_t, std::size_t>> work{{tree.size() - 1, 0}};
  while (!work.empty()) {
    const auto [x, c] = work.back();
    work.pop_back();
    const TreeNode& node = tree[x];
    const double l = lambda(node.height);
    const bool above = node.height > cutoff;
    if (above && tree[node.left].size >= min_size && tree[node.right].size >= min_size) {
      for (std::size_t child : {node.left, node.right}) {
        leave(child, c, l, false);
        found.push_back({l, 0.0, {}, {}});
        found[c].children.push_back(found.size() - 1);
        work.push_back({child, found.size() - 1});
      }
      continue;
    }
    for (std::size_t child : {node.left, node.right}) {
      if (!above || tree[child].size >= min_size) {
        if (child < n) {
          leave(child, c, l, true);
        } else {
          work.push_back({child, c});
        }
      } else {
        leave(child, c, l, false);
      }
    }
  }

  // Children always carry larger indices than their parent.
  std::vector<bool> selected(found.size(), false);
  std::vector<double> subtree(found.size(), 0.0);
  for (std::size_t c = found.size(); c-- > 0;) {
    double below = 0.0;
    for (std::size_t child : found[c].children) below += subtree[child];
    // The root only stands when nothing ever split off it.
    selected[c] = found[c].children.empty() || (c != 0 && found[c].stability >= below);
    subtree[c] = selected[c] ? found[c].stability : below;
  }
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    if (!selected[c]) {
      stack.insert(stack.end(), found[c].children.begin(), found[c].children.end());
      continue;
    }
    std::vector<std::size_t> members;
    std::vector<std::size_t> inner{c};
    while (!inner.empty()) {
      const std::size_t e = inner.back();
      inner.pop_back();
      members.insert(members.end(), found[e].members.begin(), found[e].members.end());
      inner.insert(inner.end(), found[e].children.begin(), found[e].children.end());
    }
    if (members.size() < min_size) continue;
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  // Clusters are numbered by their earliest member.
  std::sort(out.begin(), out.end());
  return out;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = {
      "a",    "about", "after", "against", "al",   "amid",  "an",   "and",
      "are",  "as",    "at",    "be",      "been", "but",   "by",   "can",
      "could", "for",  "from",  "has",     "have", "he",    "her",  "his",
      "how",  "in",    "into",  "is",      "it",   "its",   "more", "new",
      "not",  "of",    "on",    "or",      "out",  "over",  "say",  "says",
      "she",  "so",    "than",  "that",    "the",  "their", "they", "this",
      "to",   "up",    "us",    "was",     "we",   "what",  "when", "who",
      "why",  "will",  "with",  "would",   "you"};
  return words;
}

}  // namespace

TopicModel::TopicModel(std::vector<std::string> ids, std::size_t k,
                       std::vector<double> distributions)
    : ids_(std::move(ids)), k_(k), dist_(std::move(distributions)) {
  if (dist_.size() != ids_.size() * slots()) {
    throw InputError("topic distribution size does not match ids x (k + 1)");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    double sum = 0.0;
    for (double p : distribution(i)) {
      if (!std::isfinite(p) || p < 0.0) {
        throw InputError("invalid topic distribution for id '" + ids_[i] + "'");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw InputError("topic distribution for id '" + ids_[i] +
                       "' sums to " + std::to_string(sum));
    }
  }
}

EmbeddingMatrix reduce(const EmbeddingMatrix& embeddings, std::size_t target_dim,
                       std::uint64_t seed) {
  const std::size_t n = embeddings.size();
  const std::size_t dim = embeddings.dim();
  if (target_dim < 2) throw InputError("reduction target dimension must be >= 2");
  if (target_dim >= dim) {
    throw InputError("reduction target dimension " + std::to_string(target_dim) +
                     " must be smaller than the embedding dimension " +
                     std::to_string(dim));
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = embeddings.row(i);
    for (std::size_t k = 0; k < dim; ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = r[k];
    }
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  std::vector<double> out(n * target_dim, 0.0);
  const double total_variance = x.squaredNorm();
  if (total_variance <= 1e-24) {
    warn("embeddings have zero variance; reduced vectors are all equal");
    return EmbeddingMatrix(embeddings.ids(), target_dim, std::move(out),
                           EmbeddingMatrix::Check::kCoordinates);
  }

  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw InvariantError("eigendecomposition of the covariance matrix failed");
  }
  // Eigenvalues come back ascending; order descending with index tie-break.
  std::vector<Eigen::Index> order(dim);
  std::iota(order.begin(), order.end(), 0);
  const auto& values = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values(a) > values(b);
  });

  // Seeded reference direction fixes the otherwise arbitrary eigenvector sign.
  std::mt19937_64 rng(seed);
  Eigen::VectorXd reference(static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k < dim; ++k) {
    reference(static_cast<Eigen::Index>(k)) =
        static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
  }
  for (std::size_t c = 0; c < target_dim; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(order[c]);
    double orient = v.dot(reference);
    if (std::abs(orient) < 1e-12) {
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      orient = v(arg);
    }
    if (orient < 0) v = -v;
    const Eigen::VectorXd proj = x * v;
    for (std::size_t i = 0; i < n; ++i) {
      out[i * target_dim + c] = proj(static_cast<Eigen::Index>(i));
    }
  }
  return EmbeddingMatrix(embeddings.ids(), target_dim, std::move(out),
                         EmbeddingMatrix::Check::kCoordinates);
}

TopicModel soft_cluster(const EmbeddingMatrix& reduced, std::size_t min_cluster_size,
                        std::uint64_t /*seed*/) {
  ClusterOptions options;
  options.min_cluster_size = min_cluster_size;
  return soft_cluster(reduced, options);
}

TopicModel soft_cluster(const EmbeddingMatrix& reduced, const ClusterOptions& options) {
  const std::size_t n = reduced.size();
  if (options.min_cluster_size < 2) {
    throw InputError("min_cluster_size must be at least 2");
  }
  if (n < 2) throw InputError("clustering needs at least 2 points");

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = euclidean(reduced.row(i), reduced.row(j));
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  }
  // Core distance: distance to the min_cluster_size-th nearest other point.
  // Linkage runs on mutual reachability, max(core(a), core(b), d(a, b)), where
  // a point's nearest-neighbour distance is its core distance; the cutoff is
  // a percentile of those.
  const std::size_t rank = std::min(options.min_cluster_size, n - 1);
  std::vector<double> core(n, 0.0);
  std::vector<double> scratch;
  for (std::size_t i = 0; i < n; ++i) {
    scratch.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) scratch.push_back(dist[i * n + j]);
    }
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<long>(rank - 1),
                     scratch.end());
    core[i] = scratch[rank - 1];
  }
  const double cutoff = percentile(core, options.cutoff_percentile);
  std::vector<double> reach(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) reach[i * n + j] = std::max({dist[i * n + j], core[i], core[j]});
    }
  }

  const auto clusters = select_clusters(reach, n, options.min_cluster_size, cutoff);
  std::vector<long> cluster_of(n, -1);
  for (std::size_t q = 0; q < clusters.size(); ++q) {
    for (std::size_t m : clusters[q]) cluster_of[m] = static_cast<long>(q);
  }
  if (clusters.empty()) {
    throw InfeasibleError(
        "clustering",
        "clustering classified all " + std::to_string(n) +
            " points as noise; try a smaller min_cluster_size (currently " +
            std::to_string(options.min_cluster_size) + ")");
  }
  const std::size_t k = clusters.size();
  const std::size_t d = reduced.dim();
  std::vector<double> centroids(k * d, 0.0);
  for (std::size_t q = 0; q < k; ++q) {
    for (std::size_t m : clusters[q]) {
      const auto r = reduced.row(m);
      for (std::size_t c = 0; c < d; ++c) centroids[q * d + c] += r[c];
    }
    for (std::size_t c = 0; c < d; ++c) {
      centroids[q * d + c] /= static_cast<double>(clusters[q].size());
    }
  }
  const auto centroid = [&](std::size_t q) {
    return std::span<const double>(centroids.data() + q * d, d);
  };

  double temperature = 0.0;
  if (k >= 2) {
    std::vector<double> spacing;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        spacing.push_back(euclidean(centroid(a), centroid(b)));
      }
    }
    temperature = median(spacing);
  }
  if (!(temperature > 0.0)) temperature = cutoff;
  if (!(temperature > 0.0)) temperature = 1.0;

  std::vector<double> out(n * (k + 1), 0.0);
  std::vector<double> logits(k);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < k; ++q) {
      logits[q] = euclidean(reduced.row(i), centroid(q)) / temperature;
      best = std::min(best, logits[q]);
    }
    double z = 0.0;
    for (std::size_t q = 0; q < k; ++q) {
      logits[q] = std::exp(-(logits[q] - best));
      z += logits[q];
    }
    double noise = 0.0;
    if (cluster_of[i] < 0) {
      double gap = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (cluster_of[j] >= 0) gap = std::min(gap, dist[i * n + j]);
      }
      noise = 1.0 - std::exp(-std::max(0.0, gap - cutoff) / temperature);
    }
    double* row = out.data() + i * (k + 1);
    for (std::size_t q = 0; q < k; ++q) row[q] = (1.0 - noise) * logits[q] / z;
    row[k] = noise;
    // Absorb rounding so every row sums to 1 within the model tolerance.
    double sum = 0.0;
    for (std::size_t q = 0; q <= k; ++q) sum += row[q];
    for (std::size_t q = 0; q <= k; ++q) row[q] /= sum;
  }
  return TopicModel(reduced.ids(), k, std::move(out));
}

void label_clusters(const Corpus& corpus, TopicModel& model, std::size_t top_n) {
  check_aligned(corpus, model);
  std::vector<std::map<std::string, std::size_t>> counts(model.k());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::size_t q = dominant_slot(model.distribution(i));
    if (q >= model.k()) continue;
    for (const auto& tok : text::tokenize(corpus[i].headline)) {
      if (!text::has_letter(tok) || stopwords().count(tok)) continue;
      ++counts[q][tok];
    }
  }
  model.labels.assign(model.k(), {});
  for (std::size_t q = 0; q < model.k(); ++q) {
    std::vector<std::pair<std::string, std::size_t>> ranked(counts[q].begin(),
                                                            counts[q].end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t r = 0; r < ranked.size() && r < top_n; ++r) {
      model.labels[q].push_back(ranked[r].first);
    }
  }
}

TopicModel load_topics(const Corpus& corpus, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open topic sidecar " + path.string());
  std::unordered_map<std::string, std::vector<double>> records;
  std::size_t slots = 0;
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
        !rec.contains("dist") || !rec["dist"].is_array()) {
      throw InputError(where + ": expected {\"id\": string, \"dist\": [numbers]}");
    }
    const std::string id = rec["id"].get<std::string>();
    std::vector<double> p;
    for (const auto& x : rec["dist"]) {
      if (!x.is_number()) throw InputError(where + ": non-numeric dist entry");
      p.push_back(x.get<double>());
    }
    if (p.size() < 2) {
      throw InputError(where + ": dist needs at least one cluster slot plus noise");
    }
    if (slots == 0) slots = p.size();
    if (p.size() != slots) {
      throw InputError(where + ": dist length mismatch for id '" + id + "'");
    }
    double sum = 0.0;
    for (double v : p) {
      if (!std::isfinite(v) || v < 0.0) {
        throw InputError(where + ": negative or non-finite probability for id '" +
                         id + "'");
      }
      sum += v;
    }
    if (sum <= 0.0) throw InputError(where + ": all-zero dist for id '" + id + "'");
    if (std::abs(sum - 1.0) > kSumTolerance) {
      if (std::abs(sum - 1.0) > kWarnTolerance) {
        warn(where + ": dist for id '" + id + "' sums to " + std::to_string(sum) +
             "; renormalized");
      }
      for (double& v : p) v /= sum;
    }
    if (!records.emplace(id, std::move(p)).second) {
      throw InputError(where + ": duplicate id '" + id + "'");
    }
  }
  std::vector<std::string> ids;
  std::vector<double> data;
  for (const auto& ev : corpus) {
    const auto it = records.find(ev.id);
    if (it == records.end()) {
      throw InputError("topic sidecar is missing id '" + ev.id + "'");
    }
    ids.push_back(ev.id);
    data.insert(data.end(), it->second.begin(), it->second.end());
  }
  if (records.size() > corpus.size()) {
    warn("topic sidecar has " + std::to_string(records.size() - corpus.size()) +
         " records for ids outside the corpus; ignored");
  }
  return TopicModel(std::move(ids), slots - 1, std::move(data));
}

double js_similarity(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw InputError("js_similarity: length mismatch (" + std::to_string(p.size()) +
                     " vs " + std::to_string(q.size()) + ")");
  }
  double sp = 0.0, sq = 0.0;
  bool overlap = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || !std::isfinite(q[i]) || p[i] < 0.0 || q[i] < 0.0) {
      throw InputError("js_similarity: invalid distribution entry");
    }
    sp += p[i];
    sq += q[i];
    overlap = overlap || (p[i] > 0.0 && q[i] > 0.0);
  }
  if (std::abs(sp - 1.0) > kWarnTolerance || std::abs(sq - 1.0) > kWarnTolerance) {
    throw InputError("js_similarity: inputs must sum to 1");
  }
  if (!overlap) return 0.0;
  double divergence = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) divergence += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0.0) divergence += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return 1.0 - std::clamp(divergence, 0.0, 1.0);
}

std::size_t dominant_slot(std::span<const double> dist) {
  return static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) -
                                  dist.begin());
}

void check_aligned(const Corpus& corpus, const TopicModel& topics) {
  if (topics.size() != corpus.size()) {
    throw InputError("topic model has " + std::to_string(topics.size()) +
                     " rows but the corpus has " + std::to_string(corpus.size()) +
                     " events");
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (topics.ids()[i] != corpus[i].id) {
      throw InputError("topic model row " + std::to_string(i) + " is '" +
                       topics.ids()[i] + "', expected '" + corpus[i].id + "'");
    }
  }
}

}  // namespace narrmap
