#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "narrmap/coherence.hpp"
#include "narrmap/corpus.hpp"
#include "narrmap/narrative_map.hpp"
#include "narrmap/topics.hpp"

namespace narrmap {

struct ExtractionConfig {
  std::size_t K = 6;        // floor on active events, endpoints included
  double mincover = 0.8;    // required average normalized cluster coverage
  double tau = 0.5;         // rounding threshold on edge activations
  std::uint64_t seed = 0;

  // Throws InputError unless K >= 2, 0 < mincover <= 1, 0 < tau < 1.
  void validate() const;
};

// Coverage below mincover by at most this much is tolerated after rounding.
inline constexpr double kCoverageSlack = 0.05;

enum class RowSense { kLessEqual, kGreaterEqual, kEqual };

struct LpRow {
  std::vector<std::pair<std::size_t, double>> terms;  // (variable, coefficient)
  RowSense sense = RowSense::kLessEqual;
  double rhs = 0.0;
  // weakest-link, coupling, endpoints, connectivity, size, coverage
  std::string family;
};

struct LpVariable {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

struct LpEdge {
  std::size_t from = 0;  // corpus index
  std::size_t to = 0;
  double coherence = 0.0;
  std::size_t var = 0;
  // c * m_q(from, to) for every kept cluster, parallel to LinearProgram::clusters.
  std::vector<double> mass;
};

struct LpCluster {
  std::size_t slot = 0;     // topic slot
  double cmax = 0.0;        // coverage with every candidate edge active
  double reference = 0.0;   // min(1, cmax): one unit of mass saturates a cluster
  std::size_t var = 0;      // normalized coverage variable
};

// Explicit program (variables, rows, objective) plus the structure the exact
// solver works on. Only events between s and t can lie on an s-t path, so
// node variables exist for that window only.
struct LinearProgram {
  std::vector<LpVariable> variables;
  std::vector<LpRow> rows;
  std::vector<double> objective;  // maximize objective . values

  std::size_t minedge_var = 0;
  std::size_t source = 0;  // corpus index of s
  std::size_t sink = 0;    // corpus index of t
  std::vector<std::size_t> window;    // corpus indices s..t
  std::vector<std::size_t> node_var;  // parallel to window
  std::vector<LpEdge> edges;          // sorted by (from, to)
  std::vector<LpCluster> clusters;
  double coverage_target = 0.0;  // sum of normalized coverages required
  ExtractionConfig config;
};

// Candidate edges are the table entries inside [s, t] with positive
// coherence; edges into s and out of t are dropped. Clusters whose maximum
// coverage is zero are dropped with a warning. Throws InfeasibleError
// ("connectivity") when s has no successor or t no predecessor, and
// ("coverage") when every cluster is degenerate.
LinearProgram build_lp(const CoherenceTable& table, const TopicModel& topics,
                       std::size_t s, std::size_t t, const ExtractionConfig& config);

struct LpSolution {
  double objective = 0.0;             // optimal minedge
  std::vector<double> values;         // one per LinearProgram variable
  std::vector<double> node;           // parallel to LinearProgram::window
  std::vector<double> edge;           // parallel to LinearProgram::edges
  std::vector<double> coverage;       // parallel to LinearProgram::clusters
};

// Exact optimum of the relaxation. Throws InfeasibleError naming the failing
// constraint families when no fractional solution exists.
LpSolution solve_lp(const LinearProgram& lp);

// Largest violation of any row or bound by `values` (0 when feasible).
double max_violation(const LinearProgram& lp, const std::vector<double>& values);

// Deterministic rounding into a valid st-map; edge probabilities are filled
// by normalize_outgoing.
NarrativeMap round_solution(const LinearProgram& lp, const LpSolution& sol,
                            const Corpus& corpus, const TopicModel& topics);

struct CoverageReport {
  std::vector<std::size_t> slots;      // non-degenerate clusters
  std::vector<double> reference;       // saturation level per cluster
  std::vector<double> normalized;      // min(1, cover / reference)
  double average = 0.0;
  std::vector<std::size_t> degenerate; // clusters with nothing to cover
};

// Candidate edges are the admissible table pairs between the map's endpoints.
CoverageReport compute_coverage(const NarrativeMap& map, const CoherenceTable& table,
                                const TopicModel& topics);

// Recomputes coverage of a stored map from its node distributions and the
// saved per-cluster references.
CoverageReport compute_coverage(const NarrativeMap& map,
                                const std::vector<std::size_t>& slots,
                                const std::vector<double>& reference);

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool ok() const;
  const VerifyCheck* find(const std::string& name) const;
};

VerifyReport verify(const NarrativeMap& map, const TopicModel& topics,
                    const CoherenceTable& table, const ExtractionConfig& config);
VerifyReport verify(const NarrativeMap& map, const CoverageReport& coverage,
                    const ExtractionConfig& config);

}  // namespace narrmap
