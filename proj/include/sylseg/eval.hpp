#ifndef SYLSEG_EVAL_HPP
#define SYLSEG_EVAL_HPP

#include <map>
#include <string>
#include <vector>

#include "sylseg/types.hpp"

namespace sylseg {

struct LabeledInterval {
  double start_sec = 0.0;
  double end_sec = 0.0;
  std::string label;
};

/// Ground-truth labeled time intervals (syllables), ordered and nonoverlapping.
class ReferenceAlignment {
 public:
  explicit ReferenceAlignment(std::vector<LabeledInterval> intervals);

  const std::vector<LabeledInterval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }

  /// All distinct interval edges, sorted ascending.
  std::vector<double> boundary_times() const;

 private:
  std::vector<LabeledInterval> intervals_;
};

struct BoundaryScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double r_value = 0.0;
  double tolerance_sec = 0.0;
  long hits = 0;
  long num_ref = 0;
  long num_hyp = 0;
};

/// One-to-one matching of reference to hypothesis boundaries: candidate pairs
/// within tol are taken closest-first, ties by (ref index, hyp index).
long match_boundaries(const std::vector<double>& ref, const std::vector<double>& hyp, double tol);

BoundaryScore boundary_score(const std::vector<double>& ref, const std::vector<double>& hyp,
                             double tol);

/// Score from pre-pooled counts (corpus-level aggregation).
BoundaryScore boundary_score_from_counts(long hits, long num_ref, long num_hyp, double tol);

/// Drop boundaries at the utterance edges (t = 0 and t = end) before scoring;
/// exposed since edge boundaries are trivially shared.
std::vector<double> strip_edge_boundaries(std::vector<double> times);

struct PurityResult {
  double cluster_purity = 0.0;
  double syllable_purity = 0.0;
};

struct PurityCounts {
  // Sparse confusion counts keyed by (unit id, label).
  std::map<std::pair<int, std::string>, double> entries;
  double total = 0.0;

  void add(int unit, const std::string& label, double weight);
  void merge(const PurityCounts& other);
  PurityResult purity() const;
};

/// Pair each unit interval with the reference interval of maximum temporal
/// overlap (ties to the earlier reference). Weight 1 per pair, or the overlap
/// duration when frame_weighted is set.
PurityCounts purity_counts(const UnitSequence& units, const ReferenceAlignment& ref,
                           bool frame_weighted = false);

PurityResult purity(const UnitSequence& units, const ReferenceAlignment& ref,
                    bool frame_weighted = false);

}  // namespace sylseg

#endif  // SYLSEG_EVAL_HPP
