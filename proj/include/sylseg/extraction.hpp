#ifndef SYLSEG_EXTRACTION_HPP
#define SYLSEG_EXTRACTION_HPP

#include <memory>
#include <vector>

#include "sylseg/core.hpp"
#include "sylseg/types.hpp"

namespace sylseg {

/// T x G table where entry (t, g) is the squared-deviation cost of the group
/// of length g ending at frame t (both 1-based). Entries with g > t are
/// invalid and stored as +infinity.
struct SegmentCostTable {
  Matrix values;
  int max_group_len = 0;

  double at(int t, int g) const { return values(t - 1, g - 1); }
  bool valid(int t, int g) const { return g >= 1 && g <= max_group_len && g <= t; }
};

SegmentCostTable build_cost_table(const FeatureSequence& feats, int max_group_len);

struct ExtractionResult {
  Segmentation seg;
  double total_cost = 0.0;
  Vector per_frame_loss;  // squared distance of each frame to its group mean
  int dp_stages = 0;      // sequential DP stages executed; equals k
};

/// Rate-control parameters for dynamic boundary-count selection.
struct RateTarget {
  double target_hz = 0.0;
  double delta = 0.0;
  double quantile = 0.75;

  void validate(double frame_rate_hz) const;
};

/// Reusable per-utterance extraction state: prefix sums, the cost table, and
/// a lazily extended DP over group counts. Solving for k groups makes every
/// smaller group count available at no extra cost, which is what the dynamic
/// k search and rate calibration lean on.
class BoundaryExtractor {
 public:
  BoundaryExtractor(const FeatureSequence& feats, int max_group_len);
  ~BoundaryExtractor();
  BoundaryExtractor(BoundaryExtractor&&) noexcept;
  BoundaryExtractor& operator=(BoundaryExtractor&&) noexcept;

  int num_frames() const;
  int min_feasible_k() const;

  /// Optimal segmentation into exactly k groups of length <= G.
  ExtractionResult extract(int k);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Exact minimum of the total within-group squared deviation over contiguous
/// segmentations into k groups of length <= max_group_len. Ties resolve to
/// the lexicographically smallest boundary list.
ExtractionResult extract_boundaries(const FeatureSequence& feats, int k, int max_group_len);

enum class SelectKSearch {
  kLinearScan,    // scan k upward; guaranteed minimal
  kBinarySearch,  // bisect assuming monotonicity, then walk down to verify
};

/// Smallest k whose segmentation leaves at least ceil(quantile * T) frames
/// with per-frame loss strictly below delta.
ExtractionResult select_k(const FeatureSequence& feats, double delta, double quantile,
                          int max_group_len, SelectKSearch search = SelectKSearch::kLinearScan);

enum class CorpusRateMode {
  kTotalOverTotal,    // sum of units / sum of durations
  kPerUtteranceMean,  // mean of per-utterance unit rates
};

struct CalibrationResult {
  double delta = 0.0;
  double achieved_hz = 0.0;
  double floor_hz = 0.0;    // corpus rate as delta -> infinity
  double ceiling_hz = 0.0;  // corpus rate as delta -> 0
  int iterations = 0;
};

/// Pre-dedup corpus unit rate at a given threshold.
double corpus_rate_at_delta(const std::vector<FeatureSequence>& corpus, double delta,
                            double quantile, int max_group_len,
                            CorpusRateMode mode = CorpusRateMode::kTotalOverTotal);

/// Bisect delta until the corpus mean unit rate lands within tol_hz of
/// target_hz; the rate is nonincreasing in delta, so bisection is exact up to
/// the stepwise rate resolution.
CalibrationResult calibrate_delta(const std::vector<FeatureSequence>& corpus, double target_hz,
                                  double quantile, int max_group_len, double tol_hz = 0.05,
                                  CorpusRateMode mode = CorpusRateMode::kTotalOverTotal,
                                  int max_iterations = 40);

/// Mean squared error between student frames and the mean of the teacher
/// frames over each group, averaged over timesteps.
double sylboost_loss(const FeatureSequence& student, const FeatureSequence& teacher,
                     const Segmentation& seg);

}  // namespace sylseg

#endif  // SYLSEG_EXTRACTION_HPP
