#ifndef SYLSEG_CORE_HPP
#define SYLSEG_CORE_HPP

#include <Eigen/Dense>
#include <algorithm>

#include "sylseg/types.hpp"

namespace sylseg {

/// Pairwise Euclidean distances between the rows of `frames`.
/// Result is symmetric with an exactly zero diagonal.
template <typename Derived>
Matrix pairwise_squared_distances(const Eigen::MatrixBase<Derived>& frames) {
  const Vector sq = frames.rowwise().squaredNorm();
  Matrix d2 = -2.0 * (frames * frames.transpose());
  d2.colwise() += sq;
  d2.rowwise() += sq.transpose();
  d2 = d2.cwiseMax(0.0);
  // Gram-based distances drift off symmetry in the last ulps.
  d2 = ((d2 + d2.transpose()) * 0.5).eval();
  d2.diagonal().setZero();
  return d2;
}

DistanceMatrix pairwise_distance_matrix(const FeatureSequence& feats);

/// Prefix sums over frames enabling O(D) within-segment deviation queries.
///
/// cost(lo, hi) is the total squared deviation of frames lo..hi-1 (1-based,
/// half-open) from their mean, via sum|x|^2 - |sum x|^2 / n, clamped at 0
/// against round-off.
class SegmentCostEvaluator {
 public:
  explicit SegmentCostEvaluator(const FeatureSequence& feats);

  int num_frames() const { return num_frames_; }

  double cost(int lo, int hi) const {
    check_range(lo, hi);
    const double n = hi - lo;
    const double sq = sq_prefix_[hi - 1] - sq_prefix_[lo - 1];
    const double mean_sq =
        (sum_prefix_.col(hi - 1) - sum_prefix_.col(lo - 1)).squaredNorm() / n;
    return std::max(0.0, sq - mean_sq);
  }

  /// Mean feature vector of frames [lo, hi).
  Vector mean(int lo, int hi) const {
    check_range(lo, hi);
    return (sum_prefix_.col(hi - 1) - sum_prefix_.col(lo - 1)) / (hi - lo);
  }

 private:
  void check_range(int lo, int hi) const;

  int num_frames_;
  Matrix sum_prefix_;            // D x (T+1), column t = sum of frames 1..t
  std::vector<double> sq_prefix_;  // length T+1
};

/// One-off convenience; builds the prefix sums internally.
double segment_cost(const FeatureSequence& feats, int lo, int hi);

}  // namespace sylseg

#endif  // SYLSEG_CORE_HPP
