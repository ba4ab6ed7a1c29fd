#include "sylseg/core.hpp"

namespace sylseg {

DistanceMatrix pairwise_distance_matrix(const FeatureSequence& feats) {
  Matrix d = pairwise_squared_distances(feats.frames()).cwiseSqrt();
  d = ((d + d.transpose()) * 0.5).eval();
  d.diagonal().setZero();
  return DistanceMatrix{std::move(d)};
}

SegmentCostEvaluator::SegmentCostEvaluator(const FeatureSequence& feats)
    : num_frames_(feats.num_frames()) {
  const Matrix& x = feats.frames();
  const Index t = x.rows();
  sum_prefix_.setZero(x.cols(), t + 1);
  sq_prefix_.assign(t + 1, 0.0);
  for (Index i = 0; i < t; ++i) {
    sum_prefix_.col(i + 1) = sum_prefix_.col(i) + x.row(i).transpose();
    sq_prefix_[i + 1] = sq_prefix_[i] + x.row(i).squaredNorm();
  }
}

void SegmentCostEvaluator::check_range(int lo, int hi) const {
  if (lo < 1 || hi <= lo || hi > num_frames_ + 1) {
    throw ValidationError("segment range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          ") out of bounds for T=" + std::to_string(num_frames_));
  }
}

double segment_cost(const FeatureSequence& feats, int lo, int hi) {
  return SegmentCostEvaluator(feats).cost(lo, hi);
}

}  // namespace sylseg
