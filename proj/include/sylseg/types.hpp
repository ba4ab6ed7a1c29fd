#ifndef SYLSEG_TYPES_HPP
#define SYLSEG_TYPES_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "sylseg/errors.hpp"

namespace sylseg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// A T x D matrix of per-frame encoder features at a fixed frame rate.
/// Frames are addressed 1-based throughout the library; conversion to
/// 0-based storage happens only at this boundary.
class FeatureSequence {
 public:
  FeatureSequence(Matrix frames, double frame_rate_hz,
                  std::optional<int> source_layer = std::nullopt);

  const Matrix& frames() const { return frames_; }
  int num_frames() const { return static_cast<int>(frames_.rows()); }
  int num_dims() const { return static_cast<int>(frames_.cols()); }
  double frame_rate_hz() const { return frame_rate_hz_; }
  double duration_sec() const { return num_frames() / frame_rate_hz_; }
  const std::optional<int>& source_layer() const { return source_layer_; }

  /// Frame t, 1-based.
  Eigen::RowVectorXd frame(int t) const { return frames_.row(t - 1); }

 private:
  Matrix frames_;
  double frame_rate_hz_;
  std::optional<int> source_layer_;
};

/// Ordered boundary list B = {b_1 = 1 < ... < b_{k+1} = T+1} partitioning
/// frames 1..T into k half-open groups G_i = [b_i, b_{i+1}).
class Segmentation {
 public:
  Segmentation(std::vector<int> boundaries, int total_frames);

  const std::vector<int>& boundaries() const { return boundaries_; }
  int total_frames() const { return total_frames_; }
  int num_groups() const { return static_cast<int>(boundaries_.size()) - 1; }

  /// Half-open frame range [lo, hi) of group i (0-based group index).
  std::pair<int, int> group(int i) const { return {boundaries_[i], boundaries_[i + 1]}; }

  /// 0-based index of the group containing frame t (1-based).
  int group_of(int t) const;

  /// Internal boundary times in seconds (b_2..b_k), excluding the edges.
  std::vector<double> internal_boundary_times(double frame_rate_hz) const;

 private:
  std::vector<int> boundaries_;
  int total_frames_;
};

/// Symmetric nonnegative matrix of pairwise frame distances with zero diagonal.
struct DistanceMatrix {
  Matrix values;

  void validate() const;
};

struct UnitSpan {
  int unit_id = 0;
  int start_frame = 0;  // 1-based, inclusive
  int end_frame = 0;    // exclusive; next span starts here

  bool operator==(const UnitSpan&) const = default;
};

/// Contiguous, ordered unit intervals over frames.
class UnitSequence {
 public:
  UnitSequence(std::vector<UnitSpan> units, double frame_rate_hz);

  const std::vector<UnitSpan>& units() const { return units_; }
  double frame_rate_hz() const { return frame_rate_hz_; }
  bool empty() const { return units_.empty(); }
  std::size_t size() const { return units_.size(); }

 private:
  std::vector<UnitSpan> units_;
  double frame_rate_hz_;
};

}  // namespace sylseg

#endif  // SYLSEG_TYPES_HPP
