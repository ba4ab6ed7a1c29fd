#include "sylseg/types.hpp"

#include <algorithm>
#include <cmath>

namespace sylseg {

FeatureSequence::FeatureSequence(Matrix frames, double frame_rate_hz,
                                 std::optional<int> source_layer)
    : frames_(std::move(frames)), frame_rate_hz_(frame_rate_hz), source_layer_(source_layer) {
  if (frames_.rows() < 1 || frames_.cols() < 1) {
    throw ValidationError("feature sequence must have T >= 1 and D >= 1");
  }
  if (!frames_.allFinite()) {
    throw ValidationError("feature sequence contains non-finite entries");
  }
  if (!(frame_rate_hz_ > 0.0) || !std::isfinite(frame_rate_hz_)) {
    throw ValidationError("frame_rate_hz must be positive and finite");
  }
}

Segmentation::Segmentation(std::vector<int> boundaries, int total_frames)
    : boundaries_(std::move(boundaries)), total_frames_(total_frames) {
  if (total_frames_ < 1) {
    throw ValidationError("segmentation requires T >= 1");
  }
  if (boundaries_.size() < 2 || boundaries_.front() != 1 ||
      boundaries_.back() != total_frames_ + 1) {
    throw ValidationError("boundaries must start at 1 and end at T+1");
  }
  for (std::size_t i = 1; i < boundaries_.size(); ++i) {
    if (boundaries_[i] <= boundaries_[i - 1]) {
      throw ValidationError("boundaries must be strictly increasing");
    }
  }
}

int Segmentation::group_of(int t) const {
  if (t < 1 || t > total_frames_) {
    throw ValidationError("frame index out of range");
  }
  // First boundary strictly greater than t, minus one.
  auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), t);
  return static_cast<int>(it - boundaries_.begin()) - 1;
}

std::vector<double> Segmentation::internal_boundary_times(double frame_rate_hz) const {
  std::vector<double> times;
  times.reserve(boundaries_.size() - 2);
  for (std::size_t i = 1; i + 1 < boundaries_.size(); ++i) {
    times.push_back((boundaries_[i] - 1) / frame_rate_hz);
  }
  return times;
}

void DistanceMatrix::validate() const {
  if (values.rows() != values.cols()) {
    throw ValidationError("distance matrix must be square");
  }
  for (Index i = 0; i < values.rows(); ++i) {
    if (values(i, i) != 0.0) {
      throw ValidationError("distance matrix diagonal must be zero");
    }
    for (Index j = 0; j < i; ++j) {
      if (values(i, j) != values(j, i) || values(i, j) < 0.0) {
        throw ValidationError("distance matrix must be symmetric and nonnegative");
      }
    }
  }
}

UnitSequence::UnitSequence(std::vector<UnitSpan> units, double frame_rate_hz)
    : units_(std::move(units)), frame_rate_hz_(frame_rate_hz) {
  if (!(frame_rate_hz_ > 0.0)) {
    throw ValidationError("frame_rate_hz must be positive");
  }
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i].start_frame >= units_[i].end_frame) {
      throw ValidationError("unit spans must be nonempty");
    }
    if (i > 0 && units_[i].start_frame != units_[i - 1].end_frame) {
      throw ValidationError("unit spans must be contiguous and ordered");
    }
  }
}

}  // namespace sylseg
