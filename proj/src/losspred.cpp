#include "sylseg/losspred.hpp"

#include <cmath>
#include <cstdint>
#include <string>

namespace sylseg {

namespace {

constexpr double kDegenerateDenominator = 1e-12;

}  // namespace

void MaskProbabilityRecord::validate(int total_frames, int span) const {
  if (mask_start < 1 || mask_end > total_frames || mask_start > mask_end) {
    throw ValidationError("mask [" + std::to_string(mask_start) + ", " +
                          std::to_string(mask_end) + "] not a valid span within T=" +
                          std::to_string(total_frames));
  }
  if (mask_end - mask_start + 1 > span) {
    throw ValidationError("mask longer than span " + std::to_string(span));
  }
  for (const auto& [t, p] : probs) {
    if (t < mask_start || t > mask_end) {
      throw ValidationError("probability key " + std::to_string(t) + " outside mask");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("probability out of [0, 1] at t=" + std::to_string(t));
    }
  }
}

void LossPredMatrix::validate() const {
  const int t = num_frames();
  if (values.cols() != t) {
    throw ValidationError("loss matrix must be square");
  }
  if (span < 2 || span % 2 != 0) {
    throw ValidationError("span must be even and >= 2");
  }
  const int half = span / 2;
  for (int r = 0; r < t; ++r) {
    for (int c = 0; c < t; ++c) {
      const double v = values(r, c);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("loss matrix entries must lie in [0, 1]");
      }
      if ((r == c || std::abs(r - c) > half) && v != 0.0) {
        throw ValidationError("loss matrix must be zero on the diagonal and outside the band");
      }
    }
  }
}

LossPredMatrix assemble_loss_matrix(const std::vector<MaskProbabilityRecord>& records,
                                    int total_frames, int span) {
  if (total_frames < 1) {
    throw ValidationError("T must be >= 1");
  }
  if (span < 2 || span % 2 != 0) {
    throw ValidationError("span must be even and >= 2");
  }
  const int half = span / 2;
  LossPredMatrix out{Matrix::Zero(total_frames, total_frames), span};
  // One byte per cell marking prior writes; a duplicate signals an exporter
  // producing overlapping masks for the same row.
  std::vector<std::uint8_t> written(static_cast<std::size_t>(total_frames) * total_frames, 0);

  auto write_cell = [&](int r, int c, double p) {
    auto& flag = written[static_cast<std::size_t>(r - 1) * total_frames + (c - 1)];
    if (flag) {
      throw ConflictError(r, c, out.values(r - 1, c - 1), p);
    }
    flag = 1;
    out.values(r - 1, c - 1) = p;
  };

  for (const auto& rec : records) {
    rec.validate(total_frames, span);

    // Upper triangle: closest unmasked frame precedes the mask.
    const int upper_row = rec.mask_start - 1;
    if (upper_row >= 1) {
      const int c_hi = std::min(rec.mask_end, rec.mask_start + half - 1);
      for (int c = rec.mask_start; c <= c_hi; ++c) {
        auto it = rec.probs.find(c);
        if (it != rec.probs.end()) {
          write_cell(upper_row, c, it->second);
        }
      }
    }

    // Lower triangle: closest unmasked frame follows the mask.
    const int lower_row = rec.mask_end + 1;
    if (lower_row <= total_frames) {
      const int c_lo = std::max(rec.mask_start, rec.mask_end - half + 1);
      for (int c = c_lo; c <= rec.mask_end; ++c) {
        auto it = rec.probs.find(c);
        if (it != rec.probs.end()) {
          write_cell(lower_row, c, it->second);
        }
      }
    }
  }
  return out;
}

namespace {

// Rectangle-sum helpers over inclusive 1-based frame ranges.
struct PrefixSums {
  explicit PrefixSums(const Matrix& c) {
    const Index t = c.rows();
    rect.setZero(t + 1, t + 1);
    row_col.assign(t + 1, 0.0);
    for (Index i = 1; i <= t; ++i) {
      for (Index j = 1; j <= t; ++j) {
        rect(i, j) = c(i - 1, j - 1) + rect(i - 1, j) + rect(i, j - 1) - rect(i - 1, j - 1);
      }
      row_col[i] = row_col[i - 1] + c.row(i - 1).sum() + c.col(i - 1).sum();
    }
  }

  double within(int lo, int hi) const {
    return rect(hi, hi) - rect(lo - 1, hi) - rect(hi, lo - 1) + rect(lo - 1, lo - 1);
  }

  double degree(int lo, int hi) const { return row_col[hi] - row_col[lo - 1]; }

  double score(int lo, int hi) const {
    const double w = within(lo, hi);
    const double denom = degree(lo, hi) - w;
    return denom <= kDegenerateDenominator ? 0.0 : w / denom;
  }

  Matrix rect;
  std::vector<double> row_col;
};

void check_square_nonnegative(const Matrix& c) {
  if (c.rows() < 1 || c.rows() != c.cols()) {
    throw ValidationError("similarity matrix must be square and nonempty");
  }
  if (!c.allFinite() || (c.array() < 0.0).any()) {
    throw ValidationError("similarity matrix must be finite and nonnegative");
  }
}

}  // namespace

double mincut_objective(const Matrix& c, const Segmentation& seg) {
  check_square_nonnegative(c);
  if (seg.total_frames() != c.rows()) {
    throw ValidationError("segmentation does not cover the matrix");
  }
  PrefixSums sums(c);
  double total = 0.0;
  for (int i = 0; i < seg.num_groups(); ++i) {
    auto [lo, hi] = seg.group(i);
    total += sums.score(lo, hi - 1);
  }
  return total;
}

Segmentation normalized_mincut(const Matrix& c, int k) {
  check_square_nonnegative(c);
  const int t = static_cast<int>(c.rows());
  if (k < 1 || k > t) {
    throw ValidationError("k must lie in [1, T]");
  }
  PrefixSums sums(c);

  // Suffix DP: best[a] = max objective covering frames a..T with the current
  // number of groups. choice(g, a) records the smallest maximizing segment
  // end, which makes the forward reconstruction lexicographically smallest.
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> best(t + 2, kNegInf), next(t + 2, kNegInf);
  Eigen::MatrixXi choice = Eigen::MatrixXi::Zero(k + 1, t + 2);
  best[t + 1] = 0.0;

  for (int groups = 1; groups <= k; ++groups) {
    std::fill(next.begin(), next.end(), kNegInf);
    // Frames remaining must accommodate the groups still to place.
    for (int a = t - groups + 1; a >= 1; --a) {
      double best_val = kNegInf;
      int best_end = 0;
      for (int e = a; e <= t - (groups - 1); ++e) {
        const double tail = best[e + 1];
        if (tail == kNegInf) continue;
        const double val = sums.score(a, e) + tail;
        if (val > best_val) {
          best_val = val;
          best_end = e;
        }
      }
      next[a] = best_val;
      choice(groups, a) = best_end;
    }
    std::swap(best, next);
  }

  std::vector<int> boundaries;
  boundaries.reserve(k + 1);
  boundaries.push_back(1);
  int a = 1;
  for (int groups = k; groups >= 1; --groups) {
    const int e = choice(groups, a);
    boundaries.push_back(e + 1);
    a = e + 1;
  }
  return Segmentation(std::move(boundaries), t);
}

}  // namespace sylseg
