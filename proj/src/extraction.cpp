#include "sylseg/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sylseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// ceil(quantile * T) with a guard against ulp overshoot in the product.
int quantile_count(double quantile, int t) {
  const int m = static_cast<int>(std::ceil(quantile * t - 1e-9));
  return std::clamp(m, 1, t);
}

}  // namespace

SegmentCostTable build_cost_table(const FeatureSequence& feats, int max_group_len) {
  const int t = feats.num_frames();
  if (max_group_len < 1 || max_group_len > t) {
    throw ValidationError("max group length must lie in [1, T]");
  }
  SegmentCostEvaluator eval(feats);
  SegmentCostTable table{Matrix::Constant(t, max_group_len, kInf), max_group_len};
  for (int end = 1; end <= t; ++end) {
    const int g_max = std::min(max_group_len, end);
    for (int g = 1; g <= g_max; ++g) {
      table.values(end - 1, g - 1) = eval.cost(end - g + 1, end + 1);
    }
  }
  return table;
}

void RateTarget::validate(double frame_rate_hz) const {
  if (!(target_hz > 0.0) || target_hz > frame_rate_hz) {
    throw ValidationError("target_hz must lie in (0, frame_rate_hz]");
  }
  if (delta < 0.0) {
    throw ValidationError("delta must be nonnegative");
  }
  if (!(quantile > 0.0 && quantile <= 1.0)) {
    throw ValidationError("quantile must lie in (0, 1]");
  }
}

struct BoundaryExtractor::Impl {
  // The group-length cap acts per utterance: longer than T means unbounded.
  Impl(const FeatureSequence& feats, int g)
      : eval(feats),
        table(build_cost_table(feats, std::min(g, feats.num_frames()))),
        frames(feats.frames()),
        max_group_len(std::min(g, feats.num_frames())),
        t(feats.num_frames()) {
    // Stage 0: zero groups cover exactly the empty suffix.
    dp.assign(t + 2, kInf);
    dp[t + 1] = 0.0;
    stages = 0;
  }

  // Extend the DP one stage: dp'[a] = min_g cost(a, a+g) + dp[a+g].
  // Iterating g ascending with a strict < keeps the shortest first group on
  // ties, so the forward reconstruction is lexicographically smallest.
  void extend_stage() {
    ++stages;
    std::vector<double> next(t + 2, kInf);
    std::vector<int> pick(t + 2, 0);
    for (int a = t - stages + 1; a >= 1; --a) {
      double best = kInf;
      int best_g = 0;
      const int g_max = std::min(max_group_len, t - a + 1);
      for (int g = 1; g <= g_max; ++g) {
        const double tail = dp[a + g];
        if (tail == kInf) continue;
        const double val = table.at(a + g - 1, g) + tail;
        if (val < best) {
          best = val;
          best_g = g;
        }
      }
      next[a] = best;
      pick[a] = best_g;
    }
    dp = std::move(next);
    stage_cost.push_back(dp[1]);
    choices.push_back(std::move(pick));
  }

  void ensure_stages(int k) {
    while (stages < k) extend_stage();
  }

  ExtractionResult result_for(int k) {
    ensure_stages(k);
    std::vector<int> boundaries;
    boundaries.reserve(k + 1);
    boundaries.push_back(1);
    int a = 1;
    for (int remaining = k; remaining >= 1; --remaining) {
      const int g = choices[remaining - 1][a];
      boundaries.push_back(a + g);
      a += g;
    }
    ExtractionResult res{Segmentation(std::move(boundaries), t), stage_cost[k - 1], Vector(t), k};
    for (int i = 0; i < res.seg.num_groups(); ++i) {
      auto [lo, hi] = res.seg.group(i);
      const Vector mean = eval.mean(lo, hi);
      res.per_frame_loss.segment(lo - 1, hi - lo) =
          (frames.middleRows(lo - 1, hi - lo).rowwise() - mean.transpose())
              .rowwise()
              .squaredNorm();
    }
    return res;
  }

  SegmentCostEvaluator eval;
  SegmentCostTable table;
  Matrix frames;
  int max_group_len;
  int t;
  int stages;
  std::vector<double> dp;                 // current stage values, indexed by start frame
  std::vector<double> stage_cost;         // dp[1] after each stage
  std::vector<std::vector<int>> choices;  // per stage, chosen group length per start frame
};

BoundaryExtractor::BoundaryExtractor(const FeatureSequence& feats, int max_group_len)
    : impl_(std::make_unique<Impl>(feats, max_group_len)) {}

BoundaryExtractor::~BoundaryExtractor() = default;
BoundaryExtractor::BoundaryExtractor(BoundaryExtractor&&) noexcept = default;
BoundaryExtractor& BoundaryExtractor::operator=(BoundaryExtractor&&) noexcept = default;

int BoundaryExtractor::num_frames() const { return impl_->t; }

int BoundaryExtractor::min_feasible_k() const { return ceil_div(impl_->t, impl_->max_group_len); }

ExtractionResult BoundaryExtractor::extract(int k) {
  const int t = impl_->t;
  if (k < 1 || k > t) {
    throw ValidationError("k must lie in [1, T]");
  }
  const int min_k = min_feasible_k();
  if (k < min_k) {
    throw InfeasibleError(k, min_k,
                          "k=" + std::to_string(k) + " cannot cover T=" + std::to_string(t) +
                              " with groups of length <= " + std::to_string(impl_->max_group_len) +
                              "; minimum feasible k is " + std::to_string(min_k));
  }
  return impl_->result_for(k);
}

ExtractionResult extract_boundaries(const FeatureSequence& feats, int k, int max_group_len) {
  BoundaryExtractor extractor(feats, max_group_len);
  return extractor.extract(k);
}

namespace {

bool passes_quantile(const Vector& losses, double delta, int needed) {
  const int hits = static_cast<int>((losses.array() < delta).count());
  return hits >= needed;
}

}  // namespace

ExtractionResult select_k(const FeatureSequence& feats, double delta, double quantile,
                          int max_group_len, SelectKSearch search) {
  if (delta < 0.0) {
    throw ValidationError("delta must be nonnegative");
  }
  if (!(quantile > 0.0 && quantile <= 1.0)) {
    throw ValidationError("quantile must lie in (0, 1]");
  }
  const int t = feats.num_frames();
  const int needed = quantile_count(quantile, t);
  BoundaryExtractor extractor(feats, max_group_len);
  const int k_min = extractor.min_feasible_k();

  auto passes = [&](int k) {
    return passes_quantile(extractor.extract(k).per_frame_loss, delta, needed);
  };

  int found = -1;
  if (search == SelectKSearch::kLinearScan) {
    for (int k = k_min; k <= t; ++k) {
      if (passes(k)) {
        found = k;
        break;
      }
    }
  } else {
    // The quantile statistic is not provably monotone in k, so the bisection
    // result is only a candidate; minimality is re-established by walking
    // down while k-1 still passes.
    int lo = k_min, hi = t;
    if (passes(lo)) {
      found = lo;
    } else if (!passes(hi)) {
      found = -1;
    } else {
      while (lo + 1 < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (passes(mid)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      found = hi;
      while (found > k_min && passes(found - 1)) --found;
    }
  }

  if (found < 0) {
    throw ValidationError(
        "no group count satisfies the per-frame loss threshold; raise delta (delta=" +
        std::to_string(delta) + ")");
  }
  return extractor.extract(found);
}

namespace {

// Per-utterance state for repeated threshold probes during calibration: one
// extractor, and the sorted per-frame losses of every group count already
// visited (losses depend on k alone, not on delta).
class RateProbe {
 public:
  RateProbe(const FeatureSequence& feats, int max_group_len, double quantile)
      : extractor_(feats, max_group_len),
        t_(feats.num_frames()),
        duration_(feats.duration_sec()),
        needed_(quantile_count(quantile, feats.num_frames())),
        sorted_losses_(feats.num_frames() + 1) {}

  int min_k() const { return extractor_.min_feasible_k(); }
  double duration_sec() const { return duration_; }

  int select(double delta) {
    for (int k = min_k(); k <= t_; ++k) {
      if (frames_below(k, delta) >= needed_) return k;
    }
    throw ValidationError(
        "no group count satisfies the per-frame loss threshold; raise delta");
  }

 private:
  int frames_below(int k, double delta) {
    auto& losses = sorted_losses_[k];
    if (losses.empty()) {
      const Vector raw = extractor_.extract(k).per_frame_loss;
      losses.assign(raw.begin(), raw.end());
      std::sort(losses.begin(), losses.end());
    }
    return static_cast<int>(std::lower_bound(losses.begin(), losses.end(), delta) -
                            losses.begin());
  }

  BoundaryExtractor extractor_;
  int t_;
  double duration_;
  int needed_;
  std::vector<std::vector<double>> sorted_losses_;
};

double probes_rate(std::vector<RateProbe>& probes, double delta, CorpusRateMode mode) {
  double total_units = 0.0, total_dur = 0.0, mean_acc = 0.0;
  for (auto& probe : probes) {
    const int k = probe.select(delta);
    total_units += k;
    total_dur += probe.duration_sec();
    mean_acc += k / probe.duration_sec();
  }
  return mode == CorpusRateMode::kTotalOverTotal ? total_units / total_dur
                                                 : mean_acc / probes.size();
}

}  // namespace

double corpus_rate_at_delta(const std::vector<FeatureSequence>& corpus, double delta,
                            double quantile, int max_group_len, CorpusRateMode mode) {
  if (corpus.empty()) {
    throw ValidationError("corpus must be nonempty");
  }
  double total_units = 0.0, total_dur = 0.0, mean_acc = 0.0;
  for (const auto& feats : corpus) {
    const int k = select_k(feats, delta, quantile, max_group_len).seg.num_groups();
    total_units += k;
    total_dur += feats.duration_sec();
    mean_acc += k / feats.duration_sec();
  }
  return mode == CorpusRateMode::kTotalOverTotal ? total_units / total_dur
                                                 : mean_acc / corpus.size();
}

CalibrationResult calibrate_delta(const std::vector<FeatureSequence>& corpus, double target_hz,
                                  double quantile, int max_group_len, double tol_hz,
                                  CorpusRateMode mode, int max_iterations) {
  if (corpus.empty()) {
    throw ValidationError("corpus must be nonempty");
  }
  if (!(target_hz > 0.0)) {
    throw ValidationError("target_hz must be positive");
  }

  std::vector<RateProbe> probes;
  probes.reserve(corpus.size());
  for (const auto& feats : corpus) {
    probes.emplace_back(feats, max_group_len, quantile);
  }
  auto rate_at = [&](double delta) { return probes_rate(probes, delta, mode); };

  double lo = 1e-12;
  const double ceiling = rate_at(lo);

  // Rate as delta -> infinity: every utterance settles at its minimum
  // feasible group count.
  double floor_units = 0.0, floor_dur = 0.0, floor_mean = 0.0;
  for (const auto& probe : probes) {
    floor_units += probe.min_k();
    floor_dur += probe.duration_sec();
    floor_mean += probe.min_k() / probe.duration_sec();
  }
  const double floor =
      mode == CorpusRateMode::kTotalOverTotal ? floor_units / floor_dur : floor_mean / corpus.size();

  if (target_hz > ceiling + tol_hz || target_hz < floor - tol_hz) {
    throw BracketError(floor, ceiling, target_hz);
  }

  CalibrationResult result;
  result.floor_hz = floor;
  result.ceiling_hz = ceiling;
  result.delta = lo;
  result.achieved_hz = ceiling;

  if (std::abs(ceiling - target_hz) <= tol_hz) {
    return result;
  }

  // Expand the upper end until the rate drops to (or below) the target.
  double hi = 1.0;
  double hi_rate = rate_at(hi);
  while (hi_rate > target_hz && hi < 1e18) {
    hi *= 2.0;
    hi_rate = rate_at(hi);
  }
  if (std::abs(hi_rate - target_hz) <= tol_hz) {
    return {hi, hi_rate, floor, ceiling, 0};
  }

  double best_delta = hi, best_rate = hi_rate;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double mid_rate = rate_at(mid);
    if (std::abs(mid_rate - target_hz) < std::abs(best_rate - target_hz)) {
      best_delta = mid;
      best_rate = mid_rate;
    }
    if (std::abs(mid_rate - target_hz) <= tol_hz) {
      ++iter;
      break;
    }
    // Rate is nonincreasing in delta.
    if (mid_rate > target_hz) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  result.delta = best_delta;
  result.achieved_hz = best_rate;
  result.iterations = iter;
  return result;
}

double sylboost_loss(const FeatureSequence& student, const FeatureSequence& teacher,
                     const Segmentation& seg) {
  if (student.num_frames() != teacher.num_frames() || student.num_dims() != teacher.num_dims()) {
    throw ValidationError("student and teacher must share T and D");
  }
  if (seg.total_frames() != student.num_frames()) {
    throw ValidationError("segmentation does not cover the sequence");
  }
  double total = 0.0;
  for (int i = 0; i < seg.num_groups(); ++i) {
    auto [lo, hi] = seg.group(i);
    // Group means computed exactly as pool_segments does, so a student equal
    // to the pooled teacher scores an exact zero.
    const Eigen::RowVectorXd mean =
        teacher.frames().middleRows(lo - 1, hi - lo).colwise().mean();
    total += (student.frames().middleRows(lo - 1, hi - lo).rowwise() - mean)
                 .rowwise()
                 .squaredNorm()
                 .sum();
  }
  return total / student.num_frames();
}

}  // namespace sylseg
