#include "sylseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sylseg {

ReferenceAlignment::ReferenceAlignment(std::vector<LabeledInterval> intervals)
    : intervals_(std::move(intervals)) {
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    if (!(intervals_[i].start_sec < intervals_[i].end_sec)) {
      throw ValidationError("alignment intervals must satisfy start < end");
    }
    if (i > 0 && intervals_[i].start_sec < intervals_[i - 1].end_sec) {
      throw ValidationError("alignment intervals must be ordered and nonoverlapping");
    }
  }
}

std::vector<double> ReferenceAlignment::boundary_times() const {
  std::vector<double> times;
  times.reserve(intervals_.size() * 2);
  for (const auto& iv : intervals_) {
    times.push_back(iv.start_sec);
    times.push_back(iv.end_sec);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

long match_boundaries(const std::vector<double>& ref, const std::vector<double>& hyp,
                      double tol) {
  struct Candidate {
    double dist;
    std::size_t ri, hi;
  };
  std::vector<Candidate> candidates;
  for (std::size_t ri = 0; ri < ref.size(); ++ri) {
    for (std::size_t hi = 0; hi < hyp.size(); ++hi) {
      const double d = std::abs(ref[ri] - hyp[hi]);
      if (d <= tol) candidates.push_back({d, ri, hi});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dist, a.ri, a.hi) < std::tie(b.dist, b.ri, b.hi);
  });
  std::vector<bool> ref_used(ref.size(), false), hyp_used(hyp.size(), false);
  long hits = 0;
  for (const auto& c : candidates) {
    if (!ref_used[c.ri] && !hyp_used[c.hi]) {
      ref_used[c.ri] = true;
      hyp_used[c.hi] = true;
      ++hits;
    }
  }
  return hits;
}

BoundaryScore boundary_score_from_counts(long hits, long num_ref, long num_hyp, double tol) {
  if (num_ref == 0) {
    throw ValidationError("recall undefined: no reference boundaries");
  }
  BoundaryScore s;
  s.hits = hits;
  s.num_ref = num_ref;
  s.num_hyp = num_hyp;
  s.tolerance_sec = tol;
  s.precision = num_hyp > 0 ? static_cast<double>(hits) / num_hyp : 0.0;
  s.recall = static_cast<double>(hits) / num_ref;
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  const double hr = 100.0 * s.recall;
  const double os = 100.0 * (static_cast<double>(num_hyp) / num_ref - 1.0);
  const double r1 = std::sqrt((100.0 - hr) * (100.0 - hr) + os * os);
  const double r2 = (-os + hr - 100.0) / std::sqrt(2.0);
  s.r_value = 1.0 - (std::abs(r1) + std::abs(r2)) / 200.0;
  return s;
}

BoundaryScore boundary_score(const std::vector<double>& ref, const std::vector<double>& hyp,
                             double tol) {
  return boundary_score_from_counts(match_boundaries(ref, hyp, tol),
                                    static_cast<long>(ref.size()),
                                    static_cast<long>(hyp.size()), tol);
}

std::vector<double> strip_edge_boundaries(std::vector<double> times) {
  if (times.size() <= 2) return {};
  times.erase(times.begin());
  times.pop_back();
  return times;
}

void PurityCounts::add(int unit, const std::string& label, double weight) {
  entries[{unit, label}] += weight;
  total += weight;
}

void PurityCounts::merge(const PurityCounts& other) {
  for (const auto& [key, count] : other.entries) {
    add(key.first, key.second, count);
  }
}

PurityResult PurityCounts::purity() const {
  if (total <= 0.0) {
    throw ValidationError("purity undefined: zero total overlap");
  }
  std::map<int, double> unit_max;
  std::map<std::string, double> label_max;
  for (const auto& [key, count] : entries) {
    unit_max[key.first] = std::max(unit_max[key.first], count);
    label_max[key.second] = std::max(label_max[key.second], count);
  }
  double unit_sum = 0.0, label_sum = 0.0;
  for (const auto& [_, v] : unit_max) unit_sum += v;
  for (const auto& [_, v] : label_max) label_sum += v;
  return {unit_sum / total, label_sum / total};
}

PurityCounts purity_counts(const UnitSequence& units, const ReferenceAlignment& ref,
                           bool frame_weighted) {
  PurityCounts counts;
  const double rate = units.frame_rate_hz();
  for (const auto& span : units.units()) {
    const double ts = (span.start_frame - 1) / rate;
    const double te = (span.end_frame - 1) / rate;
    double best_overlap = 0.0;
    const LabeledInterval* best = nullptr;
    for (const auto& iv : ref.intervals()) {
      const double overlap = std::min(te, iv.end_sec) - std::max(ts, iv.start_sec);
      if (overlap > best_overlap) {  // strict: ties keep the earlier interval
        best_overlap = overlap;
        best = &iv;
      }
    }
    if (best != nullptr) {
      counts.add(span.unit_id, best->label, frame_weighted ? best_overlap : 1.0);
    }
  }
  return counts;
}

PurityResult purity(const UnitSequence& units, const ReferenceAlignment& ref,
                    bool frame_weighted) {
  return purity_counts(units, ref, frame_weighted).purity();
}

}  // namespace sylseg
