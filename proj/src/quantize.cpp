#include "sylseg/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace sylseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform double in [0, 1) from the top 53 bits; avoids the
// implementation-defined behavior of std::uniform_real_distribution.
double uniform_double(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

Eigen::Index nearest_row(const Matrix& rows, const Eigen::RowVectorXd& point) {
  Eigen::Index best = 0;
  (rows.rowwise() - point).rowwise().squaredNorm().minCoeff(&best);
  return best;
}

Matrix kmeans_plus_plus_init(const Matrix& vectors, int k, std::mt19937_64& rng) {
  const Eigen::Index n = vectors.rows();
  Matrix centroids(k, vectors.cols());
  centroids.row(0) = vectors.row(static_cast<Eigen::Index>(rng() % n));
  Vector dist2 = (vectors.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = uniform_double(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      // All points coincide with chosen centroids; any pick works.
      pick = static_cast<Eigen::Index>(rng() % n);
    }
    centroids.row(c) = vectors.row(pick);
    dist2 = dist2.cwiseMin((vectors.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

}  // namespace

void Codebook::validate() const {
  if (centroids.rows() < 1 || !centroids.allFinite()) {
    throw ValidationError("codebook centroids must be nonempty and finite");
  }
  if (static_cast<int>(agglomeration_map.size()) != num_centroids()) {
    throw ValidationError("agglomeration map length must equal the centroid count");
  }
  if (num_units < 1 || num_units > num_centroids()) {
    throw ValidationError("unit count must lie in [1, K]");
  }
  std::vector<bool> seen(num_units, false);
  for (int u : agglomeration_map) {
    if (u < 0 || u >= num_units) {
      throw ValidationError("agglomeration map entry out of range");
    }
    seen[u] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw ValidationError("agglomeration map must be surjective onto [0, U)");
  }
}

Matrix pool_segments(const FeatureSequence& feats, const Segmentation& seg) {
  if (seg.total_frames() != feats.num_frames()) {
    throw ValidationError("segmentation does not cover the sequence");
  }
  Matrix pooled(seg.num_groups(), feats.num_dims());
  for (int i = 0; i < seg.num_groups(); ++i) {
    auto [lo, hi] = seg.group(i);
    pooled.row(i) = feats.frames().middleRows(lo - 1, hi - lo).colwise().mean();
  }
  return pooled;
}

KMeansResult kmeans_fit(const Matrix& vectors, int k, std::uint64_t seed, int max_iters) {
  const Eigen::Index n = vectors.rows();
  if (k < 1 || k > n) {
    throw ValidationError("k must lie in [1, N]; got k=" + std::to_string(k) +
                          ", N=" + std::to_string(n));
  }
  if (!vectors.allFinite()) {
    throw ValidationError("input vectors must be finite");
  }
  std::mt19937_64 rng(seed);

  KMeansResult res;
  res.centroids = kmeans_plus_plus_init(vectors, k, rng);
  res.assignments.assign(n, -1);

  std::vector<int> counts(k, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    // Assignment step.
    bool changed = false;
    double inertia = 0.0;
    std::fill(counts.begin(), counts.end(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      const double d2 =
          (res.centroids.rowwise() - vectors.row(i)).rowwise().squaredNorm().minCoeff(&best);
      inertia += d2;
      if (res.assignments[i] != static_cast<int>(best)) {
        res.assignments[i] = static_cast<int>(best);
        changed = true;
      }
      ++counts[best];
    }
    res.inertia = inertia;
    res.inertia_trace.push_back(inertia);
    res.iterations = iter + 1;
    if (!changed) break;

    // Update step.
    Matrix sums = Matrix::Zero(k, vectors.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(res.assignments[i]) += vectors.row(i);
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        res.centroids.row(c) = sums.row(c) / counts[c];
      } else {
        // Re-seed an emptied cluster on the point farthest from its centroid.
        double worst = -1.0;
        Eigen::Index worst_i = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d2 =
              (vectors.row(i) - res.centroids.row(res.assignments[i])).squaredNorm();
          if (d2 > worst) {
            worst = d2;
            worst_i = i;
          }
        }
        res.centroids.row(c) = vectors.row(worst_i);
      }
    }
  }
  return res;
}

AgglomerationResult agglomerate(const Matrix& centroids, const std::vector<double>& weights,
                                int num_units) {
  const int k = static_cast<int>(centroids.rows());
  if (num_units < 1) {
    throw ValidationError("unit count must be >= 1");
  }
  if (num_units > k) {
    throw ValidationError("unit count must not exceed the centroid count");
  }
  if (static_cast<int>(weights.size()) != k) {
    throw ValidationError("weights length must equal the centroid count");
  }

  // Nearest-neighbor-array agglomeration; merged clusters keep the smaller
  // index so tie-breaking by (i, j) stays well defined across merges.
  Matrix centers = centroids;
  std::vector<double> w = weights;
  std::vector<bool> active(k, true);
  std::vector<int> parent(k);
  std::iota(parent.begin(), parent.end(), 0);

  auto find_root = [&](int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };

  // nn[i] = closest active cluster j != i, smallest such j on distance ties.
  std::vector<double> nn_dist(k, kInf);
  std::vector<int> nn_of(k, -1);
  auto recompute_nn = [&](int i) {
    nn_dist[i] = kInf;
    nn_of[i] = -1;
    for (int j = 0; j < k; ++j) {
      if (j == i || !active[j]) continue;
      const double d = (centers.row(i) - centers.row(j)).norm();
      if (d < nn_dist[i]) {
        nn_dist[i] = d;
        nn_of[i] = j;
      }
    }
  };
  if (num_units < k) {
    for (int i = 0; i < k; ++i) recompute_nn(i);
  }

  AgglomerationResult res;
  int remaining = k;
  while (remaining > num_units) {
    double best_d = kInf;
    int best_i = -1;
    for (int i = 0; i < k; ++i) {
      if (active[i] && nn_dist[i] < best_d) {
        best_d = nn_dist[i];
        best_i = i;
      }
    }
    // Order the pair so the survivor is the smaller index.
    int a = best_i, b = nn_of[best_i];
    if (b < a) std::swap(a, b);

    centers.row(a) = (w[a] * centers.row(a) + w[b] * centers.row(b)) / (w[a] + w[b]);
    w[a] += w[b];
    active[b] = false;
    parent[b] = a;
    res.merge_distances.push_back(best_d);
    --remaining;
    if (remaining <= num_units) break;

    recompute_nn(a);
    for (int i = 0; i < k; ++i) {
      if (!active[i] || i == a) continue;
      if (nn_of[i] == a || nn_of[i] == b) {
        // Stale: the centroid moved or vanished.
        recompute_nn(i);
      } else {
        const double d = (centers.row(i) - centers.row(a)).norm();
        if (d < nn_dist[i] || (d == nn_dist[i] && a < nn_of[i])) {
          nn_dist[i] = d;
          nn_of[i] = a;
        }
      }
    }
  }

  res.monotone_merges = std::is_sorted(res.merge_distances.begin(), res.merge_distances.end());

  // Renumber surviving clusters in ascending index order.
  std::vector<int> unit_of(k, -1);
  int next = 0;
  for (int i = 0; i < k; ++i) {
    if (active[i]) unit_of[i] = next++;
  }
  res.map.resize(k);
  for (int i = 0; i < k; ++i) {
    res.map[i] = unit_of[find_root(i)];
  }
  return res;
}

UnitSequence assign_units(const FeatureSequence& feats, const Segmentation& seg,
                          const Codebook& codebook) {
  codebook.validate();
  if (codebook.dim() != feats.num_dims()) {
    throw ValidationError("codebook dimension does not match the features");
  }
  const Matrix pooled = pool_segments(feats, seg);
  std::vector<UnitSpan> spans;
  spans.reserve(seg.num_groups());
  for (int i = 0; i < seg.num_groups(); ++i) {
    auto [lo, hi] = seg.group(i);
    const int centroid = static_cast<int>(nearest_row(codebook.centroids, pooled.row(i)));
    spans.push_back({codebook.agglomeration_map[centroid], lo, hi});
  }
  return UnitSequence(std::move(spans), feats.frame_rate_hz());
}

UnitSequence dedup(const UnitSequence& units) {
  std::vector<UnitSpan> merged;
  for (const auto& span : units.units()) {
    if (!merged.empty() && merged.back().unit_id == span.unit_id) {
      merged.back().end_frame = span.end_frame;
    } else {
      merged.push_back(span);
    }
  }
  return UnitSequence(std::move(merged), units.frame_rate_hz());
}

double bitrate(double rate_hz, int num_units) {
  if (!(rate_hz > 0.0)) {
    throw ValidationError("rate_hz must be positive");
  }
  if (num_units < 2) {
    throw ValidationError("num_units must be >= 2");
  }
  return rate_hz * std::log2(static_cast<double>(num_units));
}

}  // namespace sylseg
