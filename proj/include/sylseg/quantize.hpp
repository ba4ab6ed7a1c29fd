#ifndef SYLSEG_QUANTIZE_HPP
#define SYLSEG_QUANTIZE_HPP

#include <cstdint>
#include <vector>

#include "sylseg/types.hpp"

namespace sylseg {

/// K-Means centroids plus the agglomeration map from centroid id to final
/// unit id in [0, U).
struct Codebook {
  Matrix centroids;                   // K x D
  std::vector<int> agglomeration_map;  // length K, onto [0, num_units)
  int num_units = 0;
  std::uint64_t rng_seed = 0;

  int num_centroids() const { return static_cast<int>(centroids.rows()); }
  int dim() const { return static_cast<int>(centroids.cols()); }
  void validate() const;
};

/// Mean of the frames in each segmentation group; row i = mean over G_i.
Matrix pool_segments(const FeatureSequence& feats, const Segmentation& seg);

struct KMeansResult {
  Matrix centroids;  // K x D
  std::vector<int> assignments;
  double inertia = 0.0;
  std::vector<double> inertia_trace;  // after each Lloyd iteration
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Deterministic for a given
/// (vectors, k, seed); stops when assignments are stable or at max_iters.
KMeansResult kmeans_fit(const Matrix& vectors, int k, std::uint64_t seed, int max_iters = 100);

struct AgglomerationResult {
  std::vector<int> map;                // centroid id -> unit id in [0, num_units)
  std::vector<double> merge_distances;  // one entry per merge, in merge order
  bool monotone_merges = true;
};

/// Centroid-linkage agglomeration down to num_units clusters. Each merge
/// joins the closest pair of weighted centroids (ties to the smallest index
/// pair) and replaces them by their weighted mean.
AgglomerationResult agglomerate(const Matrix& centroids, const std::vector<double>& weights,
                                int num_units);

/// Nearest-centroid assignment of pooled segments, mapped through the
/// agglomeration; no dedup applied.
UnitSequence assign_units(const FeatureSequence& feats, const Segmentation& seg,
                          const Codebook& codebook);

/// Merge consecutive runs of the same unit id; idempotent.
UnitSequence dedup(const UnitSequence& units);

/// Information rate in bits per second: rate_hz * log2(num_units).
double bitrate(double rate_hz, int num_units);

}  // namespace sylseg

#endif  // SYLSEG_QUANTIZE_HPP
