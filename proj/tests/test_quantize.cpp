#include <doctest.h>

#include "sylseg/quantize.hpp"
#include "testutil.hpp"

using namespace sylseg;

namespace {

Matrix vec1d(std::initializer_list<double> values) {
  Matrix m(static_cast<Index>(values.size()), 1);
  int r = 0;
  for (double v : values) m(r++, 0) = v;
  return m;
}

std::vector<int> ids(const UnitSequence& units) {
  std::vector<int> out;
  for (const auto& span : units.units()) out.push_back(span.unit_id);
  return out;
}

}  // namespace

TEST_SUITE("quantize") {

TEST_CASE("pool_segments: hand means") {
  FeatureSequence feats(vec1d({0, 2, 10}), 50.0);
  const Matrix pooled = pool_segments(feats, Segmentation({1, 3, 4}, 3));
  REQUIRE(pooled.rows() == 2);
  CHECK(pooled(0, 0) == doctest::Approx(1.0));
  CHECK(pooled(1, 0) == doctest::Approx(10.0));

  FeatureSequence constant(Matrix::Constant(6, 2, 3.5), 50.0);
  const Matrix cp = pool_segments(constant, Segmentation({1, 4, 7}, 6));
  CHECK((cp.array() == 3.5).all());
}

TEST_CASE("pool_segments: matches naive per-group means") {
  std::mt19937_64 rng(3);
  const Matrix x = testutil::random_matrix(rng, 12, 5);
  FeatureSequence feats(x, 50.0);
  Segmentation seg({1, 4, 5, 9, 13}, 12);
  const Matrix pooled = pool_segments(feats, seg);
  for (int i = 0; i < seg.num_groups(); ++i) {
    auto [lo, hi] = seg.group(i);
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(5);
    for (int t = lo; t < hi; ++t) mean += x.row(t - 1);
    mean /= (hi - lo);
    CHECK((pooled.row(i) - mean).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("kmeans: two clear clusters") {
  const Matrix points = vec1d({0, 1, 10, 11});
  const auto res = kmeans_fit(points, 2, 42);
  std::vector<double> centers{res.centroids(0, 0), res.centroids(1, 0)};
  std::sort(centers.begin(), centers.end());
  CHECK(centers[0] == doctest::Approx(0.5));
  CHECK(centers[1] == doctest::Approx(10.5));
  CHECK(res.inertia == doctest::Approx(1.0));
}

TEST_CASE("kmeans: K equals N gives zero inertia") {
  std::mt19937_64 rng(11);
  const Matrix points = testutil::random_matrix(rng, 6, 3);
  const auto res = kmeans_fit(points, 6, 1);
  CHECK(res.inertia == doctest::Approx(0.0));
  CHECK_THROWS_AS(kmeans_fit(points, 7, 1), ValidationError);
}

TEST_CASE("kmeans: inertia trace is nonincreasing and seed-deterministic") {
  std::mt19937_64 rng(2718);
  const Matrix points = testutil::random_matrix(rng, 200, 4);
  const auto a = kmeans_fit(points, 8, 123);
  for (std::size_t i = 1; i < a.inertia_trace.size(); ++i) {
    CHECK(a.inertia_trace[i] <= a.inertia_trace[i - 1] * (1.0 + 1e-12) + 1e-12);
  }
  const auto b = kmeans_fit(points, 8, 123);
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignments == b.assignments);
  // Converged: the final assignment is a fixed point of one more sweep.
  for (Index i = 0; i < points.rows(); ++i) {
    Index best = 0;
    (a.centroids.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
    CHECK(static_cast<int>(best) == a.assignments[i]);
  }
}

TEST_CASE("agglomerate: hand merge and identity") {
  const Matrix c = vec1d({0, 1, 100});
  const auto res = agglomerate(c, {1, 1, 1}, 2);
  CHECK(res.map == std::vector<int>{0, 0, 1});
  REQUIRE(res.merge_distances.size() == 1);
  CHECK(res.merge_distances[0] == doctest::Approx(1.0));

  const auto identity = agglomerate(c, {1, 1, 1}, 3);
  CHECK(identity.map == std::vector<int>{0, 1, 2});
  CHECK(identity.merge_distances.empty());

  CHECK_THROWS_AS(agglomerate(c, {1, 1, 1}, 0), ValidationError);
  CHECK_THROWS_AS(agglomerate(c, {1, 1}, 2), ValidationError);
}

TEST_CASE("agglomerate: merged centroid is the weight-weighted mean") {
  // 0 (weight 3) and 1 (weight 1) merge at distance 1 into 0.25, so the
  // second merge distance to the point at 2.1 is 1.85, not the 1.6 an
  // unweighted mean would give.
  const Matrix c = vec1d({0, 1, 2.1});
  const auto res = agglomerate(c, {3, 1, 1}, 1);
  REQUIRE(res.merge_distances.size() == 2);
  CHECK(res.merge_distances[0] == doctest::Approx(1.0));
  CHECK(res.merge_distances[1] == doctest::Approx(1.85));
  CHECK(res.map == std::vector<int>{0, 0, 0});
}

TEST_CASE("agglomerate: map is always surjective") {
  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 3 + static_cast<int>(rng() % 10);
    const int u = 1 + static_cast<int>(rng() % k);
    const Matrix c = testutil::random_matrix(rng, k, 3);
    std::vector<double> w(k);
    for (double& x : w) x = 1.0 + 5.0 * testutil::uniform(rng);
    const auto res = agglomerate(c, w, u);
    std::vector<bool> seen(u, false);
    for (int m : res.map) {
      REQUIRE(m >= 0);
      REQUIRE(m < u);
      seen[m] = true;
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
  }
}

TEST_CASE("agglomerate: matches a brute-force nearest-pair reference") {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 4 + static_cast<int>(rng() % 8);
    const int u = 1 + static_cast<int>(rng() % (k - 1));
    const Matrix c0 = testutil::random_matrix(rng, k, 2);
    std::vector<double> w0(k, 1.0);

    // Reference: quadratic scan over active pairs, same tie rule.
    Matrix centers = c0;
    std::vector<double> w = w0;
    std::vector<int> owner(k);
    std::iota(owner.begin(), owner.end(), 0);
    std::vector<bool> active(k, true);
    for (int remaining = k; remaining > u; --remaining) {
      double best_d = std::numeric_limits<double>::infinity();
      int bi = -1, bj = -1;
      for (int i = 0; i < k; ++i) {
        if (!active[i]) continue;
        for (int j = i + 1; j < k; ++j) {
          if (!active[j]) continue;
          const double d = (centers.row(i) - centers.row(j)).norm();
          if (d < best_d) {
            best_d = d;
            bi = i;
            bj = j;
          }
        }
      }
      centers.row(bi) = (w[bi] * centers.row(bi) + w[bj] * centers.row(bj)) / (w[bi] + w[bj]);
      w[bi] += w[bj];
      active[bj] = false;
      for (int i = 0; i < k; ++i) {
        if (owner[i] == bj) owner[i] = bi;
      }
    }
    std::vector<int> expected(k);
    std::vector<int> relabel(k, -1);
    int next = 0;
    for (int i = 0; i < k; ++i) {
      if (active[i]) relabel[i] = next++;
    }
    for (int i = 0; i < k; ++i) expected[i] = relabel[owner[i]];

    CHECK(agglomerate(c0, w0, u).map == expected);
  }
}

TEST_CASE("assign_units: nearest centroid through the map") {
  Codebook cb;
  cb.centroids = vec1d({0.5, 10.5});
  cb.agglomeration_map = {0, 1};
  cb.num_units = 2;
  FeatureSequence feats(vec1d({0.4, 0.4, 10.6, 10.6}), 50.0);
  const auto units = assign_units(feats, Segmentation({1, 3, 5}, 4), cb);
  CHECK(ids(units) == std::vector<int>{0, 1});
  CHECK(units.units()[0].start_frame == 1);
  CHECK(units.units()[0].end_frame == 3);

  Codebook wrong = cb;
  wrong.centroids = Matrix::Zero(2, 3);
  CHECK_THROWS_AS(assign_units(feats, Segmentation({1, 3, 5}, 4), wrong), ValidationError);
}

TEST_CASE("assign_units: matches a naive scan on random instances") {
  std::mt19937_64 rng(808);
  const Matrix x = testutil::random_matrix(rng, 20, 3);
  FeatureSequence feats(x, 50.0);
  Segmentation seg({1, 5, 9, 14, 21}, 20);
  Codebook cb;
  cb.centroids = testutil::random_matrix(rng, 6, 3);
  cb.agglomeration_map = {0, 1, 2, 0, 1, 2};
  cb.num_units = 3;
  const auto units = assign_units(feats, seg, cb);
  const Matrix pooled = pool_segments(feats, seg);
  for (int i = 0; i < seg.num_groups(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 6; ++c) {
      const double d = (pooled.row(i) - cb.centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    CHECK(units.units()[i].unit_id == cb.agglomeration_map[best]);
  }
}

TEST_CASE("dedup: run merging, idempotence, endpoints") {
  std::vector<UnitSpan> spans;
  int start = 1;
  for (int id : {5, 5, 3, 3, 3, 5}) {
    spans.push_back({id, start, start + 2});
    start += 2;
  }
  const UnitSequence units(spans, 50.0);
  const auto d = dedup(units);
  CHECK(ids(d) == std::vector<int>{5, 3, 5});
  CHECK(d.units().front().start_frame == 1);
  CHECK(d.units()[0].end_frame == 5);
  CHECK(d.units().back().end_frame == 13);

  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<UnitSpan> s;
    int pos = 1;
    const int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      const int len = 1 + static_cast<int>(rng() % 3);
      s.push_back({static_cast<int>(rng() % 3), pos, pos + len});
      pos += len;
    }
    const UnitSequence raw(s, 50.0);
    const auto once = dedup(raw);
    const auto twice = dedup(once);
    CHECK(ids(once) == ids(twice));
    CHECK(once.size() <= raw.size());
    CHECK(once.units().front().unit_id == raw.units().front().unit_id);
    CHECK(once.units().back().unit_id == raw.units().back().unit_id);
    // No two consecutive entries share an id after dedup.
    for (std::size_t i = 1; i < once.size(); ++i) {
      CHECK(once.units()[i].unit_id != once.units()[i - 1].unit_id);
    }
  }
}

TEST_CASE("bitrate: closed-form values") {
  CHECK(bitrate(5.0, 4096) == 60.0);
  CHECK(bitrate(5.0, 16384) == 70.0);
  CHECK(bitrate(19.5, 500) == doctest::Approx(174.83).epsilon(1e-4));
  CHECK(bitrate(3.7, 2) == doctest::Approx(3.7));
  CHECK_THROWS_AS(bitrate(0.0, 4), ValidationError);
  CHECK_THROWS_AS(bitrate(5.0, 1), ValidationError);

  // Strictly increasing in both arguments.
  CHECK(bitrate(5.1, 4096) > bitrate(5.0, 4096));
  CHECK(bitrate(5.0, 4097) > bitrate(5.0, 4096));
}

TEST_CASE("codebook validation") {
  Codebook cb;
  cb.centroids = vec1d({0, 1, 2});
  cb.agglomeration_map = {0, 1, 0};
  cb.num_units = 2;
  CHECK_NOTHROW(cb.validate());
  cb.agglomeration_map = {0, 0, 0};  // unit 1 never used
  CHECK_THROWS_AS(cb.validate(), ValidationError);
  cb.agglomeration_map = {0, 1};
  CHECK_THROWS_AS(cb.validate(), ValidationError);
}

}  // TEST_SUITE
