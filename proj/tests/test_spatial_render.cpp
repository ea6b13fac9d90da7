#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.h"
#include "oryon/random.h"
#include "oryon/render.h"
#include "oryon/spatial_index.h"

namespace oryon {
namespace {

std::vector<Vec3> RandomCloud(Rng& rng, int n, double scale) {
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    pts.emplace_back(Uniform(rng, -scale, scale), Uniform(rng, -scale, scale),
                     Uniform(rng, -scale, scale));
  }
  return pts;
}

TEST(SpatialHash, MatchesBruteForceWithinRadius) {
  Rng rng(11);
  auto pts = RandomCloud(rng, 2000, 0.05);
  SpatialHash hash(pts, 0.004);
  for (int q = 0; q < 500; ++q) {
    Vec3 query(Uniform(rng, -0.05, 0.05), Uniform(rng, -0.05, 0.05), Uniform(rng, -0.05, 0.05));
    double radius = 0.004;
    std::optional<std::size_t> best;
    double best_d2 = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double d2 = (pts[i] - query).squaredNorm();
      if (d2 <= radius * radius && (!best || d2 < best_d2)) {
        best = i;
        best_d2 = d2;
      }
    }
    auto got = hash.NearestWithin(query, radius);
    ASSERT_EQ(got.has_value(), best.has_value());
    if (best) {
      EXPECT_EQ(got->index, *best);
    }
  }
}

TEST(SpatialHash, TiesGoToLowestIndex) {
  std::vector<Vec3> pts{Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0)};
  SpatialHash hash(pts, 0.5);
  auto got = hash.NearestWithin(Vec3::Zero(), 1.0);
  ASSERT_TRUE(got);
  EXPECT_EQ(got->index, 0u);
  EXPECT_FALSE(hash.NearestWithin(Vec3(5, 5, 5), 1.0));
}

TEST(KdTree, MatchesBruteForce) {
  Rng rng(12);
  auto pts = RandomCloud(rng, 3000, 1.0);
  pts.push_back(pts[17]);  // duplicate: the lower index must win
  KdTree tree(pts, 8);
  for (int q = 0; q < 300; ++q) {
    Vec3 query = q == 0 ? pts[17] : Vec3(Uniform(rng, -1.2, 1.2), Uniform(rng, -1.2, 1.2),
                                         Uniform(rng, -1.2, 1.2));
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double d2 = (pts[i] - query).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    Neighbor got = tree.Nearest(query);
    EXPECT_EQ(got.index, best);
    EXPECT_EQ(got.squared_distance, best_d2);
  }
}

TEST(SplatPoints, NearestDepthWins) {
  CameraIntrinsics cam(100, 100, 4.5, 4.5, 10, 10);
  std::vector<Vec3> pts{Vec3(0, 0, 2.0), Vec3(0, 0, 1.0), Vec3(0, 0, 1.0), Vec3(0, 0, -1.0)};
  SplatRender r = SplatPoints(pts, cam);
  // (0, 0, z) projects to (4.5, 4.5), which rounds to pixel (5, 5).
  EXPECT_EQ(r.depth(5, 5), 1.0);
  EXPECT_EQ(r.point_index(5, 5), 1);
  int filled = 0;
  for (double z : r.depth.data()) filled += z > 0.0;
  EXPECT_EQ(filled, 1);
}

TEST(SplatPoints, AgreesWithOracleDistanceMap) {
  Rng rng(13);
  CameraIntrinsics cam(80, 80, 31.5, 31.5, 64, 64);
  auto pts = RandomCloud(rng, 500, 0.05);
  Pose pose = oracle::RandomPose(rng, 0.5, 0.02);
  SplatRender r = SplatPoints(Transform(pose, pts), cam);
  DepthMap dist = DepthToDistance(r.depth, cam);
  DepthMap expected = oracle::DistanceMap(pts, pose, cam);
  int mismatched = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (std::abs(dist.data()[i] - expected.data()[i]) > 1e-12) ++mismatched;
  }
  EXPECT_EQ(mismatched, 0);
}

TEST(DepthToDistance, KnownPixel) {
  CameraIntrinsics cam(1, 1, 0, 0, 2, 2);
  DepthMap d(2, 2, 0.0);
  d(1, 1) = 2.0;  // ray (1, 1, 1)
  DepthMap r = DepthToDistance(d, cam);
  EXPECT_NEAR(r(1, 1), 2.0 * std::sqrt(3.0), 1e-15);
  EXPECT_EQ(r(0, 0), 0.0);
}

}  // namespace
}  // namespace oryon
