#include "oryon/matchgen.h"

#include <cmath>

#include "oryon/spatial_index.h"

namespace oryon {

GtPair GenerateGtMatches(const SceneView& anchor, const SceneView& query, double nn_radius) {
  if (!(nn_radius > 0.0)) throw InvalidArgumentError("nn_radius must be positive");
  PointCloud cloud_a = Unproject(anchor.depth, anchor.camera, anchor.mask);
  PointCloud cloud_q = Unproject(query.depth, query.camera, query.mask);
  if (cloud_a.empty()) throw EmptyMaskError("anchor mask selects no valid depth");
  if (cloud_q.empty()) throw EmptyMaskError("query mask selects no valid depth");

  GtPair pair;
  pair.relative_pose = RelativePose(anchor.object_pose, query.object_pose);
  SpatialHash index(cloud_q.points, nn_radius);
  for (std::size_t i = 0; i < cloud_a.size(); ++i) {
    Vec3 aligned = pair.relative_pose * cloud_a.points[i];
    auto nn = index.NearestWithin(aligned, nn_radius);
    if (!nn) continue;
    pair.anchor_pixels.push_back(cloud_a.pixels[i]);
    pair.query_pixels.push_back(cloud_q.pixels[nn->index]);
    pair.distances.push_back(std::sqrt(nn->squared_distance));
  }
  return pair;
}

}  // namespace oryon
