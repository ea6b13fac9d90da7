#include "oryon/render.h"

#include <cmath>

namespace oryon {

SplatRender SplatPoints(std::span<const Vec3> camera_points, const CameraIntrinsics& camera) {
  SplatRender out{DepthMap(camera.width(), camera.height(), 0.0),
                  Image<std::int32_t>(camera.width(), camera.height(), -1)};
  for (std::size_t i = 0; i < camera_points.size(); ++i) {
    const Vec3& p = camera_points[i];
    auto uv = ProjectPoint(p, camera);
    if (!uv) continue;
    int u = static_cast<int>(std::floor(uv->x() + 0.5));
    int v = static_cast<int>(std::floor(uv->y() + 0.5));
    if (!out.depth.Contains(u, v)) continue;
    double& z = out.depth(u, v);
    if (z == 0.0 || p.z() < z) {
      z = p.z();
      out.point_index(u, v) = static_cast<std::int32_t>(i);
    }
  }
  return out;
}

DepthMap DepthToDistance(const DepthMap& depth, const CameraIntrinsics& camera) {
  DepthMap out(depth.width(), depth.height(), 0.0);
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      double z = depth(u, v);
      if (z > 0.0) out(u, v) = UnprojectPixel({u, v}, z, camera).norm();
    }
  }
  return out;
}

}  // namespace oryon
