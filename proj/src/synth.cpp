#include "oryon/synth.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oryon/errors.h"
#include "oryon/render.h"
#include "oryon/spatial_index.h"

namespace oryon {

ModelKind ParseModelKind(const std::string& name) {
  if (name == "sphere") return ModelKind::kSphere;
  if (name == "box") return ModelKind::kBox;
  if (name == "cylinder") return ModelKind::kCylinder;
  if (name == "blob" || name == "random-blob") return ModelKind::kBlob;
  throw InvalidArgumentError("unknown model kind '" + name + "'");
}

std::string ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kSphere: return "sphere";
    case ModelKind::kBox: return "box";
    case ModelKind::kCylinder: return "cylinder";
    case ModelKind::kBlob: return "blob";
  }
  return "unknown";
}

std::vector<Pose> SymmetrySpec::Group() const {
  if (cyclic_order < 1) throw InvalidArgumentError("cyclic order must be >= 1");
  std::vector<Mat3> base;
  for (int k = 0; k < cyclic_order; ++k) {
    double angle = 2.0 * std::numbers::pi * k / cyclic_order;
    base.push_back(Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix());
  }
  std::vector<Pose> group;
  for (const Mat3& r : base) group.emplace_back(r, Vec3::Zero());
  if (flip) {
    Mat3 half_turn = Vec3(1.0, -1.0, -1.0).asDiagonal();
    for (const Mat3& r : base) group.emplace_back(Mat3(half_turn * r), Vec3::Zero());
  }
  return group;
}

namespace {

// Evenly spread unit directions.
Vec3 FibonacciDirection(int i, int n) {
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  double z = 1.0 - (2.0 * i + 1.0) / n;
  double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  double phi = golden * i;
  return Vec3(r * std::cos(phi), r * std::sin(phi), z);
}

Vec3 RandomUnit(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(Gaussian(rng), Gaussian(rng), Gaussian(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

std::vector<Vec3> SampleBox(Rng& rng, const Vec3& size, int n) {
  Vec3 h = size / 2.0;
  std::vector<Vec3> pts;
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1}) pts.emplace_back(sx * h.x(), sy * h.y(), sz * h.z());
  double areas[3] = {size.y() * size.z(), size.x() * size.z(), size.x() * size.y()};
  double total = areas[0] + areas[1] + areas[2];
  while (static_cast<int>(pts.size()) < n) {
    double pick = UniformUnit(rng) * total;
    int axis = pick < areas[0] ? 0 : (pick < areas[0] + areas[1] ? 1 : 2);
    Vec3 p(Uniform(rng, -h.x(), h.x()), Uniform(rng, -h.y(), h.y()), Uniform(rng, -h.z(), h.z()));
    p[axis] = UniformUnit(rng) < 0.5 ? -h[axis] : h[axis];
    pts.push_back(p);
  }
  return pts;
}

std::vector<Vec3> SampleCylinder(Rng& rng, double radius, double height, int n) {
  double hh = height / 2.0;
  // Antipodal rim points realize the diameter sqrt(4 r^2 + h^2).
  std::vector<Vec3> pts{Vec3(radius, 0.0, hh), Vec3(-radius, 0.0, -hh),
                        Vec3(-radius, 0.0, hh), Vec3(radius, 0.0, -hh)};
  double side = 2.0 * std::numbers::pi * radius * height;
  double caps = 2.0 * std::numbers::pi * radius * radius;
  while (static_cast<int>(pts.size()) < n) {
    double phi = Uniform(rng, 0.0, 2.0 * std::numbers::pi);
    if (UniformUnit(rng) * (side + caps) < side) {
      pts.emplace_back(radius * std::cos(phi), radius * std::sin(phi), Uniform(rng, -hh, hh));
    } else {
      double r = radius * std::sqrt(UniformUnit(rng));
      pts.emplace_back(r * std::cos(phi), r * std::sin(phi), UniformUnit(rng) < 0.5 ? -hh : hh);
    }
  }
  return pts;
}

std::vector<Vec3> SampleBlob(Rng& rng, double diameter, int n) {
  struct Lobe {
    Vec3 axis;
    double amplitude, frequency, phase;
  };
  std::vector<Lobe> lobes;
  for (int k = 0; k < 4; ++k) {
    lobes.push_back({RandomUnit(rng), Uniform(rng, 0.03, 0.08), Uniform(rng, 1.0, 3.0),
                     Uniform(rng, 0.0, 2.0 * std::numbers::pi)});
  }
  Eigen::Quaterniond spin(Gaussian(rng), Gaussian(rng), Gaussian(rng), Gaussian(rng));
  Mat3 twist = spin.normalized().toRotationMatrix();
  std::vector<Vec3> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec3 d = twist * FibonacciDirection(i, n);
    double scale = 1.0;
    for (const Lobe& l : lobes) scale += l.amplitude * std::sin(l.frequency * d.dot(l.axis) * 3.0 + l.phase);
    pts.push_back(d * (diameter / 2.0) * scale);
  }
  return pts;
}

}  // namespace

ObjectModel MakeModel(const ModelSpec& spec) {
  if (spec.n_points < 2) throw InvalidArgumentError("model needs at least two points");
  if (!(spec.size.minCoeff() > 0.0)) throw InvalidArgumentError("model size must be positive");
  std::vector<Pose> group = spec.symmetry.Group();
  int base_count = static_cast<int>((spec.n_points + group.size() - 1) / group.size());
  base_count = std::max(base_count, 2);
  Rng rng(DeriveSeed(spec.seed, "synth-model"));

  std::vector<Vec3> base;
  switch (spec.kind) {
    case ModelKind::kSphere:
      for (int i = 0; i < base_count; ++i) {
        base.push_back(FibonacciDirection(i, base_count) * (spec.size.x() / 2.0));
      }
      break;
    case ModelKind::kBox:
      base = SampleBox(rng, spec.size, base_count);
      break;
    case ModelKind::kCylinder:
      base = SampleCylinder(rng, spec.size.x() / 2.0, spec.size.z(), base_count);
      break;
    case ModelKind::kBlob:
      base = SampleBlob(rng, spec.size.x(), base_count);
      break;
  }

  std::vector<Vec3> points;
  points.reserve(base.size() * group.size());
  for (const Pose& g : group) {
    for (const Vec3& p : base) points.push_back(g * p);
  }
  return ObjectModel(std::move(points), std::move(group));
}

DepthMap Background::Render(const CameraIntrinsics& camera) const {
  if (sphere_centers.size() != sphere_radii.size()) {
    throw DimensionMismatchError("clutter sphere centers and radii differ in count");
  }
  DepthMap depth(camera.width(), camera.height(), plane_depth > 0.0 ? plane_depth : 0.0);
  for (int v = 0; v < camera.height(); ++v) {
    for (int u = 0; u < camera.width(); ++u) {
      Vec3 ray((u - camera.cx()) / camera.fx(), (v - camera.cy()) / camera.fy(), 1.0);
      double& z = depth(u, v);
      for (std::size_t s = 0; s < sphere_centers.size(); ++s) {
        const Vec3& c = sphere_centers[s];
        double r = sphere_radii[s];
        double a = ray.squaredNorm();
        double b = ray.dot(c);
        double disc = b * b - a * (c.squaredNorm() - r * r);
        if (disc < 0.0) continue;
        double t = (b - std::sqrt(disc)) / a;  // ray z component is 1, so t is depth
        if (t > 0.0 && (z == 0.0 || t < z)) z = t;
      }
    }
  }
  return depth;
}

SynthScene RenderScene(const ObjectModel& model, const Pose& pose, const CameraIntrinsics& camera,
                       const Background& background) {
  SplatRender render = SplatPoints(Transform(pose, model.points()), camera);
  DepthMap depth = background.Render(camera);
  BinaryMask mask(camera.width(), camera.height(), 0);
  Image<std::int32_t> index_map(camera.width(), camera.height(), -1);
  for (int v = 0; v < camera.height(); ++v) {
    for (int u = 0; u < camera.width(); ++u) {
      double z = render.depth(u, v);
      if (!(z > 0.0)) continue;
      double bg = depth(u, v);
      if (bg > 0.0 && !(z < bg)) continue;
      depth(u, v) = z;
      mask(u, v) = 1;
      index_map(u, v) = render.point_index(u, v);
    }
  }
  return SynthScene{SceneView{std::move(depth), std::move(mask), camera, pose},
                    std::move(index_map)};
}

SynthPair MakePair(const ObjectModel& model, const Pose& anchor_pose, const Pose& query_pose,
                   const CameraIntrinsics& anchor_camera, const CameraIntrinsics& query_camera,
                   const Background& anchor_background, const Background& query_background,
                   double radius) {
  SynthPair pair{RenderScene(model, anchor_pose, anchor_camera, anchor_background),
                 RenderScene(model, query_pose, query_camera, query_background),
                 GtPair{}};
  pair.oracle.relative_pose = RelativePose(anchor_pose, query_pose);

  std::vector<Vec3> query_points;
  std::vector<Pixel> query_pixels;
  const auto& qmap = pair.query.index_map;
  for (int v = 0; v < qmap.height(); ++v) {
    for (int u = 0; u < qmap.width(); ++u) {
      if (qmap(u, v) < 0) continue;
      query_points.push_back(model.points()[qmap(u, v)]);
      query_pixels.push_back({u, v});
    }
  }
  if (query_points.empty()) return pair;
  SpatialHash hash(query_points, radius);

  const auto& amap = pair.anchor.index_map;
  for (int v = 0; v < amap.height(); ++v) {
    for (int u = 0; u < amap.width(); ++u) {
      if (amap(u, v) < 0) continue;
      auto hit = hash.NearestWithin(model.points()[amap(u, v)], radius);
      if (!hit) continue;
      pair.oracle.anchor_pixels.push_back({u, v});
      pair.oracle.query_pixels.push_back(query_pixels[hit->index]);
      pair.oracle.distances.push_back(std::sqrt(hit->squared_distance));
    }
  }
  return pair;
}

namespace {

void FillRandomUnit(Rng& rng, std::span<float> out) {
  double norm2 = 0.0;
  std::vector<double> v(out.size());
  do {
    norm2 = 0.0;
    for (double& x : v) {
      x = Gaussian(rng);
      norm2 += x * x;
    }
  } while (norm2 < 1e-12);
  double inv = 1.0 / std::sqrt(norm2);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * inv);
}

void AddNoise(Rng& rng, std::span<float> out, double sigma) {
  if (sigma <= 0.0) return;
  for (float& x : out) x = static_cast<float>(x + sigma * Gaussian(rng));
}

std::uint64_t CellId(int u, int v, int width) {
  return static_cast<std::uint64_t>(v) * static_cast<std::uint64_t>(width) + u;
}

}  // namespace

DescriptorFields MakeDescriptorFields(const SynthPair& pair, const DescriptorParams& params) {
  if (params.dim < 1) throw InvalidArgumentError("descriptor dimension must be positive");
  if (!(params.noise >= 0.0)) throw InvalidArgumentError("descriptor noise must be >= 0");
  if (!(params.outlier_fraction >= 0.0 && params.outlier_fraction <= 1.0)) {
    throw InvalidArgumentError("outlier fraction must lie in [0, 1]");
  }
  const std::uint64_t point_stream = DeriveSeed(params.seed, "descriptor-point");
  auto point_descriptor = [&](std::int32_t index, std::span<float> out) {
    Rng rng(DeriveSeed(point_stream, static_cast<std::uint64_t>(index)));
    FillRandomUnit(rng, out);
  };

  auto build = [&](const SynthScene& scene, std::string_view side,
                   const Image<std::int32_t>& source_index) {
    const auto& map = scene.index_map;
    FeatureMap f(map.height(), map.width(), params.dim);
    const std::uint64_t bg_stream = DeriveSeed(params.seed, std::string("background-") += side);
    const std::uint64_t noise_stream = DeriveSeed(params.seed, std::string("noise-") += side);
    const std::uint64_t outlier_stream = DeriveSeed(params.seed, std::string("outlier-") += side);
    for (int v = 0; v < map.height(); ++v) {
      for (int u = 0; u < map.width(); ++u) {
        std::uint64_t id = CellId(u, v, map.width());
        std::span<float> cell = f.At(v, u);
        if (map(u, v) < 0) {
          Rng rng(DeriveSeed(bg_stream, id));
          FillRandomUnit(rng, cell);
          continue;
        }
        point_descriptor(source_index(u, v), cell);
        if (side == "anchor" && params.outlier_fraction > 0.0) {
          Rng rng(DeriveSeed(outlier_stream, id));
          if (UniformUnit(rng) < params.outlier_fraction) FillRandomUnit(rng, cell);
        }
        Rng rng(DeriveSeed(noise_stream, id));
        AddNoise(rng, cell, params.noise);
      }
    }
    return f;
  };

  // Anchor pixels inherit the model index of their oracle partner so both
  // sides of a correspondence hash to the same vector.
  Image<std::int32_t> anchor_source = pair.anchor.index_map;
  for (std::size_t k = 0; k < pair.oracle.size(); ++k) {
    Pixel a = pair.oracle.anchor_pixels[k];
    Pixel q = pair.oracle.query_pixels[k];
    anchor_source(a.u, a.v) = pair.query.index_map(q.u, q.v);
  }
  return DescriptorFields{build(pair.anchor, "anchor", anchor_source),
                          build(pair.query, "query", pair.query.index_map)};
}

CameraIntrinsics DefaultSynthCamera() {
  return CameraIntrinsics(320.0, 320.0, 95.5, 95.5, 192, 192);
}

Pose RandomObjectPose(Rng& rng, double depth, double lateral) {
  Eigen::Quaterniond q(Gaussian(rng), Gaussian(rng), Gaussian(rng), Gaussian(rng));
  Mat3 r = q.normalized().toRotationMatrix();
  Vec3 t(Uniform(rng, -lateral, lateral), Uniform(rng, -lateral, lateral), depth);
  return Pose::FromApproximate(r, t);
}

Pose PerturbPose(Rng& rng, const Pose& pose, double max_angle, double max_shift) {
  Vec3 axis = RandomUnit(rng);
  double angle = Uniform(rng, 0.0, max_angle);
  Mat3 delta = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  Vec3 shift(Uniform(rng, -max_shift, max_shift), Uniform(rng, -max_shift, max_shift),
             Uniform(rng, -max_shift, max_shift));
  return Pose::FromApproximate(delta * pose.rotation(), pose.translation() + shift);
}

}  // namespace oryon
