#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "oryon/errors.h"
#include "oryon/geometry.h"
#include "oryon/image.h"

namespace oryon {

inline constexpr int kDefaultFeatureResolution = 192;
inline constexpr int kDefaultFeatureDim = 32;

// H x W x D descriptor grid stored row-major, channels innermost.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(int height, int width, int dim);
  FeatureMap(int height, int width, int dim, std::vector<float> values);

  int height() const { return height_; }
  int width() const { return width_; }
  int dim() const { return dim_; }

  std::span<const float> At(int row, int col) const {
    return {values_.data() + Offset(row, col), static_cast<std::size_t>(dim_)};
  }
  std::span<float> At(int row, int col) {
    return {values_.data() + Offset(row, col), static_cast<std::size_t>(dim_)};
  }
  std::span<const float> values() const { return values_; }

  bool operator==(const FeatureMap&) const = default;

 private:
  std::size_t Offset(int row, int col) const {
    return (static_cast<std::size_t>(row) * width_ + col) * dim_;
  }

  int height_ = 0;
  int width_ = 0;
  int dim_ = 0;
  std::vector<float> values_;
};

// Inverted, normalized cosine similarity (1 - cos) / 2, in [0, 1].
// Throws ZeroVectorError when either norm is below 1e-12.
double FeatureDistance(std::span<const double> a, std::span<const double> b);
double FeatureDistance(std::span<const float> a, std::span<const float> b);

// Same formula from precomputed dot product and squared norms. Used by the
// batched paths so they agree bit-for-bit with FeatureDistance.
inline double FeatureDistanceFromDot(double dot, double squared_norm_a, double squared_norm_b) {
  constexpr double kMinSquaredNorm = 1e-24;
  if (squared_norm_a < kMinSquaredNorm || squared_norm_b < kMinSquaredNorm) {
    throw ZeroVectorError("feature vector norm below 1e-12");
  }
  double cosine = std::clamp(dot / std::sqrt(squared_norm_a * squared_norm_b), -1.0, 1.0);
  return (1.0 - cosine) / 2.0;
}

struct MatchParams {
  double max_distance = 0.25;  // mu_t
  std::size_t max_matches = 500;  // C
  int threads = 1;

  void Validate() const;
};

struct GridSize {
  int width = 0;
  int height = 0;
  bool operator==(const GridSize&) const = default;
};

struct FeatureMatch {
  Pixel anchor_cell;  // (u, v) = (col, row) on the feature grid
  Pixel query_cell;
  double distance = 0.0;
};

struct MatchSet {
  GridSize anchor_grid;
  GridSize query_grid;
  std::vector<FeatureMatch> matches;
  // Filled by LiftMatches, aligned index-wise with `matches`.
  std::vector<Pixel> anchor_pixels;
  std::vector<Pixel> query_pixels;
  std::vector<Vec3> anchor_points;
  std::vector<Vec3> query_points;

  std::size_t size() const { return matches.size(); }
  bool lifted() const { return anchor_points.size() == matches.size() && !matches.empty(); }
};

// Nearest-neighbor mask resampling: output cell (u, v) reads the source pixel
// at floor((u + 0.5) * src_width / width).
BinaryMask ResampleMask(const BinaryMask& mask, int width, int height);

// Feature-grid cell center mapped onto the image pixel grid.
Pixel CellToPixel(Pixel cell, GridSize grid, int image_width, int image_height);

// For each masked anchor cell, finds the nearest masked query cell in feature
// space (ties -> lowest linear index), drops pairs above max_distance and keeps
// the max_matches lowest-distance pairs. Output is ordered by anchor cell.
// Masks must already have the feature-grid size.
MatchSet MatchFeatures(const FeatureMap& anchor, const FeatureMap& query,
                       const BinaryMask& anchor_mask, const BinaryMask& query_mask,
                       const MatchParams& params = {});

// Back-projects both sides of each match; pairs whose pixel has no valid depth
// on either side are dropped.
MatchSet LiftMatches(const MatchSet& matches, const DepthMap& anchor_depth,
                     const DepthMap& query_depth, const CameraIntrinsics& anchor_camera,
                     const CameraIntrinsics& query_camera);

}  // namespace oryon
