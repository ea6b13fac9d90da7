#include "oryon/matcher.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "oryon/parallel.h"

namespace oryon {

FeatureMap::FeatureMap(int height, int width, int dim)
    : FeatureMap(height, width, dim,
                 std::vector<float>(static_cast<std::size_t>(std::max(height, 0)) *
                                    std::max(width, 0) * std::max(dim, 0))) {}

FeatureMap::FeatureMap(int height, int width, int dim, std::vector<float> values)
    : height_(height), width_(width), dim_(dim), values_(std::move(values)) {
  if (height <= 0 || width <= 0 || dim <= 0) {
    throw InvalidArgumentError("feature map dimensions must be positive");
  }
  if (values_.size() != static_cast<std::size_t>(height) * width * dim) {
    throw DimensionMismatchError("feature map value count does not match H*W*D");
  }
  for (float x : values_) {
    if (!std::isfinite(x)) throw InvalidArgumentError("feature map contains non-finite values");
  }
}

namespace {

template <typename T>
double Distance(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw DimensionMismatchError("feature vectors differ in length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return FeatureDistanceFromDot(dot, na, nb);
}

double SquaredNorm(std::span<const float> a) {
  double n = 0.0;
  for (float x : a) n += static_cast<double>(x) * x;
  return n;
}

}  // namespace

double FeatureDistance(std::span<const double> a, std::span<const double> b) {
  return Distance(a, b);
}

double FeatureDistance(std::span<const float> a, std::span<const float> b) {
  return Distance(a, b);
}

void MatchParams::Validate() const {
  if (!(max_distance >= 0.0 && max_distance <= 1.0)) {
    throw InvalidArgumentError("max_distance must lie in [0, 1]");
  }
  if (max_matches < 1) throw InvalidArgumentError("max_matches must be >= 1");
}

BinaryMask ResampleMask(const BinaryMask& mask, int width, int height) {
  if (mask.empty()) throw InvalidArgumentError("cannot resample an empty mask");
  BinaryMask out(width, height, 0);
  for (int v = 0; v < height; ++v) {
    int sv = std::min(mask.height() - 1,
                      static_cast<int>(std::floor((v + 0.5) * mask.height() / height)));
    for (int u = 0; u < width; ++u) {
      int su = std::min(mask.width() - 1,
                        static_cast<int>(std::floor((u + 0.5) * mask.width() / width)));
      out(u, v) = mask(su, sv) != 0 ? 1 : 0;
    }
  }
  return out;
}

Pixel CellToPixel(Pixel cell, GridSize grid, int image_width, int image_height) {
  int u = static_cast<int>(std::floor((cell.u + 0.5) * image_width / grid.width));
  int v = static_cast<int>(std::floor((cell.v + 0.5) * image_height / grid.height));
  return {std::min(u, image_width - 1), std::min(v, image_height - 1)};
}

namespace {

struct MaskedCells {
  std::vector<Pixel> cells;
  std::vector<double> squared_norms;
};

MaskedCells CollectCells(const FeatureMap& features, const BinaryMask& mask, const char* side) {
  if (mask.width() != features.width() || mask.height() != features.height()) {
    throw DimensionMismatchError(std::string(side) + " mask does not match the feature grid");
  }
  MaskedCells out;
  for (int v = 0; v < mask.height(); ++v) {
    for (int u = 0; u < mask.width(); ++u) {
      if (mask(u, v) == 0) continue;
      out.cells.push_back({u, v});
      out.squared_norms.push_back(SquaredNorm(features.At(v, u)));
    }
  }
  if (out.cells.empty()) throw EmptyMaskError(std::string(side) + " mask selects no cells");
  return out;
}

}  // namespace

MatchSet MatchFeatures(const FeatureMap& anchor, const FeatureMap& query,
                       const BinaryMask& anchor_mask, const BinaryMask& query_mask,
                       const MatchParams& params) {
  params.Validate();
  if (anchor.dim() != query.dim()) {
    throw DimensionMismatchError("anchor and query feature dimensions differ");
  }
  MaskedCells a = CollectCells(anchor, anchor_mask, "anchor");
  MaskedCells q = CollectCells(query, query_mask, "query");

  // Query descriptors transposed to channel-major doubles so the inner loop
  // runs across query cells. Each dot product still accumulates channels in
  // order, matching FeatureDistance exactly.
  const std::size_t nq = q.cells.size();
  const int dim = anchor.dim();
  std::vector<double> query_t(static_cast<std::size_t>(dim) * nq);
  for (std::size_t j = 0; j < nq; ++j) {
    auto fq = query.At(q.cells[j].v, q.cells[j].u);
    for (int k = 0; k < dim; ++k) query_t[k * nq + j] = fq[k];
  }

  std::vector<FeatureMatch> nearest(a.cells.size());
  ParallelFor(a.cells.size(), params.threads, [&](std::size_t i) {
    auto fa = anchor.At(a.cells[i].v, a.cells[i].u);
    constexpr std::size_t kBlock = 512;
    double dots[kBlock];
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t begin = 0; begin < nq; begin += kBlock) {
      std::size_t len = std::min(kBlock, nq - begin);
      std::fill(dots, dots + len, 0.0);
      for (int k = 0; k < dim; ++k) {
        const double ak = fa[k];
        const double* row = query_t.data() + k * nq + begin;
        for (std::size_t j = 0; j < len; ++j) dots[j] += ak * row[j];
      }
      for (std::size_t j = 0; j < len; ++j) {
        double d = FeatureDistanceFromDot(dots[j], a.squared_norms[i], q.squared_norms[begin + j]);
        if (d < best) {
          best = d;
          best_j = begin + j;
        }
      }
    }
    nearest[i] = FeatureMatch{a.cells[i], q.cells[best_j], best};
  });

  // Cells were collected in linear order, so position == linear rank.
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < nearest.size(); ++i) {
    if (nearest[i].distance <= params.max_distance) kept.push_back(i);
  }
  if (kept.size() > params.max_matches) {
    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t x, std::size_t y) {
      return nearest[x].distance < nearest[y].distance;
    });
    kept.resize(params.max_matches);
    std::sort(kept.begin(), kept.end());
  }

  MatchSet out;
  out.anchor_grid = {anchor.width(), anchor.height()};
  out.query_grid = {query.width(), query.height()};
  out.matches.reserve(kept.size());
  for (std::size_t i : kept) out.matches.push_back(nearest[i]);
  return out;
}

MatchSet LiftMatches(const MatchSet& matches, const DepthMap& anchor_depth,
                     const DepthMap& query_depth, const CameraIntrinsics& anchor_camera,
                     const CameraIntrinsics& query_camera) {
  if (anchor_depth.width() != anchor_camera.width() ||
      anchor_depth.height() != anchor_camera.height() ||
      query_depth.width() != query_camera.width() ||
      query_depth.height() != query_camera.height()) {
    throw DimensionMismatchError("depth map does not match camera image size");
  }
  MatchSet out;
  out.anchor_grid = matches.anchor_grid;
  out.query_grid = matches.query_grid;
  for (const auto& m : matches.matches) {
    Pixel pa = CellToPixel(m.anchor_cell, matches.anchor_grid, anchor_depth.width(),
                           anchor_depth.height());
    Pixel pq = CellToPixel(m.query_cell, matches.query_grid, query_depth.width(),
                           query_depth.height());
    double za = anchor_depth(pa.u, pa.v);
    double zq = query_depth(pq.u, pq.v);
    if (!(za > 0.0) || !(zq > 0.0)) continue;
    out.matches.push_back(m);
    out.anchor_pixels.push_back(pa);
    out.query_pixels.push_back(pq);
    out.anchor_points.push_back(UnprojectPixel(pa, za, anchor_camera));
    out.query_points.push_back(UnprojectPixel(pq, zq, query_camera));
  }
  return out;
}

}  // namespace oryon
