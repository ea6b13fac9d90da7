#include "oryon/spatial_index.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace oryon {

std::size_t SpatialHash::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9e3779b97f4a7c15ULL;
  h ^= static_cast<std::uint64_t>(k.y) * 0xc2b2ae3d27d4eb4fULL + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(k.z) * 0x165667b19e3779f9ULL + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

SpatialHash::Key SpatialHash::KeyOf(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size_))};
}

SpatialHash::SpatialHash(std::span<const Vec3> points, double cell_size)
    : points_(points), cell_size_(cell_size) {
  if (!(cell_size > 0.0)) throw InvalidArgumentError("cell size must be positive");
  // Indices are appended in increasing order, so every bucket stays sorted.
  for (std::size_t i = 0; i < points.size(); ++i) cells_[KeyOf(points[i])].push_back(i);
}

std::optional<Neighbor> SpatialHash::NearestWithin(const Vec3& query, double radius) const {
  const double radius_sq = radius * radius;
  Key lo = KeyOf(query - Vec3::Constant(radius));
  Key hi = KeyOf(query + Vec3::Constant(radius));
  std::optional<Neighbor> best;
  for (std::int64_t x = lo.x; x <= hi.x; ++x) {
    for (std::int64_t y = lo.y; y <= hi.y; ++y) {
      for (std::int64_t z = lo.z; z <= hi.z; ++z) {
        auto it = cells_.find({x, y, z});
        if (it == cells_.end()) continue;
        for (std::size_t idx : it->second) {
          double d2 = (points_[idx] - query).squaredNorm();
          if (d2 > radius_sq) continue;
          if (!best || d2 < best->squared_distance ||
              (d2 == best->squared_distance && idx < best->index)) {
            best = Neighbor{idx, d2};
          }
        }
      }
    }
  }
  return best;
}

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  if (points.empty()) throw InvalidArgumentError("k-d tree needs at least one point");
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points.size() / leaf_size_ + 2);
  Build(0, points.size());
}

std::size_t KdTree::Build(std::size_t begin, std::size_t end) {
  std::size_t id = nodes_.size();
  nodes_.push_back(Node{-1, 0.0, begin, end, 0, 0});
  if (end - begin <= leaf_size_) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int dim = 0;
  (hi - lo).maxCoeff(&dim);
  if (hi[dim] == lo[dim]) return id;  // all points coincide

  std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::size_t a, std::size_t b) { return points_[a][dim] < points_[b][dim]; });
  double split = points_[order_[mid]][dim];
  std::size_t left = Build(begin, mid);
  std::size_t right = Build(mid, end);
  nodes_[id].split_dim = dim;
  nodes_[id].split_value = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::Search(std::size_t node_id, const Vec3& query, Neighbor& best) const {
  const Node& node = nodes_[node_id];
  if (node.split_dim < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      std::size_t idx = order_[i];
      double d2 = (points_[idx] - query).squaredNorm();
      if (d2 < best.squared_distance ||
          (d2 == best.squared_distance && idx < best.index)) {
        best = Neighbor{idx, d2};
      }
    }
    return;
  }
  // Left holds values <= split, right holds values >= split.
  double diff = query[node.split_dim] - node.split_value;
  std::size_t near = diff <= 0.0 ? node.left : node.right;
  std::size_t far = diff <= 0.0 ? node.right : node.left;
  Search(near, query, best);
  // Equal distances must still be visited so the lowest index wins.
  if (diff * diff <= best.squared_distance) Search(far, query, best);
}

Neighbor KdTree::Nearest(const Vec3& query) const {
  Neighbor best{std::numeric_limits<std::size_t>::max(),
                std::numeric_limits<double>::infinity()};
  Search(0, query, best);
  return best;
}

}  // namespace oryon
