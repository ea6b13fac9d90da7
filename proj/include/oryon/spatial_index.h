#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "oryon/geometry.h"

namespace oryon {

struct Neighbor {
  std::size_t index = 0;
  double squared_distance = 0.0;
};

// Uniform hash grid for fixed-radius nearest-neighbor queries. Results are
// exact: the nearest point within the radius, ties resolved to the lowest
// point index.
class SpatialHash {
 public:
  SpatialHash(std::span<const Vec3> points, double cell_size);

  std::optional<Neighbor> NearestWithin(const Vec3& query, double radius) const;

 private:
  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  Key KeyOf(const Vec3& p) const;

  std::span<const Vec3> points_;
  double cell_size_;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> cells_;
};

// Static k-d tree for exact unbounded nearest-neighbor queries with
// lowest-index tie breaking. Holds a view of the points; they must outlive it.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 16);

  Neighbor Nearest(const Vec3& query) const;

 private:
  struct Node {
    // Leaf when split_dim < 0; [begin, end) indexes order_.
    int split_dim = -1;
    double split_value = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  std::size_t Build(std::size_t begin, std::size_t end);
  void Search(std::size_t node, const Vec3& query, Neighbor& best) const;

  std::span<const Vec3> points_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace oryon
