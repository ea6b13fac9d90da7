#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oryon/errors.h"

namespace oryon {

// Dense row-major 2D grid addressed as (u, v) = (column, row).
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw InvalidArgumentError("image dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  bool Contains(int u, int v) const {
    return u >= 0 && v >= 0 && u < width_ && v < height_;
  }
  std::size_t Index(int u, int v) const {
    return static_cast<std::size_t>(v) * width_ + u;
  }

  T& operator()(int u, int v) { return data_[Index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[Index(u, v)]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  template <typename U>
  bool SameShape(const Image<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Depth in meters; 0 marks an invalid pixel.
using DepthMap = Image<double>;
// Values are 0 or 1.
using BinaryMask = Image<std::uint8_t>;

template <typename A, typename B>
void RequireSameShape(const Image<A>& a, const Image<B>& b, const std::string& what) {
  if (!a.SameShape(b)) {
    throw DimensionMismatchError(what + ": " + std::to_string(a.width()) + "x" +
                                 std::to_string(a.height()) + " vs " +
                                 std::to_string(b.width()) + "x" +
                                 std::to_string(b.height()));
  }
}

inline std::size_t CountSet(const BinaryMask& mask) {
  std::size_t n = 0;
  for (auto value : mask.data()) n += value != 0;
  return n;
}

}  // namespace oryon
