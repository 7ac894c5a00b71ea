#pragma once

#include <cstdint>
#include <vector>

namespace egohand {

// Minimal row-major image container.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(size_t(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  T& at(int x, int y) { return data_[std::size_t(y) * width_ + x]; }
  const T& at(int x, int y) const { return data_[std::size_t(y) * width_ + x]; }

  bool contains(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ && data_ == o.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Mask = Image<std::uint8_t>;
using DepthImage = Image<double>;

}  // namespace egohand
