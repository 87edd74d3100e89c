#pragma once

#include <cstddef>
#include <vector>

#include "decor/common.hpp"

namespace decor {

// Dense row-major 2-D array. Used both for die grids (T = uint8_t)
// and for image pixels (T = float).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{}) : h_(height), w_(width) {
    if (height <= 0 || width <= 0) throw shape_error("grid dimensions must be positive");
    v_.assign((std::size_t)height * (std::size_t)width, fill);
  }

  int height() const { return h_; }
  int width() const { return w_; }
  bool square() const { return h_ == w_; }
  std::size_t size() const { return v_.size(); }

  T& operator()(int r, int c) { return v_[(std::size_t)r * w_ + c]; }
  const T& operator()(int r, int c) const { return v_[(std::size_t)r * w_ + c]; }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }

  std::vector<T>& raw() { return v_; }
  const std::vector<T>& raw() const { return v_; }

  bool operator==(const Grid&) const = default;

 private:
  int h_ = 0, w_ = 0;
  std::vector<T> v_;
};

}  // namespace decor
