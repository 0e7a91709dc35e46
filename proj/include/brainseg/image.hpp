#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "brainseg/error.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg {

/// Row-major 2-D grid. Width and height are at least 1 and the buffer always
/// holds exactly width * height cells.
template <typename T>
class Grid {
 public:
  Grid() = default;

  Grid(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), cells_(width * height, fill) {
    check_shape();
  }

  Grid(std::size_t width, std::size_t height, std::vector<T> cells)
      : width_(width), height_(height), cells_(std::move(cells)) {
    check_shape();
    if (cells_.size() != width_ * height_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "grid buffer has " + std::to_string(cells_.size()) +
                      " cells, expected " + std::to_string(width_ * height_));
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return cells_.size(); }
  bool empty() const noexcept { return cells_.empty(); }

  T& at(std::size_t x, std::size_t y) { return cells_[y * width_ + x]; }
  const T& at(std::size_t x, std::size_t y) const { return cells_[y * width_ + x]; }

  T& operator[](std::size_t i) { return cells_[i]; }
  const T& operator[](std::size_t i) const { return cells_[i]; }

  std::span<T> cells() noexcept { return cells_; }
  std::span<const T> cells() const noexcept { return cells_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  void check_shape() const {
    if (width_ == 0 || height_ == 0) {
      throw Error(ErrorCode::InvalidConfig, "grid dimensions must be >= 1");
    }
  }

  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> cells_;
};

/// 8-bit grayscale intensities.
using GrayImage = Grid<std::uint8_t>;

/// Per-pixel tissue labels.
using LabelMap = Grid<Tissue>;

inline void require_same_shape(const auto& a, const auto& b, const std::string& what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorCode::DimensionMismatch,
                what + ": " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " +
                    std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

/// Dense row-major matrix of doubles with a runtime column count.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : cols_(cols), values_(std::move(values)) {
    if (cols_ == 0 || values_.size() != rows * cols_) {
      throw Error(ErrorCode::DimensionMismatch, "feature matrix buffer size");
    }
  }

  std::size_t rows() const noexcept { return cols_ == 0 ? 0 : values_.size() / cols_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  void append(std::span<const double> row) {
    if (row.size() != cols_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "row width " + std::to_string(row.size()) + " != " +
                      std::to_string(cols_));
    }
    values_.insert(values_.end(), row.begin(), row.end());
  }

  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace brainseg
