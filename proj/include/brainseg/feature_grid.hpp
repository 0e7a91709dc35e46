#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "brainseg/error.hpp"
#include "brainseg/image.hpp"

namespace brainseg {

/// Feature width used by every stage after extraction.
inline constexpr std::size_t kFeatureDim = 9;

inline void require_feature_dim(std::size_t dim, const char* where) {
  if (dim != kFeatureDim) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(where) + ": feature width " + std::to_string(dim) +
                    ", expected " + std::to_string(kFeatureDim));
  }
}

/// Per-pixel feature vectors, row-major over pixels.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(std::size_t width, std::size_t height, std::size_t dim = kFeatureDim)
      : width_(width), height_(height), dim_(dim), values_(width * height * dim, 0.0) {
    require_feature_dim(dim, "FeatureGrid");
    if (width == 0 || height == 0) {
      throw Error(ErrorCode::InvalidConfig, "feature grid dimensions must be >= 1");
    }
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t pixel_count() const noexcept { return width_ * height_; }

  std::span<const double> pixel(std::size_t index) const {
    return {values_.data() + index * dim_, dim_};
  }
  std::span<double> pixel(std::size_t index) { return {values_.data() + index * dim_, dim_}; }
  std::span<const double> pixel(std::size_t x, std::size_t y) const { return pixel(y * width_ + x); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t dim_ = kFeatureDim;
  std::vector<double> values_;
};

}  // namespace brainseg
