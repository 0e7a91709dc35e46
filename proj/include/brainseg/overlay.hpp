#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "brainseg/feature_grid.hpp"
#include "brainseg/image.hpp"
#include "brainseg/tissue.hpp"

namespace brainseg {

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed colours, indexed by tissue code.
inline constexpr std::array<Rgb, kTissueCount> kOverlayPalette = {{
    {0, 0, 0},        // background
    {255, 255, 0},    // skull
    {0, 0, 255},      // csf
    {128, 128, 128},  // gray matter
    {255, 255, 255},  // white matter
}};

/// Interleaved RGB: each pixel is `alpha` of its tissue colour over the
/// grayscale image.
inline std::vector<std::uint8_t> render_overlay(const GrayImage& image, const LabelMap& labels, double alpha = 0.5) {
  require_same_shape(image, labels, "overlay");
  std::vector<std::uint8_t> rgb(image.size() * 3);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const Rgb& c = kOverlayPalette[index_of(labels[i])];
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double v = alpha * c[ch] + (1.0 - alpha) * image[i];
      rgb[3 * i + ch] = static_cast<std::uint8_t>(std::nearbyint(v));
    }
  }
  return rgb;
}

/// One feature channel min-max scaled to 0..255; a flat channel maps to 0.
inline GrayImage feature_channel_image(const FeatureGrid& grid, std::size_t channel) {
  double lo = INFINITY;
  double hi = -INFINITY;
  for (std::size_t i = 0; i < grid.pixel_count(); ++i) {
    lo = std::min(lo, grid.pixel(i)[channel]);
    hi = std::max(hi, grid.pixel(i)[channel]);
  }
  GrayImage out(grid.width(), grid.height());
  if (hi > lo) {
    for (std::size_t i = 0; i < grid.pixel_count(); ++i) {
      out[i] = static_cast<std::uint8_t>(std::nearbyint(255.0 * (grid.pixel(i)[channel] - lo) / (hi - lo)));
    }
  }
  return out;
}

}  // namespace brainseg
