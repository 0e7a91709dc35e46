#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "brainseg/dataset.hpp"
#include "brainseg/error.hpp"
#include "brainseg/feature_grid.hpp"
#include "brainseg/image.hpp"

namespace brainseg {

/// Parameters of the 3x3 texture bank. Envelope width defaults to 0.56 / f
/// (about one octave of bandwidth) and the radius to ceil(3 sigma), per filter.
struct GaborConfig {
  std::vector<double> frequencies = {0.1, 0.2, 0.4};
  std::vector<double> orientations = {0.0, std::numbers::pi / 3.0, 2.0 * std::numbers::pi / 3.0};
  std::optional<double> sigma_envelope;
  std::optional<int> kernel_radius;
  double gamma_aspect = 0.5;

  double sigma_for(double frequency) const {
    return sigma_envelope ? *sigma_envelope : 0.56 / frequency;
  }

  int radius_for(double frequency) const {
    const int minimum = static_cast<int>(std::ceil(3.0 * sigma_for(frequency)));
    return kernel_radius ? *kernel_radius : minimum;
  }

  void validate() const {
    if (frequencies.size() * orientations.size() != kFeatureDim) {
      throw Error(ErrorCode::InvalidConfig,
                  "frequencies x orientations must give " + std::to_string(kFeatureDim) + " filters");
    }
    if (!(gamma_aspect > 0.0) || !std::isfinite(gamma_aspect)) {
      throw Error(ErrorCode::InvalidConfig, "gamma_aspect must be > 0");
    }
    for (double theta : orientations) {
      if (!std::isfinite(theta)) throw Error(ErrorCode::InvalidConfig, "orientation not finite");
    }
    for (double f : frequencies) {
      if (!(f > 0.0 && f <= 0.5)) throw Error(ErrorCode::InvalidConfig, "frequency outside (0, 0.5]");
      const double sigma = sigma_for(f);
      if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw Error(ErrorCode::InvalidConfig, "sigma_envelope must be > 0");
      }
      if (radius_for(f) < static_cast<int>(std::ceil(3.0 * sigma))) {
        throw Error(ErrorCode::InvalidConfig, "kernel_radius must be >= ceil(3 sigma)");
      }
    }
  }
};

/// Complex Gabor kernel sampled on [-r, r]^2. Coefficients are stored
/// row-major with row index y + r and column index x + r.
struct GaborFilter {
  double frequency = 0.0;
  double orientation = 0.0;
  double sigma = 0.0;
  double gamma = 0.0;
  int radius = 0;
  std::vector<double> real;
  std::vector<double> imag;

  std::size_t side() const noexcept { return static_cast<std::size_t>(2 * radius + 1); }
  double real_at(int x, int y) const { return real[index(x, y)]; }
  double imag_at(int x, int y) const { return imag[index(x, y)]; }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y + radius) * side() + static_cast<std::size_t>(x + radius);
  }
};

struct FilterBank {
  std::vector<GaborFilter> filters;
  std::size_t size() const noexcept { return filters.size(); }
};

namespace detail {

inline void scale_to_unit_norm(std::vector<double>& kernel) {
  double norm2 = 0.0;
  for (double c : kernel) norm2 += c * c;
  const double norm = std::sqrt(norm2);
  // sin(pi x) on the integer grid is identically zero at f = 0.5; what is
  // left is rounding residue, so keep that kernel at exactly zero.
  if (norm < 1e-9) {
    std::fill(kernel.begin(), kernel.end(), 0.0);
    return;
  }
  for (double& c : kernel) c /= norm;
}

}  // namespace detail

/// g(x,y) = exp(-(x'^2 + gamma^2 y'^2) / (2 sigma^2)) * [cos, sin](2 pi f x'),
/// x' = x cos(theta) + y sin(theta), y' = -x sin(theta) + y cos(theta).
/// The real part is made zero-mean, then both parts are scaled to unit L2 norm.
inline GaborFilter make_gabor_filter(double frequency, double orientation, double sigma,
                                     double gamma, int radius) {
  if (radius < 0) throw Error(ErrorCode::InvalidConfig, "kernel radius must be >= 0");
  GaborFilter g{frequency, orientation, sigma, gamma, radius, {}, {}};
  const std::size_t n = g.side();
  g.real.resize(n * n);
  g.imag.resize(n * n);
  const double c = std::cos(orientation);
  const double s = std::sin(orientation);
  const double two_sigma2 = 2.0 * sigma * sigma;
  const double omega = 2.0 * std::numbers::pi * frequency;
  for (int y = -radius; y <= radius; ++y) {
    for (int x = -radius; x <= radius; ++x) {
      const double xr = x * c + y * s;
      const double yr = -x * s + y * c;
      const double envelope = std::exp(-(xr * xr + gamma * gamma * yr * yr) / two_sigma2);
      const std::size_t i = static_cast<std::size_t>(y + radius) * n + static_cast<std::size_t>(x + radius);
      g.real[i] = envelope * std::cos(omega * xr);
      g.imag[i] = envelope * std::sin(omega * xr);
    }
  }
  double mean = 0.0;
  for (double v : g.real) mean += v;
  mean /= static_cast<double>(g.real.size());
  for (double& v : g.real) v -= mean;
  detail::scale_to_unit_norm(g.real);
  detail::scale_to_unit_norm(g.imag);
  return g;
}

/// Nine filters, frequency-major then orientation.
inline FilterBank build_filter_bank(const GaborConfig& config) {
  config.validate();
  FilterBank bank;
  for (double f : config.frequencies) {
    for (double theta : config.orientations) {
      bank.filters.push_back(make_gabor_filter(f, theta, config.sigma_for(f),
                                               config.gamma_aspect, config.radius_for(f)));
    }
  }
  return bank;
}

using ResponseMap = Grid<double>;

/// Magnitude of the complex correlation of the image with the filter, using
/// clamp-to-edge borders. Kernel taps are summed row-major for every pixel.
inline ResponseMap convolve_response(const GrayImage& image, const GaborFilter& filter) {
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  const std::size_t r = static_cast<std::size_t>(filter.radius);
  const std::size_t pw = w + 2 * r;
  const std::size_t ph = h + 2 * r;

  std::vector<double> padded(pw * ph);
  for (std::size_t py = 0; py < ph; ++py) {
    const std::size_t sy = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(py) - static_cast<std::ptrdiff_t>(r), 0,
                                                      static_cast<std::ptrdiff_t>(h) - 1);
    for (std::size_t px = 0; px < pw; ++px) {
      const std::size_t sx = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(px) - static_cast<std::ptrdiff_t>(r), 0,
                                                        static_cast<std::ptrdiff_t>(w) - 1);
      padded[py * pw + px] = image.at(sx, sy);
    }
  }

  const std::size_t side = filter.side();
  ResponseMap out(w, h, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double re = 0.0;
      double im = 0.0;
      for (std::size_t ky = 0; ky < side; ++ky) {
        const double* row = &padded[(y + ky) * pw + x];
        const double* kr = &filter.real[ky * side];
        const double* ki = &filter.imag[ky * side];
        for (std::size_t kx = 0; kx < side; ++kx) {
          re += kr[kx] * row[kx];
          im += ki[kx] * row[kx];
        }
      }
      out.at(x, y) = std::sqrt(re * re + im * im);
    }
  }
  return out;
}

inline FeatureGrid extract_features(const GrayImage& image, const FilterBank& bank) {
  require_feature_dim(bank.size(), "extract_features");
  FeatureGrid grid(image.width(), image.height());
  for (std::size_t f = 0; f < bank.size(); ++f) {
    const ResponseMap response = convolve_response(image, bank.filters[f]);
    for (std::size_t p = 0; p < response.size(); ++p) grid.pixel(p)[f] = response[p];
  }
  return grid;
}

// ---------------------------------------------------------------- z-scoring

inline constexpr double kStdFloor = 1e-12;

struct FeatureStats {
  std::array<double, kFeatureDim> mean{};
  std::array<double, kFeatureDim> std{};

  void apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t d = 0; d < kFeatureDim; ++d) out[d] = (in[d] - mean[d]) / std[d];
  }

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

/// Per-dimension mean and population std over the rows. The mean is
/// accumulated relative to the first row, so a constant column yields its
/// value exactly and normalises to exactly zero.
inline FeatureStats fit_stats(const FeatureMatrix& rows) {
  require_feature_dim(rows.cols(), "fit_stats");
  if (rows.rows() == 0) throw Error(ErrorCode::InvalidConfig, "fit_stats on empty set");
  const double n = static_cast<double>(rows.rows());
  FeatureStats s;
  const auto first = rows.row(0);
  for (std::size_t d = 0; d < kFeatureDim; ++d) {
    double shift = 0.0;
    for (std::size_t r = 0; r < rows.rows(); ++r) shift += rows.row(r)[d] - first[d];
    s.mean[d] = first[d] + shift / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      const double dev = rows.row(r)[d] - s.mean[d];
      ss += dev * dev;
    }
    s.std[d] = std::max(std::sqrt(ss / n), kStdFloor);
  }
  return s;
}

inline FeatureStats fit_stats(const TrainingSet& ts) { return fit_stats(ts.features()); }

inline FeatureMatrix normalize(const FeatureMatrix& rows, const FeatureStats& stats) {
  require_feature_dim(rows.cols(), "normalize");
  std::vector<double> out(rows.values().begin(), rows.values().end());
  FeatureMatrix m(rows.rows(), rows.cols(), std::move(out));
  for (std::size_t r = 0; r < m.rows(); ++r) stats.apply(rows.row(r), m.row(r));
  return m;
}

inline TrainingSet normalize(const TrainingSet& ts, const FeatureStats& stats) {
  TrainingSet out;
  std::array<double, kFeatureDim> buf{};
  for (std::size_t r = 0; r < ts.rows(); ++r) {
    stats.apply(ts.features().row(r), buf);
    out.append(buf, ts.labels()[r], ts.sources()[r]);
  }
  return out;
}

inline FeatureGrid normalize(const FeatureGrid& grid, const FeatureStats& stats) {
  FeatureGrid out(grid.width(), grid.height());
  for (std::size_t p = 0; p < grid.pixel_count(); ++p) stats.apply(grid.pixel(p), out.pixel(p));
  return out;
}

}  // namespace brainseg
