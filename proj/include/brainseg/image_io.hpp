#pragma once

#include <png.h>

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "brainseg/error.hpp"
#include "brainseg/image.hpp"

namespace brainseg {

namespace fs = std::filesystem;

inline std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Write via a sibling temp file and rename, so readers never observe a
/// partially written output.
inline void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "rename to '" + path.string() + "': " + ec.message());
}

inline void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

// ---------------------------------------------------------------- PGM (P5)

namespace detail {

struct PgmHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 0;
  std::size_t data_offset = 0;
};

inline PgmHeader parse_pgm_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(ErrorCode::CorruptHeader, "missing PGM magic");
  }
  if (bytes[1] != '5') {
    throw Error(ErrorCode::UnsupportedFormat,
                std::string("netpbm variant P") + static_cast<char>(bytes[1]) +
                    " (only binary grayscale P5 is supported)");
  }
  std::size_t pos = 2;
  auto read_number = [&](const char* what) -> unsigned long {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw Error(ErrorCode::CorruptHeader, std::string("bad PGM ") + what);
    }
    unsigned long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000) throw Error(ErrorCode::CorruptHeader, std::string("PGM ") + what + " too large");
      ++pos;
    }
    return value;
  };
  PgmHeader h;
  h.width = read_number("width");
  h.height = read_number("height");
  h.maxval = static_cast<unsigned>(read_number("maxval"));
  if (h.width == 0 || h.height == 0) throw Error(ErrorCode::CorruptHeader, "PGM dimensions must be >= 1");
  if (h.maxval == 0) throw Error(ErrorCode::CorruptHeader, "PGM maxval must be >= 1");
  if (h.maxval > 255) throw Error(ErrorCode::UnsupportedFormat, "16-bit PGM (maxval > 255)");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(ErrorCode::CorruptHeader, "PGM header not terminated by whitespace");
  }
  h.data_offset = pos + 1;
  if (bytes.size() - h.data_offset < h.width * h.height) {
    throw Error(ErrorCode::CorruptHeader, "PGM pixel data truncated");
  }
  return h;
}

inline std::vector<std::uint8_t> encode_pgm(std::size_t width, std::size_t height,
                                            std::span<const std::uint8_t> pixels) {
  const std::string header =
      "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

inline constexpr std::array<std::uint8_t, 8> kPngSignature = {137, 80, 78, 71, 13, 10, 26, 10};

inline bool is_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= kPngSignature.size() &&
         std::equal(kPngSignature.begin(), kPngSignature.end(), bytes.begin());
}

}  // namespace detail

inline GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  const auto h = detail::parse_pgm_header(bytes);
  const auto* first = bytes.data() + h.data_offset;
  return GrayImage(h.width, h.height, std::vector<std::uint8_t>(first, first + h.width * h.height));
}

// ---------------------------------------------------------------- PNG

inline GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::CorruptHeader, std::string("PNG: ") + img.message);
  }
  if (img.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_COLORMAP)) {
    png_image_free(&img);
    throw Error(ErrorCode::UnsupportedFormat, "color PNG (only 8-bit grayscale is supported)");
  }
  if (img.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&img);
    throw Error(ErrorCode::UnsupportedFormat, "16-bit PNG (only 8-bit grayscale is supported)");
  }
  if (img.format & PNG_FORMAT_FLAG_ALPHA) {
    png_image_free(&img);
    throw Error(ErrorCode::UnsupportedFormat, "grayscale+alpha PNG");
  }
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::CorruptHeader, std::string("PNG: ") + img.message);
  }
  return GrayImage(img.width, img.height, std::move(pixels));
}

inline std::vector<std::uint8_t> encode_png(std::size_t width, std::size_t height,
                                            std::span<const std::uint8_t> pixels,
                                            bool rgb) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("PNG encode: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("PNG encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

// ---------------------------------------------------------------- files

/// Loads an 8-bit grayscale PGM (P5) or PNG, detected by content.
inline GrayImage load_image(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::MissingFile, "no such file '" + path.string() + "'");
  }
  const auto bytes = read_file_bytes(path);
  try {
    if (detail::is_png(bytes)) return decode_png(bytes);
    if (!bytes.empty() && bytes[0] == 'P') return decode_pgm(bytes);
  } catch (const Error& e) {
    e.rethrow_with_context(path.string());
  }
  throw Error(ErrorCode::UnsupportedFormat, path.string() + ": neither PGM nor PNG");
}

inline void save_pgm(const GrayImage& image, const fs::path& path) {
  write_file_atomic(path, detail::encode_pgm(image.width(), image.height(), image.cells()));
}

inline void save_png(const GrayImage& image, const fs::path& path) {
  write_file_atomic(path, encode_png(image.width(), image.height(), image.cells(), false));
}

/// Interleaved RGB buffer of width * height * 3 bytes.
inline void save_rgb_png(std::size_t width, std::size_t height,
                         std::span<const std::uint8_t> rgb, const fs::path& path) {
  if (rgb.size() != width * height * 3) {
    throw Error(ErrorCode::DimensionMismatch, "RGB buffer size");
  }
  write_file_atomic(path, encode_png(width, height, rgb, true));
}

inline LabelMap label_map_from_gray(const GrayImage& gray) {
  std::vector<Tissue> labels(gray.size());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    if (!is_valid_tissue_code(gray[i])) {
      throw Error(ErrorCode::OutOfRangeLabel,
                  "label value " + std::to_string(gray[i]) + " at pixel (" +
                      std::to_string(i % gray.width()) + "," +
                      std::to_string(i / gray.width()) + ")");
    }
    labels[i] = static_cast<Tissue>(gray[i]);
  }
  return LabelMap(gray.width(), gray.height(), std::move(labels));
}

inline GrayImage label_map_to_gray(const LabelMap& labels) {
  std::vector<std::uint8_t> codes(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) codes[i] = static_cast<std::uint8_t>(labels[i]);
  return GrayImage(labels.width(), labels.height(), std::move(codes));
}

/// Label maps are PGM (P5) files holding tissue codes 0..4.
inline LabelMap load_label_map(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::MissingFile, "no such file '" + path.string() + "'");
  }
  const auto bytes = read_file_bytes(path);
  try {
    return label_map_from_gray(decode_pgm(bytes));
  } catch (const Error& e) {
    e.rethrow_with_context(path.string());
  }
}

inline void save_label_map(const LabelMap& labels, const fs::path& path) {
  save_pgm(label_map_to_gray(labels), path);
}

}  // namespace brainseg
