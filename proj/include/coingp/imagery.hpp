#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coingp/error.hpp"

namespace coingp {

/// 0-based pixel coordinate, row-major.
struct PixelCoord {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

/// 8-bit grayscale image stored row-major, top row first.
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(int width, int height, std::uint8_t fill = 0)
      : GrayImage(width, height,
                  std::vector<std::uint8_t>(checked_area(width, height), fill)) {}

  GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != checked_area(width, height)) {
      throw ValidationError("image pixel count " + std::to_string(pixels_.size()) +
                            " does not match " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t area() const { return pixels_.size(); }

  bool contains(PixelCoord p) const {
    return p.row >= 0 && p.row < height_ && p.col >= 0 && p.col < width_;
  }

  bool on_border(PixelCoord p) const {
    return p.row == 0 || p.col == 0 || p.row == height_ - 1 || p.col == width_ - 1;
  }

  std::uint8_t at(int row, int col) const { return pixels_[offset(row, col)]; }
  std::uint8_t at(PixelCoord p) const { return at(p.row, p.col); }
  void set(int row, int col, std::uint8_t v) { pixels_[offset(row, col)] = v; }
  void set(PixelCoord p, std::uint8_t v) { set(p.row, p.col, v); }

  std::span<const std::uint8_t> pixels() const { return pixels_; }

  bool same_shape(const GrayImage& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  static std::size_t checked_area(int width, int height) {
    if (width <= 0 || height <= 0) {
      throw ValidationError("image dimensions must be positive, got " +
                            std::to_string(width) + "x" + std::to_string(height));
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  std::size_t offset(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Distinguishes the ways a PGM stream can be rejected.
class PgmError : public FormatError {
 public:
  enum class Kind { MalformedHeader, UnsupportedMaxval, TruncatedData };

  PgmError(Kind kind, const std::string& what) : FormatError(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

class PgmReader {
 public:
  explicit PgmReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (is_space(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Returns -1 when no digits are present.
  long long read_uint() {
    skip_space_and_comments();
    long long value = -1;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = (value < 0 ? 0 : value) * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000) return -2;
      ++pos_;
    }
    return value;
  }

  bool at_space() const { return pos_ < bytes_.size() && is_space(bytes_[pos_]); }
  void advance() { ++pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::string_view rest() const { return bytes_.substr(pos_); }

  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Decodes a binary (P5) or ASCII (P2) PGM with maxval 255.
inline GrayImage load_pgm(std::string_view bytes) {
  using Kind = PgmError::Kind;
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw PgmError(Kind::MalformedHeader, "malformed PGM header: expected magic P5 or P2");
  }
  const bool binary = bytes[1] == '5';
  detail::PgmReader in(bytes.substr(2));
  if (!in.at_space()) {
    throw PgmError(Kind::MalformedHeader, "malformed PGM header: no separator after magic");
  }
  const long long width = in.read_uint();
  const long long height = in.read_uint();
  const long long maxval = in.read_uint();
  if (width <= 0 || height <= 0 || maxval <= 0) {
    throw PgmError(Kind::MalformedHeader,
                   "malformed PGM header: width, height and maxval must be positive integers");
  }
  if (maxval != 255) {
    throw PgmError(Kind::UnsupportedMaxval,
                   "unsupported maxval " + std::to_string(maxval) + " (only 255 is accepted)");
  }
  if (!in.at_space()) {
    throw PgmError(Kind::MalformedHeader, "malformed PGM header: no separator after maxval");
  }

  const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::uint8_t> pixels;
  pixels.reserve(count);
  if (binary) {
    in.advance();
    if (in.remaining() < count) {
      throw PgmError(Kind::TruncatedData, "truncated PGM pixel data: expected " +
                                              std::to_string(count) + " bytes, found " +
                                              std::to_string(in.remaining()));
    }
    const std::string_view raster = in.rest().substr(0, count);
    std::transform(raster.begin(), raster.end(), std::back_inserter(pixels),
                   [](char c) { return static_cast<std::uint8_t>(c); });
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const long long v = in.read_uint();
      if (v == -1) {
        throw PgmError(Kind::TruncatedData, "truncated PGM pixel data: expected " +
                                                std::to_string(count) + " values, found " +
                                                std::to_string(i));
      }
      if (v < 0 || v > 255) {
        throw PgmError(Kind::MalformedHeader, "PGM sample out of range at index " +
                                                  std::to_string(i));
      }
      pixels.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

/// Encodes as binary PGM (P5, maxval 255).
inline std::string save_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " +
                    std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + img.area());
  for (std::uint8_t v : img.pixels()) out.push_back(static_cast<char>(v));
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

inline GrayImage read_pgm_file(const std::filesystem::path& path) {
  return load_pgm(read_file(path));
}

inline void write_pgm_file(const std::filesystem::path& path, const GrayImage& img) {
  write_file(path, save_pgm(img));
}

/// Amplified absolute difference, saturating at 255.
inline GrayImage diff_image(const GrayImage& original, const GrayImage& reconstructed,
                            int gain = 10) {
  if (!original.same_shape(reconstructed)) {
    throw ValidationError("diff_image: dimension mismatch");
  }
  if (gain < 1) throw ValidationError("diff_image: gain must be >= 1");
  std::vector<std::uint8_t> out(original.area());
  const auto a = original.pixels();
  const auto b = reconstructed.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const long long d = std::abs(static_cast<int>(a[i]) - static_cast<int>(b[i]));
    out[i] = static_cast<std::uint8_t>(std::min<long long>(255, d * gain));
  }
  return GrayImage(original.width(), original.height(), std::move(out));
}

}  // namespace coingp
