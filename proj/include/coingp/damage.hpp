#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "coingp/error.hpp"
#include "coingp/imagery.hpp"
#include "coingp/random.hpp"

namespace coingp {

/// Radius-1 sliding-window shape.
enum class Topology { Moore, VonNeumann };

constexpr int frontier_size(Topology t) { return t == Topology::Moore ? 8 : 4; }

constexpr std::string_view to_string(Topology t) {
  return t == Topology::Moore ? "moore" : "von-neumann";
}

inline Topology parse_topology(std::string_view name) {
  if (name == "moore") return Topology::Moore;
  if (name == "von-neumann" || name == "vonneumann" || name == "von_neumann") {
    return Topology::VonNeumann;
  }
  throw ValidationError("unknown topology '" + std::string(name) +
                        "' (expected moore or von-neumann)");
}

constexpr int chebyshev_distance(PixelCoord a, PixelCoord b) {
  const int dr = a.row > b.row ? a.row - b.row : b.row - a.row;
  const int dc = a.col > b.col ? a.col - b.col : b.col - a.col;
  return dr > dc ? dr : dc;
}

constexpr int manhattan_distance(PixelCoord a, PixelCoord b) {
  const int dr = a.row > b.row ? a.row - b.row : b.row - a.row;
  const int dc = a.col > b.col ? a.col - b.col : b.col - a.col;
  return dr + dc;
}

constexpr int topology_distance(Topology t, PixelCoord a, PixelCoord b) {
  return t == Topology::Moore ? chebyshev_distance(a, b) : manhattan_distance(a, b);
}

inline std::string to_string(PixelCoord p) {
  return "(" + std::to_string(p.row) + "," + std::to_string(p.col) + ")";
}

/// Set of removed pixel coordinates for an image of fixed dimensions.
///
/// Coordinates are kept sorted row-major. Construction rejects duplicates,
/// out-of-bounds coordinates and coordinates on the image border.
class MissingSet {
 public:
  MissingSet() = default;

  MissingSet(int width, int height, std::vector<PixelCoord> coords)
      : width_(width), height_(height), coords_(std::move(coords)) {
    if (width <= 0 || height <= 0) {
      throw ValidationError("missing set dimensions must be positive");
    }
    std::sort(coords_.begin(), coords_.end());
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      const PixelCoord p = coords_[i];
      if (p.row < 0 || p.row >= height || p.col < 0 || p.col >= width) {
        throw ValidationError("missing pixel " + to_string(p) + " is out of bounds");
      }
      if (p.row == 0 || p.col == 0 || p.row == height - 1 || p.col == width - 1) {
        throw ValidationError("missing pixel " + to_string(p) + " lies on the image border");
      }
      if (i > 0 && coords_[i - 1] == p) {
        throw ValidationError("missing pixel " + to_string(p) + " listed twice");
      }
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return coords_.size(); }
  bool empty() const { return coords_.empty(); }
  std::span<const PixelCoord> coords() const { return coords_; }

  bool contains(PixelCoord p) const {
    return std::binary_search(coords_.begin(), coords_.end(), p);
  }

  bool fits(const GrayImage& img) const {
    return width_ == img.width() && height_ == img.height();
  }

  double removed_percent() const {
    return 100.0 * static_cast<double>(coords_.size()) /
           (static_cast<double>(width_) * static_cast<double>(height_));
  }

  friend bool operator==(const MissingSet&, const MissingSet&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<PixelCoord> coords_;
};

struct SeparationReport {
  bool valid = true;
  std::vector<std::pair<PixelCoord, PixelCoord>> violating_pairs;
  std::vector<PixelCoord> border_coords;
};

/// Checks that no missing pixel lies in the frontier of another one
/// (distance > 1 under the topology's metric) and that none is on the border.
inline SeparationReport validate_separation(const MissingSet& missing, Topology topology) {
  SeparationReport report;
  const int w = missing.width();
  const int h = missing.height();
  std::vector<std::uint8_t> occupied(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  for (PixelCoord p : missing.coords()) {
    occupied[static_cast<std::size_t>(p.row) * w + p.col] = 1;
    if (p.row == 0 || p.col == 0 || p.row == h - 1 || p.col == w - 1) {
      report.border_coords.push_back(p);
    }
  }
  // Forward half of the frontier, so each unordered pair is seen once.
  static constexpr std::pair<int, int> kMooreForward[] = {{0, 1}, {1, -1}, {1, 0}, {1, 1}};
  static constexpr std::pair<int, int> kVonNeumannForward[] = {{0, 1}, {1, 0}};
  const std::span<const std::pair<int, int>> forward =
      topology == Topology::Moore ? std::span<const std::pair<int, int>>(kMooreForward)
                                  : std::span<const std::pair<int, int>>(kVonNeumannForward);
  for (PixelCoord p : missing.coords()) {
    for (auto [dr, dc] : forward) {
      const PixelCoord q{p.row + dr, p.col + dc};
      if (q.row < 0 || q.row >= h || q.col < 0 || q.col >= w) continue;
      if (occupied[static_cast<std::size_t>(q.row) * w + q.col]) {
        report.violating_pairs.emplace_back(p, q);
      }
    }
  }
  report.valid = report.violating_pairs.empty() && report.border_coords.empty();
  return report;
}

/// Largest per-column count that fits rows 1..height-2 with row gaps >= 2.
constexpr int max_per_column_removals(int height) {
  return height < 3 ? 0 : (height - 1) / 2;
}

/// Odd, non-border column indices: 1, 3, ..., excluding column width-1.
inline std::vector<int> damaged_columns(int width) {
  std::vector<int> cols;
  for (int c = 1; c <= width - 2; c += 2) cols.push_back(c);
  return cols;
}

/// Removes `per_column_removals` pixels from every odd interior column.
///
/// Rows within a column are drawn uniformly among all configurations with
/// pairwise gaps >= 2 inside [1, height-2]: a k-subset s_0 < ... < s_{k-1} of
/// {0, ..., usable-k} maps bijectively onto rows 1 + s_i + i.
inline MissingSet generate_column_damage(int width, int height, int per_column_removals,
                                         Rng& rng) {
  if (width <= 0 || height <= 0) {
    throw ValidationError("damage: image dimensions must be positive");
  }
  if (per_column_removals < 1) {
    throw ValidationError("damage: per-column removals must be positive");
  }
  if (per_column_removals > max_per_column_removals(height)) {
    throw ValidationError("damage: " + std::to_string(per_column_removals) +
                          " non-adjacent removals do not fit in a column of height " +
                          std::to_string(height) + " (maximum " +
                          std::to_string(max_per_column_removals(height)) + ")");
  }
  const int k = per_column_removals;
  const int slots = (height - 2) - k + 1;
  std::vector<PixelCoord> coords;
  std::vector<int> chosen;
  std::vector<std::uint8_t> taken(static_cast<std::size_t>(slots));
  for (int col : damaged_columns(width)) {
    // Floyd's sampling of k distinct values from [0, slots).
    chosen.clear();
    std::fill(taken.begin(), taken.end(), 0);
    for (int j = slots - k; j < slots; ++j) {
      int t = static_cast<int>(rng.index(static_cast<std::size_t>(j) + 1));
      if (taken[t]) t = j;
      taken[t] = 1;
      chosen.push_back(t);
    }
    std::sort(chosen.begin(), chosen.end());
    for (int i = 0; i < k; ++i) coords.push_back({1 + chosen[i] + i, col});
  }
  return MissingSet(width, height, std::move(coords));
}

/// Image whose pixels in `missing` are unavailable. Ground-truth intensities
/// are kept so that test-time error can be measured.
class DamagedImage {
 public:
  DamagedImage(GrayImage image, MissingSet missing)
      : image_(std::move(image)), missing_(std::move(missing)) {
    if (!missing_.fits(image_)) {
      throw ValidationError("missing set is " + std::to_string(missing_.width()) + "x" +
                            std::to_string(missing_.height()) + " but image is " +
                            std::to_string(image_.width()) + "x" +
                            std::to_string(image_.height()));
    }
    unavailable_.assign(image_.area(), 0);
    for (PixelCoord p : missing_.coords()) {
      unavailable_[static_cast<std::size_t>(p.row) * image_.width() + p.col] = 1;
    }
  }

  const GrayImage& image() const { return image_; }
  const MissingSet& missing() const { return missing_; }
  int width() const { return image_.width(); }
  int height() const { return image_.height(); }

  bool available(int row, int col) const {
    return unavailable_[static_cast<std::size_t>(row) * image_.width() + col] == 0;
  }
  bool available(PixelCoord p) const { return available(p.row, p.col); }

  std::uint8_t ground_truth(PixelCoord p) const { return image_.at(p); }

  /// Copy with missing pixels set to zero, for viewing only.
  GrayImage zeroed() const {
    GrayImage out = image_;
    for (PixelCoord p : missing_.coords()) out.set(p, 0);
    return out;
  }

 private:
  GrayImage image_;
  MissingSet missing_;
  std::vector<std::uint8_t> unavailable_;
};

inline DamagedImage apply_damage(GrayImage img, MissingSet missing) {
  return DamagedImage(std::move(img), std::move(missing));
}

// Mask formats: PGM with 255 = missing, 0 = available; CSV "row,col" 0-based.

inline GrayImage mask_to_pgm(const MissingSet& missing) {
  GrayImage mask(missing.width(), missing.height(), 0);
  for (PixelCoord p : missing.coords()) mask.set(p, 255);
  return mask;
}

inline MissingSet mask_from_pgm(const GrayImage& mask) {
  std::vector<PixelCoord> coords;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      const std::uint8_t v = mask.at(r, c);
      if (v == 255) {
        coords.push_back({r, c});
      } else if (v != 0) {
        throw FormatError("mask pixel " + to_string(PixelCoord{r, c}) + " has value " +
                          std::to_string(v) + " (expected 0 or 255)");
      }
    }
  }
  return MissingSet(mask.width(), mask.height(), std::move(coords));
}

inline std::string mask_to_csv(const MissingSet& missing) {
  std::string out = "row,col\n";
  for (PixelCoord p : missing.coords()) {
    out += std::to_string(p.row) + "," + std::to_string(p.col) + "\n";
  }
  return out;
}

inline MissingSet mask_from_csv(std::string_view text, int width, int height) {
  std::vector<PixelCoord> coords;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != "row,col") throw FormatError("mask CSV must start with header row,col");
      continue;
    }
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    PixelCoord p;
    const auto parse = [&](std::string_view s, int& v) {
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc{} && ptr == s.data() + s.size();
    };
    if (comma == std::string_view::npos || !parse(line.substr(0, comma), p.row) ||
        !parse(line.substr(comma + 1), p.col)) {
      throw FormatError("mask CSV line " + std::to_string(line_no) + " is not row,col");
    }
    coords.push_back(p);
  }
  if (line_no == 0) throw FormatError("mask CSV is empty");
  return MissingSet(width, height, std::move(coords));
}

}  // namespace coingp
