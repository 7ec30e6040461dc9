#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coingp/damage.hpp"
#include "coingp/error.hpp"
#include "coingp/imagery.hpp"

namespace coingp {

struct Offset {
  int drow;
  int dcol;
};

inline constexpr std::array<Offset, 8> kMooreOffsets{{
    {-1, -1}, {-1, 0}, {-1, 1},
    {0, -1},           {0, 1},
    {1, -1},  {1, 0},  {1, 1},
}};

inline constexpr std::array<Offset, 4> kVonNeumannOffsets{{
              {-1, 0},
    {0, -1},           {0, 1},
              {1, 0},
}};

/// Frontier positions in the fixed row-major order; input variable k of a
/// tree reads the pixel at offset k.
constexpr std::span<const Offset> frontier_offsets(Topology t) {
  if (t == Topology::Moore) return kMooreOffsets;
  return kVonNeumannOffsets;
}

/// One fitness case: frontier intensities and the central intensity.
struct NeighborhoodSample {
  std::vector<std::uint8_t> inputs;
  std::uint8_t target = 0;
  PixelCoord center;

  friend bool operator==(const NeighborhoodSample&, const NeighborhoodSample&) = default;
};

struct SampleSet {
  Topology topology = Topology::Moore;
  std::vector<NeighborhoodSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  friend bool operator==(const SampleSet&, const SampleSet&) = default;
};

/// Samples centred on available pixels with a complete frontier.
struct TrainingSet : SampleSet {};

/// Samples centred on missing pixels; targets are the retained ground truth.
struct TestSet : SampleSet {};

/// Returns nothing when the center is on the border or any frontier pixel
/// is missing.
inline std::optional<NeighborhoodSample> extract_sample(const DamagedImage& dmg,
                                                        PixelCoord center, Topology topology) {
  const GrayImage& img = dmg.image();
  if (!img.contains(center)) {
    throw ValidationError("extract_sample: center " + to_string(center) + " out of bounds");
  }
  if (img.on_border(center)) return std::nullopt;
  NeighborhoodSample s;
  const auto offsets = frontier_offsets(topology);
  s.inputs.reserve(offsets.size());
  for (Offset o : offsets) {
    const PixelCoord q{center.row + o.drow, center.col + o.dcol};
    if (!dmg.available(q)) return std::nullopt;
    s.inputs.push_back(img.at(q));
  }
  s.target = dmg.ground_truth(center);
  s.center = center;
  return s;
}

/// Row-major scan over available interior pixels with complete frontiers.
inline TrainingSet build_training_set(const DamagedImage& dmg, Topology topology) {
  TrainingSet set;
  set.topology = topology;
  for (int r = 1; r + 1 < dmg.height(); ++r) {
    for (int c = 1; c + 1 < dmg.width(); ++c) {
      if (!dmg.available(r, c)) continue;
      if (auto s = extract_sample(dmg, {r, c}, topology)) set.samples.push_back(std::move(*s));
    }
  }
  return set;
}

/// One sample per missing pixel, in missing-set order.
inline TestSet build_test_set(const DamagedImage& dmg, Topology topology) {
  TestSet set;
  set.topology = topology;
  set.samples.reserve(dmg.missing().size());
  for (PixelCoord p : dmg.missing().coords()) {
    auto s = extract_sample(dmg, p, topology);
    if (!s) {
      throw ValidationError("missing pixel " + to_string(p) + " has an incomplete " +
                            std::string(to_string(topology)) +
                            " frontier; the damage violates the separation constraint");
    }
    set.samples.push_back(std::move(*s));
  }
  return set;
}

/// CSV dump: center_row,center_col,target,in0,...,in{k-1}.
inline std::string samples_to_csv(const SampleSet& set) {
  std::string out = "center_row,center_col,target";
  for (int k = 0; k < frontier_size(set.topology); ++k) out += ",in" + std::to_string(k);
  out += '\n';
  for (const auto& s : set.samples) {
    out += std::to_string(s.center.row) + "," + std::to_string(s.center.col) + "," +
           std::to_string(s.target);
    for (std::uint8_t v : s.inputs) out += "," + std::to_string(v);
    out += '\n';
  }
  return out;
}

}  // namespace coingp
