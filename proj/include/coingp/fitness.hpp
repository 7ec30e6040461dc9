#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "coingp/error.hpp"
#include "coingp/neighborhood.hpp"
#include "coingp/tree.hpp"

namespace coingp {

/// Output variance below this counts as constant output.
inline constexpr double kDegenerateVariance = 1e-12;

/// Affine map a + b * y fitted by least squares on the training set.
struct ScalingCoefficients {
  double intercept_a = 0.0;
  double slope_b = 1.0;

  double apply(double y) const { return intercept_a + slope_b * y; }

  friend bool operator==(const ScalingCoefficients&, const ScalingCoefficients&) = default;
};

struct FitnessResult {
  double rmse = 0.0;
  ScalingCoefficients scaling;
};

constexpr double clip_output(double y) { return y < 0.0 ? 0.0 : (y > 255.0 ? 255.0 : y); }

namespace detail {

inline void check_arity(const GpTree& tree, std::size_t inputs) {
  if (tree.max_var_index() >= static_cast<int>(inputs)) {
    throw ValidationError("tree reads v" + std::to_string(tree.max_var_index()) +
                          " but samples carry only " + std::to_string(inputs) + " inputs");
  }
}

inline std::vector<double> as_reals(std::span<const std::uint8_t> v) {
  return std::vector<double>(v.begin(), v.end());
}

}  // namespace detail

/// Tree outputs on each sample, clamped to [0, 255] (no rounding).
inline std::vector<double> clipped_outputs(const GpTree& tree,
                                           std::span<const NeighborhoodSample> samples) {
  if (samples.empty()) throw ValidationError("clipped_outputs: no samples");
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    detail::check_arity(tree, s.inputs.size());
    out.push_back(clip_output(eval_tree(tree, detail::as_reals(s.inputs))));
  }
  return out;
}

/// Least-squares slope and intercept mapping outputs onto targets.
inline ScalingCoefficients fit_scaling(std::span<const double> outputs,
                                       std::span<const double> targets) {
  if (outputs.empty() || outputs.size() != targets.size()) {
    throw ValidationError("fit_scaling: need equal, non-zero lengths");
  }
  const double n = static_cast<double>(outputs.size());
  double mean_y = 0.0;
  double mean_t = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    mean_y += outputs[i];
    mean_t += targets[i];
  }
  mean_y /= n;
  mean_t /= n;
  double cov = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double dy = outputs[i] - mean_y;
    cov += dy * (targets[i] - mean_t);
    var += dy * dy;
  }
  cov /= n;
  var /= n;
  if (var < kDegenerateVariance) return {mean_t, 0.0};
  const double b = cov / var;
  return {mean_t - b * mean_y, b};
}

/// sqrt(mean((a + b * y - t)^2)).
inline double scaled_rmse(std::span<const double> outputs, std::span<const double> targets,
                          ScalingCoefficients s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double e = s.apply(outputs[i]) - targets[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(outputs.size()));
}

/// Fitness cases laid out for repeated evaluation of many trees.
class FitnessCases {
 public:
  explicit FitnessCases(const SampleSet& set)
      : topology_(set.topology),
        columns_(set.size(), frontier_size(set.topology)),
        targets_(set.size()),
        buffer_(set.size()) {
    const int vars = frontier_size(set.topology);
    for (std::size_t r = 0; r < set.size(); ++r) {
      const auto& s = set.samples[r];
      if (static_cast<int>(s.inputs.size()) != vars) {
        throw ValidationError("sample at " + to_string(s.center) + " has " +
                              std::to_string(s.inputs.size()) + " inputs, expected " +
                              std::to_string(vars));
      }
      for (int k = 0; k < vars; ++k) columns_.at(r, k) = s.inputs[k];
      targets_[r] = s.target;
    }
  }

  Topology topology() const { return topology_; }
  std::size_t size() const { return targets_.size(); }
  std::span<const double> targets() const { return targets_; }

  /// Clipped outputs of `tree` on every case. The span is valid until the
  /// next call.
  std::span<const double> outputs(const GpTree& tree) {
    eval_batch(tree, columns_, buffer_);
    for (double& y : buffer_) y = clip_output(y);
    return buffer_;
  }

  /// Clip, fit the linear scaling, and measure the scaled RMSE.
  FitnessResult evaluate(const GpTree& tree) {
    if (targets_.empty()) throw ValidationError("fitness: empty training set");
    const auto y = outputs(tree);
    const ScalingCoefficients s = fit_scaling(y, targets_);
    return {scaled_rmse(y, targets_, s), s};
  }

 private:
  Topology topology_;
  InputColumns columns_;
  std::vector<double> targets_;
  std::vector<double> buffer_;
};

inline FitnessResult rmse_fitness(const GpTree& tree, const TrainingSet& training_set) {
  if (training_set.empty()) throw ValidationError("rmse_fitness: empty training set");
  FitnessCases cases(training_set);
  return cases.evaluate(tree);
}

/// Final integer intensity: clip, scale, round half away from zero, clamp.
inline std::uint8_t predict_pixel(const GpTree& tree, ScalingCoefficients scaling,
                                  std::span<const double> inputs) {
  const double y = scaling.apply(clip_output(eval_tree(tree, inputs)));
  const double r = std::round(std::isfinite(y) ? y : 0.0);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

/// "a=<a>, b=<b>", each in shortest round-trip form.
inline std::string format_scaling(ScalingCoefficients s) {
  return "a=" + format_constant(s.intercept_a) + ", b=" + format_constant(s.slope_b);
}

inline ScalingCoefficients parse_scaling(std::string_view text) {
  ScalingCoefficients s;
  const std::string line(text);
  int consumed = 0;
  if (std::sscanf(line.c_str(), " a=%lf , b=%lf %n", &s.intercept_a, &s.slope_b, &consumed) != 2 ||
      static_cast<std::size_t>(consumed) != line.size() || !std::isfinite(s.intercept_a) ||
      !std::isfinite(s.slope_b)) {
    throw FormatError("scaling line must read 'a=<real>, b=<real>', got '" + line + "'");
  }
  return s;
}

}  // namespace coingp
