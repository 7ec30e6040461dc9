#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "coingp/damage.hpp"
#include "coingp/error.hpp"
#include "coingp/evolution.hpp"
#include "coingp/fitness.hpp"
#include "coingp/imagery.hpp"
#include "coingp/model.hpp"
#include "coingp/neighborhood.hpp"
#include "coingp/random.hpp"
#include "coingp/tree.hpp"

namespace coingp {

/// Rounded mean of the frontier intensities.
inline std::uint8_t baseline_average_predict(std::span<const double> inputs) {
  if (inputs.empty()) throw ValidationError("baseline: no inputs");
  double sum = 0.0;
  for (double v : inputs) sum += v;
  const double r = std::round(sum / static_cast<double>(inputs.size()));
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

namespace detail {

template <typename Predict>
double rmse_over(const TestSet& test_set, Predict predict) {
  if (test_set.empty()) throw ValidationError("rmse: empty test set");
  double sum = 0.0;
  std::vector<double> inputs;
  for (const auto& s : test_set.samples) {
    inputs.assign(s.inputs.begin(), s.inputs.end());
    const double e = static_cast<double>(predict(inputs)) - static_cast<double>(s.target);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(test_set.size()));
}

}  // namespace detail

inline double baseline_rmse(const TestSet& test_set) {
  return detail::rmse_over(test_set, [](std::span<const double> in) {
    return baseline_average_predict(in);
  });
}

inline double test_rmse(const GpTree& tree, ScalingCoefficients scaling, const TestSet& test_set) {
  if (tree.max_var_index() >= frontier_size(test_set.topology)) {
    throw ValidationError("test_rmse: tree arity does not match the test-set topology");
  }
  return detail::rmse_over(test_set, [&](std::span<const double> in) {
    return predict_pixel(tree, scaling, in);
  });
}

/// Copies available pixels and fills each missing pixel with the predictor.
inline GrayImage reconstruct(const DamagedImage& dmg, const GpTree& tree,
                             ScalingCoefficients scaling, Topology topology) {
  if (tree.max_var_index() >= frontier_size(topology)) {
    throw ValidationError("reconstruct: tree arity does not match the " +
                          std::string(to_string(topology)) + " window");
  }
  GrayImage out = dmg.image();
  std::vector<double> inputs;
  for (PixelCoord p : dmg.missing().coords()) {
    const auto s = extract_sample(dmg, p, topology);
    if (!s) {
      throw ValidationError("reconstruct: missing pixel " + to_string(p) +
                            " has an incomplete frontier");
    }
    inputs.assign(s->inputs.begin(), s->inputs.end());
    out.set(p, predict_pixel(tree, scaling, inputs));
  }
  return out;
}

/// FNV-1a over the missing coordinates; identifies the damage pattern a run used.
inline std::uint64_t fingerprint(const MissingSet& missing) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&](std::uint64_t v) {
    for (int k = 0; k < 4; ++k) {
      h ^= (v >> (8 * k)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(missing.width()));
  mix(static_cast<std::uint64_t>(missing.height()));
  for (PixelCoord p : missing.coords()) {
    mix(static_cast<std::uint64_t>(p.row));
    mix(static_cast<std::uint64_t>(p.col));
  }
  return h;
}

struct DamageParams {
  int per_column_removals = 100;
  std::uint64_t seed = 1;
};

struct RunResult {
  std::uint64_t seed = 0;
  Topology topology = Topology::Moore;
  GpTree best_tree;
  ScalingCoefficients scaling;
  double training_rmse = 0.0;
  double test_rmse = 0.0;
  std::vector<double> generations_history;
  double wall_time = 0.0;
  std::uint64_t mask_fingerprint = 0;
};

struct DamageSummary {
  std::size_t removed = 0;
  std::size_t total = 0;
  double percent = 0.0;
};

struct ExperimentReport {
  std::string image_id;
  Topology topology = Topology::Moore;
  DamagedImage damaged;
  std::vector<RunResult> runs;
  double baseline_rmse_moore = 0.0;
  double baseline_rmse_von_neumann = 0.0;
  DamageSummary damage_summary;
  std::size_t training_set_size = 0;
  std::size_t test_set_size = 0;
  std::uint64_t mask_fingerprint = 0;

  double baseline_rmse() const {
    return topology == Topology::Moore ? baseline_rmse_moore : baseline_rmse_von_neumann;
  }
};

inline double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Runs `n_runs` independent evolutions on one damaged image.
///
/// Every run shares the same missing set; run k uses seed base_seed + k.
/// Runs may execute on up to `jobs` threads; results are ordered by run index.
inline ExperimentReport run_experiment(const GrayImage& image, const std::string& image_id,
                                       const MissingSet& missing,
                                       const EvolutionParams& evolution_params,
                                       std::size_t n_runs, std::uint64_t base_seed,
                                       unsigned jobs = 1) {
  evolution_params.validate();
  if (n_runs < 1) throw ValidationError("experiment needs at least one run");
  const Topology topology = evolution_params.topology;
  if (const auto check = validate_separation(missing, topology); !check.valid) {
    throw ValidationError("damage violates the " + std::string(to_string(topology)) +
                          " separation constraint (" +
                          std::to_string(check.violating_pairs.size()) + " violating pairs)");
  }

  ExperimentReport report{image_id, topology, apply_damage(image, missing), {}, 0.0, 0.0, {},
                          0, 0, fingerprint(missing)};
  const DamagedImage& dmg = report.damaged;
  const TrainingSet training = build_training_set(dmg, topology);
  const TestSet testing = build_test_set(dmg, topology);
  report.training_set_size = training.size();
  report.test_set_size = testing.size();
  report.damage_summary = {missing.size(), image.area(), missing.removed_percent()};
  if (!missing.empty()) {
    report.baseline_rmse_moore = baseline_rmse(build_test_set(dmg, Topology::Moore));
    report.baseline_rmse_von_neumann = baseline_rmse(build_test_set(dmg, Topology::VonNeumann));
  }
  if (training.empty()) throw ValidationError("experiment: training set is empty");
  if (testing.empty()) throw ValidationError("experiment: no missing pixels to test on");

  report.runs.resize(n_runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t k = next++; k < n_runs; k = next++) {
      try {
        const auto start = std::chrono::steady_clock::now();
        EvolutionParams params = evolution_params;
        params.seed = base_seed + k;
        Rng rng(params.seed);
        EvolutionResult evo = evolve(training, params, rng);
        RunResult& run = report.runs[k];
        run.seed = params.seed;
        run.topology = topology;
        run.test_rmse = test_rmse(evo.best_tree, evo.scaling, testing);
        run.best_tree = std::move(evo.best_tree);
        run.scaling = evo.scaling;
        run.training_rmse = evo.training_rmse;
        run.generations_history = std::move(evo.history);
        run.mask_fingerprint = report.mask_fingerprint;
        run.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n_runs)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return report;
}

inline ExperimentReport run_experiment(const GrayImage& image, const std::string& image_id,
                                       const DamageParams& damage,
                                       const EvolutionParams& evolution_params,
                                       std::size_t n_runs, std::uint64_t base_seed,
                                       unsigned jobs = 1) {
  Rng rng(damage.seed);
  const MissingSet missing =
      generate_column_damage(image.width(), image.height(), damage.per_column_removals, rng);
  return run_experiment(image, image_id, missing, evolution_params, n_runs, base_seed, jobs);
}

struct ReportOptions {
  double bin_width = 0.1;
  int diff_gain = 10;
  /// Runs whose reconstruction and difference images are written; empty
  /// selects the run with the lowest test RMSE.
  std::vector<std::size_t> selected_runs;
};

inline std::size_t best_run_index(const ExperimentReport& report) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < report.runs.size(); ++k) {
    if (report.runs[k].test_rmse < report.runs[best].test_rmse) best = k;
  }
  return best;
}

/// Bins training and test RMSE of all runs with a shared grid.
struct Histogram {
  double bin_width = 0.1;
  long long first_bin = 0;
  std::vector<std::size_t> test_counts;
  std::vector<std::size_t> training_counts;

  double lower(std::size_t i) const { return static_cast<double>(first_bin + static_cast<long long>(i)) * bin_width; }
  double upper(std::size_t i) const { return lower(i + 1); }
};

inline Histogram make_histogram(const std::vector<RunResult>& runs, double bin_width) {
  if (!(bin_width > 0.0)) throw ValidationError("histogram bin width must be positive");
  if (runs.empty()) throw ValidationError("histogram of an empty report");
  Histogram h;
  h.bin_width = bin_width;
  const auto bin_of = [&](double v) { return static_cast<long long>(std::floor(v / bin_width)); };
  long long lo = bin_of(runs.front().test_rmse);
  long long hi = lo;
  for (const auto& r : runs) {
    for (double v : {r.test_rmse, r.training_rmse}) {
      lo = std::min(lo, bin_of(v));
      hi = std::max(hi, bin_of(v));
    }
  }
  h.first_bin = lo;
  h.test_counts.assign(static_cast<std::size_t>(hi - lo + 1), 0);
  h.training_counts.assign(h.test_counts.size(), 0);
  for (const auto& r : runs) {
    ++h.test_counts[static_cast<std::size_t>(bin_of(r.test_rmse) - lo)];
    ++h.training_counts[static_cast<std::size_t>(bin_of(r.training_rmse) - lo)];
  }
  return h;
}

inline std::string artifact_stem(const ExperimentReport& report) {
  return report.image_id + "_" + std::string(to_string(report.topology));
}

inline nlohmann::json summary_json(const ExperimentReport& report) {
  std::vector<double> test;
  std::vector<double> train;
  for (const auto& r : report.runs) {
    test.push_back(r.test_rmse);
    train.push_back(r.training_rmse);
  }
  const auto stats = [](const std::vector<double>& v) {
    return nlohmann::json{{"median", median(v)},
                          {"min", *std::min_element(v.begin(), v.end())},
                          {"max", *std::max_element(v.begin(), v.end())}};
  };
  std::size_t below = 0;
  for (double v : test) below += v < report.baseline_rmse() ? 1 : 0;
  return nlohmann::json{
      {"image", report.image_id},
      {"topology", std::string(to_string(report.topology))},
      {"runs", report.runs.size()},
      {"damage",
       {{"removed", report.damage_summary.removed},
        {"total", report.damage_summary.total},
        {"percent", report.damage_summary.percent}}},
      {"training_set_size", report.training_set_size},
      {"test_set_size", report.test_set_size},
      {"baseline_rmse", {{"moore", report.baseline_rmse_moore},
                         {"von-neumann", report.baseline_rmse_von_neumann}}},
      {"test_rmse", stats(test)},
      {"training_rmse", stats(train)},
      {"runs_below_baseline", below},
  };
}

/// Writes the reconstructed and difference images for the selected runs,
/// the per-run CSV, the histogram CSV and the JSON summary. Returns the
/// paths written.
inline std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                                      const std::filesystem::path& out_dir,
                                                      const ReportOptions& options = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const std::string stem = artifact_stem(report);
  std::vector<fs::path> written;

  std::vector<std::size_t> selected = options.selected_runs;
  if (selected.empty()) selected.push_back(best_run_index(report));
  for (std::size_t k : selected) {
    if (k >= report.runs.size()) throw ValidationError("selected run " + std::to_string(k) + " does not exist");
    const RunResult& run = report.runs[k];
    const GrayImage recon = reconstruct(report.damaged, run.best_tree, run.scaling, run.topology);
    const fs::path recon_path = out_dir / (stem + "_recon_run" + std::to_string(k) + ".pgm");
    const fs::path diff_path = out_dir / (stem + "_diff_run" + std::to_string(k) + ".pgm");
    write_pgm_file(recon_path, recon);
    write_pgm_file(diff_path, diff_image(report.damaged.image(), recon, options.diff_gain));
    written.push_back(recon_path);
    written.push_back(diff_path);
  }

  std::string runs_csv = "run,seed,training_rmse,test_rmse\n";
  for (std::size_t k = 0; k < report.runs.size(); ++k) {
    const RunResult& r = report.runs[k];
    runs_csv += std::to_string(k) + "," + std::to_string(r.seed) + "," +
                format_constant(r.training_rmse) + "," + format_constant(r.test_rmse) + "\n";
  }
  written.push_back(out_dir / (stem + "_runs.csv"));
  write_file(written.back(), runs_csv);

  const Histogram h = make_histogram(report.runs, options.bin_width);
  std::string hist_csv = "kind,lower,upper,test_count,training_count\n";
  for (std::size_t i = 0; i < h.test_counts.size(); ++i) {
    hist_csv += "bin," + format_constant(h.lower(i)) + "," + format_constant(h.upper(i)) + "," +
                std::to_string(h.test_counts[i]) + "," + std::to_string(h.training_counts[i]) + "\n";
  }
  hist_csv += "baseline_moore," + format_constant(report.baseline_rmse_moore) + "," +
              format_constant(report.baseline_rmse_moore) + ",,\n";
  hist_csv += "baseline_von-neumann," + format_constant(report.baseline_rmse_von_neumann) + "," +
              format_constant(report.baseline_rmse_von_neumann) + ",,\n";
  written.push_back(out_dir / (stem + "_hist.csv"));
  write_file(written.back(), hist_csv);

  written.push_back(out_dir / (stem + "_summary.json"));
  write_file(written.back(), summary_json(report).dump(2) + "\n");
  return written;
}

}  // namespace coingp
