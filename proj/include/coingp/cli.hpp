#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "coingp/damage.hpp"
#include "coingp/error.hpp"
#include "coingp/evaluation.hpp"
#include "coingp/evolution.hpp"
#include "coingp/imagery.hpp"
#include "coingp/model.hpp"
#include "coingp/neighborhood.hpp"

namespace coingp::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 2,
  kValidationError = 3,
  kIoError = 4,
};

inline constexpr std::uint64_t kDefaultSeed = 1;
inline constexpr const char* kSeedEnv = "COINGP_SEED";

/// Every flag of every subcommand; unused fields keep their defaults.
struct Settings {
  std::string config;
  std::string image;
  std::string mask;
  std::string tree;
  std::string out;
  std::string diff_out;
  std::string out_image;
  std::string out_mask;
  std::string out_mask_csv;
  std::string out_tree;
  std::string out_dir;
  std::string topology = "moore";
  int per_column = 100;
  std::size_t pop = 500;
  std::size_t gens = 500;
  std::size_t runs = 100;
  double mutation = 0.3;
  int max_depth = 8;
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t damage_seed = 0;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  double bin_width = 0.1;
};

/// Flat key=value lines; '#' starts a comment.
inline std::map<std::string, std::string> parse_config(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) + " is not key=value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

namespace detail {

// Documented config keys that differ from their flag names.
inline std::string flag_for_key(std::string key) {
  static const std::map<std::string, std::string> aliases{
      {"population_size", "pop"},
      {"generations", "gens"},
      {"mutation_probability", "mutation"},
      {"max_depth", "max-depth"},
  };
  if (const auto it = aliases.find(key); it != aliases.end()) return it->second;
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

// Lowest-precedence sources: config file, then environment, each only for
// options the command line left unset.
inline void apply_fallbacks(CLI::App& sub, const Settings& s) {
  if (!s.config.empty()) {
    for (const auto& [key, value] : parse_config(read_file(s.config))) {
      const std::string flag = flag_for_key(key);
      if (flag == "config") continue;
      CLI::Option* opt = sub.get_option_no_throw("--" + flag);
      if (opt == nullptr) {
        throw ValidationError("config key '" + key + "' is not an option of '" +
                              sub.get_name() + "'");
      }
      if (opt->count() == 0) {
        opt->add_result(value);
        opt->run_callback();
      }
    }
  }
  if (CLI::Option* seed = sub.get_option_no_throw("--seed"); seed && seed->count() == 0) {
    if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
      seed->add_result(env);
      seed->run_callback();
    }
  }
}

inline void print_config(std::ostream& out, const std::string& command,
                         const std::vector<std::pair<std::string, std::string>>& items) {
  out << "# " << command << " configuration\n";
  for (const auto& [k, v] : items) out << k << "=" << v << "\n";
}

inline std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline MissingSet load_mask(const std::string& path, const GrayImage& image) {
  if (std::filesystem::path(path).extension() == ".csv") {
    return mask_from_csv(read_file(path), image.width(), image.height());
  }
  const GrayImage mask = read_pgm_file(path);
  if (!mask.same_shape(image)) {
    throw ValidationError("mask " + path + " is " + std::to_string(mask.width()) + "x" +
                          std::to_string(mask.height()) + " but image is " +
                          std::to_string(image.width()) + "x" + std::to_string(image.height()));
  }
  return mask_from_pgm(mask);
}

inline void require_separation(const MissingSet& missing, Topology topology, std::ostream& err) {
  const SeparationReport report = validate_separation(missing, topology);
  if (report.valid) return;
  err << "separation constraint violated under " << to_string(topology) << ": "
      << report.violating_pairs.size() << " violating pair(s)\n";
  std::size_t shown = 0;
  for (const auto& [a, b] : report.violating_pairs) {
    if (shown++ == 20) {
      err << "  ...\n";
      break;
    }
    err << "  " << to_string(a) << " - " << to_string(b) << "\n";
  }
  throw ValidationError("mask is not valid for the " + std::string(to_string(topology)) +
                        " topology");
}

inline Predictor load_predictor_for(const std::string& path, Topology topology) {
  Predictor p = read_predictor_file(path);
  if (p.topology != topology) {
    throw ValidationError("arity mismatch: tree " + path + " was trained for " +
                          std::string(to_string(p.topology)) + " (" +
                          std::to_string(frontier_size(p.topology)) + " inputs) but topology " +
                          std::string(to_string(topology)) + " provides " +
                          std::to_string(frontier_size(topology)));
  }
  return p;
}

inline std::string default_sibling(const std::string& path, const std::string& suffix,
                                   const std::string& extension) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + extension)).string();
}

inline EvolutionParams evolution_params(const Settings& s, Topology topology) {
  EvolutionParams params;
  params.population_size = s.pop;
  params.generations = s.gens;
  params.mutation_probability = s.mutation;
  params.max_depth = s.max_depth;
  params.seed = s.seed;
  params.topology = topology;
  return params;
}

}  // namespace detail

inline int cmd_damage(const Settings& s, std::ostream& out, std::ostream&) {
  const std::string mask_csv =
      s.out_mask_csv.empty() ? detail::default_sibling(s.out_mask, "", ".csv") : s.out_mask_csv;
  detail::print_config(out, "damage", {{"image", s.image},
                                       {"out-image", s.out_image},
                                       {"out-mask", s.out_mask},
                                       {"out-mask-csv", mask_csv},
                                       {"per-column", std::to_string(s.per_column)},
                                       {"seed", std::to_string(s.seed)}});
  const GrayImage image = read_pgm_file(s.image);
  Rng rng(s.seed);
  const MissingSet missing =
      generate_column_damage(image.width(), image.height(), s.per_column, rng);
  const DamagedImage dmg = apply_damage(image, missing);
  write_pgm_file(s.out_image, dmg.zeroed());
  write_pgm_file(s.out_mask, mask_to_pgm(missing));
  write_file(mask_csv, mask_to_csv(missing));
  out << "removed " << missing.size() << " (" << detail::fixed(missing.removed_percent(), 2)
      << "%)\n";
  return kSuccess;
}

inline int cmd_train(const Settings& s, std::ostream& out, std::ostream& err) {
  const Topology topology = parse_topology(s.topology);
  detail::print_config(out, "train", {{"image", s.image},
                                      {"mask", s.mask},
                                      {"topology", std::string(to_string(topology))},
                                      {"population_size", std::to_string(s.pop)},
                                      {"generations", std::to_string(s.gens)},
                                      {"mutation_probability", format_constant(s.mutation)},
                                      {"max_depth", std::to_string(s.max_depth)},
                                      {"seed", std::to_string(s.seed)},
                                      {"out-tree", s.out_tree}});
  const GrayImage image = read_pgm_file(s.image);
  const MissingSet missing = detail::load_mask(s.mask, image);
  detail::require_separation(missing, topology, err);
  const DamagedImage dmg = apply_damage(image, missing);
  const TrainingSet training = build_training_set(dmg, topology);
  out << "training set size: " << training.size() << "\n";
  const EvolutionParams params = detail::evolution_params(s, topology);
  Rng rng(params.seed);
  const EvolutionResult result = evolve(training, params, rng);
  write_predictor_file(s.out_tree, {result.best_tree, result.scaling, topology});
  out << "training RMSE: " << format_constant(result.training_rmse) << "\n";
  return kSuccess;
}

inline int cmd_reconstruct(const Settings& s, std::ostream& out, std::ostream& err) {
  const Topology topology = parse_topology(s.topology);
  const std::string diff_out =
      s.diff_out.empty() ? detail::default_sibling(s.out, "_diff", ".pgm") : s.diff_out;
  detail::print_config(out, "reconstruct", {{"image", s.image},
                                            {"mask", s.mask},
                                            {"tree", s.tree},
                                            {"topology", std::string(to_string(topology))},
                                            {"out", s.out},
                                            {"diff-out", diff_out}});
  const GrayImage image = read_pgm_file(s.image);
  const MissingSet missing = detail::load_mask(s.mask, image);
  const Predictor predictor = detail::load_predictor_for(s.tree, topology);
  detail::require_separation(missing, topology, err);
  const DamagedImage dmg = apply_damage(image, missing);
  const GrayImage recon = reconstruct(dmg, predictor.tree, predictor.scaling, topology);
  write_pgm_file(s.out, recon);
  write_pgm_file(diff_out, diff_image(image, recon, 10));
  out << "reconstructed " << missing.size() << " pixel(s)\n";
  return kSuccess;
}

inline int cmd_evaluate(const Settings& s, std::ostream& out, std::ostream& err) {
  const Topology topology = parse_topology(s.topology);
  detail::print_config(out, "evaluate", {{"image", s.image},
                                         {"mask", s.mask},
                                         {"tree", s.tree},
                                         {"topology", std::string(to_string(topology))}});
  const GrayImage image = read_pgm_file(s.image);
  const MissingSet missing = detail::load_mask(s.mask, image);
  const Predictor predictor = detail::load_predictor_for(s.tree, topology);
  detail::require_separation(missing, topology, err);
  const DamagedImage dmg = apply_damage(image, missing);
  const TestSet testing = build_test_set(dmg, topology);
  out << "test RMSE (tree): " << format_constant(test_rmse(predictor.tree, predictor.scaling, testing))
      << "\n";
  out << "test RMSE (baseline " << to_string(topology)
      << "): " << format_constant(baseline_rmse(testing)) << "\n";
  return kSuccess;
}

inline int cmd_experiment(const Settings& s, std::ostream& out, std::ostream&) {
  std::vector<Topology> topologies;
  if (s.topology == "both") {
    topologies = {Topology::Moore, Topology::VonNeumann};
  } else {
    topologies = {parse_topology(s.topology)};
  }
  const std::uint64_t damage_seed = s.damage_seed != 0 ? s.damage_seed : s.seed;
  detail::print_config(out, "experiment", {{"image", s.image},
                                           {"runs", std::to_string(s.runs)},
                                           {"topology", s.topology},
                                           {"per-column", std::to_string(s.per_column)},
                                           {"population_size", std::to_string(s.pop)},
                                           {"generations", std::to_string(s.gens)},
                                           {"mutation_probability", format_constant(s.mutation)},
                                           {"max_depth", std::to_string(s.max_depth)},
                                           {"seed", std::to_string(s.seed)},
                                           {"damage-seed", std::to_string(damage_seed)},
                                           {"bin-width", format_constant(s.bin_width)},
                                           {"jobs", std::to_string(s.jobs)},
                                           {"out-dir", s.out_dir}});
  const GrayImage image = read_pgm_file(s.image);
  const std::string image_id = std::filesystem::path(s.image).stem().string();
  Rng damage_rng(damage_seed);
  const MissingSet missing =
      generate_column_damage(image.width(), image.height(), s.per_column, damage_rng);
  out << "removed " << missing.size() << " (" << detail::fixed(missing.removed_percent(), 2)
      << "%)\n";

  ReportOptions options;
  options.bin_width = s.bin_width;
  out << "topology      runs  train_set  median_test  min_test  max_test  baseline  below\n";
  for (Topology topology : topologies) {
    const ExperimentReport report = run_experiment(
        image, image_id, missing, detail::evolution_params(s, topology), s.runs, s.seed, s.jobs);
    emit_report(report, s.out_dir, options);
    const std::string stem = artifact_stem(report);
    for (std::size_t k = 0; k < report.runs.size(); ++k) {
      const RunResult& r = report.runs[k];
      write_predictor_file(std::filesystem::path(s.out_dir) /
                               (stem + "_tree_run" + std::to_string(k) + ".txt"),
                           {r.best_tree, r.scaling, topology});
    }
    const nlohmann::json summary = summary_json(report);
    double wall = 0.0;
    for (const auto& r : report.runs) wall += r.wall_time;
    out << std::left << std::setw(12) << to_string(topology) << std::right << std::setw(6)
        << report.runs.size() << std::setw(11) << report.training_set_size << std::setw(13)
        << detail::fixed(summary["test_rmse"]["median"].get<double>(), 4) << std::setw(10)
        << detail::fixed(summary["test_rmse"]["min"].get<double>(), 4) << std::setw(10)
        << detail::fixed(summary["test_rmse"]["max"].get<double>(), 4) << std::setw(10)
        << detail::fixed(report.baseline_rmse(), 4) << std::setw(7)
        << summary["runs_below_baseline"].get<std::size_t>() << "\n";
    out << "# " << to_string(topology) << " wall time " << detail::fixed(wall, 2) << " s\n";
  }
  return kSuccess;
}

/// Parses the command line and dispatches to a subcommand. Returns the
/// process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inpainting of isolated missing pixels with GP convolutional predictors", "coingp"};
  app.require_subcommand(1);
  Settings s;

  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", s.config, "key=value file; flags override it");
  };
  const auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", s.seed, "random seed (falls back to $COINGP_SEED, then 1)");
  };
  const auto add_evolution = [&](CLI::App* sub) {
    sub->add_option("--pop", s.pop, "population size")->check(CLI::PositiveNumber);
    sub->add_option("--gens", s.gens, "generations (population-size steps each)");
    sub->add_option("--mutation", s.mutation, "subtree mutation probability")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--max-depth", s.max_depth, "maximum tree depth (leaf = 0)")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* damage = app.add_subcommand("damage", "remove non-adjacent pixels from odd columns");
  damage->add_option("--image", s.image, "input PGM")->required();
  damage->add_option("--out-image", s.out_image, "damaged PGM (missing pixels zeroed)")->required();
  damage->add_option("--out-mask", s.out_mask, "mask PGM (255 = missing)")->required();
  damage->add_option("--out-mask-csv", s.out_mask_csv, "mask CSV (default: next to --out-mask)");
  damage->add_option("--per-column", s.per_column, "pixels removed per damaged column");
  add_seed(damage);
  add_config(damage);

  CLI::App* train = app.add_subcommand("train", "evolve a predictor on the available pixels");
  train->add_option("--image", s.image, "original PGM")->required();
  train->add_option("--mask", s.mask, "mask PGM or CSV")->required();
  train->add_option("--topology", s.topology, "moore | von-neumann");
  add_evolution(train);
  add_seed(train);
  train->add_option("--out-tree", s.out_tree, "output tree file")->required();
  add_config(train);

  CLI::App* recon = app.add_subcommand("reconstruct", "fill missing pixels with a trained tree");
  CLI::App* evaluate = app.add_subcommand("evaluate", "test RMSE of a tree and the baseline");
  for (CLI::App* sub : {recon, evaluate}) {
    sub->add_option("--image", s.image, "original PGM")->required();
    sub->add_option("--mask", s.mask, "mask PGM or CSV")->required();
    sub->add_option("--tree", s.tree, "tree file")->required();
    sub->add_option("--topology", s.topology, "moore | von-neumann");
    add_config(sub);
  }
  recon->add_option("--out", s.out, "reconstructed PGM")->required();
  recon->add_option("--diff-out", s.diff_out, "x10 difference PGM (default: <out>_diff.pgm)");

  CLI::App* experiment = app.add_subcommand("experiment", "repeated runs with shared damage");
  experiment->add_option("--image", s.image, "original PGM")->required();
  experiment->add_option("--runs", s.runs, "runs per topology")->check(CLI::PositiveNumber);
  experiment->add_option("--topology", s.topology, "moore | von-neumann | both");
  experiment->add_option("--per-column", s.per_column, "pixels removed per damaged column");
  add_evolution(experiment);
  add_seed(experiment);
  experiment->add_option("--damage-seed", s.damage_seed, "damage seed (default: --seed)");
  experiment->add_option("--out-dir", s.out_dir, "output directory")->required();
  experiment->add_option("--jobs", s.jobs, "parallel runs")->check(CLI::PositiveNumber);
  experiment->add_option("--bin-width", s.bin_width, "histogram bin width")
      ->check(CLI::PositiveNumber);
  add_config(experiment);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    detail::apply_fallbacks(*sub, s);
    const std::map<CLI::App*, std::function<int(const Settings&, std::ostream&, std::ostream&)>>
        commands{{damage, cmd_damage},
                 {train, cmd_train},
                 {recon, cmd_reconstruct},
                 {evaluate, cmd_evaluate},
                 {experiment, cmd_experiment}};
    return commands.at(sub)(s, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"coingp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace coingp::cli
