#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "coingp/damage.hpp"
#include "coingp/error.hpp"
#include "coingp/fitness.hpp"
#include "coingp/neighborhood.hpp"
#include "coingp/operators.hpp"
#include "coingp/random.hpp"
#include "coingp/tree.hpp"

namespace coingp {

struct EvolutionParams {
  std::size_t population_size = 500;
  std::size_t generations = 500;
  std::size_t tournament_size = 3;
  double mutation_probability = 0.3;
  int max_depth = 8;
  std::uint64_t seed = 1;
  Topology topology = Topology::Moore;

  void validate() const {
    if (tournament_size < 3) throw ValidationError("tournament size must be at least 3");
    if (population_size < tournament_size) {
      throw ValidationError("population size must be at least the tournament size");
    }
    if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0)) {
      throw ValidationError("mutation probability must lie in [0, 1]");
    }
    if (max_depth < 1) throw ValidationError("max depth must be positive");
  }
};

struct Individual {
  GpTree tree;
  double fitness = std::numeric_limits<double>::infinity();
  ScalingCoefficients scaling;
};

struct Population {
  std::vector<Individual> members;

  std::size_t size() const { return members.size(); }
};

/// Unevaluated population from ramped half-and-half.
inline Population init_population(const EvolutionParams& params, Rng& rng) {
  params.validate();
  Population pop;
  for (GpTree& t : ramped_half_and_half(params.population_size, params.max_depth,
                                        frontier_size(params.topology), rng)) {
    pop.members.push_back({std::move(t), std::numeric_limits<double>::infinity(), {}});
  }
  return pop;
}

inline void evaluate_population(Population& pop, FitnessCases& cases) {
  for (Individual& ind : pop.members) {
    const FitnessResult r = cases.evaluate(ind.tree);
    ind.fitness = r.rmse;
    ind.scaling = r.scaling;
  }
}

/// Lower RMSE first, then smaller tree.
inline bool fitter(const Individual& x, const Individual& y) {
  if (x.fitness != y.fitness) return x.fitness < y.fitness;
  return x.tree.size() < y.tree.size();
}

/// One steady-state replacement event.
///
/// Samples tournament_size distinct members, breeds the best two by a random
/// crossover followed by subtree mutation, and overwrites the worst sampled
/// member with the evaluated offspring. Returns the overwritten index.
inline std::size_t tournament_step(Population& pop, const EvolutionParams& params,
                                   FitnessCases& cases, Rng& rng) {
  if (pop.size() < 3 || pop.size() < params.tournament_size) {
    throw ValidationError("tournament needs at least 3 members, population has " +
                          std::to_string(pop.size()));
  }
  std::vector<std::size_t> picked;
  picked.reserve(params.tournament_size);
  while (picked.size() < params.tournament_size) {
    const std::size_t i = rng.index(pop.size());
    if (std::find(picked.begin(), picked.end(), i) == picked.end()) picked.push_back(i);
  }
  // Stable sort keeps sampling order as the last tie-breaker.
  std::stable_sort(picked.begin(), picked.end(), [&](std::size_t x, std::size_t y) {
    return fitter(pop.members[x], pop.members[y]);
  });
  const GpTree& best = pop.members[picked[0]].tree;
  const GpTree& second = pop.members[picked[1]].tree;
  const CrossoverKind kind = random_crossover_kind(rng);
  GpTree child = crossover(best, second, kind, params.max_depth, rng);
  child = mutate(child, params.mutation_probability, params.max_depth,
                 frontier_size(params.topology), rng);
  const FitnessResult r = cases.evaluate(child);
  const std::size_t worst = picked.back();
  pop.members[worst] = {std::move(child), r.rmse, r.scaling};
  return worst;
}

struct EvolutionResult {
  GpTree best_tree;
  ScalingCoefficients scaling;
  double training_rmse = 0.0;
  /// Best-so-far training RMSE after each generation.
  std::vector<double> history;
};

/// Steady-state run; one generation is population_size replacement events.
/// The best individual ever seen is returned with its training scaling.
inline EvolutionResult evolve(const TrainingSet& training_set, const EvolutionParams& params,
                              Rng& rng) {
  params.validate();
  if (training_set.empty()) throw ValidationError("evolve: empty training set");
  if (training_set.topology != params.topology) {
    throw ValidationError("evolve: training set topology differs from parameters");
  }
  FitnessCases cases(training_set);
  Population pop = init_population(params, rng);
  evaluate_population(pop, cases);

  Individual best = *std::min_element(pop.members.begin(), pop.members.end(), fitter);
  EvolutionResult result;
  result.history.reserve(params.generations);
  for (std::size_t g = 0; g < params.generations; ++g) {
    for (std::size_t step = 0; step < params.population_size; ++step) {
      const std::size_t slot = tournament_step(pop, params, cases, rng);
      if (fitter(pop.members[slot], best)) best = pop.members[slot];
    }
    result.history.push_back(best.fitness);
  }
  result.best_tree = std::move(best.tree);
  result.scaling = best.scaling;
  result.training_rmse = best.fitness;
  return result;
}

}  // namespace coingp
