#include <gtest/gtest.h>

#include <vector>

#include "coingp/evolution.hpp"
#include "coingp/operators.hpp"

namespace coingp {
namespace {

GpTree random_tree(Rng& rng, int max_depth = 8, int vars = 8) {
  return grow_tree(static_cast<int>(rng.index(static_cast<std::size_t>(max_depth) + 1)), vars, rng);
}

TEST(InitPopulation, SizeDepthAndDeterminism) {
  EvolutionParams params;
  Rng a(5);
  Rng b(5);
  const Population pa = init_population(params, a);
  const Population pb = init_population(params, b);
  ASSERT_EQ(pa.size(), 500u);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_LE(pa.members[i].tree.depth(), 8);
    EXPECT_EQ(pa.members[i].tree, pb.members[i].tree);
  }
}

TEST(InitPopulation, RampCoversDepthsTwoToSix) {
  EvolutionParams params;
  params.population_size = 100;
  Rng rng(8);
  const Population pop = init_population(params, rng);
  std::vector<int> full_depths;
  for (std::size_t i = 0; i < pop.size(); i += 2) full_depths.push_back(pop.members[i].tree.depth());
  EXPECT_EQ(*std::min_element(full_depths.begin(), full_depths.end()), 2);
  EXPECT_EQ(*std::max_element(full_depths.begin(), full_depths.end()), 6);
}

TEST(InitPopulation, VonNeumannUsesFourVariables) {
  EvolutionParams params;
  params.topology = Topology::VonNeumann;
  Rng rng(6);
  const Population pop = init_population(params, rng);
  int max_var = -1;
  for (const auto& ind : pop.members) max_var = std::max(max_var, ind.tree.max_var_index());
  EXPECT_EQ(max_var, 3);
}

TEST(InitPopulation, ConstantsInUnitRange) {
  Rng rng(7);
  for (const GpTree& t : ramped_half_and_half(300, 8, 8, rng)) {
    for (const Node& n : t.nodes()) {
      if (n.symbol == Symbol::Const) {
        ASSERT_GE(n.value, -1.0);
        ASSERT_LE(n.value, 1.0);
      }
    }
  }
}

TEST(Crossover, OnePointOnIdenticalParentsIsIdentity) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const GpTree a = random_tree(rng);
    ASSERT_EQ(crossover(a, a, CrossoverKind::OnePoint, 8, rng), a);
  }
}

TEST(Crossover, ContextPreservingOnLeavesPicksALeaf) {
  Rng rng(2);
  const GpTree a = parse_sexpr("v1");
  const GpTree b = parse_sexpr("0.25");
  for (int trial = 0; trial < 20; ++trial) {
    const GpTree child = crossover(a, b, CrossoverKind::ContextPreserving, 8, rng);
    ASSERT_TRUE(child == a || child == b);
  }
}

TEST(Crossover, ContextPreservingKeepsCoordinates) {
  // Every shared coordinate of these parents is the root, the left child,
  // or the right child; offspring therefore keep a's root symbol or become b.
  Rng rng(3);
  const GpTree a = parse_sexpr("(add v0 (sin v1))");
  const GpTree b = parse_sexpr("(mul (cos v2) v3)");
  for (int trial = 0; trial < 50; ++trial) {
    const GpTree child = crossover(a, b, CrossoverKind::ContextPreserving, 8, rng);
    const std::string s = to_sexpr(child);
    ASSERT_TRUE(s == "(mul (cos v2) v3)" || s == "(add (cos v2) (sin v1))" ||
                s == "(add v0 v3)" || s == "(add v0 (sin v3))")
        << s;
  }
}

TEST(Crossover, OnePointStaysInCommonRegion) {
  // Roots share arity 2, so the region is {root, left, right}; the right
  // children differ in arity, so (sin v1)'s child is outside the region.
  Rng rng(4);
  const GpTree a = parse_sexpr("(add v0 (sin v1))");
  const GpTree b = parse_sexpr("(mul v2 v3)");
  for (int trial = 0; trial < 50; ++trial) {
    const std::string s = to_sexpr(crossover(a, b, CrossoverKind::OnePoint, 8, rng));
    ASSERT_TRUE(s == "(mul v2 v3)" || s == "(add v2 (sin v1))" || s == "(add v0 v3)") << s;
  }
}

TEST(Crossover, UniformMixesCommonRegionOnly) {
  Rng rng(5);
  const GpTree a = parse_sexpr("(add v0 v1)");
  const GpTree b = parse_sexpr("(mul v2 v3)");
  std::set<std::string> seen;
  for (int trial = 0; trial < 400; ++trial) {
    const GpTree child = crossover(a, b, CrossoverKind::Uniform, 8, rng);
    ASSERT_EQ(child.size(), 3u);
    seen.insert(to_sexpr(child));
  }
  EXPECT_EQ(seen.size(), 8u);  // 2 labels x 2 left x 2 right
}

TEST(Crossover, SizeFairBoundsDonorSize) {
  // A leaf recipient point may only receive subtrees of at most 3 nodes.
  Rng rng(6);
  const GpTree a = parse_sexpr("v0");
  const GpTree b = parse_sexpr("(add (mul (sin v1) v2) (cos v3))");
  for (int trial = 0; trial < 200; ++trial) {
    ASSERT_LE(crossover(a, b, CrossoverKind::SizeFair, 8, rng).size(), 3u);
  }
}

TEST(Crossover, FallsBackToFirstParentWhenDepthCannotBeMet) {
  Rng rng(7);
  const GpTree a = parse_sexpr("(sin (sin v0))");
  const GpTree b = parse_sexpr("(cos (cos (cos v1)))");
  // Any exchange below the root of a exceeds depth 2 unless it is a leaf swap.
  for (int trial = 0; trial < 50; ++trial) {
    const GpTree child = crossover(a, b, CrossoverKind::SimpleSubtree, 2, rng);
    ASSERT_LE(child.depth(), 2);
  }
}

TEST(Crossover, DepthCapHoldsForEveryKind) {
  Rng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const GpTree a = random_tree(rng);
    const GpTree b = random_tree(rng);
    for (CrossoverKind kind : kCrossoverKinds) {
      const GpTree child = crossover(a, b, kind, 8, rng);
      ASSERT_LE(child.depth(), 8) << to_string(kind);
    }
  }
}

TEST(Crossover, Deterministic) {
  Rng setup(9);
  const GpTree a = random_tree(setup);
  const GpTree b = random_tree(setup);
  for (CrossoverKind kind : kCrossoverKinds) {
    Rng r1(10);
    Rng r2(10);
    EXPECT_EQ(crossover(a, b, kind, 8, r1), crossover(a, b, kind, 8, r2));
  }
}

TEST(Mutate, ZeroProbabilityIsIdentity) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const GpTree t = random_tree(rng);
    ASSERT_EQ(mutate(t, 0.0, 8, 8, rng), t);
  }
}

TEST(Mutate, CertainMutationChangesTreesAndRespectsDepth) {
  Rng rng(12);
  int changed = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const GpTree t = random_tree(rng);
    const GpTree m = mutate(t, 1.0, 8, 8, rng);
    ASSERT_LE(m.depth(), 8);
    changed += m == t ? 0 : 1;
  }
  EXPECT_GT(changed, 500);
}

TEST(Mutate, Deterministic) {
  Rng setup(13);
  const GpTree t = random_tree(setup);
  Rng r1(14);
  Rng r2(14);
  EXPECT_EQ(mutate(t, 1.0, 8, 8, r1), mutate(t, 1.0, 8, 8, r2));
}

TEST(Mutate, VonNeumannVariablesStayInRange) {
  Rng rng(15);
  for (int trial = 0; trial < 500; ++trial) {
    const GpTree t = random_tree(rng, 8, 4);
    ASSERT_LT(mutate(t, 1.0, 8, 4, rng).max_var_index(), 4);
  }
}

}  // namespace
}  // namespace coingp
