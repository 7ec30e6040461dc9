#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "coingp/cli.hpp"
#include "coingp/coingp.hpp"
#include "test_support.hpp"

namespace coingp {
namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { unsetenv(cli::kSeedEnv); }

  std::string write_image(const std::string& name, const GrayImage& img) {
    const std::string path = dir.file(name);
    write_pgm_file(path, img);
    return path;
  }

  std::string damage(const std::string& image, int per_column, std::uint64_t seed) {
    const Outcome r = run_cli({"damage", "--image", image, "--out-image", dir.file("dmg.pgm"),
                               "--out-mask", dir.file("mask.pgm"), "--per-column",
                               std::to_string(per_column), "--seed", std::to_string(seed)});
    EXPECT_EQ(r.code, 0) << r.err;
    return dir.file("mask.pgm");
  }

  testing::TempDir dir;
};

TEST_F(CliTest, DamageReportsPaperScaleCount) {
  const std::string img = write_image("big.pgm", testing::textured_image(256, 256, 1));
  const Outcome r = run_cli({"damage", "--image", img, "--out-image", dir.file("d.pgm"),
                             "--out-mask", dir.file("m.pgm")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("removed 12700 (19.38%)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("# damage configuration"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir.file("m.csv")));
  const MissingSet m = mask_from_pgm(read_pgm_file(dir.file("m.pgm")));
  EXPECT_EQ(mask_from_csv(read_file(dir.file("m.csv")), 256, 256), m);
  const GrayImage damaged = read_pgm_file(dir.file("d.pgm"));
  for (PixelCoord p : m.coords()) ASSERT_EQ(damaged.at(p), 0);
}

TEST_F(CliTest, DamageSmallImageAndInfeasibleCount) {
  const std::string img = write_image("small.pgm", testing::textured_image(64, 64, 2));
  const Outcome ok = run_cli({"damage", "--image", img, "--out-image", dir.file("d.pgm"),
                              "--out-mask", dir.file("m.pgm"), "--per-column", "25"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("removed 775 "), std::string::npos) << ok.out;
  const Outcome bad = run_cli({"damage", "--image", img, "--out-image", dir.file("d.pgm"),
                               "--out-mask", dir.file("m.pgm"), "--per-column", "200"});
  EXPECT_EQ(bad.code, 3);
  EXPECT_FALSE(bad.err.empty());
}

TEST_F(CliTest, TrainIsDeterministicAndWritesLoadableTree) {
  const std::string img = write_image("tex.pgm", testing::textured_image(32, 32, 3));
  const std::string mask = damage(img, 5, 4);
  const std::vector<std::string> args{"train", "--image", img, "--mask", mask, "--pop", "20",
                                      "--gens", "2", "--seed", "9", "--out-tree"};
  auto a = args;
  a.push_back(dir.file("a.txt"));
  auto b = args;
  b.push_back(dir.file("b.txt"));
  const Outcome ra = run_cli(a);
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(run_cli(b).code, 0);
  EXPECT_EQ(read_file(dir.file("a.txt")), read_file(dir.file("b.txt")));
  EXPECT_NE(ra.out.find("training set size: "), std::string::npos);
  EXPECT_NE(ra.out.find("training RMSE: "), std::string::npos);
  EXPECT_EQ(read_predictor_file(dir.file("a.txt")).topology, Topology::Moore);
}

TEST_F(CliTest, TrainWithZeroGenerations) {
  const std::string img = write_image("tex.pgm", testing::textured_image(20, 20, 4));
  const std::string mask = damage(img, 3, 1);
  const Outcome r = run_cli({"train", "--image", img, "--mask", mask, "--pop", "10", "--gens",
                             "0", "--out-tree", dir.file("t.txt")});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, TrainRejectsMaskViolatingSeparation) {
  const GrayImage img = testing::textured_image(12, 12, 5);
  const std::string image = write_image("tex.pgm", img);
  write_file(dir.file("bad.csv"), "row,col\n3,3\n4,4\n");
  const Outcome r = run_cli({"train", "--image", image, "--mask", dir.file("bad.csv"), "--pop",
                             "10", "--gens", "1", "--out-tree", dir.file("t.txt")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("(3,3)"), std::string::npos) << r.err;
  EXPECT_FALSE(std::filesystem::exists(dir.file("t.txt")));
  // The same mask is legal under the Von Neumann rule.
  EXPECT_EQ(run_cli({"train", "--image", image, "--mask", dir.file("bad.csv"), "--topology",
                     "von-neumann", "--pop", "10", "--gens", "1", "--out-tree",
                     dir.file("t.txt")})
                .code,
            0);
}

TEST_F(CliTest, ArityMismatchIsRejected) {
  const std::string img = write_image("tex.pgm", testing::textured_image(20, 20, 6));
  const std::string mask = damage(img, 3, 2);
  write_predictor_file(dir.file("moore.txt"),
                       {parse_sexpr("(add v7 v0)"), {}, Topology::Moore});
  const std::vector<std::string> common{"--image", img, "--mask", mask, "--tree",
                                        dir.file("moore.txt"), "--topology", "von-neumann"};
  std::vector<std::string> evaluate{"evaluate"};
  evaluate.insert(evaluate.end(), common.begin(), common.end());
  std::vector<std::string> recon{"reconstruct", "--out", dir.file("r.pgm")};
  recon.insert(recon.end(), common.begin(), common.end());
  for (const auto& args : {evaluate, recon}) {
    const Outcome r = run_cli(args);
    EXPECT_EQ(r.code, 3) << args[0];
    EXPECT_NE(r.err.find("arity mismatch"), std::string::npos) << r.err;
  }
  EXPECT_FALSE(std::filesystem::exists(dir.file("r.pgm")));
}

TEST_F(CliTest, EvaluateOnUniformImageIsExact) {
  const std::string img = write_image("flat.pgm", GrayImage(20, 20, 128));
  const std::string mask = damage(img, 3, 3);
  write_predictor_file(dir.file("t.txt"), {parse_sexpr("v0"), {}, Topology::Moore});
  const Outcome r = run_cli(
      {"evaluate", "--image", img, "--mask", mask, "--tree", dir.file("t.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("test RMSE (tree): 0\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("test RMSE (baseline moore): 0\n"), std::string::npos) << r.out;
}

TEST_F(CliTest, ReconstructDiffIsZeroOutsideMissingSet) {
  const std::string img = write_image("tex.pgm", testing::textured_image(20, 20, 7));
  const std::string mask = damage(img, 3, 4);
  write_predictor_file(dir.file("t.txt"), {parse_sexpr("(avg v1 v6)"), {}, Topology::Moore});
  const Outcome r = run_cli({"reconstruct", "--image", img, "--mask", mask, "--tree",
                             dir.file("t.txt"), "--out", dir.file("recon.pgm")});
  ASSERT_EQ(r.code, 0) << r.err;
  const GrayImage diff = read_pgm_file(dir.file("recon_diff.pgm"));
  const MissingSet m = mask_from_pgm(read_pgm_file(mask));
  for (int row = 0; row < 20; ++row) {
    for (int col = 0; col < 20; ++col) {
      if (!m.contains({row, col})) {
        ASSERT_EQ(diff.at(row, col), 0);
      }
    }
  }
}

TEST_F(CliTest, ExperimentWritesArtifactsAndSummary) {
  const std::string img = write_image("tex.pgm", testing::textured_image(24, 24, 8));
  const Outcome r = run_cli({"experiment", "--image", img, "--runs", "3", "--per-column", "4",
                             "--pop", "20", "--gens", "2", "--topology", "both", "--jobs", "1",
                             "--out-dir", dir.file("out")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const std::string topo : {"moore", "von-neumann"}) {
    const std::string stem = dir.file("out") + "/tex_" + topo;
    for (const std::string suffix :
         {"_runs.csv", "_hist.csv", "_summary.json", "_tree_run0.txt", "_tree_run2.txt"}) {
      EXPECT_TRUE(std::filesystem::exists(stem + suffix)) << stem + suffix;
    }
    const auto json = nlohmann::json::parse(read_file(stem + "_summary.json"));
    std::vector<double> test;
    std::istringstream runs(read_file(stem + "_runs.csv"));
    std::string line;
    std::getline(runs, line);
    while (std::getline(runs, line)) test.push_back(std::stod(line.substr(line.rfind(',') + 1)));
    ASSERT_EQ(test.size(), 3u);
    EXPECT_EQ(json["test_rmse"]["median"].get<double>(), median(test));
  }
}

TEST_F(CliTest, ConfigFileAndEnvironmentPrecedence) {
  const std::string img = write_image("tex.pgm", testing::textured_image(30, 30, 9));
  write_file(dir.file("c.cfg"), "# damage settings\nper_column = 6\nseed = 5\n");
  const auto mask_for = [&](std::vector<std::string> extra) {
    std::vector<std::string> args{"damage", "--image", img, "--out-image", dir.file("d.pgm"),
                                  "--out-mask", dir.file("m.pgm")};
    args.insert(args.end(), extra.begin(), extra.end());
    const Outcome r = run_cli(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return std::make_pair(r.out, mask_from_pgm(read_pgm_file(dir.file("m.pgm"))));
  };

  const auto [cfg_out, cfg_mask] = mask_for({"--config", dir.file("c.cfg")});
  EXPECT_NE(cfg_out.find("per-column=6"), std::string::npos) << cfg_out;
  EXPECT_NE(cfg_out.find("seed=5"), std::string::npos);

  const auto [flag_out, flag_mask] = mask_for({"--config", dir.file("c.cfg"), "--seed", "7"});
  EXPECT_NE(flag_out.find("seed=7"), std::string::npos);
  EXPECT_NE(flag_mask, cfg_mask);

  setenv(cli::kSeedEnv, "5", 1);
  const auto [env_out, env_mask] = mask_for({"--per-column", "6"});
  EXPECT_NE(env_out.find("seed=5"), std::string::npos);
  EXPECT_EQ(env_mask, cfg_mask);
  const auto [both_out, both_mask] = mask_for({"--per-column", "6", "--seed", "7"});
  EXPECT_EQ(both_mask, flag_mask);
  unsetenv(cli::kSeedEnv);

  const auto [default_out, default_mask] = mask_for({"--per-column", "6"});
  EXPECT_NE(default_out.find("seed=1\n"), std::string::npos);
}

TEST_F(CliTest, ConfigRejectsUnknownKey) {
  const std::string img = write_image("tex.pgm", testing::textured_image(10, 10, 1));
  write_file(dir.file("c.cfg"), "frobnicate = 3\n");
  const Outcome r = run_cli({"damage", "--image", img, "--out-image", dir.file("d.pgm"),
                             "--out-mask", dir.file("m.pgm"), "--config", dir.file("c.cfg")});
  EXPECT_EQ(r.code, 3);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"damage"}).code, 2);
  EXPECT_EQ(run_cli({"damage", "--image", "x", "--bogus"}).code, 2);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
  EXPECT_EQ(run_cli({"damage", "--image", dir.file("missing.pgm"), "--out-image",
                     dir.file("d.pgm"), "--out-mask", dir.file("m.pgm")})
                .code,
            4);
  EXPECT_EQ(run_cli({"damage", "--image", "x", "--out-image", "y", "--out-mask", "z", "--config",
                     dir.file("absent.cfg")})
                .code,
            4);
  write_file(dir.file("bad.pgm"), "P5 2 2 65535\n");
  const Outcome fmt = run_cli({"damage", "--image", dir.file("bad.pgm"), "--out-image",
                               dir.file("d.pgm"), "--out-mask", dir.file("m.pgm")});
  EXPECT_EQ(fmt.code, 3);
  EXPECT_NE(fmt.err.find("unsupported maxval"), std::string::npos);
}

}  // namespace
}  // namespace coingp
