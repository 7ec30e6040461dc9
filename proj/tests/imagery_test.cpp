#include <gtest/gtest.h>

#include <string>

#include "coingp/imagery.hpp"
#include "test_support.hpp"

namespace coingp {
namespace {

std::string p5(const std::string& header, std::initializer_list<int> bytes) {
  std::string s = header;
  for (int b : bytes) s.push_back(static_cast<char>(b));
  return s;
}

PgmError::Kind load_error_kind(const std::string& bytes) {
  try {
    load_pgm(bytes);
  } catch (const PgmError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a PgmError";
  return PgmError::Kind::MalformedHeader;
}

TEST(LoadPgm, DecodesBinaryRaster) {
  const GrayImage img = load_pgm(p5("P5 2 2 255\n", {0, 255, 17, 34}));
  EXPECT_EQ(img.width(), 2);
  EXPECT_EQ(img.height(), 2);
  EXPECT_EQ(std::vector<std::uint8_t>(img.pixels().begin(), img.pixels().end()),
            (std::vector<std::uint8_t>{0, 255, 17, 34}));
  EXPECT_EQ(img.at(1, 0), 17);
}

TEST(LoadPgm, MinimalImage) {
  const GrayImage img = load_pgm(p5("P5 1 1 255\n", {7}));
  EXPECT_EQ(img, GrayImage(1, 1, std::vector<std::uint8_t>{7}));
}

TEST(LoadPgm, AcceptsAsciiWithComments) {
  const GrayImage img = load_pgm("P2\n# a comment\n3 1\n# another\n255\n1 20\n255\n");
  EXPECT_EQ(img, GrayImage(3, 1, std::vector<std::uint8_t>{1, 20, 255}));
}

TEST(LoadPgm, RejectsEachFailureDistinctly) {
  EXPECT_EQ(load_error_kind("P5 2 2 65535\n" + std::string(8, '\0')),
            PgmError::Kind::UnsupportedMaxval);
  EXPECT_EQ(load_error_kind("P6 2 2 255\n" + std::string(12, '\0')),
            PgmError::Kind::MalformedHeader);
  EXPECT_EQ(load_error_kind("P5 2 x 255\n"), PgmError::Kind::MalformedHeader);
  EXPECT_EQ(load_error_kind(p5("P5 2 2 255\n", {1, 2, 3})), PgmError::Kind::TruncatedData);
  EXPECT_EQ(load_error_kind("P2 2 2 255\n1 2 3"), PgmError::Kind::TruncatedData);
}

TEST(LoadPgm, UnsupportedMaxvalMessage) {
  try {
    load_pgm("P5 1 1 65535\n\x01\x02");
    FAIL();
  } catch (const PgmError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported maxval"), std::string::npos);
  }
}

TEST(SavePgm, StartsWithMagicAndRoundTrips) {
  const GrayImage one(1, 1, std::vector<std::uint8_t>{7});
  const std::string bytes = save_pgm(one);
  EXPECT_EQ(bytes.substr(0, 2), "P5");
  EXPECT_EQ(load_pgm(bytes), one);

  const GrayImage four(2, 2, std::vector<std::uint8_t>{0, 255, 17, 34});
  EXPECT_EQ(load_pgm(save_pgm(four)), four);
}

TEST(SavePgm, RoundTripPropertyOnRandomImages) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 1 + static_cast<int>(rng.index(40));
    const int h = 1 + static_cast<int>(rng.index(40));
    const GrayImage img = testing::random_image(w, h, rng);
    ASSERT_EQ(load_pgm(save_pgm(img)), img) << w << "x" << h;
  }
}

TEST(DiffImage, Examples) {
  const GrayImage a(1, 3, std::vector<std::uint8_t>{100, 0, 50});
  const GrayImage b(1, 3, std::vector<std::uint8_t>{103, 200, 50});
  const GrayImage d = diff_image(a, b, 10);
  EXPECT_EQ(d.at(0, 0), 30);
  EXPECT_EQ(d.at(1, 0), 255);
  EXPECT_EQ(d.at(2, 0), 0);
  EXPECT_EQ(diff_image(a, a, 10), GrayImage(1, 3, 0));
}

TEST(DiffImage, SymmetricAndZeroOnSelf) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const GrayImage a = testing::random_image(9, 7, rng);
    const GrayImage b = testing::random_image(9, 7, rng);
    ASSERT_EQ(diff_image(a, b, 3), diff_image(b, a, 3));
    ASSERT_EQ(diff_image(a, a, 1), GrayImage(9, 7, 0));
  }
}

TEST(DiffImage, DimensionMismatch) {
  EXPECT_THROW(diff_image(GrayImage(2, 2), GrayImage(2, 3), 10), ValidationError);
}

TEST(GrayImage, RejectsBadShape) {
  EXPECT_THROW(GrayImage(0, 3), ValidationError);
  EXPECT_THROW(GrayImage(2, 2, std::vector<std::uint8_t>{1, 2, 3}), ValidationError);
}

}  // namespace
}  // namespace coingp
