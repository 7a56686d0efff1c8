#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "featgap/data_paths.h"
#include "featgap/error.h"
#include "featgap/hog.h"
#include "featgap/image.h"
#include "featgap/verify.h"
#include "featgap/workload.h"

namespace fg = featgap;

namespace {

fg::HogConfig DefaultHog() {
  return std::get<fg::HogConfig>(fg::ResolveWorkload("hog").descriptor);
}

fg::GrayImage Random(std::mt19937_64& rng, int w, int h, int max_value = 255) {
  fg::GrayImage img(w, h);
  std::uniform_int_distribution<int> d(0, max_value);
  for (auto& s : img.samples) s = static_cast<std::uint8_t>(d(rng));
  return img;
}

int Px(const fg::GrayImage& img, int x, int y) {
  x = std::min(std::max(x, 0), img.width - 1);
  y = std::min(std::max(y, 0), img.height - 1);
  return img.samples[static_cast<std::size_t>(y) * img.width + x];
}

// Bin whose direction has the largest |projection|; first index on ties.
int OracleBin(int gx, int gy, int nb) {
  if (gx == 0 && gy == 0) return 0;
  int best = 0;
  long best_v = -1;
  for (int k = 0; k < nb; ++k) {
    const long c = std::lround(4096.0 * std::cos(std::numbers::pi * k / nb));
    const long s = std::lround(4096.0 * std::sin(std::numbers::pi * k / nb));
    const long v = std::labs(gx * c + gy * s);
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("gradients match a naive centered-difference oracle") {
  std::mt19937_64 rng(1);
  const auto cfg = DefaultHog();
  for (int t = 0; t < 20; ++t) {
    const auto img = Random(rng, 3 + t, 5 + 2 * t);
    const auto f = fg::ComputeGradients(img, cfg);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
        const int gx = Px(img, x + 1, y) - Px(img, x - 1, y);
        const int gy = Px(img, x, y + 1) - Px(img, x, y - 1);
        REQUIRE(f.gx[i] == gx);
        REQUIRE(f.gy[i] == gy);
        REQUIRE(f.magnitude[i] == std::abs(gx) + std::abs(gy));
        REQUIRE(f.orientation_bin[i] == OracleBin(gx, gy, cfg.num_bins));
        REQUIRE(f.orientation_bin[i] < cfg.num_bins);
      }
    }
  }
}

TEST_CASE("bin directions") {
  const auto d = fg::BinDirections(9);
  REQUIRE(d.size() == 9);
  CHECK(d[0].cos_q12 == 4096);
  CHECK(d[0].sin_q12 == 0);
  CHECK(d[1].cos_q12 == std::lround(4096 * std::cos(std::numbers::pi / 9)));
}

TEST_CASE("orientation of pure horizontal and vertical edges") {
  fg::GrayImage img(5, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) img.at(x, y) = static_cast<std::uint8_t>(x * 10);
  }
  const auto f = fg::ComputeGradients(img, DefaultHog());
  CHECK(f.orientation_bin[12] == 0);
  fg::GrayImage v(5, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) v.at(x, y) = static_cast<std::uint8_t>(y * 10);
  }
  const auto g = fg::ComputeGradients(v, DefaultHog());
  CHECK(g.orientation_bin[12] == 4);  // 80 and 100 degrees tie, first wins
}

TEST_CASE("cell histograms match a naive oracle and conserve mass") {
  std::mt19937_64 rng(2);
  const auto cfg = DefaultHog();
  for (int t = 0; t < 100; ++t) {
    std::uniform_int_distribution<int> dim(3, 70);
    const auto img = Random(rng, dim(rng), dim(rng));
    const auto f = fg::ComputeGradients(img, cfg);
    const auto grid = fg::CellHistograms(f, cfg);
    REQUIRE(grid.cells_x == img.width / 8);
    REQUIRE(grid.cells_y == img.height / 8);
    for (int cy = 0; cy < grid.cells_y; ++cy) {
      for (int cx = 0; cx < grid.cells_x; ++cx) {
        std::vector<double> hist(cfg.num_bins, 0.0);
        double mass = 0.0;
        for (int y = cy * 8; y < cy * 8 + 8; ++y) {
          for (int x = cx * 8; x < cx * 8 + 8; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * f.width + x;
            hist[f.orientation_bin[i]] += f.magnitude[i];
            mass += f.magnitude[i];
          }
        }
        const auto cell = grid.Cell(cx, cy);
        REQUIRE(std::vector<double>(cell.begin(), cell.end()) == hist);
        double sum = 0.0;
        for (double v : cell) sum += v;
        REQUIRE(sum == mass);
      }
    }
  }
}

TEST_CASE("normalized features lie in [0, truncation]") {
  std::mt19937_64 rng(3);
  const auto cfg = DefaultHog();
  const auto r = fg::Extract(Random(rng, 96, 72), cfg);
  REQUIRE(!r.levels.empty());
  for (const auto& l : r.levels) {
    CHECK(l.feature_length == 36);
    CHECK(l.features.size() == static_cast<std::size_t>(l.cells_x) * l.cells_y * 36);
    for (double v : l.features) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= cfg.truncation);
    }
  }
}

TEST_CASE("blank image gives all-zero features") {
  const auto r = fg::Extract(fg::GrayImage(40, 40, 128), DefaultHog());
  for (const auto& l : r.levels) {
    for (double v : l.features) REQUIRE(v == 0.0);
  }
}

TEST_CASE("illumination invariance for k = 2 and 3") {
  std::mt19937_64 rng(4);
  const auto cfg = DefaultHog();
  for (int t = 0; t < 12; ++t) {
    std::uniform_int_distribution<int> dim(16, 90);
    const auto img = Random(rng, dim(rng), dim(rng), 85);
    const auto base = fg::Extract(img, cfg);
    for (int k : {2, 3}) {
      fg::GrayImage s = img;
      for (auto& v : s.samples) v = static_cast<std::uint8_t>(v * k);
      const auto other = fg::Extract(s, cfg);
      REQUIRE(other.levels.size() == base.levels.size());
      for (std::size_t i = 0; i < base.levels.size(); ++i) {
        REQUIRE(other.levels[i].features == base.levels[i].features);
      }
    }
  }
}

TEST_CASE("analytical count equals instrumented count") {
  std::mt19937_64 rng(5);
  auto cfg = DefaultHog();
  const std::vector<std::pair<int, int>> sizes = {{3, 3},     {7, 9},    {16, 16},  {64, 64},
                                                  {127, 45},  {33, 257}, {200, 150}, {321, 240}};
  for (const auto& [w, h] : sizes) {
    const auto r = fg::Extract(Random(rng, w, h), cfg, 3);
    CHECK(r.ops == fg::HogGopPerMpixel(cfg, w, h));
  }
  cfg.num_bins = 4;
  cfg.cell_size = 6;
  cfg.block_neighborhood = 3;
  cfg.levels = 4;
  for (const auto& [w, h] : sizes) {
    const auto r = fg::Extract(Random(rng, w, h), cfg, 2);
    CHECK(r.ops == fg::HogGopPerMpixel(cfg, w, h));
  }
}

TEST_CASE("results do not depend on thread count") {
  std::mt19937_64 rng(6);
  const auto img = Random(rng, 150, 110);
  const auto cfg = DefaultHog();
  const auto a = fg::Extract(img, cfg, 1);
  const auto b = fg::Extract(img, cfg, 5);
  CHECK(a.ops == b.ops);
  CHECK(fg::FeaturesToJson(a, img, cfg) == fg::FeaturesToJson(b, img, cfg));
}

TEST_CASE("golden feature document is byte-stable") {
  const auto img = fg::ReadPgm(fg::DataDir() / fg::kFixtureImage);
  CHECK(img.width == 64);
  CHECK(img.height == 64);
  const auto golden = fg::ReadTextFile(fg::DataDir() / fg::kFixtureGolden);
  const auto cfg = DefaultHog();
  CHECK(fg::FeaturesToJson(fg::Extract(img, cfg, 1), img, cfg) == golden);
  CHECK(fg::FeaturesToJson(fg::Extract(img, cfg, 4), img, cfg) == golden);
}

TEST_CASE("tiny images are rejected") {
  CHECK_THROWS_AS(fg::Extract(fg::GrayImage(2, 2), DefaultHog()), fg::ShapeError);
  CHECK_THROWS_AS(fg::Extract(fg::GrayImage(10, 2), DefaultHog()), fg::ShapeError);
  CHECK_NOTHROW(fg::Extract(fg::GrayImage(3, 3), DefaultHog()));
}

TEST_CASE("pyramid levels") {
  std::mt19937_64 rng(7);
  const auto img = Random(rng, 64, 40);
  const auto cfg = DefaultHog();
  const auto p = fg::BuildPyramid(img, cfg);
  const auto sizes = fg::PyramidLevelSizes(64, 40, cfg);
  REQUIRE(p.size() == sizes.size());
  CHECK(p[0] == img);
  for (std::size_t k = 0; k < p.size(); ++k) {
    CHECK(p[k].width == sizes[k].width);
    CHECK(p[k].height == sizes[k].height);
  }
  const auto r = fg::Extract(img, cfg);
  CHECK(r.levels.front().scale == 1.0);
  for (std::size_t i = 1; i < r.levels.size(); ++i) {
    CHECK(r.levels[i].scale < r.levels[i - 1].scale);
  }
}

TEST_CASE("PGM parsing") {
  std::string ok = "P5\n# comment\n3 2\n255\n";
  ok += std::string("\x01\x02\x03\x04\x05\x06", 6);
  const auto img = fg::ParsePgm(ok);
  CHECK(img.width == 3);
  CHECK(img.height == 2);
  CHECK(img.at(2, 1) == 6);
  CHECK(fg::ParsePgm(fg::EncodePgm(img)) == img);
  CHECK_THROWS_AS(fg::ParsePgm("P2\n3 2\n255\n123456"), fg::ParseError);
  CHECK_THROWS_AS(fg::ParsePgm("P5\n3 2\n255\n\x01\x02"), fg::ParseError);
  CHECK_THROWS_AS(fg::ParsePgm("P5\n3 2\n65535\n"), fg::ParseError);
  CHECK_THROWS_AS(fg::ParsePgm("P5\n0 2\n255\n"), fg::ParseError);
  CHECK_THROWS_AS(fg::ParsePgm(""), fg::ParseError);
}

TEST_CASE("feature document layout") {
  std::mt19937_64 rng(8);
  const auto img = Random(rng, 32, 24);
  const auto cfg = DefaultHog();
  const auto doc = fg::FeaturesToJson(fg::Extract(img, cfg), img, cfg);
  CHECK(doc.rfind("{\"format\":\"featgap-hog-features\",\"version\":1,", 0) == 0);
  CHECK(doc.back() == '\n');
}
