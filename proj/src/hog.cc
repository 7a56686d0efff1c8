#include "featgap/hog.h"

#include <algorithm>
#include <cmath>
#include <future>
#include "json.hpp"
#include <numbers>

#include "featgap/error.h"

namespace featgap {

std::vector<BinDirection> BinDirections(int num_bins) {
  std::vector<BinDirection> dirs(static_cast<std::size_t>(num_bins));
  for (int k = 0; k < num_bins; ++k) {
    const double theta = std::numbers::pi * k / num_bins;
    dirs[k].cos_q12 = static_cast<int>(std::lround(4096.0 * std::cos(theta)));
    dirs[k].sin_q12 = static_cast<int>(std::lround(4096.0 * std::sin(theta)));
  }
  return dirs;
}

GradientField ComputeGradients(const GrayImage& image, const HogConfig& config,
                               OpCounter* counter) {
  if (image.width < 3 || image.height < 3) {
    throw ShapeError("hog: image " + std::to_string(image.width) + "x" +
                     std::to_string(image.height) + " smaller than 3x3");
  }
  config.Validate();
  const int w = image.width;
  const int h = image.height;
  const int nb = config.num_bins;
  const auto dirs = BinDirections(nb);

  GradientField f;
  f.width = w;
  f.height = h;
  f.num_bins = nb;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  f.gx.resize(n);
  f.gy.resize(n);
  f.magnitude.resize(n);
  f.orientation_bin.assign(n, 0);

  OpCounter c;
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0);
      const int xp = std::min(x + 1, w - 1);
      const int gx = int{image.at(xp, y)} - int{image.at(xm, y)};
      const int gy = int{image.at(x, yp)} - int{image.at(x, ym)};
      c.additions += 2;
      const int ax = gx < 0 ? -gx : gx;
      const int ay = gy < 0 ? -gy : gy;
      c.comparisons += 2;
      const int mag = ax + ay;
      c.additions += 1;

      int bin = 0;
      if (nb > 1) {
        long best = -1;
        for (int k = 0; k < nb; ++k) {
          long dot = static_cast<long>(gx) * dirs[k].cos_q12;
          c.multiplications += 1;
          dot += static_cast<long>(gy) * dirs[k].sin_q12;
          c.macs += 1;
          const long ad = dot < 0 ? -dot : dot;
          c.comparisons += 1;
          if (k == 0) {
            best = ad;
          } else {
            c.comparisons += 1;
            if (ad > best) {
              best = ad;
              bin = k;
            }
          }
        }
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      f.gx[i] = gx;
      f.gy[i] = gy;
      f.magnitude[i] = mag;
      f.orientation_bin[i] = bin;
    }
  }
  if (counter) *counter += c;
  return f;
}

CellGrid CellHistograms(const GradientField& field, const HogConfig& config,
                        OpCounter* counter) {
  config.Validate();
  const int cs = config.cell_size;
  CellGrid grid;
  grid.cells_x = field.width / cs;
  grid.cells_y = field.height / cs;
  grid.num_bins = config.num_bins;
  grid.bins.assign(static_cast<std::size_t>(grid.cells_x) * grid.cells_y *
                       grid.num_bins,
                   0.0);
  OpCounter c;
  for (int cy = 0; cy < grid.cells_y; ++cy) {
    for (int cx = 0; cx < grid.cells_x; ++cx) {
      double* hist = grid.bins.data() +
                     (static_cast<std::size_t>(cy) * grid.cells_x + cx) *
                         grid.num_bins;
      for (int y = cy * cs; y < (cy + 1) * cs; ++y) {
        for (int x = cx * cs; x < (cx + 1) * cs; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * field.width + x;
          hist[field.orientation_bin[i]] += field.magnitude[i];
          c.additions += 1;
        }
      }
    }
  }
  if (counter) *counter += c;
  return grid;
}

HogFeatureMap NormalizeBlocks(const CellGrid& grid, const HogConfig& config,
                              OpCounter* counter) {
  config.Validate();
  if (grid.cells_x < 1 || grid.cells_y < 1) {
    throw ShapeError("hog: cannot normalize an empty cell grid");
  }
  const int nb = grid.num_bins;
  const int b = config.block_neighborhood;
  const std::size_t ncells = static_cast<std::size_t>(grid.cells_x) * grid.cells_y;

  OpCounter c;
  std::vector<double> squared(grid.bins.size());
  std::vector<double> energy(ncells, 0.0);
  for (std::size_t cell = 0; cell < ncells; ++cell) {
    double e = 0.0;
    for (int k = 0; k < nb; ++k) {
      const double v = grid.bins[cell * nb + k];
      squared[cell * nb + k] = v * v;
      c.multiplications += 1;
      if (k == 0) {
        e = squared[cell * nb];
      } else {
        e += squared[cell * nb + k];
        c.additions += 1;
      }
    }
    energy[cell] = e;
  }

  HogFeatureMap map;
  map.cells_x = grid.cells_x;
  map.cells_y = grid.cells_y;
  map.feature_length = b * b * nb;
  map.features.resize(ncells * map.feature_length);

  auto clamp_x = [&](int v) { return std::clamp(v, 0, grid.cells_x - 1); };
  auto clamp_y = [&](int v) { return std::clamp(v, 0, grid.cells_y - 1); };

  for (int cy = 0; cy < grid.cells_y; ++cy) {
    for (int cx = 0; cx < grid.cells_x; ++cx) {
      const std::size_t cell = static_cast<std::size_t>(cy) * grid.cells_x + cx;
      double* out = map.features.data() + cell * map.feature_length;
      int factor = 0;
      for (int oy = 0; oy < b; ++oy) {
        for (int ox = 0; ox < b; ++ox, ++factor) {
          // Block whose top-left cell is (cx - (b-1) + ox, cy - (b-1) + oy).
          double block = 0.0;
          bool first = true;
          for (int dy = 0; dy < b; ++dy) {
            for (int dx = 0; dx < b; ++dx) {
              const int bx = clamp_x(cx - (b - 1) + ox + dx);
              const int by = clamp_y(cy - (b - 1) + oy + dy);
              const double e =
                  energy[static_cast<std::size_t>(by) * grid.cells_x + bx];
              if (first) {
                block = e;
                first = false;
              } else {
                block += e;
                c.additions += 1;
              }
            }
          }
          const double denom = std::max(block, 1.0);
          c.comparisons += 1;
          for (int k = 0; k < nb; ++k) {
            const double q = squared[cell * nb + k] / denom;
            const double v = std::sqrt(q);
            c.divisions += 2;
            out[factor * nb + k] = std::min(v, config.truncation);
            c.comparisons += 1;
          }
        }
      }
    }
  }
  if (counter) *counter += c;
  return map;
}

namespace {

// Destination pixel x samples source floor((2x + 1) * W / 2w).
GrayImage ResampleNearest(const GrayImage& src, int w, int h) {
  GrayImage dst(w, h);
  std::vector<int> xs(w);
  for (int x = 0; x < w; ++x) {
    xs[x] = std::min(static_cast<int>((2LL * x + 1) * src.width / (2LL * w)),
                     src.width - 1);
  }
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(static_cast<int>((2LL * y + 1) * src.height / (2LL * h)),
                            src.height - 1);
    for (int x = 0; x < w; ++x) dst.at(x, y) = src.at(xs[x], sy);
  }
  return dst;
}

HogFeatureMap ExtractLevel(const GrayImage& level_image, int level, double scale,
                           const HogConfig& config, OpCounter& counter,
                           bool& has_cells) {
  const GradientField field = ComputeGradients(level_image, config, &counter);
  const CellGrid grid = CellHistograms(field, config, &counter);
  has_cells = grid.cells_x > 0 && grid.cells_y > 0;
  if (!has_cells) return {};
  HogFeatureMap map = NormalizeBlocks(grid, config, &counter);
  map.level = level;
  map.scale = scale;
  map.width = level_image.width;
  map.height = level_image.height;
  return map;
}

}  // namespace

std::vector<GrayImage> BuildPyramid(const GrayImage& image,
                                    const HogConfig& config) {
  std::vector<GrayImage> levels;
  for (const auto& size : PyramidLevelSizes(image.width, image.height, config)) {
    if (levels.empty()) {
      levels.push_back(image);
    } else {
      levels.push_back(ResampleNearest(image, size.width, size.height));
    }
  }
  return levels;
}

HogResult Extract(const GrayImage& image, const HogConfig& config, int threads) {
  if (image.width < 3 || image.height < 3) {
    throw ShapeError("hog: image " + std::to_string(image.width) + "x" +
                     std::to_string(image.height) + " smaller than 3x3");
  }
  const auto sizes = PyramidLevelSizes(image.width, image.height, config);
  const auto pyramid = BuildPyramid(image, config);
  const std::size_t n = pyramid.size();

  std::vector<HogFeatureMap> maps(n);
  std::vector<OpCounter> counters(n);
  std::vector<char> has_cells(n, 0);
  auto work = [&](std::size_t i) {
    bool cells = false;
    maps[i] = ExtractLevel(pyramid[i], static_cast<int>(i), sizes[i].scale,
                           config, counters[i], cells);
    has_cells[i] = cells;
  };

  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    const std::size_t workers = std::min<std::size_t>(threads, n);
    std::vector<std::future<void>> jobs;
    for (std::size_t t = 0; t < workers; ++t) {
      jobs.push_back(std::async(std::launch::async, [&, t] {
        for (std::size_t i = t; i < n; i += workers) work(i);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  HogResult result;
  OpCounter total;
  for (std::size_t i = 0; i < n; ++i) {
    total += counters[i];
    if (has_cells[i]) result.levels.push_back(std::move(maps[i]));
  }
  result.ops = OpCountReport::FromCounter(
      total, static_cast<std::uint64_t>(image.width) * image.height);
  return result;
}

std::string FeaturesToJson(const HogResult& result, const GrayImage& image,
                           const HogConfig& config) {
  using nlohmann::ordered_json;
  ordered_json doc;
  doc["format"] = "featgap-hog-features";
  doc["version"] = 1;
  doc["image"] = {{"width", image.width}, {"height", image.height}};
  ordered_json cfg;
  cfg["cell_size"] = config.cell_size;
  cfg["num_bins"] = config.num_bins;
  cfg["block_neighborhood"] = config.block_neighborhood;
  cfg["truncation"] = config.truncation;
  cfg["pyramid_ratio"] = config.pyramid_ratio;
  cfg["min_level_size"] = config.min_level_size;
  cfg["levels"] = config.levels ? ordered_json(*config.levels) : ordered_json();
  doc["config"] = cfg;
  doc["levels"] = ordered_json::array();
  for (const auto& m : result.levels) {
    ordered_json lj;
    lj["level"] = m.level;
    lj["scale"] = m.scale;
    lj["width"] = m.width;
    lj["height"] = m.height;
    lj["cells_x"] = m.cells_x;
    lj["cells_y"] = m.cells_y;
    lj["feature_length"] = m.feature_length;
    ordered_json cells = ordered_json::array();
    for (int cy = 0; cy < m.cells_y; ++cy) {
      for (int cx = 0; cx < m.cells_x; ++cx) {
        const auto f = m.Cell(cx, cy);
        cells.push_back(ordered_json(std::vector<double>(f.begin(), f.end())));
      }
    }
    lj["cells"] = std::move(cells);
    doc["levels"].push_back(std::move(lj));
  }
  return doc.dump() + "\n";
}

}  // namespace featgap
