#ifndef FEATGAP_HOG_H_
#define FEATGAP_HOG_H_

// Instrumented histogram-of-oriented-gradients extraction over an image
// pyramid.
//
// Pipeline per pyramid level:
//   1. [-1 0 1] gradients with replicated-edge borders.
//   2. L1 magnitude |gx| + |gy| and unsigned orientation bin, chosen as the
//      bin direction with the largest |projection| (integer Q12 directions).
//   3. Hard-assigned magnitude votes into non-overlapping cells; partial
//      border cells are dropped.
//   4. Each cell normalized by the L2 energy of the block^2 blocks that
//      contain it (block indices clamped at the grid border), then truncated.
//
// Everything up to normalization is integer-exact, so histogram mass is
// conserved exactly and scaling the image by k leaves features bit-identical.

#include <span>
#include <string>
#include <vector>

#include "featgap/image.h"
#include "featgap/op_count.h"
#include "featgap/workload.h"

namespace featgap {

struct GradientField {
  int width = 0;
  int height = 0;
  int num_bins = 0;
  std::vector<int> gx;
  std::vector<int> gy;
  std::vector<int> magnitude;
  // In [0, num_bins); 0 wherever magnitude is 0.
  std::vector<int> orientation_bin;
};

struct CellGrid {
  int cells_x = 0;
  int cells_y = 0;
  int num_bins = 0;
  // cells_y * cells_x * num_bins, cell-major.
  std::vector<double> bins;

  std::span<const double> Cell(int cx, int cy) const {
    return {bins.data() + (static_cast<std::size_t>(cy) * cells_x + cx) * num_bins,
            static_cast<std::size_t>(num_bins)};
  }
};

struct HogFeatureMap {
  int level = 0;
  double scale = 1.0;
  int width = 0;
  int height = 0;
  int cells_x = 0;
  int cells_y = 0;
  int feature_length = 0;
  // cells_y * cells_x * feature_length, each component in [0, truncation].
  std::vector<double> features;

  std::span<const double> Cell(int cx, int cy) const {
    return {features.data() +
                (static_cast<std::size_t>(cy) * cells_x + cx) * feature_length,
            static_cast<std::size_t>(feature_length)};
  }
};

struct HogResult {
  std::vector<HogFeatureMap> levels;
  OpCountReport ops;
};

// Bin direction coefficients (cos, sin) in Q12, bin k centered at k*180/num_bins.
struct BinDirection {
  int cos_q12 = 0;
  int sin_q12 = 0;
};
std::vector<BinDirection> BinDirections(int num_bins);

// Throws ShapeError for images smaller than 3x3. `counter` may be null.
GradientField ComputeGradients(const GrayImage& image, const HogConfig& config,
                               OpCounter* counter = nullptr);

CellGrid CellHistograms(const GradientField& field, const HogConfig& config,
                        OpCounter* counter = nullptr);

// Requires a non-empty grid.
HogFeatureMap NormalizeBlocks(const CellGrid& grid, const HogConfig& config,
                              OpCounter* counter = nullptr);

// Level 0 is the input; level k is nearest-neighbour resampled from the input
// to floor(dim * ratio^k).
std::vector<GrayImage> BuildPyramid(const GrayImage& image,
                                    const HogConfig& config);

// Levels are processed on up to `threads` workers; per-level counters are
// summed in level order, so results do not depend on scheduling.
HogResult Extract(const GrayImage& image, const HogConfig& config,
                  int threads = 1);

// Feature document (JSON). Deterministic byte-for-byte for identical inputs.
std::string FeaturesToJson(const HogResult& result, const GrayImage& image,
                           const HogConfig& config);

}  // namespace featgap

#endif  // FEATGAP_HOG_H_
