#ifndef FEATGAP_WORKLOAD_H_
#define FEATGAP_WORKLOAD_H_

// Workload descriptors for both feature families and their analytical
// operation counts.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "featgap/op_count.h"

namespace featgap {

struct ConvLayerShape {
  std::string name;
  int in_channels = 1;
  int out_channels = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int padding = 0;
  // Filter groups; each filter sees in_channels / groups input channels.
  int groups = 1;

  int InChannelsPerGroup() const { return in_channels / groups; }
  // Kernel weights only, biases excluded.
  std::uint64_t WeightCount() const;
};

struct PoolLayerShape {
  std::string name;
  int window = 2;
  int stride = 2;
};

using LayerShape = std::variant<ConvLayerShape, PoolLayerShape>;

struct CnnArchitecture {
  std::string name;
  int input_height = 0;
  int input_width = 0;
  int input_channels = 0;
  std::vector<LayerShape> layers;
  int value_bits = 16;

  std::size_t ConvLayerCount() const;
};

struct Dims {
  int channels = 0;
  int height = 0;
  int width = 0;

  std::uint64_t Elements() const {
    return static_cast<std::uint64_t>(channels) * height * width;
  }
  bool operator==(const Dims&) const = default;
};

struct LayerTrace {
  std::size_t layer_index = 0;
  std::string name;
  bool is_conv = false;
  Dims input;
  Dims output;
};

struct ShapeTrace {
  Dims input;
  std::vector<LayerTrace> layers;
};

// Hand-crafted pipeline parameters. `levels` empty means an unbounded pyramid
// for the analytical model; extraction always stops at `min_level_size`.
struct HogConfig {
  std::string name = "hog";
  int cell_size = 8;
  int num_bins = 9;
  int block_neighborhood = 2;
  double truncation = 0.2;
  double pyramid_ratio = 0.93303299153680741;  // 2^(-1/10)
  int min_level_size = 16;
  std::optional<int> levels;
  // Complexity reported for the hardware implementation (chip op convention).
  std::optional<double> reference_gop_per_mpixel;

  // Throws DomainError on the first violated invariant.
  void Validate() const;
  int FeatureLength() const {
    return block_neighborhood * block_neighborhood * num_bins;
  }
};

struct Workload {
  std::string name;
  std::variant<CnnArchitecture, HogConfig> descriptor;
};

// Output extent of a strided window; throws ShapeError naming `layer` if the
// window does not tile the padded input exactly.
int ConvOutputExtent(int input, int kernel, int stride, int padding,
                     std::string_view layer);
int PoolOutputExtent(int input, int window, int stride, std::string_view layer);

std::uint64_t ConvLayerMacs(const ConvLayerShape& layer, int input_h,
                            int input_w);

// Propagates dims through every layer. Throws ShapeError on channel mismatch,
// non-integer output dims or vanishing spatial dims.
ShapeTrace ValidateArchitecture(const CnnArchitecture& arch);

// Conv-layer MACs only (pool, activation and bias excluded), normalized by
// input-image pixels.
OpCountReport ArchitectureGopPerMpixel(const CnnArchitecture& arch);

// Work outside the GOP/Mpixel convention: ReLU and max-pool comparisons and
// bias additions.
OpCounter ArchitectureAuxiliaryOps(const CnnArchitecture& arch);

// Kernel weights plus biases over all conv layers.
std::uint64_t ArchitectureParameterCount(const CnnArchitecture& arch);

// Sum_{k<levels} ratio^(2k), or 1 / (1 - ratio^2) when unbounded.
double PyramidAreaMultiplier(double ratio, std::optional<int> levels);

// Per-stage operation table of the HOG pipeline. Counts are charged per
// image pixel (gradient, magnitude, orientation), per pixel inside a full
// cell (histogram vote) and per cell (block normalization).
struct HogOpTable {
  OpCounter per_pixel;
  OpCounter per_cell_pixel;
  OpCounter per_cell;
};

HogOpTable HogOperationTable(const HogConfig& config);

// Level dimensions in pyramid order: level k is floor(dim * ratio^k); stops
// when either dim drops below min_level_size or `levels` is reached.
struct LevelSize {
  int width = 0;
  int height = 0;
  double scale = 1.0;
};
std::vector<LevelSize> PyramidLevelSizes(int width, int height,
                                         const HogConfig& config);

// Exact analytical tally for one pyramid level of the given size.
OpCounter HogLevelOps(int width, int height, const HogConfig& config);

// Exact analytical tally for extracting features from a width x height image,
// normalized by the original image's pixels.
OpCountReport HogGopPerMpixel(const HogConfig& config, int width, int height);

// Resolution-independent rate: per-pixel tally in the large-image limit times
// the pyramid area multiplier. Reported per megapixel (pixels = 1e6).
OpCountReport HogGopPerMpixel(const HogConfig& config);

CnnArchitecture ParseArchitecture(std::string_view json_text);
CnnArchitecture LoadArchitecture(const std::filesystem::path& path);
std::string ArchitectureToJson(const CnnArchitecture& arch);

HogConfig ParseHogConfig(std::string_view json_text);
HogConfig LoadHogConfig(const std::filesystem::path& path);

// Bundled AlexNet, VGG-16 and default HOG descriptors, read from
// <data_dir>/workloads.
std::vector<Workload> BuiltinWorkloads();
std::vector<Workload> BuiltinWorkloads(const std::filesystem::path& data_dir);

// Builtin by name, or a descriptor file if `name_or_path` names one.
Workload ResolveWorkload(const std::string& name_or_path);

}  // namespace featgap

#endif  // FEATGAP_WORKLOAD_H_
