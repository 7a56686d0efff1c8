#ifndef FEATGAP_CNN_H_
#define FEATGAP_CNN_H_

// Fixed-point direct-convolution engine for the conv stacks described by a
// CnnArchitecture. Samples are signed two's-complement integers with a
// per-tensor radix point (default Q8.8 in 16 bits). Products accumulate in
// 64 bits and are rounded half-to-even back to the input format with
// saturation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "featgap/op_count.h"
#include "featgap/workload.h"

namespace featgap {

struct FixedPointTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  int value_bits = 16;
  int frac_bits = 8;
  std::vector<std::int32_t> samples;

  FixedPointTensor() = default;
  FixedPointTensor(int c, int h, int w, int value_bits = 16, int frac_bits = 8);

  Dims dims() const { return {channels, height, width}; }
  std::int32_t at(int c, int y, int x) const {
    return samples[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::int32_t& at(int c, int y, int x) {
    return samples[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double Step() const;
  double RealAt(std::size_t i) const { return samples[i] * Step(); }
  std::int32_t MinValue() const;
  std::int32_t MaxValue() const;

  // Throws ShapeError / DomainError if dims or sample range are invalid.
  void Validate() const;
  bool operator==(const FixedPointTensor&) const = default;
};

struct LayerWeights {
  std::string name;
  int out_channels = 0;
  int in_channels_per_group = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int groups = 1;
  // (out_ch, in_ch_per_group, kh, kw)
  std::vector<std::int32_t> weights;
  std::vector<std::int32_t> bias;

  std::int32_t at(int oc, int ic, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(oc) * in_channels_per_group + ic) *
                        kernel_h + ky) * kernel_w + kx];
  }
  bool operator==(const LayerWeights&) const = default;
};

struct WeightSet {
  std::string architecture;
  int value_bits = 16;
  int frac_bits = 8;
  std::vector<LayerWeights> layers;

  // Kernel weights plus biases.
  std::uint64_t TotalCount() const;
  std::uint64_t NonzeroCount() const;
  bool operator==(const WeightSet&) const = default;
};

std::int32_t SaturateToBits(std::int64_t v, int bits);
// Arithmetic right shift by `shift` with round-half-to-even.
std::int64_t RoundShiftHalfEven(std::int64_t v, int shift);
std::int32_t QuantizeReal(double v, int value_bits, int frac_bits);

// Uniform [-1, 1) from a seeded mt19937_64, quantized to the given format.
WeightSet RandomWeights(const CnnArchitecture& arch, std::uint64_t seed,
                        int value_bits = 16, int frac_bits = 8);
// Uniform [0, 1) image-like input matching the architecture's input dims.
FixedPointTensor RandomInput(const CnnArchitecture& arch, std::uint64_t seed,
                             int value_bits = 16, int frac_bits = 8);

// Throws ShapeError if `weights` does not fit `arch`.
void CheckWeightsMatch(const CnnArchitecture& arch, const WeightSet& weights);

// Direct convolution over an explicitly zero-padded input: every kernel tap is
// multiplied, so counter.macs grows by exactly ConvLayerMacs(). Output
// channels are split across `threads` workers.
FixedPointTensor RunConvLayer(const FixedPointTensor& input,
                              const ConvLayerShape& layer,
                              const LayerWeights& weights, int weight_frac_bits,
                              OpCounter& counter, int threads = 1);

FixedPointTensor Relu(const FixedPointTensor& tensor, OpCounter* counter = nullptr);
FixedPointTensor MaxPool(const FixedPointTensor& tensor, const PoolLayerShape& pool,
                         OpCounter* counter = nullptr);

// zeros / total; 0 for an empty tensor.
double Sparsity(const FixedPointTensor& tensor);

struct LayerOutput {
  std::size_t conv_ordinal = 0;  // 1-based
  std::string name;
  FixedPointTensor tensor;       // after ReLU
  double sparsity = 0.0;
};

struct NetworkResult {
  std::vector<LayerOutput> outputs;
  OpCountReport conv_ops;   // MACs only, per input pixel
  OpCounter auxiliary_ops;  // bias additions, ReLU and pool comparisons
};

// conv -> ReLU -> (pool where the descriptor has one), stopping after conv
// layer `upto_layer` (all layers when empty; 0 runs nothing).
NetworkResult RunNetwork(const CnnArchitecture& arch, const WeightSet& weights,
                         const FixedPointTensor& input,
                         std::optional<std::size_t> upto_layer = std::nullopt,
                         int threads = 1);

struct SparsityReport {
  std::vector<double> per_layer;
  double aggregate = 0.0;  // total zeros / total samples; 0 for no layers
};
SparsityReport MeasureSparsity(std::span<const LayerOutput> outputs);

// Weight file: one JSON manifest line, then little-endian int16 data in
// (layer, out_ch, in_ch, kh, kw) order with each layer's biases following its
// kernel weights.
void WriteWeightFile(const std::filesystem::path& path, const WeightSet& weights);
std::string EncodeWeightFile(const WeightSet& weights);
WeightSet ReadWeightFile(const std::filesystem::path& path,
                         const CnnArchitecture& arch);
WeightSet DecodeWeightFile(std::string_view bytes, const CnnArchitecture& arch);

}  // namespace featgap

#endif  // FEATGAP_CNN_H_
