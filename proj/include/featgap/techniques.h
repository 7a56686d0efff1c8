#ifndef FEATGAP_TECHNIQUES_H_
#define FEATGAP_TECHNIQUES_H_

// Executable energy-gap-closing transforms: precision reduction, global
// magnitude pruning and zero run-length coding, plus the weight-memory model
// shared with the codec.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "featgap/cnn.h"

namespace featgap {

enum class QuantMode { kUniformSymmetric, kNonuniformLog };

struct QuantizationSpec {
  int bits = 8;
  QuantMode mode = QuantMode::kUniformSymmetric;

  void Validate() const;
};

struct PruningSpec {
  double target_density = 1.0;  // fraction kept, in (0, 1]

  void Validate() const;
};

struct TechniqueSet {
  std::optional<QuantizationSpec> quantization;
  std::optional<PruningSpec> pruning;
  bool compression = false;
  std::optional<double> dataflow_multiplier;  // in [1.4, 2.5]

  void Validate() const;
  bool operator==(const TechniqueSet& o) const;
};

inline constexpr double kDataflowMinMultiplier = 1.4;
inline constexpr double kDataflowMaxMultiplier = 2.5;

// Comma-separated key[=value] tokens: quant=<bits>[:log], prune=<density>,
// rlc, dataflow=<multiplier>. Unknown or repeated keys are errors.
TechniqueSet ParseTechniqueString(std::string_view text);
std::string FormatTechniqueSet(const TechniqueSet& set);

struct QuantizedTensor {
  int bits = 0;
  QuantMode mode = QuantMode::kUniformSymmetric;
  double step = 0.0;                // uniform mode level spacing
  std::vector<std::int32_t> codes;  // empty when passed through unchanged
  std::vector<double> values;       // dequantized

  std::uint64_t StoredBytes() const;
};

struct QuantizeResult {
  QuantizedTensor tensor;
  double max_abs_error = 0.0;
};

// uniform-symmetric: 2^bits levels -max + i*step with step = 2*max/(2^bits-1),
// nearest level (ties to even index). nonuniform-log: zero or +-2^e for the
// 2^(bits-1)-1 exponents below round(log2 max), nearest in log2.
// bits == source_bits leaves values unchanged.
QuantizeResult Quantize(std::span<const double> values, int source_bits,
                        const QuantizationSpec& params);
QuantizeResult Quantize(const FixedPointTensor& tensor, const QuantizationSpec& params);

// ceil(density * n), at least 1, at most n.
std::uint64_t PruneKeepCount(std::uint64_t n, double density);

// Keeps the PruneKeepCount largest magnitudes, earliest index first on ties.
std::vector<std::int32_t> PruneFlat(std::span<const std::int32_t> values,
                                    const PruningSpec& params);

struct PruneResult {
  WeightSet weights;
  double density_achieved = 0.0;  // nonzeros / total
};

// Global over every kernel weight and bias, in weight-file order.
PruneResult PruneByMagnitude(const WeightSet& weights, const PruningSpec& params);

// Zero run-length coding. A token stands for `run` zeros followed by `value`;
// (31, 0) fills a run of 32 zeros. A trailing zero run becomes a final token
// carrying only its `run` zeros, marked by the stream's terminal flag.
struct RlcToken {
  std::uint8_t run = 0;  // 5 bits
  std::int16_t value = 0;
  bool operator==(const RlcToken&) const = default;
};

inline constexpr int kRlcRunBits = 5;
inline constexpr int kRlcMaxRun = 31;
inline constexpr int kRlcTokenBits = 21;
inline constexpr int kRlcHeaderBytes = 16;

struct RlcStream {
  std::uint32_t element_count = 0;
  bool terminal = false;
  std::vector<RlcToken> tokens;
  bool operator==(const RlcStream&) const = default;
};

RlcStream RlcEncode(std::span<const std::int16_t> samples);
// Throws DecodeError on malformed streams; never returns partial output.
std::vector<std::int16_t> RlcDecode(const RlcStream& stream);

// 16-byte header (magic "RLC1", element count, token count, flags; u32 LE)
// then 21-bit tokens packed LSB-first, 8 tokens per 21-byte group; the last
// group is zero-padded to a byte boundary.
std::string SerializeRlc(const RlcStream& stream);
RlcStream DeserializeRlc(std::string_view bytes);

// Header bits plus 21 bits per token.
std::uint64_t RlcEncodedBits(const RlcStream& stream);
// raw bits (16 per sample) / encoded bits.
double CompressionRatio(std::span<const std::int16_t> samples);

inline constexpr int kPrunedIndexBits = 5;

// dense: ceil(n*bits/8). pruned: header + ceil(nonzeros*(bits+5)/8).
std::uint64_t WeightMemoryBytes(std::uint64_t total, std::uint64_t nonzeros,
                                int bits, bool pruned);
std::uint64_t WeightMemoryBytes(const WeightSet& weights, int bits, bool pruned);

}  // namespace featgap

#endif  // FEATGAP_TECHNIQUES_H_
