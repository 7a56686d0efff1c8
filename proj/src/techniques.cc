#include "featgap/techniques.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "featgap/error.h"

namespace featgap {

void QuantizationSpec::Validate() const {
  if (bits < 1 || bits > 16) {
    throw DomainError("quantization: bits must lie in [1, 16], got " +
                      std::to_string(bits));
  }
  if (mode == QuantMode::kNonuniformLog && bits < 2) {
    throw DomainError("quantization: log mode needs at least 2 bits");
  }
}

void PruningSpec::Validate() const {
  if (!(target_density > 0.0 && target_density <= 1.0)) {
    throw DomainError("pruning: density must lie in (0, 1]");
  }
}

void TechniqueSet::Validate() const {
  if (quantization) quantization->Validate();
  if (pruning) pruning->Validate();
  if (dataflow_multiplier && (*dataflow_multiplier < kDataflowMinMultiplier ||
                              *dataflow_multiplier > kDataflowMaxMultiplier)) {
    std::ostringstream os;
    os << "dataflow multiplier " << *dataflow_multiplier << " outside ["
       << kDataflowMinMultiplier << ", " << kDataflowMaxMultiplier << "]";
    throw DomainError(os.str());
  }
}

bool TechniqueSet::operator==(const TechniqueSet& o) const {
  auto same_q = [](const auto& a, const auto& b) {
    return a.has_value() == b.has_value() &&
           (!a || (a->bits == b->bits && a->mode == b->mode));
  };
  auto same_p = [](const auto& a, const auto& b) {
    return a.has_value() == b.has_value() &&
           (!a || a->target_density == b->target_density);
  };
  return same_q(quantization, o.quantization) && same_p(pruning, o.pruning) &&
         compression == o.compression &&
         dataflow_multiplier == o.dataflow_multiplier;
}

namespace {

double ParseDouble(std::string_view s, std::string_view key) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("techniques: bad number '" + std::string(s) + "' for " +
                     std::string(key));
  }
  return v;
}

int ParseInt(std::string_view s, std::string_view key) {
  int v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("techniques: bad integer '" + std::string(s) + "' for " +
                     std::string(key));
  }
  return v;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

TechniqueSet ParseTechniqueString(std::string_view text) {
  TechniqueSet set;
  std::vector<std::string> seen;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string_view token = Trim(text.substr(start, comma - start));
    start = comma + 1;
    if (token.empty()) {
      if (comma >= text.size()) break;
      throw ParseError("techniques: empty token");
    }
    const std::size_t eq = token.find('=');
    const std::string key(Trim(token.substr(0, eq)));
    std::optional<std::string_view> value;
    if (eq != std::string_view::npos) value = Trim(token.substr(eq + 1));
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw ParseError("techniques: repeated key '" + key + "'");
    }
    seen.push_back(key);
    auto need = [&]() -> std::string_view {
      if (!value || value->empty()) {
        throw ParseError("techniques: '" + key + "' needs a value");
      }
      return *value;
    };
    if (key == "quant") {
      std::string_view v = need();
      QuantizationSpec q;
      if (const auto colon = v.find(':'); colon != std::string_view::npos) {
        const std::string_view mode = v.substr(colon + 1);
        if (mode == "log") {
          q.mode = QuantMode::kNonuniformLog;
        } else if (mode != "uniform") {
          throw ParseError("techniques: unknown quant mode '" + std::string(mode) + "'");
        }
        v = v.substr(0, colon);
      }
      q.bits = ParseInt(v, key);
      set.quantization = q;
    } else if (key == "prune") {
      set.pruning = PruningSpec{ParseDouble(need(), key)};
    } else if (key == "rlc") {
      if (value) throw ParseError("techniques: 'rlc' takes no value");
      set.compression = true;
    } else if (key == "dataflow") {
      set.dataflow_multiplier = ParseDouble(need(), key);
    } else {
      throw ParseError("techniques: unknown key '" + key + "'");
    }
  }
  set.Validate();
  return set;
}

std::string FormatTechniqueSet(const TechniqueSet& set) {
  std::ostringstream os;
  const char* sep = "";
  if (set.quantization) {
    os << sep << "quant=" << set.quantization->bits
       << (set.quantization->mode == QuantMode::kNonuniformLog ? ":log" : "");
    sep = ",";
  }
  if (set.pruning) {
    os << sep << "prune=" << set.pruning->target_density;
    sep = ",";
  }
  if (set.compression) {
    os << sep << "rlc";
    sep = ",";
  }
  if (set.dataflow_multiplier) os << sep << "dataflow=" << *set.dataflow_multiplier;
  return os.str();
}

// ---------------------------------------------------------------------------
// Quantization

std::uint64_t QuantizedTensor::StoredBytes() const {
  return (static_cast<std::uint64_t>(values.size()) * bits + 7) / 8;
}

QuantizeResult Quantize(std::span<const double> values, int source_bits,
                        const QuantizationSpec& params) {
  params.Validate();
  if (params.bits > source_bits) {
    throw DomainError("quantization: target bits " + std::to_string(params.bits) +
                      " exceed source bits " + std::to_string(source_bits));
  }
  QuantizeResult r;
  r.tensor.bits = params.bits;
  r.tensor.mode = params.mode;
  if (params.bits == source_bits) {
    r.tensor.values.assign(values.begin(), values.end());
    return r;
  }
  double max_abs = 0.0;
  for (double v : values) max_abs = std::max(max_abs, std::abs(v));
  r.tensor.codes.resize(values.size(), 0);
  r.tensor.values.resize(values.size(), 0.0);

  if (params.mode == QuantMode::kUniformSymmetric) {
    const double levels = std::ldexp(1.0, params.bits) - 1.0;  // index of top level
    if (max_abs > 0.0) {
      const double step = 2.0 * max_abs / levels;
      r.tensor.step = step;
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double idx = std::clamp(std::nearbyint((values[i] + max_abs) / step), 0.0, levels);
        r.tensor.codes[i] = static_cast<std::int32_t>(idx);
        r.tensor.values[i] = -max_abs + idx * step;
      }
    }
  } else if (max_abs > 0.0) {
    const int magnitudes = (1 << (params.bits - 1)) - 1;
    const int e_max = static_cast<int>(std::lround(std::log2(max_abs)));
    const int e_min = e_max - (magnitudes - 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = values[i];
      if (v == 0.0) continue;
      const double a = std::abs(v);
      int e = static_cast<int>(std::lround(std::log2(a)));
      e = std::min(e, e_max);
      double q = 0.0;
      int code = 0;
      if (e >= e_min) {
        q = std::ldexp(1.0, e);
        code = e_max - e + 1;
      } else if (a >= std::ldexp(1.0, e_min) / 2) {
        q = std::ldexp(1.0, e_min);
        code = magnitudes;
      }
      r.tensor.values[i] = v < 0 ? -q : q;
      r.tensor.codes[i] = v < 0 ? -code : code;
    }
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    r.max_abs_error = std::max(r.max_abs_error, std::abs(values[i] - r.tensor.values[i]));
  }
  return r;
}

QuantizeResult Quantize(const FixedPointTensor& tensor, const QuantizationSpec& params) {
  std::vector<double> real(tensor.samples.size());
  for (std::size_t i = 0; i < real.size(); ++i) real[i] = tensor.RealAt(i);
  QuantizeResult r = Quantize(real, tensor.value_bits, params);
  if (params.bits == tensor.value_bits) {
    r.tensor.codes.assign(tensor.samples.begin(), tensor.samples.end());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pruning

std::uint64_t PruneKeepCount(std::uint64_t n, double density) {
  PruningSpec{density}.Validate();
  if (n == 0) return 0;
  const double exact = density * static_cast<double>(n);
  auto keep = static_cast<std::uint64_t>(std::ceil(exact - 1e-9));
  return std::clamp<std::uint64_t>(keep, 1, n);
}

namespace {

std::vector<char> KeepMask(std::span<const std::int32_t> values, std::uint64_t keep) {
  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  auto before = [&](std::uint32_t a, std::uint32_t b) {
    const auto ma = std::abs(static_cast<std::int64_t>(values[a]));
    const auto mb = std::abs(static_cast<std::int64_t>(values[b]));
    return ma != mb ? ma > mb : a < b;
  };
  if (keep < order.size()) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep),
                     order.end(), before);
  }
  std::vector<char> mask(values.size(), 0);
  for (std::uint64_t i = 0; i < keep && i < order.size(); ++i) mask[order[i]] = 1;
  return mask;
}

}  // namespace

std::vector<std::int32_t> PruneFlat(std::span<const std::int32_t> values,
                                    const PruningSpec& params) {
  params.Validate();
  const auto mask = KeepMask(values, PruneKeepCount(values.size(), params.target_density));
  std::vector<std::int32_t> out(values.begin(), values.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask[i]) out[i] = 0;
  }
  return out;
}

PruneResult PruneByMagnitude(const WeightSet& weights, const PruningSpec& params) {
  params.Validate();
  std::vector<std::int32_t> flat;
  flat.reserve(weights.TotalCount());
  for (const auto& l : weights.layers) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  const auto pruned = PruneFlat(flat, params);
  PruneResult r;
  r.weights = weights;
  std::size_t pos = 0;
  for (auto& l : r.weights.layers) {
    for (auto& w : l.weights) w = pruned[pos++];
    for (auto& b : l.bias) b = pruned[pos++];
  }
  const auto total = r.weights.TotalCount();
  r.density_achieved =
      total == 0 ? 0.0
                 : static_cast<double>(r.weights.NonzeroCount()) / static_cast<double>(total);
  return r;
}

// ---------------------------------------------------------------------------
// Run-length coding

RlcStream RlcEncode(std::span<const std::int16_t> samples) {
  if (samples.size() > 0xffffffffu) throw DomainError("rlc: too many samples");
  RlcStream s;
  s.element_count = static_cast<std::uint32_t>(samples.size());
  int run = 0;
  for (const std::int16_t x : samples) {
    if (x == 0) {
      if (run == kRlcMaxRun) {
        s.tokens.push_back({static_cast<std::uint8_t>(kRlcMaxRun), 0});
        run = 0;
      } else {
        ++run;
      }
    } else {
      s.tokens.push_back({static_cast<std::uint8_t>(run), x});
      run = 0;
    }
  }
  if (run > 0) {
    s.tokens.push_back({static_cast<std::uint8_t>(run), 0});
    s.terminal = true;
  }
  return s;
}

std::vector<std::int16_t> RlcDecode(const RlcStream& stream) {
  if (stream.terminal && stream.tokens.empty()) {
    throw DecodeError("rlc: terminal flag set on an empty token list");
  }
  std::vector<std::int16_t> out;
  out.reserve(stream.element_count);
  for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
    const RlcToken& t = stream.tokens[i];
    if (t.run > kRlcMaxRun) {
      throw DecodeError("rlc: token " + std::to_string(i) + " has run " +
                        std::to_string(t.run) + " > 31");
    }
    const bool last_terminal = stream.terminal && i + 1 == stream.tokens.size();
    if (last_terminal && t.value != 0) {
      throw DecodeError("rlc: terminal token carries a nonzero value");
    }
    const std::size_t add = t.run + (last_terminal ? 0u : 1u);
    if (out.size() + add > stream.element_count) {
      throw DecodeError("rlc: tokens expand past the declared element count");
    }
    out.insert(out.end(), t.run, std::int16_t{0});
    if (!last_terminal) out.push_back(t.value);
  }
  if (out.size() != stream.element_count) {
    throw DecodeError("rlc: decoded " + std::to_string(out.size()) +
                      " samples, header declares " + std::to_string(stream.element_count));
  }
  return out;
}

namespace {

constexpr char kRlcMagic[4] = {'R', 'L', 'C', '1'};

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t GetU32(std::string_view b, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::string SerializeRlc(const RlcStream& stream) {
  std::string out(kRlcMagic, 4);
  PutU32(out, stream.element_count);
  PutU32(out, static_cast<std::uint32_t>(stream.tokens.size()));
  PutU32(out, stream.terminal ? 1u : 0u);

  const std::uint64_t payload_bits = static_cast<std::uint64_t>(stream.tokens.size()) * kRlcTokenBits;
  std::string payload((payload_bits + 7) / 8, '\0');
  std::uint64_t bit = 0;
  for (const RlcToken& t : stream.tokens) {
    if (t.run > kRlcMaxRun) throw DomainError("rlc: run exceeds 5 bits");
    const std::uint32_t word = (t.run & 0x1fu) |
                               (static_cast<std::uint32_t>(static_cast<std::uint16_t>(t.value)) << 5);
    for (int k = 0; k < kRlcTokenBits; ++k, ++bit) {
      if ((word >> k) & 1u) payload[bit / 8] = static_cast<char>(payload[bit / 8] | (1 << (bit % 8)));
    }
  }
  return out + payload;
}

RlcStream DeserializeRlc(std::string_view bytes) {
  if (bytes.size() < static_cast<std::size_t>(kRlcHeaderBytes)) {
    throw DecodeError("rlc: truncated header");
  }
  if (bytes.substr(0, 4) != std::string_view(kRlcMagic, 4)) throw DecodeError("rlc: bad magic");
  RlcStream s;
  s.element_count = GetU32(bytes, 4);
  const std::uint32_t token_count = GetU32(bytes, 8);
  const std::uint32_t flags = GetU32(bytes, 12);
  if (flags & ~1u) throw DecodeError("rlc: unknown header flags");
  s.terminal = (flags & 1u) != 0;
  const std::uint64_t payload_bits = static_cast<std::uint64_t>(token_count) * kRlcTokenBits;
  const std::uint64_t payload_bytes = (payload_bits + 7) / 8;
  const std::string_view payload = bytes.substr(kRlcHeaderBytes);
  if (payload.size() < payload_bytes) throw DecodeError("rlc: truncated token data");
  if (payload.size() > payload_bytes) throw DecodeError("rlc: trailing bytes after tokens");
  s.tokens.reserve(token_count);
  std::uint64_t bit = 0;
  for (std::uint32_t i = 0; i < token_count; ++i) {
    std::uint32_t word = 0;
    for (int k = 0; k < kRlcTokenBits; ++k, ++bit) {
      const auto byte = static_cast<unsigned char>(payload[bit / 8]);
      word |= static_cast<std::uint32_t>((byte >> (bit % 8)) & 1u) << k;
    }
    s.tokens.push_back({static_cast<std::uint8_t>(word & 0x1fu),
                        static_cast<std::int16_t>(static_cast<std::uint16_t>(word >> 5))});
  }
  return s;
}

std::uint64_t RlcEncodedBits(const RlcStream& stream) {
  return 8ull * kRlcHeaderBytes +
         static_cast<std::uint64_t>(stream.tokens.size()) * kRlcTokenBits;
}

double CompressionRatio(std::span<const std::int16_t> samples) {
  const RlcStream s = RlcEncode(samples);
  return static_cast<double>(16ull * samples.size()) /
         static_cast<double>(RlcEncodedBits(s));
}

std::uint64_t WeightMemoryBytes(std::uint64_t total, std::uint64_t nonzeros, int bits,
                                bool pruned) {
  if (bits < 1) throw DomainError("weight memory: bits must be >= 1");
  if (!pruned) return (total * static_cast<std::uint64_t>(bits) + 7) / 8;
  return kRlcHeaderBytes +
         (nonzeros * static_cast<std::uint64_t>(bits + kPrunedIndexBits) + 7) / 8;
}

std::uint64_t WeightMemoryBytes(const WeightSet& weights, int bits, bool pruned) {
  return WeightMemoryBytes(weights.TotalCount(), weights.NonzeroCount(), bits, pruned);
}

}  // namespace featgap
