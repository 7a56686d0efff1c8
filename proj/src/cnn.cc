#include "featgap/cnn.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include "json.hpp"
#include <random>
#include <thread>

#include "featgap/data_paths.h"
#include "featgap/error.h"

namespace featgap {

namespace {

void CheckFormat(int value_bits, int frac_bits) {
  if (value_bits < 2 || value_bits > 16) {
    throw DomainError("fixed point: value_bits must lie in [2, 16], got " +
                      std::to_string(value_bits));
  }
  if (frac_bits < 0 || frac_bits >= value_bits) {
    throw DomainError("fixed point: frac_bits must lie in [0, value_bits)");
  }
}

double UniformUnit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

FixedPointTensor::FixedPointTensor(int c, int h, int w, int vb, int fb)
    : channels(c),
      height(h),
      width(w),
      value_bits(vb),
      frac_bits(fb),
      samples(static_cast<std::size_t>(c) * h * w, 0) {}

double FixedPointTensor::Step() const { return std::ldexp(1.0, -frac_bits); }

std::int32_t FixedPointTensor::MinValue() const {
  return -(std::int32_t{1} << (value_bits - 1));
}

std::int32_t FixedPointTensor::MaxValue() const {
  return (std::int32_t{1} << (value_bits - 1)) - 1;
}

void FixedPointTensor::Validate() const {
  CheckFormat(value_bits, frac_bits);
  if (channels < 0 || height < 0 || width < 0) {
    throw ShapeError("tensor: negative dimension");
  }
  if (samples.size() != static_cast<std::size_t>(channels) * height * width) {
    throw ShapeError("tensor: sample count does not match dims");
  }
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (lo != samples.end() && (*lo < MinValue() || *hi > MaxValue())) {
    throw DomainError("tensor: sample outside " + std::to_string(value_bits) +
                      "-bit range");
  }
}

std::uint64_t WeightSet::TotalCount() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::uint64_t WeightSet::NonzeroCount() const {
  std::uint64_t n = 0;
  for (const auto& l : layers) {
    n += static_cast<std::uint64_t>(
        std::count_if(l.weights.begin(), l.weights.end(), [](auto v) { return v != 0; }));
    n += static_cast<std::uint64_t>(
        std::count_if(l.bias.begin(), l.bias.end(), [](auto v) { return v != 0; }));
  }
  return n;
}

std::int32_t SaturateToBits(std::int64_t v, int bits) {
  const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
  const std::int64_t lo = -(std::int64_t{1} << (bits - 1));
  return static_cast<std::int32_t>(std::clamp(v, lo, hi));
}

std::int64_t RoundShiftHalfEven(std::int64_t v, int shift) {
  if (shift <= 0) return v * (std::int64_t{1} << -shift);
  const std::int64_t q = v >> shift;  // floor
  const std::int64_t r = v - q * (std::int64_t{1} << shift);
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  if (r > half || (r == half && (q & 1) != 0)) return q + 1;
  return q;
}

std::int32_t QuantizeReal(double v, int value_bits, int frac_bits) {
  const double scaled = std::nearbyint(std::ldexp(v, frac_bits));
  const double hi = std::ldexp(1.0, value_bits - 1) - 1;
  const double lo = -std::ldexp(1.0, value_bits - 1);
  return static_cast<std::int32_t>(std::clamp(scaled, lo, hi));
}

WeightSet RandomWeights(const CnnArchitecture& arch, std::uint64_t seed,
                        int value_bits, int frac_bits) {
  CheckFormat(value_bits, frac_bits);
  ValidateArchitecture(arch);
  std::mt19937_64 rng(seed);
  WeightSet ws;
  ws.architecture = arch.name;
  ws.value_bits = value_bits;
  ws.frac_bits = frac_bits;
  for (const auto& l : arch.layers) {
    const auto* conv = std::get_if<ConvLayerShape>(&l);
    if (!conv) continue;
    LayerWeights lw;
    lw.name = conv->name;
    lw.out_channels = conv->out_channels;
    lw.in_channels_per_group = conv->InChannelsPerGroup();
    lw.kernel_h = conv->kernel_h;
    lw.kernel_w = conv->kernel_w;
    lw.groups = conv->groups;
    lw.weights.resize(conv->WeightCount());
    for (auto& w : lw.weights) {
      w = QuantizeReal(2.0 * UniformUnit(rng) - 1.0, value_bits, frac_bits);
    }
    lw.bias.resize(static_cast<std::size_t>(conv->out_channels));
    for (auto& b : lw.bias) {
      b = QuantizeReal(2.0 * UniformUnit(rng) - 1.0, value_bits, frac_bits);
    }
    ws.layers.push_back(std::move(lw));
  }
  return ws;
}

FixedPointTensor RandomInput(const CnnArchitecture& arch, std::uint64_t seed,
                             int value_bits, int frac_bits) {
  CheckFormat(value_bits, frac_bits);
  std::mt19937_64 rng(seed);
  FixedPointTensor t(arch.input_channels, arch.input_height, arch.input_width,
                     value_bits, frac_bits);
  for (auto& s : t.samples) s = QuantizeReal(UniformUnit(rng), value_bits, frac_bits);
  return t;
}

void CheckWeightsMatch(const CnnArchitecture& arch, const WeightSet& weights) {
  CheckFormat(weights.value_bits, weights.frac_bits);
  std::size_t i = 0;
  for (const auto& l : arch.layers) {
    const auto* conv = std::get_if<ConvLayerShape>(&l);
    if (!conv) continue;
    if (i >= weights.layers.size()) {
      throw ShapeError("weights: missing weights for layer '" + conv->name + "'");
    }
    const LayerWeights& lw = weights.layers[i];
    if (lw.out_channels != conv->out_channels ||
        lw.in_channels_per_group != conv->InChannelsPerGroup() ||
        lw.kernel_h != conv->kernel_h || lw.kernel_w != conv->kernel_w ||
        lw.groups != conv->groups || lw.weights.size() != conv->WeightCount() ||
        lw.bias.size() != static_cast<std::size_t>(conv->out_channels)) {
      throw ShapeError("weights: shape mismatch for layer '" + conv->name + "'");
    }
    ++i;
  }
  if (i != weights.layers.size()) {
    throw ShapeError("weights: " + std::to_string(weights.layers.size()) +
                     " weight layers for " + std::to_string(i) + " conv layers");
  }
}

FixedPointTensor RunConvLayer(const FixedPointTensor& input,
                              const ConvLayerShape& layer,
                              const LayerWeights& weights, int weight_frac_bits,
                              OpCounter& counter, int threads) {
  input.Validate();
  if (input.channels != layer.in_channels) {
    throw ShapeError("conv '" + layer.name + "': expects " +
                     std::to_string(layer.in_channels) +
                     " input channels, tensor has " +
                     std::to_string(input.channels));
  }
  if (weights.out_channels != layer.out_channels ||
      weights.in_channels_per_group != layer.InChannelsPerGroup() ||
      weights.kernel_h != layer.kernel_h || weights.kernel_w != layer.kernel_w ||
      weights.weights.size() != layer.WeightCount() ||
      weights.bias.size() != static_cast<std::size_t>(layer.out_channels)) {
    throw ShapeError("conv '" + layer.name + "': weight shape mismatch");
  }
  const int oh = ConvOutputExtent(input.height, layer.kernel_h, layer.stride,
                                  layer.padding, layer.name);
  const int ow = ConvOutputExtent(input.width, layer.kernel_w, layer.stride,
                                  layer.padding, layer.name);

  // 32-bit products plus ceil(log2(taps)) guard bits must fit the accumulator.
  const std::uint64_t taps = static_cast<std::uint64_t>(layer.InChannelsPerGroup()) *
                             layer.kernel_h * layer.kernel_w;
  const int guard = static_cast<int>(std::bit_width(taps));
  if (32 + guard + 1 > 64) {
    throw ShapeError("conv '" + layer.name + "': too many taps for a 64-bit accumulator");
  }

  const int ph = input.height + 2 * layer.padding;
  const int pw = input.width + 2 * layer.padding;
  std::vector<std::int32_t> padded(static_cast<std::size_t>(input.channels) * ph * pw, 0);
  for (int c = 0; c < input.channels; ++c) {
    for (int y = 0; y < input.height; ++y) {
      const std::int32_t* src = &input.samples[(static_cast<std::size_t>(c) * input.height + y) * input.width];
      std::copy(src, src + input.width,
                &padded[(static_cast<std::size_t>(c) * ph + y + layer.padding) * pw + layer.padding]);
    }
  }

  FixedPointTensor out(layer.out_channels, oh, ow, input.value_bits, input.frac_bits);
  const int out_per_group = layer.out_channels / layer.groups;
  const int icpg = layer.InChannelsPerGroup();
  const int kh = layer.kernel_h;
  const int kw = layer.kernel_w;
  const int stride = layer.stride;

  auto run_range = [&](int oc_begin, int oc_end, OpCounter& local) {
    std::uint64_t macs = 0;
    for (int oc = oc_begin; oc < oc_end; ++oc) {
      const int ic_base = (oc / out_per_group) * icpg;
      const std::int64_t bias =
          static_cast<std::int64_t>(weights.bias[oc]) * (std::int64_t{1} << input.frac_bits);
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          std::int64_t acc = bias;
          for (int ic = 0; ic < icpg; ++ic) {
            for (int ky = 0; ky < kh; ++ky) {
              const std::int32_t* row =
                  &padded[(static_cast<std::size_t>(ic_base + ic) * ph + oy * stride + ky) * pw +
                          ox * stride];
              const std::int32_t* wrow =
                  &weights.weights[((static_cast<std::size_t>(oc) * icpg + ic) * kh + ky) * kw];
              for (int kx = 0; kx < kw; ++kx) {
                acc += static_cast<std::int64_t>(row[kx]) * wrow[kx];
                ++macs;
              }
            }
          }
          out.at(oc, oy, ox) =
              SaturateToBits(RoundShiftHalfEven(acc, weight_frac_bits), out.value_bits);
        }
      }
    }
    local.macs += macs;
  };

  const int workers = std::clamp(threads, 1, layer.out_channels);
  std::vector<OpCounter> locals(static_cast<std::size_t>(workers));
  if (workers == 1) {
    run_range(0, layer.out_channels, locals[0]);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (layer.out_channels + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
      const int b = std::min(t * chunk, layer.out_channels);
      const int e = std::min(b + chunk, layer.out_channels);
      pool.emplace_back(run_range, b, e, std::ref(locals[t]));
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& l : locals) counter += l;
  return out;
}

FixedPointTensor Relu(const FixedPointTensor& tensor, OpCounter* counter) {
  FixedPointTensor out = tensor;
  for (auto& s : out.samples) s = std::max(s, 0);
  if (counter) counter->comparisons += out.samples.size();
  return out;
}

FixedPointTensor MaxPool(const FixedPointTensor& tensor, const PoolLayerShape& pool,
                         OpCounter* counter) {
  if (pool.window < 1 || pool.stride < 1) {
    throw ShapeError("pool '" + pool.name + "': window and stride must be >= 1");
  }
  const int oh = PoolOutputExtent(tensor.height, pool.window, pool.stride, pool.name);
  const int ow = PoolOutputExtent(tensor.width, pool.window, pool.stride, pool.name);
  FixedPointTensor out(tensor.channels, oh, ow, tensor.value_bits, tensor.frac_bits);
  std::uint64_t cmps = 0;
  for (int c = 0; c < tensor.channels; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        std::int32_t m = tensor.at(c, oy * pool.stride, ox * pool.stride);
        for (int ky = 0; ky < pool.window; ++ky) {
          for (int kx = 0; kx < pool.window; ++kx) {
            if (ky == 0 && kx == 0) continue;
            m = std::max(m, tensor.at(c, oy * pool.stride + ky, ox * pool.stride + kx));
            ++cmps;
          }
        }
        out.at(c, oy, ox) = m;
      }
    }
  }
  if (counter) counter->comparisons += cmps;
  return out;
}

double Sparsity(const FixedPointTensor& tensor) {
  if (tensor.samples.empty()) return 0.0;
  const auto zeros = std::count(tensor.samples.begin(), tensor.samples.end(), 0);
  return static_cast<double>(zeros) / static_cast<double>(tensor.samples.size());
}

NetworkResult RunNetwork(const CnnArchitecture& arch, const WeightSet& weights,
                         const FixedPointTensor& input,
                         std::optional<std::size_t> upto_layer, int threads) {
  ValidateArchitecture(arch);
  CheckWeightsMatch(arch, weights);
  const std::size_t conv_count = arch.ConvLayerCount();
  const std::size_t upto = upto_layer.value_or(conv_count);
  if (upto > conv_count) {
    throw DomainError("upto_layer " + std::to_string(upto) + " exceeds the " +
                      std::to_string(conv_count) + " conv layers of '" +
                      arch.name + "'");
  }
  if (input.channels != arch.input_channels || input.height != arch.input_height ||
      input.width != arch.input_width) {
    throw ShapeError("input tensor does not match the input of '" + arch.name + "'");
  }

  NetworkResult result;
  OpCounter conv_counter;
  FixedPointTensor cur = input;
  std::size_t ordinal = 0;
  for (const auto& l : arch.layers) {
    if (ordinal == upto) break;
    if (const auto* conv = std::get_if<ConvLayerShape>(&l)) {
      const LayerWeights& lw = weights.layers[ordinal];
      cur = RunConvLayer(cur, *conv, lw, weights.frac_bits, conv_counter, threads);
      result.auxiliary_ops.additions += cur.samples.size();  // bias
      cur = Relu(cur, &result.auxiliary_ops);
      ++ordinal;
      result.outputs.push_back({ordinal, conv->name, cur, Sparsity(cur)});
    } else {
      cur = MaxPool(cur, std::get<PoolLayerShape>(l), &result.auxiliary_ops);
    }
  }
  result.conv_ops = OpCountReport::FromCounter(
      conv_counter, static_cast<std::uint64_t>(arch.input_height) * arch.input_width);
  return result;
}

SparsityReport MeasureSparsity(std::span<const LayerOutput> outputs) {
  SparsityReport report;
  std::uint64_t zeros = 0;
  std::uint64_t total = 0;
  for (const auto& o : outputs) {
    const auto z = static_cast<std::uint64_t>(
        std::count(o.tensor.samples.begin(), o.tensor.samples.end(), 0));
    report.per_layer.push_back(Sparsity(o.tensor));
    zeros += z;
    total += o.tensor.samples.size();
  }
  report.aggregate = total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total);
  return report;
}

// ---------------------------------------------------------------------------
// Weight file

std::string EncodeWeightFile(const WeightSet& weights) {
  nlohmann::ordered_json m;
  m["format"] = "featgap-weights";
  m["version"] = 1;
  m["architecture"] = weights.architecture;
  m["value_bits"] = weights.value_bits;
  m["frac_bits"] = weights.frac_bits;
  m["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : weights.layers) {
    m["layers"].push_back({{"name", l.name},
                           {"weights", l.weights.size()},
                           {"bias", l.bias.size()}});
  }
  std::string out = m.dump() + "\n";
  auto put = [&](std::int32_t v) {
    const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(v));
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>(u >> 8));
  };
  for (const auto& l : weights.layers) {
    for (auto v : l.weights) put(v);
    for (auto v : l.bias) put(v);
  }
  return out;
}

void WriteWeightFile(const std::filesystem::path& path, const WeightSet& weights) {
  const std::string bytes = EncodeWeightFile(weights);
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw ParseError("cannot write " + path.string());
  std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
}

WeightSet DecodeWeightFile(std::string_view bytes, const CnnArchitecture& arch) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw ParseError("weights: missing manifest line");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("weights: bad manifest: ") + e.what());
  }
  auto fail = [](const std::string& what) { throw ParseError("weights: " + what); };
  if (m.value("format", "") != "featgap-weights") fail("unknown manifest format");
  if (m.value("architecture", "") != arch.name) {
    fail("manifest names architecture '" + m.value("architecture", "") +
         "', expected '" + arch.name + "'");
  }
  WeightSet ws;
  ws.architecture = arch.name;
  ws.value_bits = m.value("value_bits", 16);
  ws.frac_bits = m.value("frac_bits", -1);
  CheckFormat(ws.value_bits, ws.frac_bits);
  if (!m.contains("layers") || !m["layers"].is_array()) fail("manifest lacks 'layers'");

  std::vector<const ConvLayerShape*> convs;
  for (const auto& l : arch.layers) {
    if (const auto* c = std::get_if<ConvLayerShape>(&l)) convs.push_back(c);
  }
  if (m["layers"].size() != convs.size()) {
    fail("manifest lists " + std::to_string(m["layers"].size()) + " layers, '" +
         arch.name + "' has " + std::to_string(convs.size()) + " conv layers");
  }
  std::size_t pos = nl + 1;
  auto get = [&]() -> std::int32_t {
    const auto lo = static_cast<unsigned char>(bytes[pos]);
    const auto hi = static_cast<unsigned char>(bytes[pos + 1]);
    pos += 2;
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
  };
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const auto& lj = m["layers"][i];
    const ConvLayerShape& conv = *convs[i];
    const std::uint64_t nw = lj.value("weights", std::uint64_t{0});
    const std::uint64_t nbias = lj.value("bias", std::uint64_t{0});
    if (nw != conv.WeightCount() || nbias != static_cast<std::uint64_t>(conv.out_channels)) {
      fail("manifest element count mismatch for layer '" + conv.name + "'");
    }
    if (bytes.size() - pos < 2 * (nw + nbias)) fail("data truncated in layer '" + conv.name + "'");
    LayerWeights lw;
    lw.name = conv.name;
    lw.out_channels = conv.out_channels;
    lw.in_channels_per_group = conv.InChannelsPerGroup();
    lw.kernel_h = conv.kernel_h;
    lw.kernel_w = conv.kernel_w;
    lw.groups = conv.groups;
    lw.weights.resize(nw);
    for (auto& w : lw.weights) w = get();
    lw.bias.resize(nbias);
    for (auto& b : lw.bias) b = get();
    ws.layers.push_back(std::move(lw));
  }
  if (pos != bytes.size()) fail("trailing bytes after weight data");
  for (const auto& l : ws.layers) {
    for (auto v : l.weights) {
      if (SaturateToBits(v, ws.value_bits) != v) fail("sample exceeds value_bits");
    }
  }
  return ws;
}

WeightSet ReadWeightFile(const std::filesystem::path& path, const CnnArchitecture& arch) {
  return DecodeWeightFile(ReadTextFile(path), arch);
}

}  // namespace featgap
