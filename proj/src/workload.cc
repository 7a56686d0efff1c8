#include "featgap/workload.h"

#include <cmath>
#include "json.hpp"
#include <sstream>

#include "featgap/data_paths.h"
#include "featgap/error.h"

namespace featgap {

using nlohmann::json;

namespace {

std::string LayerLabel(std::string_view name, std::size_t index) {
  std::ostringstream os;
  os << "layer " << index;
  if (!name.empty()) os << " '" << name << "'";
  return os.str();
}

void CheckConvFields(const ConvLayerShape& l, std::string_view label) {
  auto fail = [&](const std::string& what) {
    throw ShapeError(std::string(label) + ": " + what);
  };
  if (l.in_channels < 1) fail("in_channels must be >= 1");
  if (l.out_channels < 1) fail("out_channels must be >= 1");
  if (l.kernel_h < 1 || l.kernel_w < 1) fail("kernel dims must be >= 1");
  if (l.stride < 1) fail("stride must be >= 1");
  if (l.padding < 0) fail("padding must be >= 0");
  if (l.groups < 1) fail("groups must be >= 1");
  if (l.in_channels % l.groups != 0 || l.out_channels % l.groups != 0) {
    fail("groups must divide in_channels and out_channels");
  }
}

void CheckPoolFields(const PoolLayerShape& p, std::string_view label) {
  if (p.window < 1) throw ShapeError(std::string(label) + ": window must be >= 1");
  if (p.stride < 1) throw ShapeError(std::string(label) + ": stride must be >= 1");
}

}  // namespace

std::uint64_t ConvLayerShape::WeightCount() const {
  return static_cast<std::uint64_t>(out_channels) * InChannelsPerGroup() *
         kernel_h * kernel_w;
}

std::size_t CnnArchitecture::ConvLayerCount() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += std::holds_alternative<ConvLayerShape>(l);
  return n;
}

int ConvOutputExtent(int input, int kernel, int stride, int padding,
                     std::string_view layer) {
  const int span = input + 2 * padding - kernel;
  if (span < 0) {
    throw ShapeError(std::string(layer) + ": kernel " + std::to_string(kernel) +
                     " exceeds padded input " +
                     std::to_string(input + 2 * padding));
  }
  if (span % stride != 0) {
    throw ShapeError(std::string(layer) + ": output dimension (" +
                     std::to_string(input) + " + 2*" + std::to_string(padding) +
                     " - " + std::to_string(kernel) + ")/" +
                     std::to_string(stride) + " + 1 is not an integer");
  }
  return span / stride + 1;
}

int PoolOutputExtent(int input, int window, int stride, std::string_view layer) {
  if (window > input) {
    throw ShapeError(std::string(layer) + ": pool window " +
                     std::to_string(window) + " larger than input " +
                     std::to_string(input));
  }
  return (input - window) / stride + 1;
}

std::uint64_t ConvLayerMacs(const ConvLayerShape& layer, int input_h,
                            int input_w) {
  const std::string label = LayerLabel(layer.name, 0);
  CheckConvFields(layer, label);
  const int oh = ConvOutputExtent(input_h, layer.kernel_h, layer.stride,
                                  layer.padding, layer.name);
  const int ow = ConvOutputExtent(input_w, layer.kernel_w, layer.stride,
                                  layer.padding, layer.name);
  return static_cast<std::uint64_t>(layer.out_channels) * oh * ow *
         layer.InChannelsPerGroup() * layer.kernel_h * layer.kernel_w;
}

ShapeTrace ValidateArchitecture(const CnnArchitecture& arch) {
  if (arch.input_height < 1 || arch.input_width < 1 || arch.input_channels < 1) {
    throw ShapeError("architecture '" + arch.name +
                     "': input dims must be >= 1");
  }
  ShapeTrace trace;
  trace.input = {arch.input_channels, arch.input_height, arch.input_width};
  Dims cur = trace.input;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    LayerTrace lt;
    lt.layer_index = i;
    lt.input = cur;
    if (const auto* conv = std::get_if<ConvLayerShape>(&arch.layers[i])) {
      const std::string label = LayerLabel(conv->name, i);
      CheckConvFields(*conv, label);
      if (conv->in_channels != cur.channels) {
        throw ShapeError(label + ": expects " +
                         std::to_string(conv->in_channels) +
                         " input channels but receives " +
                         std::to_string(cur.channels));
      }
      cur.height = ConvOutputExtent(cur.height, conv->kernel_h, conv->stride,
                                    conv->padding, label);
      cur.width = ConvOutputExtent(cur.width, conv->kernel_w, conv->stride,
                                   conv->padding, label);
      cur.channels = conv->out_channels;
      lt.name = conv->name;
      lt.is_conv = true;
    } else {
      const auto& pool = std::get<PoolLayerShape>(arch.layers[i]);
      const std::string label = LayerLabel(pool.name, i);
      CheckPoolFields(pool, label);
      cur.height = PoolOutputExtent(cur.height, pool.window, pool.stride, label);
      cur.width = PoolOutputExtent(cur.width, pool.window, pool.stride, label);
      lt.name = pool.name;
    }
    lt.output = cur;
    trace.layers.push_back(std::move(lt));
  }
  return trace;
}

OpCountReport ArchitectureGopPerMpixel(const CnnArchitecture& arch) {
  const ShapeTrace trace = ValidateArchitecture(arch);
  OpCounter counter;
  for (const auto& lt : trace.layers) {
    if (!lt.is_conv) continue;
    const auto& conv = std::get<ConvLayerShape>(arch.layers[lt.layer_index]);
    counter.macs += ConvLayerMacs(conv, lt.input.height, lt.input.width);
  }
  const auto pixels =
      static_cast<std::uint64_t>(arch.input_height) * arch.input_width;
  return OpCountReport::FromCounter(counter, pixels);
}

OpCounter ArchitectureAuxiliaryOps(const CnnArchitecture& arch) {
  const ShapeTrace trace = ValidateArchitecture(arch);
  OpCounter counter;
  for (const auto& lt : trace.layers) {
    const std::uint64_t out = lt.output.Elements();
    if (lt.is_conv) {
      counter.additions += out;    // bias
      counter.comparisons += out;  // ReLU
    } else {
      const auto& pool = std::get<PoolLayerShape>(arch.layers[lt.layer_index]);
      counter.comparisons +=
          out * static_cast<std::uint64_t>(pool.window * pool.window - 1);
    }
  }
  return counter;
}

std::uint64_t ArchitectureParameterCount(const CnnArchitecture& arch) {
  std::uint64_t n = 0;
  for (const auto& l : arch.layers) {
    if (const auto* conv = std::get_if<ConvLayerShape>(&l)) {
      n += conv->WeightCount() + static_cast<std::uint64_t>(conv->out_channels);
    }
  }
  return n;
}

double PyramidAreaMultiplier(double ratio, std::optional<int> levels) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw DomainError("pyramid ratio must lie in (0, 1), got " +
                      std::to_string(ratio));
  }
  const double r2 = ratio * ratio;
  if (!levels) return 1.0 / (1.0 - r2);
  if (*levels < 1) throw DomainError("pyramid levels must be >= 1");
  double sum = 0.0;
  double term = 1.0;
  for (int k = 0; k < *levels; ++k) {
    sum += term;
    term *= r2;
  }
  return sum;
}

void HogConfig::Validate() const {
  if (cell_size < 1) throw DomainError("hog: cell_size must be >= 1");
  if (num_bins < 1) throw DomainError("hog: num_bins must be >= 1");
  if (block_neighborhood < 1) {
    throw DomainError("hog: block_neighborhood must be >= 1");
  }
  if (!(truncation > 0.0 && truncation <= 1.0)) {
    throw DomainError("hog: truncation must lie in (0, 1]");
  }
  if (!(pyramid_ratio > 0.0 && pyramid_ratio < 1.0)) {
    throw DomainError("hog: pyramid_ratio must lie in (0, 1)");
  }
  if (min_level_size < 3) throw DomainError("hog: min_level_size must be >= 3");
  if (levels && *levels < 1) throw DomainError("hog: levels must be >= 1");
}

// Charged operations per stage. Orientation binning projects (gx, gy) on each
// bin direction with integer coefficients and keeps the argmax of |dot|:
//   dot_k = gx*c_k + gy*s_k   -> 1 multiplication + 1 MAC
//   |dot_k|                   -> 1 comparison (sign test)
//   running argmax            -> num_bins - 1 comparisons
// With a single bin every pixel votes into bin 0 and binning is skipped.
// Normalization of a cell against F = block^2 surrounding blocks:
//   h_b^2                     -> num_bins multiplications
//   cell energy               -> num_bins - 1 additions
//   block energies            -> F * (block^2 - 1) additions
//   max(E, 1) guard           -> F comparisons
//   sqrt(h_b^2 / E)           -> 2 divider ops per component (div + sqrt)
//   truncation                -> 1 comparison per component
HogOpTable HogOperationTable(const HogConfig& config) {
  config.Validate();
  const std::uint64_t nb = static_cast<std::uint64_t>(config.num_bins);
  const std::uint64_t b2 =
      static_cast<std::uint64_t>(config.block_neighborhood) *
      config.block_neighborhood;
  const std::uint64_t factors = b2;
  const std::uint64_t components = factors * nb;

  HogOpTable t;
  t.per_pixel.additions = 2 + 1;  // gx, gy; |gx| + |gy|
  t.per_pixel.comparisons = 2;    // |gx|, |gy|
  if (nb > 1) {
    t.per_pixel.multiplications = nb;
    t.per_pixel.macs = nb;
    t.per_pixel.comparisons += nb + (nb - 1);
  }
  t.per_cell_pixel.additions = 1;  // histogram vote

  t.per_cell.multiplications = nb;
  t.per_cell.additions = (nb - 1) + factors * (b2 - 1);
  t.per_cell.comparisons = factors + components;
  t.per_cell.divisions = 2 * components;
  return t;
}

namespace {

OpCounter Scaled(const OpCounter& c, std::uint64_t k) {
  return OpCounter{c.macs * k, c.additions * k, c.multiplications * k,
                   c.comparisons * k, c.divisions * k};
}

}  // namespace

std::vector<LevelSize> PyramidLevelSizes(int width, int height,
                                         const HogConfig& config) {
  config.Validate();
  std::vector<LevelSize> sizes;
  sizes.push_back({width, height, 1.0});
  for (int k = 1;; ++k) {
    if (config.levels && k >= *config.levels) break;
    const double scale = std::pow(config.pyramid_ratio, k);
    const int w = static_cast<int>(std::floor(width * scale));
    const int h = static_cast<int>(std::floor(height * scale));
    if (w < config.min_level_size || h < config.min_level_size) break;
    sizes.push_back({w, h, scale});
  }
  return sizes;
}

OpCounter HogLevelOps(int width, int height, const HogConfig& config) {
  if (width < 3 || height < 3) {
    throw ShapeError("hog: level " + std::to_string(width) + "x" +
                     std::to_string(height) + " smaller than 3x3");
  }
  const HogOpTable t = HogOperationTable(config);
  const std::uint64_t pixels = static_cast<std::uint64_t>(width) * height;
  const std::uint64_t cells =
      static_cast<std::uint64_t>(width / config.cell_size) *
      static_cast<std::uint64_t>(height / config.cell_size);
  const std::uint64_t cell_pixels =
      cells * static_cast<std::uint64_t>(config.cell_size) * config.cell_size;
  return Scaled(t.per_pixel, pixels) + Scaled(t.per_cell_pixel, cell_pixels) +
         Scaled(t.per_cell, cells);
}

OpCountReport HogGopPerMpixel(const HogConfig& config, int width, int height) {
  OpCounter total;
  for (const auto& level : PyramidLevelSizes(width, height, config)) {
    total += HogLevelOps(level.width, level.height, config);
  }
  return OpCountReport::FromCounter(
      total, static_cast<std::uint64_t>(width) * height);
}

OpCountReport HogGopPerMpixel(const HogConfig& config) {
  const HogOpTable t = HogOperationTable(config);
  const double multiplier =
      PyramidAreaMultiplier(config.pyramid_ratio, config.levels);
  const double cell_area =
      static_cast<double>(config.cell_size) * config.cell_size;
  constexpr double kPixels = 1e6;
  auto rate = [&](std::uint64_t pp, std::uint64_t pcp, std::uint64_t pc) {
    const double per_pixel = static_cast<double>(pp + pcp) +
                             static_cast<double>(pc) / cell_area;
    return static_cast<std::uint64_t>(std::llround(per_pixel * multiplier * kPixels));
  };
  OpCounter c;
  c.macs = rate(t.per_pixel.macs, t.per_cell_pixel.macs, t.per_cell.macs);
  c.additions = rate(t.per_pixel.additions, t.per_cell_pixel.additions,
                     t.per_cell.additions);
  c.multiplications =
      rate(t.per_pixel.multiplications, t.per_cell_pixel.multiplications,
           t.per_cell.multiplications);
  c.comparisons = rate(t.per_pixel.comparisons, t.per_cell_pixel.comparisons,
                       t.per_cell.comparisons);
  c.divisions = rate(t.per_pixel.divisions, t.per_cell_pixel.divisions,
                     t.per_cell.divisions);
  return OpCountReport::FromCounter(c, static_cast<std::uint64_t>(kPixels));
}

// ---------------------------------------------------------------------------
// Descriptor files

namespace {

template <typename T>
T Field(const json& j, const char* key, std::string_view context) {
  if (!j.contains(key)) {
    throw ParseError(std::string(context) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string(context) + ": field '" + key +
                     "' has the wrong type");
  }
}

template <typename T>
T FieldOr(const json& j, const char* key, T fallback, std::string_view context) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return Field<T>(j, key, context);
}

json ParseJson(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

CnnArchitecture ParseArchitecture(std::string_view json_text) {
  const json j = ParseJson(json_text, "workload descriptor");
  if (!j.is_object()) throw ParseError("workload descriptor: not an object");
  CnnArchitecture arch;
  arch.name = Field<std::string>(j, "name", "workload");
  const std::string ctx = "workload '" + arch.name + "'";
  if (!j.contains("input") || !j["input"].is_object()) {
    throw ParseError(ctx + ": missing object 'input'");
  }
  arch.input_height = Field<int>(j["input"], "h", ctx + " input");
  arch.input_width = Field<int>(j["input"], "w", ctx + " input");
  arch.input_channels = Field<int>(j["input"], "c", ctx + " input");
  arch.value_bits = FieldOr<int>(j, "value_bits", 16, ctx);
  if (!j.contains("layers") || !j["layers"].is_array()) {
    throw ParseError(ctx + ": missing array 'layers'");
  }
  std::size_t index = 0;
  for (const auto& lj : j["layers"]) {
    const std::string label = ctx + " " + LayerLabel(
        lj.is_object() ? lj.value("name", std::string()) : std::string(), index);
    if (!lj.is_object()) throw ParseError(label + ": not an object");
    const auto kind = Field<std::string>(lj, "kind", label);
    if (kind == "conv") {
      ConvLayerShape c;
      c.name = FieldOr<std::string>(lj, "name", "", label);
      c.in_channels = Field<int>(lj, "in_channels", label);
      c.out_channels = Field<int>(lj, "out_channels", label);
      if (lj.contains("kernel")) {
        c.kernel_h = c.kernel_w = Field<int>(lj, "kernel", label);
      } else {
        c.kernel_h = Field<int>(lj, "kernel_h", label);
        c.kernel_w = Field<int>(lj, "kernel_w", label);
      }
      c.stride = FieldOr<int>(lj, "stride", 1, label);
      c.padding = FieldOr<int>(lj, "padding", 0, label);
      c.groups = FieldOr<int>(lj, "groups", 1, label);
      arch.layers.emplace_back(std::move(c));
    } else if (kind == "pool") {
      PoolLayerShape p;
      p.name = FieldOr<std::string>(lj, "name", "", label);
      p.window = Field<int>(lj, "window", label);
      p.stride = FieldOr<int>(lj, "stride", p.window, label);
      arch.layers.emplace_back(std::move(p));
    } else {
      throw ParseError(label + ": unknown layer kind '" + kind + "'");
    }
    ++index;
  }
  ValidateArchitecture(arch);
  return arch;
}

CnnArchitecture LoadArchitecture(const std::filesystem::path& path) {
  return ParseArchitecture(ReadTextFile(path));
}

std::string ArchitectureToJson(const CnnArchitecture& arch) {
  json j;
  j["name"] = arch.name;
  j["input"] = {{"h", arch.input_height},
                {"w", arch.input_width},
                {"c", arch.input_channels}};
  j["value_bits"] = arch.value_bits;
  j["layers"] = json::array();
  for (const auto& l : arch.layers) {
    if (const auto* c = std::get_if<ConvLayerShape>(&l)) {
      json lj = {{"kind", "conv"},          {"name", c->name},
                 {"in_channels", c->in_channels},
                 {"out_channels", c->out_channels},
                 {"kernel_h", c->kernel_h}, {"kernel_w", c->kernel_w},
                 {"stride", c->stride},     {"padding", c->padding}};
      if (c->groups != 1) lj["groups"] = c->groups;
      j["layers"].push_back(std::move(lj));
    } else {
      const auto& p = std::get<PoolLayerShape>(l);
      j["layers"].push_back({{"kind", "pool"},
                             {"name", p.name},
                             {"window", p.window},
                             {"stride", p.stride}});
    }
  }
  return j.dump(2);
}

HogConfig ParseHogConfig(std::string_view json_text) {
  const json j = ParseJson(json_text, "hog config");
  if (!j.is_object()) throw ParseError("hog config: not an object");
  HogConfig c;
  const std::string ctx = "hog config";
  c.name = FieldOr<std::string>(j, "name", c.name, ctx);
  c.cell_size = FieldOr<int>(j, "cell_size", c.cell_size, ctx);
  c.num_bins = FieldOr<int>(j, "num_bins", c.num_bins, ctx);
  c.block_neighborhood =
      FieldOr<int>(j, "block_neighborhood", c.block_neighborhood, ctx);
  c.truncation = FieldOr<double>(j, "truncation", c.truncation, ctx);
  c.pyramid_ratio = FieldOr<double>(j, "pyramid_ratio", c.pyramid_ratio, ctx);
  c.min_level_size = FieldOr<int>(j, "min_level_size", c.min_level_size, ctx);
  if (j.contains("levels") && !j["levels"].is_null()) {
    c.levels = Field<int>(j, "levels", ctx);
  }
  if (j.contains("reference_gop_per_mpixel") &&
      !j["reference_gop_per_mpixel"].is_null()) {
    c.reference_gop_per_mpixel = Field<double>(j, "reference_gop_per_mpixel", ctx);
  }
  c.Validate();
  return c;
}

HogConfig LoadHogConfig(const std::filesystem::path& path) {
  return ParseHogConfig(ReadTextFile(path));
}

std::vector<Workload> BuiltinWorkloads() { return BuiltinWorkloads(DataDir()); }

std::vector<Workload> BuiltinWorkloads(const std::filesystem::path& data_dir) {
  const auto dir = data_dir / "workloads";
  std::vector<Workload> out;
  for (const char* name : {"alexnet", "vgg16"}) {
    out.push_back({name, LoadArchitecture(dir / (std::string(name) + ".json"))});
  }
  out.push_back({"hog", LoadHogConfig(dir / "hog.json")});
  return out;
}

Workload ResolveWorkload(const std::string& name_or_path) {
  for (auto& w : BuiltinWorkloads()) {
    if (w.name == name_or_path) return w;
  }
  const std::filesystem::path path(name_or_path);
  if (!std::filesystem::exists(path)) {
    throw ParseError("unknown workload '" + name_or_path +
                     "' (not a builtin and no such file)");
  }
  const json j = ParseJson(ReadTextFile(path), path.string());
  if (j.is_object() && j.contains("layers")) {
    auto arch = ParseArchitecture(j.dump());
    return {arch.name, std::move(arch)};
  }
  auto hog = ParseHogConfig(j.dump());
  return {hog.name, std::move(hog)};
}

}  // namespace featgap
