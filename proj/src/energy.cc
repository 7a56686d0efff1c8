#include "featgap/energy.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "featgap/data_paths.h"
#include "featgap/error.h"
#include "json.hpp"

namespace featgap {

using nlohmann::json;

namespace {

json ParseDocument(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

double Number(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key)) throw ParseError(ctx + ": missing field '" + key + "'");
  if (!j.at(key).is_number()) throw ParseError(ctx + ": field '" + key + "' is not a number");
  return j.at(key).get<double>();
}

std::string Text(const json& j, const char* key, const std::string& ctx,
                 bool required = true) {
  if (!j.contains(key) || j.at(key).is_null()) {
    if (required) throw ParseError(ctx + ": missing field '" + key + "'");
    return {};
  }
  if (!j.at(key).is_string()) throw ParseError(ctx + ": field '" + key + "' is not a string");
  return j.at(key).get<std::string>();
}

double RelativeDeviation(double predicted, double reported) {
  if (reported == 0.0) return predicted == 0.0 ? 0.0 : INFINITY;
  return std::abs(predicted - reported) / std::abs(reported);
}

IdentityCheck MakeCheck(const std::string& entry, std::string identity, double predicted,
                        double reported, double tolerance) {
  IdentityCheck c;
  c.entry = entry;
  c.identity = std::move(identity);
  c.predicted = predicted;
  c.reported = reported;
  c.deviation = RelativeDeviation(predicted, reported);
  c.tolerance = tolerance;
  c.pass = c.deviation <= tolerance;
  return c;
}

void RequirePositive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

const ChipMeasurement& MeasurementSet::Find(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw DomainError("measurements: no entry named '" + std::string(name) + "'");
}

const ChipMeasurement& MeasurementSet::Baseline() const {
  if (baseline.empty()) throw DomainError("measurements: no baseline entry designated");
  return Find(baseline);
}

MeasurementSet ParseMeasurementSet(std::string_view json_text,
                                   const std::filesystem::path& base_dir) {
  const json j = ParseDocument(json_text, "measurements");
  if (!j.is_object()) throw ParseError("measurements: not an object");
  if (!j.contains("entries") || !j["entries"].is_array()) {
    throw ParseError("measurements: missing array 'entries'");
  }
  MeasurementSet set;
  set.base_dir = base_dir;
  set.baseline = Text(j, "baseline", "measurements", false);
  std::set<std::string> names;
  std::size_t index = 0;
  for (const auto& ej : j["entries"]) {
    std::string ctx = "measurements entry " + std::to_string(index++);
    if (!ej.is_object()) throw ParseError(ctx + ": not an object");
    ChipMeasurement m;
    m.name = Text(ej, "name", ctx);
    ctx += " '" + m.name + "'";
    m.workload = Text(ej, "workload", ctx, false);
    m.technology = Text(ej, "technology", ctx, false);
    m.multiplier_bitwidth = Text(ej, "multiplier_bitwidth", ctx, false);
    m.gate_count_kgates = Number(ej, "gate_count_kgates", ctx);
    m.memory_kb = Number(ej, "memory_kb", ctx);
    m.throughput_mpixel_s = Number(ej, "throughput_mpixel_s", ctx);
    m.throughput_gops = Number(ej, "throughput_gops", ctx);
    m.power_mw = Number(ej, "power_mw", ctx);
    m.dram_b_per_pixel = Number(ej, "dram_b_per_pixel", ctx);
    m.energy_nj_per_pixel = Number(ej, "energy_nj_per_pixel", ctx);
    m.efficiency_gops_per_w = Number(ej, "efficiency_gops_per_w", ctx);
    if (!names.insert(m.name).second) {
      throw ParseError("measurements: duplicate entry name '" + m.name + "'");
    }
    set.entries.push_back(std::move(m));
  }
  if (!set.baseline.empty() && !names.count(set.baseline)) {
    throw ParseError("measurements: baseline '" + set.baseline + "' is not an entry");
  }
  return set;
}

MeasurementSet LoadMeasurementSet(const std::filesystem::path& path) {
  return ParseMeasurementSet(ReadTextFile(path), path.parent_path());
}

std::filesystem::path DefaultMeasurementPath() {
  return DataDir() / "measurements" / "compare_chips.json";
}

Workload EntryWorkload(const MeasurementSet& set, const ChipMeasurement& entry) {
  if (entry.workload.empty()) {
    throw DomainError("measurements entry '" + entry.name + "' has no workload link");
  }
  if (!set.base_dir.empty()) {
    const auto local = set.base_dir / entry.workload;
    if (std::filesystem::is_regular_file(local)) return ResolveWorkload(local.string());
  }
  return ResolveWorkload(entry.workload);
}

double IdentityGopPerMpixel(const Workload& workload) {
  if (const auto* hog = std::get_if<HogConfig>(&workload.descriptor)) {
    if (hog->reference_gop_per_mpixel) return *hog->reference_gop_per_mpixel;
    return HogGopPerMpixel(*hog).gop_per_mpixel;
  }
  return ArchitectureGopPerMpixel(std::get<CnnArchitecture>(workload.descriptor))
      .gop_per_mpixel;
}

bool ValidationReport::AllPass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

ValidationReport ValidateMeasurements(const MeasurementSet& set) {
  ValidationReport r;
  for (const auto& e : set.entries) {
    const Workload w = EntryWorkload(set, e);
    r.checks.push_back(MakeCheck(e.name, "energy = power / throughput",
                                 e.power_mw / e.throughput_mpixel_s,
                                 e.energy_nj_per_pixel, kIdentityTolerance));
    r.checks.push_back(MakeCheck(e.name, "efficiency = GOPS / power",
                                 e.throughput_gops / (e.power_mw / 1000.0),
                                 e.efficiency_gops_per_w, kIdentityTolerance));
    r.checks.push_back(MakeCheck(e.name, "GOPS = Mpixel/s * GOP/Mpixel",
                                 e.throughput_mpixel_s * IdentityGopPerMpixel(w),
                                 e.throughput_gops, kIdentityTolerance));
    r.checks.push_back(MakeCheck(e.name, "gate count class", e.gate_count_kgates,
                                 kResourceGatesKgates, kResourceTolerance));
    r.checks.push_back(MakeCheck(e.name, "memory class", e.memory_kb, kResourceMemoryKb,
                                 kResourceTolerance));
  }
  return r;
}

double EnergyPerPixelModel(double gop_per_mpixel, double efficiency_gops_per_w) {
  RequirePositive(gop_per_mpixel, "GOP/Mpixel");
  RequirePositive(efficiency_gops_per_w, "GOPS/W");
  return gop_per_mpixel * 1000.0 / efficiency_gops_per_w;
}

double ModelGopPerMpixel(const ChipMeasurement& entry, const Workload& workload) {
  if (std::holds_alternative<HogConfig>(workload.descriptor)) {
    RequirePositive(entry.throughput_mpixel_s, "throughput (Mpixel/s)");
    return entry.throughput_gops / entry.throughput_mpixel_s;
  }
  return ArchitectureGopPerMpixel(std::get<CnnArchitecture>(workload.descriptor))
      .gop_per_mpixel;
}

std::vector<EnergyRow> EnergyRatioTable(const MeasurementSet& set) {
  const ChipMeasurement& base = set.Baseline();
  RequirePositive(base.energy_nj_per_pixel, "baseline energy");
  std::vector<EnergyRow> rows;
  for (const auto& e : set.entries) {
    EnergyRow row;
    row.name = e.name;
    row.energy_nj_per_pixel = e.energy_nj_per_pixel;
    row.ratio = e.energy_nj_per_pixel / base.energy_nj_per_pixel;
    row.model_gop_per_mpixel = ModelGopPerMpixel(e, EntryWorkload(set, e));
    row.model_nj_per_pixel =
        EnergyPerPixelModel(row.model_gop_per_mpixel, e.efficiency_gops_per_w);
    row.model_deviation = RelativeDeviation(row.model_nj_per_pixel, e.energy_nj_per_pixel);
    rows.push_back(std::move(row));
  }
  return rows;
}

EnergyProjection ProjectTechniques(double baseline_nj_per_pixel, const WeightsInfo& weights,
                                   const TechniqueSet& set) {
  set.Validate();
  if (!(baseline_nj_per_pixel >= 0.0)) throw DomainError("baseline energy must be >= 0");
  if (weights.value_bits < 1) throw DomainError("weight value bits must be >= 1");
  EnergyProjection p;
  p.baseline_nj_per_pixel = baseline_nj_per_pixel;
  p.applied = set;
  if (set.quantization) p.factors.push_back(kQuantizationFactor);
  if (set.pruning) p.factors.push_back(kPruningFactor);
  if (set.compression) p.factors.push_back(kCompressionFactor);
  if (set.dataflow_multiplier) p.factors.push_back({"dataflow", *set.dataflow_multiplier, 1.0});
  for (const auto& f : p.factors) {
    p.combined_energy_multiplier *= f.energy;
    p.combined_memory_multiplier *= f.memory;
  }
  p.projected_energy_nj_per_pixel = baseline_nj_per_pixel / p.combined_energy_multiplier;
  p.baseline_memory_bytes = WeightMemoryBytes(weights.count, weights.count,
                                              weights.value_bits, false);
  p.projected_memory_bytes =
      static_cast<double>(p.baseline_memory_bytes) / p.combined_memory_multiplier;
  if (set.quantization || set.pruning) {
    const int bits = set.quantization ? set.quantization->bits : weights.value_bits;
    const std::uint64_t nonzeros =
        set.pruning ? PruneKeepCount(weights.count, set.pruning->target_density)
                    : weights.count;
    p.executable_memory_bytes =
        WeightMemoryBytes(weights.count, nonzeros, bits, set.pruning.has_value());
  }
  return p;
}

EnergyProjection ProjectTechniques(const ChipMeasurement& baseline, const WeightsInfo& weights,
                                   const TechniqueSet& set) {
  return ProjectTechniques(baseline.energy_nj_per_pixel, weights, set);
}

void HardwireBudget::Validate() const {
  RequirePositive(gate_budget_kgates, "gate budget (kgates)");
  RequirePositive(memory_budget_kb, "memory budget (kB)");
  RequirePositive(gates_per_multiplier, "gates per multiplier");
  RequirePositive(bytes_per_weight, "bytes per weight");
}

HardwireReport HardwireFeasibility(const HardwireBudget& budget, std::uint64_t weight_count) {
  budget.Validate();
  if (weight_count == 0) throw DomainError("weight count must be positive");
  HardwireReport r;
  r.weight_count = weight_count;
  r.multipliers_affordable = static_cast<std::uint64_t>(
      std::floor(budget.gate_budget_kgates * 1000.0 / budget.gates_per_multiplier + 1e-9));
  r.weights_in_sram = static_cast<std::uint64_t>(
      std::floor(budget.memory_budget_kb * 1024.0 / budget.bytes_per_weight + 1e-9));
  r.coverage_fraction =
      static_cast<double>(r.multipliers_affordable) / static_cast<double>(weight_count);
  r.memory_ratio = r.weights_in_sram == 0
                       ? INFINITY
                       : static_cast<double>(weight_count) / static_cast<double>(r.weights_in_sram);
  return r;
}

BudgetResult BudgetCheck(double energy_nj_per_pixel, std::string name) {
  return {std::move(name), energy_nj_per_pixel,
          energy_nj_per_pixel < kNearSensorBudgetNjPerPixel};
}

std::vector<ParetoPoint> ParseTradeoffDataset(std::string_view json_text) {
  const json j = ParseDocument(json_text, "trade-off dataset");
  if (!j.is_object() || !j.contains("points") || !j["points"].is_array()) {
    throw ParseError("trade-off dataset: missing array 'points'");
  }
  std::vector<ParetoPoint> points;
  std::set<std::string> labels;
  std::size_t index = 0;
  for (const auto& pj : j["points"]) {
    std::string ctx = "trade-off point " + std::to_string(index++);
    if (!pj.is_object()) throw ParseError(ctx + ": not an object");
    ParetoPoint p;
    p.label = Text(pj, "label", ctx);
    ctx += " '" + p.label + "'";
    p.map_percent = Number(pj, "map_percent", ctx);
    p.energy_nj_per_pixel = Number(pj, "energy_nj_per_pixel", ctx);
    p.provenance = Text(pj, "provenance", ctx, false);
    if (!labels.insert(p.label).second) {
      throw ParseError("trade-off dataset: duplicate label '" + p.label + "'");
    }
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<ParetoPoint> LoadTradeoffDataset(const std::filesystem::path& path) {
  return ParseTradeoffDataset(ReadTextFile(path));
}

std::filesystem::path DefaultTradeoffPath() {
  return DataDir() / "tradeoff" / "hand_vs_dnn.json";
}

std::vector<std::string> PointIssues(const std::vector<ParetoPoint>& points) {
  std::vector<std::string> issues;
  for (const auto& p : points) {
    if (!(p.map_percent >= 0.0 && p.map_percent <= 100.0)) {
      std::ostringstream os;
      os << p.label << ": mAP " << p.map_percent << "% outside [0, 100]";
      issues.push_back(os.str());
    }
    if (!(p.energy_nj_per_pixel > 0.0) || !std::isfinite(p.energy_nj_per_pixel)) {
      std::ostringstream os;
      os << p.label << ": energy " << p.energy_nj_per_pixel << " nJ/pixel is not positive";
      issues.push_back(os.str());
    }
  }
  return issues;
}

bool Dominates(const ParetoPoint& a, const ParetoPoint& b) {
  return a.map_percent >= b.map_percent && a.energy_nj_per_pixel <= b.energy_nj_per_pixel &&
         (a.map_percent > b.map_percent || a.energy_nj_per_pixel < b.energy_nj_per_pixel);
}

ParetoResult ParetoFrontier(const std::vector<ParetoPoint>& points) {
  ParetoResult r;
  r.all = points;
  std::stable_sort(r.all.begin(), r.all.end(), [](const auto& a, const auto& b) {
    if (a.energy_nj_per_pixel != b.energy_nj_per_pixel) {
      return a.energy_nj_per_pixel < b.energy_nj_per_pixel;
    }
    return a.map_percent > b.map_percent;
  });
  for (const auto& p : r.all) {
    const bool dominated = std::any_of(r.all.begin(), r.all.end(),
                                       [&](const auto& q) { return Dominates(q, p); });
    const bool repeat = std::any_of(r.frontier.begin(), r.frontier.end(), [&](const auto& q) {
      return q.map_percent == p.map_percent &&
             q.energy_nj_per_pixel == p.energy_nj_per_pixel;
    });
    if (!dominated && !repeat) r.frontier.push_back(p);
  }
  return r;
}

std::vector<RelationCheck> TradeoffRatioChecks(const std::vector<ParetoPoint>& points) {
  auto find = [&](const std::string& label) -> const ParetoPoint& {
    for (const auto& p : points) {
      if (p.label == label) return p;
    }
    throw DomainError("trade-off dataset: missing label '" + label + "'");
  };
  std::vector<std::string> missing;
  for (const auto& l : kTradeoffLabels) {
    if (std::none_of(points.begin(), points.end(), [&](const auto& p) { return p.label == l; })) {
      missing.push_back(l);
    }
  }
  if (!missing.empty()) {
    std::string msg = "trade-off dataset: missing label(s)";
    for (const auto& m : missing) msg += " '" + m + "'";
    throw DomainError(msg);
  }
  const auto& hog = find("HOG");
  const auto& c3 = find("AlexNet-CONV3");
  const auto& c5 = find("AlexNet-CONV5");
  const auto& vgg = find("VGG");
  auto check = [](std::string name, double value, double low, double high) {
    return RelationCheck{std::move(name), value, low, high, value >= low && value <= high};
  };
  return {
      check("energy CONV3 / HOG ~ 100x", c3.energy_nj_per_pixel / hog.energy_nj_per_pixel,
            100.0 * 0.80, 100.0 * 1.20),
      check("energy CONV5 / CONV3 ~ 1.22", c5.energy_nj_per_pixel / c3.energy_nj_per_pixel,
            1.22 * 0.95, 1.22 * 1.05),
      check("energy VGG / HOG in [5e3, 5e4]",
            vgg.energy_nj_per_pixel / hog.energy_nj_per_pixel, 5e3, 5e4),
      check("mAP CONV5 / HOG ~ 2", c5.map_percent / hog.map_percent, 2.0 * 0.85, 2.0 * 1.15),
      check("mAP CONV3 / HOG ~ 1", c3.map_percent / hog.map_percent, 0.90, 1.10),
  };
}

double DramTrafficLowerBound(const CnnArchitecture& arch, int bytes_per_value) {
  if (bytes_per_value < 1) throw DomainError("bytes per value must be >= 1");
  const ShapeTrace trace = ValidateArchitecture(arch);
  std::uint64_t values = ArchitectureParameterCount(arch) + trace.input.Elements();
  for (const auto& l : trace.layers) values += l.output.Elements();
  const double pixels = static_cast<double>(arch.input_height) * arch.input_width;
  return static_cast<double>(values) * bytes_per_value / pixels;
}

}  // namespace featgap
