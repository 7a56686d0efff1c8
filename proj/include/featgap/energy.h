#ifndef FEATGAP_ENERGY_H_
#define FEATGAP_ENERGY_H_

// Chip measurements, their consistency identities, the efficiency-based
// energy model, technique projection and accuracy/energy trade-off analysis.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "featgap/techniques.h"
#include "featgap/workload.h"

namespace featgap {

struct ChipMeasurement {
  std::string name;
  std::string workload;  // builtin name or descriptor path
  std::string technology;
  std::string multiplier_bitwidth;
  double gate_count_kgates = 0.0;
  double memory_kb = 0.0;
  double throughput_mpixel_s = 0.0;
  double throughput_gops = 0.0;
  double power_mw = 0.0;
  double dram_b_per_pixel = 0.0;
  double energy_nj_per_pixel = 0.0;
  double efficiency_gops_per_w = 0.0;
};

struct MeasurementSet {
  std::string baseline;
  std::vector<ChipMeasurement> entries;
  // Directory used to resolve relative workload paths.
  std::filesystem::path base_dir;

  const ChipMeasurement& Find(std::string_view name) const;
  const ChipMeasurement& Baseline() const;
};

MeasurementSet ParseMeasurementSet(std::string_view json_text,
                                   const std::filesystem::path& base_dir = {});
MeasurementSet LoadMeasurementSet(const std::filesystem::path& path);
// <data_dir>/measurements/compare_chips.json
std::filesystem::path DefaultMeasurementPath();

inline constexpr double kIdentityTolerance = 0.20;
inline constexpr double kResourceTolerance = 0.30;
inline constexpr double kResourceGatesKgates = 1000.0;
inline constexpr double kResourceMemoryKb = 150.0;

// Throws DomainError when the entry has no workload link.
Workload EntryWorkload(const MeasurementSet& set, const ChipMeasurement& entry);

// GOP/Mpixel used by the throughput identity: the hand-crafted descriptor's
// reference figure when it carries one, else the analytical count.
double IdentityGopPerMpixel(const Workload& workload);

struct IdentityCheck {
  std::string entry;
  std::string identity;
  double predicted = 0.0;
  double reported = 0.0;
  double deviation = 0.0;  // |predicted - reported| / reported
  double tolerance = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<IdentityCheck> checks;
  bool AllPass() const;
};

// Per entry: energy = power / throughput, efficiency = GOPS / power,
// GOPS = Mpixel/s * GOP/Mpixel (within kIdentityTolerance), and the
// gate/memory resource class (within kResourceTolerance).
ValidationReport ValidateMeasurements(const MeasurementSet& set);

// nJ/pixel = GOP/Mpixel * 1000 / (GOPS/W).
double EnergyPerPixelModel(double gop_per_mpixel, double efficiency_gops_per_w);

// Operations per pixel in the chip's own convention: the analytical count for
// CNN workloads, measured GOPS / (Mpixel/s) for hand-crafted ones.
double ModelGopPerMpixel(const ChipMeasurement& entry, const Workload& workload);

struct EnergyRow {
  std::string name;
  double energy_nj_per_pixel = 0.0;
  double ratio = 0.0;                  // vs baseline
  double model_gop_per_mpixel = 0.0;
  double model_nj_per_pixel = 0.0;
  double model_deviation = 0.0;        // |model - measured| / measured
};

std::vector<EnergyRow> EnergyRatioTable(const MeasurementSet& set);

struct WeightsInfo {
  std::uint64_t count = 0;
  int value_bits = 16;
};

struct TechniqueFactor {
  std::string technique;
  double energy = 1.0;
  double memory = 1.0;
};

struct EnergyProjection {
  double baseline_nj_per_pixel = 0.0;
  TechniqueSet applied;
  std::vector<TechniqueFactor> factors;  // quant, prune, rlc, dataflow order
  double combined_energy_multiplier = 1.0;
  double combined_memory_multiplier = 1.0;
  double projected_energy_nj_per_pixel = 0.0;
  std::uint64_t baseline_memory_bytes = 0;  // dense weights at value_bits
  double projected_memory_bytes = 0.0;
  // Weight memory after actually quantizing and pruning, when either applies.
  std::optional<std::uint64_t> executable_memory_bytes;
};

inline const TechniqueFactor kQuantizationFactor{"quant", 2.56, 2.0};
inline const TechniqueFactor kPruningFactor{"prune", 3.7, 6.6};
inline const TechniqueFactor kCompressionFactor{"rlc", 1.0, 2.0};

EnergyProjection ProjectTechniques(double baseline_nj_per_pixel,
                                   const WeightsInfo& weights,
                                   const TechniqueSet& set);
EnergyProjection ProjectTechniques(const ChipMeasurement& baseline,
                                   const WeightsInfo& weights,
                                   const TechniqueSet& set);

struct HardwireBudget {
  double gate_budget_kgates = 1000.0;
  double memory_budget_kb = 150.0;
  double gates_per_multiplier = 100.0;
  double bytes_per_weight = 1.0;

  void Validate() const;
};

struct HardwireReport {
  std::uint64_t multipliers_affordable = 0;
  std::uint64_t weights_in_sram = 0;
  std::uint64_t weight_count = 0;
  double coverage_fraction = 0.0;  // multipliers / weights
  double memory_ratio = 0.0;       // weights / storable weights
};

HardwireReport HardwireFeasibility(const HardwireBudget& budget,
                                   std::uint64_t weight_count);

inline constexpr double kNearSensorBudgetNjPerPixel = 1.0;

struct BudgetResult {
  std::string name;
  double energy_nj_per_pixel = 0.0;
  bool pass = false;  // strictly under budget
};

BudgetResult BudgetCheck(double energy_nj_per_pixel, std::string name = {});

struct ParetoPoint {
  std::string label;
  double map_percent = 0.0;
  double energy_nj_per_pixel = 0.0;
  std::string provenance;
  bool operator==(const ParetoPoint&) const = default;
};

std::vector<ParetoPoint> ParseTradeoffDataset(std::string_view json_text);
std::vector<ParetoPoint> LoadTradeoffDataset(const std::filesystem::path& path);
// <data_dir>/tradeoff/hand_vs_dnn.json
std::filesystem::path DefaultTradeoffPath();

// Range violations (mAP outside [0, 100], non-positive energy), one message
// per offending point.
std::vector<std::string> PointIssues(const std::vector<ParetoPoint>& points);

bool Dominates(const ParetoPoint& a, const ParetoPoint& b);

struct ParetoResult {
  std::vector<ParetoPoint> all;       // energy ascending
  std::vector<ParetoPoint> frontier;  // energy ascending, mAP increasing
};

ParetoResult ParetoFrontier(const std::vector<ParetoPoint>& points);

inline const std::vector<std::string> kTradeoffLabels = {
    "HOG", "AlexNet-CONV3", "AlexNet-CONV5", "VGG"};

struct RelationCheck {
  std::string relation;
  double value = 0.0;
  double low = 0.0;
  double high = 0.0;
  bool pass = false;
};

// Throws DomainError naming any missing label.
std::vector<RelationCheck> TradeoffRatioChecks(const std::vector<ParetoPoint>& points);

// Weights, input and every layer output moved once, per input pixel.
double DramTrafficLowerBound(const CnnArchitecture& arch, int bytes_per_value = 2);

}  // namespace featgap

#endif  // FEATGAP_ENERGY_H_
