// featgap: operation counts, reference feature extraction and energy analysis
// for hand-crafted and learned visual features.
//
// Exit codes: 0 success, 1 input or validation error, 2 a check failed.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "featgap/cnn.h"
#include "featgap/csv.h"
#include "featgap/data_paths.h"
#include "featgap/energy.h"
#include "featgap/error.h"
#include "featgap/hog.h"
#include "featgap/image.h"
#include "featgap/techniques.h"
#include "featgap/verify.h"
#include "featgap/workload.h"

namespace fg = featgap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitCheck = 2;

std::string Fixed(double v, int p) { return fg::FormatFixed(v, p); }
std::string Num(double v) { return fg::FormatDouble(v); }
std::string Int(std::uint64_t v) { return std::to_string(v); }

std::string Grouped(std::uint64_t v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(i, ",");
  return s;
}

// Writes to `path`, or stdout for "-".
void WriteOutput(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw fg::ParseError("cannot write " + path);
  out << text;
}

double HogReferenceGop() {
  const fg::Workload hog = fg::ResolveWorkload("hog");
  const auto& cfg = std::get<fg::HogConfig>(hog.descriptor);
  return cfg.reference_gop_per_mpixel.value_or(fg::HogGopPerMpixel(cfg).gop_per_mpixel);
}

double HogAnalyticalGop() {
  const fg::Workload hog = fg::ResolveWorkload("hog");
  return fg::HogGopPerMpixel(std::get<fg::HogConfig>(hog.descriptor)).gop_per_mpixel;
}

// ---------------------------------------------------------------- count

struct CountArgs {
  std::vector<std::string> workloads;
};

int RunCount(const CountArgs& a) {
  std::vector<fg::Workload> workloads;
  if (a.workloads.empty()) {
    workloads = fg::BuiltinWorkloads();
  } else {
    for (const auto& w : a.workloads) workloads.push_back(fg::ResolveWorkload(w));
  }
  const double hog_ref = HogReferenceGop();
  const double hog_analytical = HogAnalyticalGop();
  std::ostringstream os;
  fg::CsvWriter csv(os);
  csv.Row({"workload", "gop_per_mpixel", "reference_gop_per_mpixel", "ratio_vs_hog",
           "ratio_vs_hog_analytical", "macs", "additions", "multiplications", "comparisons",
           "divisions", "total_ops", "pixels", "parameters"});
  for (const auto& w : workloads) {
    fg::OpCountReport r;
    std::optional<double> reference;
    std::uint64_t params = 0;
    if (const auto* arch = std::get_if<fg::CnnArchitecture>(&w.descriptor)) {
      r = fg::ArchitectureGopPerMpixel(*arch);
      params = fg::ArchitectureParameterCount(*arch);
    } else {
      const auto& cfg = std::get<fg::HogConfig>(w.descriptor);
      r = fg::HogGopPerMpixel(cfg);
      reference = cfg.reference_gop_per_mpixel;
    }
    const double tallied = reference.value_or(r.gop_per_mpixel);
    csv.Row({w.name, Fixed(r.gop_per_mpixel, 4), reference ? Fixed(*reference, 4) : "",
             Fixed(tallied / hog_ref, 1), Fixed(r.gop_per_mpixel / hog_analytical, 1),
             Int(r.macs), Int(r.additions), Int(r.multiplications), Int(r.comparisons),
             Int(r.divisions), Int(r.total_ops), Int(r.pixels), Int(params)});
  }
  std::cout << os.str();
  return kExitOk;
}

// ---------------------------------------------------------------- hog

struct HogArgs {
  std::string image;
  std::string config;
  std::string features_out;
  std::string ops_out;
  int threads = 1;
};

int RunHog(const HogArgs& a) {
  const fg::GrayImage img = fg::ReadPgm(a.image);
  fg::HogConfig cfg = a.config.empty()
                          ? std::get<fg::HogConfig>(fg::ResolveWorkload("hog").descriptor)
                          : fg::LoadHogConfig(a.config);
  const fg::HogResult result = fg::Extract(img, cfg, a.threads);
  const fg::OpCountReport analytical = fg::HogGopPerMpixel(cfg, img.width, img.height);
  const bool match = analytical == result.ops;

  if (!a.features_out.empty()) WriteOutput(a.features_out, fg::FeaturesToJson(result, img, cfg));

  std::ostringstream ops;
  fg::CsvWriter csv(ops);
  csv.Row({"category", "instrumented", "analytical", "status"});
  const fg::OpCountReport& m = result.ops;
  auto row = [&](const char* name, std::uint64_t x, std::uint64_t y) {
    csv.Row({name, Int(x), Int(y), x == y ? "match" : "MISMATCH"});
  };
  row("macs", m.macs, analytical.macs);
  row("additions", m.additions, analytical.additions);
  row("multiplications", m.multiplications, analytical.multiplications);
  row("comparisons", m.comparisons, analytical.comparisons);
  row("divisions", m.divisions, analytical.divisions);
  row("total_ops", m.total_ops, analytical.total_ops);
  row("pixels", m.pixels, analytical.pixels);
  csv.Row({"gop_per_mpixel", Fixed(m.gop_per_mpixel, 6), Fixed(analytical.gop_per_mpixel, 6),
           match ? "match" : "MISMATCH"});
  if (!a.ops_out.empty()) WriteOutput(a.ops_out, ops.str());

  if (a.features_out != "-" && a.ops_out != "-") {
    std::ostringstream os;
    fg::CsvWriter summary(os);
    summary.Row({"level", "scale", "width", "height", "cells_x", "cells_y", "feature_length"});
    for (const auto& l : result.levels) {
      summary.Row({Int(l.level), Fixed(l.scale, 6), Int(l.width), Int(l.height),
                   Int(l.cells_x), Int(l.cells_y), Int(l.feature_length)});
    }
    std::cout << os.str();
  }
  std::cerr << "hog: " << result.levels.size() << " levels, " << result.ops.total_ops
            << " ops, " << Fixed(result.ops.gop_per_mpixel, 4) << " GOP/Mpixel; counts "
            << (match ? "match" : "MISMATCH") << "\n";
  return match ? kExitOk : kExitCheck;
}

// ---------------------------------------------------------------- cnn

struct CnnArgs {
  std::string arch;
  std::string weights;
  std::optional<std::uint64_t> random_seed;
  std::string image;
  bool random_input = false;
  std::optional<std::uint64_t> input_seed;
  std::optional<std::size_t> upto_layer;
  std::string save_weights;
  std::string dump_tensor;
  int threads = 1;
};

fg::FixedPointTensor ImageInput(const fg::CnnArchitecture& arch, const std::string& path) {
  const fg::GrayImage img = fg::ReadPgm(path);
  if (img.width != arch.input_width || img.height != arch.input_height) {
    throw fg::ShapeError("image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                         " does not match the " + std::to_string(arch.input_width) + "x" +
                         std::to_string(arch.input_height) + " input of '" + arch.name + "'");
  }
  fg::FixedPointTensor t(arch.input_channels, arch.input_height, arch.input_width);
  for (int c = 0; c < t.channels; ++c) {
    for (int y = 0; y < t.height; ++y) {
      for (int x = 0; x < t.width; ++x) {
        t.at(c, y, x) = fg::QuantizeReal(img.at(x, y) / 255.0, t.value_bits, t.frac_bits);
      }
    }
  }
  return t;
}

int RunCnn(const CnnArgs& a) {
  const fg::Workload w = fg::ResolveWorkload(a.arch);
  const auto* arch = std::get_if<fg::CnnArchitecture>(&w.descriptor);
  if (!arch) throw fg::DomainError("workload '" + a.arch + "' is not a CNN architecture");

  fg::WeightSet weights;
  if (!a.weights.empty()) {
    weights = fg::ReadWeightFile(a.weights, *arch);
  } else if (a.random_seed) {
    weights = fg::RandomWeights(*arch, *a.random_seed);
  } else {
    throw fg::DomainError("cnn: pass --weights FILE or --random-seed N");
  }
  if (!a.save_weights.empty()) fg::WriteWeightFile(a.save_weights, weights);

  fg::FixedPointTensor input;
  if (!a.image.empty()) {
    input = ImageInput(*arch, a.image);
  } else if (a.random_input) {
    input = fg::RandomInput(*arch, a.input_seed.value_or(a.random_seed.value_or(0)));
  } else {
    throw fg::DomainError("cnn: pass --image FILE or --random-input");
  }

  const fg::NetworkResult result = fg::RunNetwork(*arch, weights, input, a.upto_layer, a.threads);
  const fg::ShapeTrace trace = fg::ValidateArchitecture(*arch);
  std::vector<std::uint64_t> macs;
  for (const auto& l : trace.layers) {
    if (!l.is_conv) continue;
    const auto& conv = std::get<fg::ConvLayerShape>(arch->layers[l.layer_index]);
    macs.push_back(fg::ConvLayerMacs(conv, l.input.height, l.input.width));
  }

  std::ostringstream os;
  fg::CsvWriter csv(os);
  csv.Row({"layer", "name", "channels", "height", "width", "macs", "sparsity"});
  std::uint64_t total = 0;
  for (const auto& o : result.outputs) {
    const std::uint64_t m = macs[o.conv_ordinal - 1];
    total += m;
    csv.Row({Int(o.conv_ordinal), o.name, Int(o.tensor.channels), Int(o.tensor.height),
             Int(o.tensor.width), Int(m), Fixed(o.sparsity, 6)});
  }
  const auto sparsity = fg::MeasureSparsity(result.outputs);
  csv.Row({"total", "", "", "", "", Int(result.conv_ops.macs), Fixed(sparsity.aggregate, 6)});
  std::cout << os.str();

  if (!a.dump_tensor.empty() && !result.outputs.empty()) {
    const auto& t = result.outputs.back().tensor;
    std::string bytes;
    bytes.reserve(t.samples.size() * 2);
    for (std::int32_t s : t.samples) {
      const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(s));
      bytes.push_back(static_cast<char>(u & 0xff));
      bytes.push_back(static_cast<char>(u >> 8));
    }
    WriteOutput(a.dump_tensor, bytes);
  }
  const bool macs_match = result.conv_ops.macs == total;
  std::cerr << "cnn: " << result.outputs.size() << " conv layers, " << Grouped(result.conv_ops.macs)
            << " MACs (analytical " << Grouped(total) << ", "
            << (macs_match ? "match" : "MISMATCH") << "), "
            << Fixed(result.conv_ops.gop_per_mpixel, 3) << " GOP/Mpixel\n";
  return macs_match ? kExitOk : kExitCheck;
}

// ---------------------------------------------------------------- energy

struct EnergyArgs {
  std::string measurements;
  bool validate = false;
  bool ratios = false;
  std::string project;
  std::string entry = "alexnet";
  bool budget = false;
};

std::uint64_t WorkloadWeights(const fg::Workload& w) {
  if (const auto* arch = std::get_if<fg::CnnArchitecture>(&w.descriptor)) {
    return fg::ArchitectureParameterCount(*arch);
  }
  return 0;
}

int RunEnergy(const EnergyArgs& a) {
  const auto set = fg::LoadMeasurementSet(
      a.measurements.empty() ? fg::DefaultMeasurementPath() : std::filesystem::path(a.measurements));
  if (!a.validate && !a.ratios && a.project.empty() && !a.budget) {
    throw fg::DomainError("energy: choose --validate, --ratios, --project or --budget-check");
  }
  std::optional<fg::TechniqueSet> techniques;
  if (!a.project.empty()) techniques = fg::ParseTechniqueString(a.project);

  int code = kExitOk;
  bool first = true;
  auto section = [&] {
    if (!first) std::cout << "\n";
    first = false;
  };

  if (a.validate) {
    section();
    const auto report = fg::ValidateMeasurements(set);
    std::ostringstream os;
    fg::CsvWriter csv(os);
    csv.Row({"entry", "identity", "predicted", "reported", "deviation_percent",
             "tolerance_percent", "status"});
    for (const auto& c : report.checks) {
      csv.Row({c.entry, c.identity, Fixed(c.predicted, 4), Num(c.reported),
               Fixed(c.deviation * 100, 2), Fixed(c.tolerance * 100, 0), c.pass ? "pass" : "FAIL"});
      if (!c.pass) {
        std::cerr << "energy: " << c.entry << ": " << c.identity << " deviates "
                  << Fixed(c.deviation * 100, 1) << "% (limit " << Fixed(c.tolerance * 100, 0)
                  << "%)\n";
      }
    }
    std::cout << os.str();
    if (!report.AllPass()) code = kExitCheck;
  }

  if (a.ratios) {
    section();
    const auto rows = fg::EnergyRatioTable(set);
    std::ostringstream os;
    fg::CsvWriter csv(os);
    csv.Row({"entry", "energy_nj_per_pixel", "ratio", "model_gop_per_mpixel",
             "efficiency_gops_per_w", "model_nj_per_pixel", "model_deviation_percent", "status"});
    for (const auto& r : rows) {
      const bool ok = r.model_deviation <= 0.10;
      csv.Row({r.name, Num(r.energy_nj_per_pixel), Fixed(r.ratio, 1) + "x",
               Fixed(r.model_gop_per_mpixel, 4), Num(set.Find(r.name).efficiency_gops_per_w),
               Fixed(r.model_nj_per_pixel, 3), Fixed(r.model_deviation * 100, 2),
               ok ? "pass" : "FAIL"});
      if (!ok) {
        std::cerr << "energy: " << r.name << ": efficiency model off by "
                  << Fixed(r.model_deviation * 100, 1) << "% (limit 10%)\n";
        code = kExitCheck;
      }
    }
    std::cout << os.str();
  }

  if (techniques) {
    section();
    const auto& entry = set.Find(a.entry);
    const auto p = fg::ProjectTechniques(
        entry, {WorkloadWeights(fg::EntryWorkload(set, entry)), 16}, *techniques);
    std::ostringstream os;
    fg::CsvWriter csv(os);
    csv.Row({"item", "energy_multiplier", "memory_multiplier", "energy_nj_per_pixel",
             "weight_memory_bytes"});
    csv.Row({"baseline:" + entry.name, "1.00", "1.00", Fixed(p.baseline_nj_per_pixel, 3),
             Int(p.baseline_memory_bytes)});
    for (const auto& f : p.factors) {
      csv.Row({f.technique, Fixed(f.energy, 2), Fixed(f.memory, 2), "", ""});
    }
    csv.Row({"combined", Fixed(p.combined_energy_multiplier, 4),
             Fixed(p.combined_memory_multiplier, 4), Fixed(p.projected_energy_nj_per_pixel, 3),
             Fixed(p.projected_memory_bytes, 1)});
    if (p.executable_memory_bytes) {
      csv.Row({"executable", "", "", "", Int(*p.executable_memory_bytes)});
    }
    std::cout << os.str();
    std::cerr << "energy: " << entry.name << " " << Fixed(p.baseline_nj_per_pixel, 1) << " -> "
              << Fixed(p.projected_energy_nj_per_pixel, 1) << " nJ/pixel, combined "
              << Fixed(p.combined_energy_multiplier, 1) << "x energy, "
              << Fixed(p.combined_memory_multiplier, 1) << "x memory\n";
  }

  if (a.budget) {
    section();
    std::ostringstream os;
    fg::CsvWriter csv(os);
    csv.Row({"entry", "energy_nj_per_pixel", "budget_nj_per_pixel", "status"});
    for (const auto& e : set.entries) {
      const auto r = fg::BudgetCheck(e.energy_nj_per_pixel, e.name);
      csv.Row({r.name, Num(r.energy_nj_per_pixel), Num(fg::kNearSensorBudgetNjPerPixel),
               r.pass ? "pass" : "fail"});
    }
    std::cout << os.str();
  }
  return code;
}

// ---------------------------------------------------------------- pareto

struct ParetoArgs {
  std::string tradeoff;
  std::string out;
};

std::string PointsCsv(const std::vector<fg::ParetoPoint>& points,
                      const std::vector<fg::ParetoPoint>& frontier) {
  std::ostringstream os;
  fg::CsvWriter csv(os);
  csv.Row({"label", "map_percent", "energy_nj_per_pixel", "log10_energy", "on_frontier",
           "provenance"});
  for (const auto& p : points) {
    const bool on = std::find(frontier.begin(), frontier.end(), p) != frontier.end();
    csv.Row({p.label, Num(p.map_percent), Num(p.energy_nj_per_pixel),
             p.energy_nj_per_pixel > 0 ? Fixed(std::log10(p.energy_nj_per_pixel), 6) : "",
             on ? "yes" : "no", p.provenance});
  }
  return os.str();
}

int RunPareto(const ParetoArgs& a) {
  const auto points = fg::LoadTradeoffDataset(
      a.tradeoff.empty() ? fg::DefaultTradeoffPath() : std::filesystem::path(a.tradeoff));
  int code = kExitOk;
  const auto issues = fg::PointIssues(points);
  for (const auto& i : issues) std::cerr << "pareto: check failed: " << i << "\n";
  if (!issues.empty()) code = kExitCheck;

  const auto result = fg::ParetoFrontier(points);
  const std::string all_csv = PointsCsv(result.all, result.frontier);
  const std::string frontier_csv = PointsCsv(result.frontier, result.frontier);

  std::ostringstream checks_os;
  fg::CsvWriter checks(checks_os);
  checks.Row({"relation", "value", "low", "high", "status"});
  const bool any_label = std::any_of(points.begin(), points.end(), [](const auto& p) {
    return std::find(fg::kTradeoffLabels.begin(), fg::kTradeoffLabels.end(), p.label) !=
           fg::kTradeoffLabels.end();
  });
  if (any_label) {
    for (const auto& c : fg::TradeoffRatioChecks(points)) {
      checks.Row({c.relation, Fixed(c.value, 4), Num(c.low), Num(c.high), c.pass ? "pass" : "FAIL"});
      if (!c.pass) {
        std::cerr << "pareto: check failed: " << c.relation << " = " << Fixed(c.value, 4)
                  << " outside [" << Num(c.low) << ", " << Num(c.high) << "]\n";
        code = kExitCheck;
      }
    }
  }

  if (a.out.empty()) {
    std::cout << all_csv << "\n" << frontier_csv << "\n" << checks_os.str();
  } else {
    WriteOutput(a.out + ".points.csv", all_csv);
    WriteOutput(a.out + ".frontier.csv", frontier_csv);
    WriteOutput(a.out + ".checks.csv", checks_os.str());
    std::cout << frontier_csv;
  }
  std::cerr << "pareto: " << result.all.size() << " points, " << result.frontier.size()
            << " on the frontier\n";
  return code;
}

// ---------------------------------------------------------------- hardwire

struct HardwireArgs {
  fg::HardwireBudget budget;
  std::optional<std::uint64_t> weights;
  std::string workload;
};

int RunHardwire(const HardwireArgs& a) {
  std::uint64_t count = 0;
  if (a.weights) {
    count = *a.weights;
  } else {
    const auto w = fg::ResolveWorkload(a.workload.empty() ? "alexnet" : a.workload);
    count = WorkloadWeights(w);
    if (count == 0) throw fg::DomainError("workload '" + w.name + "' has no weights");
  }
  const auto r = fg::HardwireFeasibility(a.budget, count);
  std::ostringstream os;
  fg::CsvWriter csv(os);
  csv.Row({"gate_budget_kgates", "memory_budget_kb", "gates_per_multiplier", "bytes_per_weight",
           "weight_count", "multipliers_affordable", "weights_in_sram", "coverage_percent",
           "memory_ratio"});
  csv.Row({Num(a.budget.gate_budget_kgates), Num(a.budget.memory_budget_kb),
           Num(a.budget.gates_per_multiplier), Num(a.budget.bytes_per_weight), Int(count),
           Int(r.multipliers_affordable), Int(r.weights_in_sram),
           Fixed(r.coverage_fraction * 100, 4), Fixed(r.memory_ratio, 4)});
  std::cout << os.str();
  std::cerr << "hardwire: " << Grouped(r.multipliers_affordable) << " multipliers, "
            << Fixed(r.coverage_fraction * 100, 2) << "% coverage, "
            << Fixed(r.memory_ratio, 1) << "x memory\n";
  return kExitOk;
}

// ---------------------------------------------------------------- verify

int RunVerify(int threads) {
  fg::VerifyOptions opts;
  opts.threads = threads;
  opts.on_result = [](const fg::CriterionResult& r) {
    std::cout << fg::FormatCriterion(r) << std::endl;
  };
  const auto results = fg::RunAcceptanceSuite(opts);
  const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
  return ok ? kExitOk : kExitCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operation counts, reference feature extraction and energy analysis for "
               "hand-crafted (HOG) and learned (CNN) features.\n"
               "Bundled data is read from $" + std::string(fg::kDataDirEnv) + " (default " +
               fg::DataDir().string() + ")."};
  app.require_subcommand(1);

  CountArgs count;
  auto* c = app.add_subcommand("count", "Analytical operation counts in GOP/Mpixel (1 MAC = 2 ops, "
                                        "normalized by input-image pixels)");
  c->add_option("-w,--workload", count.workloads,
                "Builtin name (alexnet, vgg16, hog) or descriptor path; repeatable; default all");

  HogArgs hog;
  auto* h = app.add_subcommand("hog", "Extract HOG features from a binary PGM (P5, maxval 255)");
  h->add_option("image", hog.image, "Input image (.pgm)")->required();
  h->add_option("config", hog.config, "HOG config JSON (default: builtin hog)");
  h->add_option("--emit-features", hog.features_out, "Write the feature document (JSON) here; - for stdout");
  h->add_option("--emit-ops", hog.ops_out,
                "Write instrumented vs analytical op counts (CSV, ops and GOP/Mpixel) here; - for stdout");
  h->add_option("--threads", hog.threads, "Worker threads over pyramid levels")->check(CLI::PositiveNumber);

  CnnArgs cnn;
  auto* n = app.add_subcommand("cnn", "Run a fixed-point (Q8.8) conv stack and report per-layer "
                                      "MACs and output sparsity (fraction of zeros)");
  n->add_option("--arch", cnn.arch, "Builtin name or descriptor path")->required();
  auto* wopt = n->add_option("--weights", cnn.weights, "Weight file (manifest line + int16 LE)");
  n->add_option("--random-seed", cnn.random_seed, "Seed for uniform [-1, 1) weights")->excludes(wopt);
  auto* iopt = n->add_option("--image", cnn.image, "Input PGM matching the architecture's input size");
  n->add_flag("--random-input", cnn.random_input, "Uniform [0, 1) input")->excludes(iopt);
  n->add_option("--input-seed", cnn.input_seed, "Seed for --random-input (default: --random-seed)");
  n->add_option("--upto-layer", cnn.upto_layer, "Stop after this conv layer (1-based)");
  n->add_option("--save-weights", cnn.save_weights, "Also write the weights used to this file");
  n->add_option("--dump-tensor", cnn.dump_tensor, "Write the last output tensor (int16 LE, CHW)");
  n->add_option("--threads", cnn.threads, "Worker threads over output channels")->check(CLI::PositiveNumber);

  EnergyArgs energy;
  auto* e = app.add_subcommand("energy", "Chip measurement checks and energy projections "
                                         "(energy in nJ/pixel, power in mW, efficiency in GOPS/W)");
  e->add_option("measurements", energy.measurements, "Measurement dataset JSON (default: bundled)");
  e->add_flag("--validate", energy.validate,
              "Check energy = power/throughput, efficiency = GOPS/power, GOPS = Mpixel/s x "
              "GOP/Mpixel (20%) and resource class (30%)");
  e->add_flag("--ratios", energy.ratios,
              "Energy ratios vs the baseline and the efficiency model nJ/pixel = GOP/Mpixel x 1000 / (GOPS/W)");
  e->add_option("--project", energy.project,
                "Technique string, e.g. quant=8,prune=0.151,rlc,dataflow=1.4 (dataflow in [1.4, 2.5])");
  e->add_option("--entry", energy.entry, "Entry used as the projection baseline (default alexnet)");
  e->add_flag("--budget-check", energy.budget, "Compare each entry with the 1 nJ/pixel budget (strict)");

  ParetoArgs pareto;
  auto* p = app.add_subcommand("pareto", "Accuracy (mAP %) vs energy (nJ/pixel) frontier and "
                                         "relationship checks");
  p->add_option("tradeoff", pareto.tradeoff, "Trade-off dataset JSON (default: bundled)");
  p->add_option("--out", pareto.out,
                "Write <out>.points.csv, <out>.frontier.csv and <out>.checks.csv");

  HardwireArgs hw;
  auto* hwc = app.add_subcommand("hardwire", "Fixed-weight hardwiring feasibility");
  hwc->add_option("--gates", hw.budget.gate_budget_kgates, "Gate budget in kgates (default 1000)");
  hwc->add_option("--memory", hw.budget.memory_budget_kb, "SRAM budget in kB, 1 kB = 1024 B (default 150)");
  hwc->add_option("--gates-per-multiplier", hw.budget.gates_per_multiplier,
                  "Gates per fixed-weight multiplier (default 100)");
  hwc->add_option("--bytes-per-weight", hw.budget.bytes_per_weight, "Bytes per stored weight (default 1)");
  auto* hww = hwc->add_option("--weights", hw.weights, "Weight count");
  hwc->add_option("--workload", hw.workload, "Take the weight count from a CNN workload (default alexnet)")
      ->excludes(hww);

  int verify_threads = 2;
  auto* v = app.add_subcommand("verify-paper", "Run every reproduction check and print a pass/fail matrix");
  v->add_option("--threads", verify_threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitInput;
  }

  try {
    if (*c) return RunCount(count);
    if (*h) return RunHog(hog);
    if (*n) return RunCnn(cnn);
    if (*e) return RunEnergy(energy);
    if (*p) return RunPareto(pareto);
    if (*hwc) return RunHardwire(hw);
    if (*v) return RunVerify(verify_threads);
  } catch (const fg::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInput;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
