#include "featgap/verify.h"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "featgap/cnn.h"
#include "featgap/data_paths.h"
#include "featgap/energy.h"
#include "featgap/error.h"
#include "featgap/hog.h"
#include "featgap/image.h"
#include "featgap/techniques.h"
#include "featgap/workload.h"

namespace featgap {

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

CriterionResult Named(std::string id, std::string title) {
  CriterionResult r;
  r.id = std::move(id);
  r.title = std::move(title);
  return r;
}

bool Within(double value, double target, double rel) {
  return std::abs(value - target) <= rel * std::abs(target);
}

struct Builtins {
  CnnArchitecture alexnet;
  CnnArchitecture vgg;
  HogConfig hog;
};

Builtins LoadBuiltins() {
  Builtins b;
  for (auto& w : BuiltinWorkloads()) {
    if (w.name == "alexnet") b.alexnet = std::get<CnnArchitecture>(w.descriptor);
    if (w.name == "vgg16") b.vgg = std::get<CnnArchitecture>(w.descriptor);
    if (w.name == "hog") b.hog = std::get<HogConfig>(w.descriptor);
  }
  return b;
}

GrayImage RandomImage(std::mt19937_64& rng, int w, int h, int max_value) {
  GrayImage img(w, h);
  std::uniform_int_distribution<int> d(0, max_value);
  for (auto& s : img.samples) s = static_cast<std::uint8_t>(d(rng));
  return img;
}

CriterionResult ComplexityTable(const Builtins& b) {
  CriterionResult r = Named("complexity", "GOP/Mpixel of AlexNet and VGG-16 and ratios vs HOG");
  const auto t0 = Clock::now();
  const double alex = ArchitectureGopPerMpixel(b.alexnet).gop_per_mpixel;
  const double vgg = ArchitectureGopPerMpixel(b.vgg).gop_per_mpixel;
  const double hog = b.hog.reference_gop_per_mpixel.value_or(
      HogGopPerMpixel(b.hog).gop_per_mpixel);
  const double elapsed = Seconds(t0);
  const bool ok = Within(alex, 25.8, 0.02) && Within(vgg, 610.3, 0.02) &&
                  Within(alex / hog, 36.9, 0.04) && Within(vgg / hog, 871.9, 0.04) &&
                  elapsed < 1.0;
  std::ostringstream os;
  os.precision(4);
  os << "AlexNet " << alex << " (25.8 +-2%), VGG-16 " << vgg << " (610.3 +-2%), ratios "
     << alex / hog << "x (36.9 +-4%) and " << vgg / hog << "x (871.9 +-4%) vs HOG " << hog
     << ", " << elapsed * 1e3 << " ms (< 1 s)";
  r.pass = ok;
  r.detail = os.str();
  return r;
}

CriterionResult HogBand(const Builtins& b, int threads) {
  CriterionResult r = Named("hog_band", "HOG complexity band and analytical = instrumented counts");
  const double gop = HogGopPerMpixel(b.hog).gop_per_mpixel;
  const bool in_band = gop >= 0.35 && gop <= 1.4;
  const std::vector<std::pair<int, int>> sizes = {
      {64, 64}, {96, 80}, {127, 45}, {200, 150}, {33, 257}, {16, 16}};
  std::mt19937_64 rng(11);
  int matched = 0;
  for (const auto& [w, h] : sizes) {
    const auto result = Extract(RandomImage(rng, w, h, 255), b.hog, threads);
    if (result.ops == HogGopPerMpixel(b.hog, w, h)) ++matched;
  }
  std::ostringstream os;
  os << "default config " << gop << " GOP/Mpixel (band [0.35, 1.4]); counts match on "
     << matched << "/" << sizes.size() << " image sizes";
  r.pass = in_band && matched == static_cast<int>(sizes.size());
  r.detail = os.str();
  return r;
}

CriterionResult ChipIdentities(const MeasurementSet& set) {
  CriterionResult r = Named("chip_identities", "measurement identities within 20% on all chips");
  const auto report = ValidateMeasurements(set);
  bool ok = true;
  double worst = 0.0;
  std::string worst_name;
  std::size_t n = 0;
  for (const auto& c : report.checks) {
    if (c.tolerance != kIdentityTolerance) continue;
    ++n;
    ok = ok && c.pass;
    if (c.deviation > worst) {
      worst = c.deviation;
      worst_name = c.entry + " / " + c.identity;
    }
  }
  std::ostringstream os;
  os.precision(3);
  os << n << " identities checked; worst " << worst * 100 << "% (" << worst_name << ")";
  r.pass = ok && n == 3 * set.entries.size();
  r.detail = os.str();
  return r;
}

CriterionResult EnergyTable(const MeasurementSet& set) {
  CriterionResult r = Named("energy_table", "energy ratios exact and efficiency model within 10%");
  const auto rows = EnergyRatioTable(set);
  const std::vector<std::pair<double, double>> expected = {{1.0, 0.5}, {311.0, 155.5},
                                                           {13485.8, 6742.9}};
  bool ok = rows.size() == expected.size();
  std::ostringstream os;
  os.precision(6);
  for (std::size_t i = 0; ok && i < rows.size(); ++i) {
    ok = ok && std::abs(rows[i].ratio - expected[i].first) <= 1e-9 * expected[i].first &&
         rows[i].energy_nj_per_pixel == expected[i].second && rows[i].model_deviation <= 0.10;
    os << (i ? "; " : "") << rows[i].name << " " << rows[i].ratio << "x, model "
       << rows[i].model_nj_per_pixel << " nJ/pixel (" << rows[i].model_deviation * 100 << "%)";
  }
  r.pass = ok;
  r.detail = os.str();
  return r;
}

CriterionResult Hardwire(const Builtins& b) {
  CriterionResult r = Named("hardwire", "hardwired AlexNet within 1000 kgates and 150 kB");
  const auto rep = HardwireFeasibility({}, ArchitectureParameterCount(b.alexnet));
  std::ostringstream os;
  os.precision(4);
  os << rep.multipliers_affordable << " multipliers, coverage " << rep.coverage_fraction * 100
     << "% (< 1%), memory ratio " << rep.memory_ratio << " ([15, 16])";
  r.pass = rep.multipliers_affordable == 10000 && rep.coverage_fraction < 0.01 &&
           rep.memory_ratio >= 15.0 && rep.memory_ratio <= 16.0;
  r.detail = os.str();
  return r;
}

CriterionResult Techniques(const Builtins& b) {
  CriterionResult r = Named("techniques",
                    "combined multiplier >= 10x; pruned AlexNet nonzeros and 16-bit memory");
  const auto proj = ProjectTechniques(155.5, {ArchitectureParameterCount(b.alexnet), 16},
                                      ParseTechniqueString("quant=8,prune=0.151,rlc,dataflow=1.4"));
  const bool combined_ok = proj.combined_energy_multiplier >= 10.0;

  const WeightSet weights = RandomWeights(b.alexnet, 2334);
  const auto pruned = PruneByMagnitude(weights, {352.0 / 2334.0});
  const std::uint64_t nnz = pruned.weights.NonzeroCount();
  const bool nnz_ok = nnz >= 351000 && nnz <= 353000;

  constexpr double kHogMemoryBytes = 159.0 * 1024.0;
  const double ratio16 = static_cast<double>(nnz) * 2.0 / kHogMemoryBytes;
  const double ratio8 = static_cast<double>(nnz) * 1.0 / kHogMemoryBytes;
  const bool memory_ok = Within(ratio16, 2.2, 0.10);

  std::ostringstream os;
  os.precision(4);
  os << "combined " << proj.combined_energy_multiplier << "x (>= 10x), projected "
     << proj.projected_energy_nj_per_pixel << " nJ/pixel; " << nnz
     << " nonzeros (352k +-1k); 16-bit values " << ratio16
     << "x of 159 kB (2.2 +-10%); 8-bit values " << ratio8 << "x";
  r.pass = combined_ok && nnz_ok && memory_ok;
  r.detail = os.str();
  return r;
}

CriterionResult Codec() {
  CriterionResult r = Named("codec", "run-length codec round trips and compression ratios");
  std::mt19937_64 rng(21);
  int lossless = 0;
  constexpr int kTrials = 10000;
  for (int t = 0; t < kTrials; ++t) {
    std::uniform_int_distribution<int> len(0, 400);
    std::uniform_real_distribution<double> zero_p(0.0, 1.0);
    std::uniform_int_distribution<int> val(-32768, 32767);
    const double p = zero_p(rng);
    std::vector<std::int16_t> v(static_cast<std::size_t>(len(rng)));
    for (auto& x : v) {
      x = std::generate_canonical<double, 53>(rng) < p ? 0 : static_cast<std::int16_t>(val(rng));
    }
    try {
      const auto back = RlcDecode(DeserializeRlc(SerializeRlc(RlcEncode(v))));
      lossless += back == v;
    } catch (const Error&) {
    }
  }
  double sparse_min = INFINITY;
  for (int t = 0; t < 20; ++t) {
    std::vector<std::int16_t> v(4096, 0);
    std::uniform_int_distribution<std::size_t> pos(0, v.size() - 1);
    std::uniform_int_distribution<int> val(1, 32767);
    std::size_t nonzero = 0;
    while (nonzero < v.size() / 10) {
      auto& x = v[pos(rng)];
      if (x == 0) {
        x = static_cast<std::int16_t>(val(rng));
        ++nonzero;
      }
    }
    sparse_min = std::min(sparse_min, CompressionRatio(v));
  }
  std::vector<std::int16_t> dense(100000);
  std::uniform_int_distribution<int> nz(1, 32767);
  for (auto& x : dense) x = static_cast<std::int16_t>(nz(rng));
  const double dense_ratio = CompressionRatio(dense);
  std::ostringstream os;
  os.precision(4);
  os << lossless << "/" << kTrials << " lossless; 90%-zero ratio min " << sparse_min
     << " (> 2.0); dense ratio " << dense_ratio << " (16/21 = " << 16.0 / 21.0 << " +-1%)";
  r.pass = lossless == kTrials && sparse_min > 2.0 && Within(dense_ratio, 16.0 / 21.0, 0.01);
  r.detail = os.str();
  return r;
}

CriterionResult ConvOracle(int threads) {
  CriterionResult r = Named("conv_oracle", "fixed-point conv vs real-valued oracle on 100 layers");
  std::mt19937_64 rng(31);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int within = 0;
  int macs_equal = 0;
  double worst = 0.0;
  constexpr int kLayers = 100;
  for (int t = 0; t < kLayers; ++t) {
    ConvLayerShape layer;
    layer.name = "oracle";
    layer.groups = pick(1, 2);
    layer.in_channels = layer.groups * pick(1, 3);
    layer.out_channels = layer.groups * pick(1, 3);
    layer.kernel_h = pick(1, 4);
    layer.kernel_w = pick(1, 4);
    layer.stride = pick(1, 3);
    layer.padding = pick(0, 2);
    const int oh = pick(1, 6);
    const int ow = pick(1, 6);
    const int ih = (oh - 1) * layer.stride + layer.kernel_h - 2 * layer.padding;
    const int iw = (ow - 1) * layer.stride + layer.kernel_w - 2 * layer.padding;
    if (ih < 1 || iw < 1) {
      --t;
      continue;
    }
    FixedPointTensor in(layer.in_channels, ih, iw);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (auto& s : in.samples) s = QuantizeReal(unit(rng), 16, 8);
    LayerWeights lw;
    lw.name = layer.name;
    lw.out_channels = layer.out_channels;
    lw.in_channels_per_group = layer.InChannelsPerGroup();
    lw.kernel_h = layer.kernel_h;
    lw.kernel_w = layer.kernel_w;
    lw.groups = layer.groups;
    lw.weights.resize(layer.WeightCount());
    lw.bias.resize(layer.out_channels);
    for (auto& w : lw.weights) w = QuantizeReal(unit(rng), 16, 8);
    for (auto& w : lw.bias) w = QuantizeReal(unit(rng), 16, 8);

    OpCounter counter;
    const auto out = RunConvLayer(in, layer, lw, 8, counter, threads);
    macs_equal += counter.macs == ConvLayerMacs(layer, ih, iw);

    const double step = in.Step();
    const int opg = layer.out_channels / layer.groups;
    const int icpg = layer.InChannelsPerGroup();
    bool ok = true;
    for (int oc = 0; oc < layer.out_channels; ++oc) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double sum = lw.bias[oc] * step;
          for (int ic = 0; ic < icpg; ++ic) {
            for (int ky = 0; ky < layer.kernel_h; ++ky) {
              for (int kx = 0; kx < layer.kernel_w; ++kx) {
                const int y = oy * layer.stride + ky - layer.padding;
                const int x = ox * layer.stride + kx - layer.padding;
                if (y < 0 || y >= ih || x < 0 || x >= iw) continue;
                sum += (in.at((oc / opg) * icpg + ic, y, x) * step) *
                       (lw.at(oc, ic, ky, kx) * step);
              }
            }
          }
          const double err = std::abs(out.at(oc, oy, ox) * step - sum);
          worst = std::max(worst, err / step);
          ok = ok && err <= 0.5 * step + 1e-12;
        }
      }
    }
    within += ok;
  }
  std::ostringstream os;
  os << within << "/" << kLayers << " layers within 1/2 step (worst " << worst
     << " steps); instrumented MACs = analytical on " << macs_equal << "/" << kLayers;
  r.pass = within == kLayers && macs_equal == kLayers;
  r.detail = os.str();
  return r;
}

CriterionResult HogProperties(const Builtins& b, int threads) {
  CriterionResult r = Named("hog_properties", "histogram mass, illumination invariance, golden file");
  std::mt19937_64 rng(41);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  int conserved = 0;
  for (int t = 0; t < 100; ++t) {
    const GrayImage img = RandomImage(rng, pick(8, 72), pick(8, 72), 255);
    const auto field = ComputeGradients(img, b.hog);
    const auto grid = CellHistograms(field, b.hog);
    bool ok = true;
    const int cs = b.hog.cell_size;
    for (int cy = 0; cy < grid.cells_y; ++cy) {
      for (int cx = 0; cx < grid.cells_x; ++cx) {
        double mass = 0.0;
        for (double v : grid.Cell(cx, cy)) mass += v;
        std::int64_t expect = 0;
        for (int y = cy * cs; y < (cy + 1) * cs; ++y) {
          for (int x = cx * cs; x < (cx + 1) * cs; ++x) {
            expect += field.magnitude[static_cast<std::size_t>(y) * field.width + x];
          }
        }
        ok = ok && mass == static_cast<double>(expect);
      }
    }
    conserved += ok;
  }

  int invariant = 0;
  constexpr int kIllum = 10;
  for (int t = 0; t < kIllum; ++t) {
    const GrayImage img = RandomImage(rng, pick(24, 80), pick(24, 80), 85);
    const auto base = Extract(img, b.hog, threads);
    bool ok = true;
    for (int k : {2, 3}) {
      GrayImage scaled = img;
      for (auto& s : scaled.samples) s = static_cast<std::uint8_t>(s * k);
      const auto other = Extract(scaled, b.hog, threads);
      ok = ok && other.levels.size() == base.levels.size();
      for (std::size_t i = 0; ok && i < base.levels.size(); ++i) {
        ok = other.levels[i].features == base.levels[i].features;
      }
    }
    invariant += ok;
  }

  std::string golden_state;
  bool golden_ok = false;
  try {
    const GrayImage img = ReadPgm(DataDir() / kFixtureImage);
    const std::string golden = ReadTextFile(DataDir() / kFixtureGolden);
    const std::string first = FeaturesToJson(Extract(img, b.hog, threads), img, b.hog);
    const std::string second = FeaturesToJson(Extract(img, b.hog, 1), img, b.hog);
    golden_ok = first == golden && second == golden;
    golden_state = golden_ok ? "byte-identical" : "differs";
  } catch (const Error& e) {
    golden_state = std::string("unavailable: ") + e.what();
  }

  std::ostringstream os;
  os << "mass conserved on " << conserved << "/100 images; invariant under k=2,3 on "
     << invariant << "/" << kIllum << " images; golden " << golden_state;
  r.pass = conserved == 100 && invariant == kIllum && golden_ok;
  r.detail = os.str();
  return r;
}

CriterionResult Tradeoff() {
  CriterionResult r = Named("tradeoff", "accuracy/energy relationships on the bundled dataset");
  const auto points = LoadTradeoffDataset(DefaultTradeoffPath());
  const auto checks = TradeoffRatioChecks(points);
  bool ok = PointIssues(points).empty() && ParetoFrontier(points).frontier.size() == 4;
  std::ostringstream os;
  os.precision(4);
  for (std::size_t i = 0; i < checks.size(); ++i) {
    ok = ok && checks[i].pass;
    os << (i ? "; " : "") << checks[i].relation << " = " << checks[i].value
       << (checks[i].pass ? "" : " FAIL");
  }
  r.pass = ok;
  r.detail = os.str();
  return r;
}

template <typename F>
CriterionResult Guarded(const std::string& id, F&& f) {
  const auto t0 = Clock::now();
  CriterionResult r;
  try {
    r = f();
  } catch (const std::exception& e) {
    r.id = id;
    r.title = id;
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = Seconds(t0);
  return r;
}

}  // namespace

std::vector<CriterionResult> RunAcceptanceSuite(const VerifyOptions& options) {
  const auto t0 = Clock::now();
  const int threads = std::max(1, options.threads);
  std::vector<CriterionResult> results;
  auto add = [&](CriterionResult r) {
    if (options.on_result) options.on_result(r);
    results.push_back(std::move(r));
  };

  Builtins b;
  MeasurementSet chips;
  std::string load_error;
  try {
    b = LoadBuiltins();
    chips = LoadMeasurementSet(DefaultMeasurementPath());
  } catch (const std::exception& e) {
    load_error = e.what();
  }
  auto run = [&](const std::string& id, auto&& f) {
    add(Guarded(id, [&] {
      if (!load_error.empty()) throw Error("bundled data: " + load_error);
      return f();
    }));
  };

  run("complexity", [&] { return ComplexityTable(b); });
  run("hog_band", [&] { return HogBand(b, threads); });
  run("chip_identities", [&] { return ChipIdentities(chips); });
  run("energy_table", [&] { return EnergyTable(chips); });
  run("hardwire", [&] { return Hardwire(b); });
  run("techniques", [&] { return Techniques(b); });
  run("codec", [&] { return Codec(); });
  run("conv_oracle", [&] { return ConvOracle(threads); });
  run("hog_properties", [&] { return HogProperties(b, threads); });
  run("tradeoff", [&] { return Tradeoff(); });

  CriterionResult all = Named("suite", "whole suite passes in under 60 s");
  const double elapsed = Seconds(t0);
  std::size_t passed = 0;
  for (const auto& r : results) passed += r.pass;
  std::ostringstream os;
  os.precision(3);
  os << passed << "/" << results.size() << " criteria pass in " << elapsed << " s";
  all.pass = passed == results.size() && elapsed < 60.0;
  all.detail = os.str();
  all.seconds = elapsed;
  add(std::move(all));
  return results;
}

std::string FormatCriterion(const CriterionResult& result) {
  return std::string(result.pass ? "[PASS] " : "[FAIL] ") + result.id + "  " + result.title +
         ": " + result.detail;
}

}  // namespace featgap
