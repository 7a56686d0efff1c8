#include <cmath>

#include "doctest.h"
#include "featgap/data_paths.h"
#include "featgap/energy.h"
#include "featgap/error.h"
#include "json.hpp"

namespace fg = featgap;
using nlohmann::json;

namespace {

json BundledJson(const std::filesystem::path& p) { return json::parse(fg::ReadTextFile(p)); }

fg::MeasurementSet Bundled() { return fg::LoadMeasurementSet(fg::DefaultMeasurementPath()); }

double Dev(double a, double b) { return std::abs(a - b) / std::abs(b); }

const fg::IdentityCheck& FindCheck(const fg::ValidationReport& r, const std::string& entry,
                                   const std::string& identity) {
  for (const auto& c : r.checks) {
    if (c.entry == entry && c.identity == identity) return c;
  }
  throw std::runtime_error("no check " + entry + "/" + identity);
}

// What the energy command treats as a failed consistency run.
bool MeasurementsFlagged(const fg::MeasurementSet& set) {
  if (!fg::ValidateMeasurements(set).AllPass()) return true;
  for (const auto& row : fg::EnergyRatioTable(set)) {
    if (row.model_deviation > 0.10) return true;
  }
  return false;
}

bool TradeoffFlagged(const std::vector<fg::ParetoPoint>& points) {
  if (!fg::PointIssues(points).empty()) return true;
  for (const auto& c : fg::TradeoffRatioChecks(points)) {
    if (!c.pass) return true;
  }
  return false;
}

fg::ParetoPoint P(std::string label, double map, double energy) {
  return {std::move(label), map, energy, ""};
}

}  // namespace

TEST_CASE("bundled measurements satisfy their identities") {
  const auto set = Bundled();
  CHECK(set.Baseline().name == "hog");
  REQUIRE(set.entries.size() == 3);
  const auto r = fg::ValidateMeasurements(set);
  CHECK(r.checks.size() == 15);
  CHECK(r.AllPass());
  const auto& he = FindCheck(r, "hog", "energy = power / throughput");
  CHECK(he.predicted == doctest::Approx(29.3 / 62.5));
  CHECK(he.deviation == doctest::Approx(Dev(29.3 / 62.5, 0.5)));
  CHECK(he.deviation == doctest::Approx(0.0624).epsilon(0.001));
  const auto& ae = FindCheck(r, "alexnet", "energy = power / throughput");
  CHECK(ae.deviation == doctest::Approx(Dev(278.0 / 1.8, 155.5)));
  CHECK(ae.deviation < 0.007);
  const auto& ag = FindCheck(r, "alexnet", "GOPS = Mpixel/s * GOP/Mpixel");
  CHECK(ag.predicted == doctest::Approx(1.8 * 665784864.0 * 2 / (227.0 * 227.0) / 1000.0));
  const auto& hg = FindCheck(r, "hog", "GOPS = Mpixel/s * GOP/Mpixel");
  CHECK(hg.predicted == doctest::Approx(62.5 * 0.7));
  for (const auto& c : r.checks) {
    CHECK(c.tolerance == (c.identity.find("class") != std::string::npos ? 0.30 : 0.20));
  }
}

TEST_CASE("doubled power breaks the identities") {
  auto set = Bundled();
  for (auto& e : set.entries) {
    if (e.name == "alexnet") e.power_mw *= 2;
  }
  const auto r = fg::ValidateMeasurements(set);
  CHECK(!r.AllPass());
  CHECK(!FindCheck(r, "alexnet", "energy = power / throughput").pass);
  CHECK(!FindCheck(r, "alexnet", "efficiency = GOPS / power").pass);
  CHECK(FindCheck(r, "hog", "energy = power / throughput").pass);
}

TEST_CASE("entries need a workload link") {
  auto set = Bundled();
  set.entries[1].workload.clear();
  CHECK_THROWS_AS(fg::ValidateMeasurements(set), fg::DomainError);
  CHECK_THROWS_AS(fg::EntryWorkload(set, set.entries[1]), fg::DomainError);
  CHECK_THROWS_AS(set.Find("nope"), fg::Error);
}

TEST_CASE("energy model") {
  CHECK(fg::EnergyPerPixelModel(0.7, 1570) == doctest::Approx(0.4459).epsilon(1e-3));
  CHECK(fg::EnergyPerPixelModel(25.8, 166.2) == doctest::Approx(155.23).epsilon(1e-3));
  CHECK(fg::EnergyPerPixelModel(1, 1000) == 1.0);
  CHECK_THROWS_AS(fg::EnergyPerPixelModel(0, 1000), fg::DomainError);
  CHECK_THROWS_AS(fg::EnergyPerPixelModel(1, -1), fg::DomainError);
}

TEST_CASE("energy ratio table") {
  const auto rows = fg::EnergyRatioTable(Bundled());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].name == "hog");
  CHECK(rows[0].ratio == 1.0);
  CHECK(rows[1].ratio == doctest::Approx(311.0).epsilon(1e-12));
  CHECK(rows[2].ratio == doctest::Approx(13485.8).epsilon(1e-12));
  CHECK(rows[0].model_gop_per_mpixel == doctest::Approx(46.0 / 62.5));
  CHECK(rows[0].model_nj_per_pixel == doctest::Approx(0.736 * 1000 / 1570));
  CHECK(rows[1].model_nj_per_pixel == doctest::Approx(25.84119 * 1000 / 166.2).epsilon(1e-5));
  for (const auto& r : rows) CHECK(r.model_deviation < 0.10);
}

TEST_CASE("technique projection") {
  const auto set = Bundled();
  const fg::WeightsInfo w{2334080, 16};
  const auto all = fg::ParseTechniqueString("quant=8,prune=0.151,rlc,dataflow=1.4");
  const auto p = fg::ProjectTechniques(set.Find("alexnet"), w, all);
  CHECK(p.combined_energy_multiplier == doctest::Approx(2.56 * 3.7 * 1.4));
  CHECK(p.combined_energy_multiplier == doctest::Approx(13.2608));
  CHECK(p.projected_energy_nj_per_pixel == doctest::Approx(155.5 / 13.2608));
  CHECK(p.projected_energy_nj_per_pixel == doctest::Approx(11.726).epsilon(1e-4));
  CHECK(p.combined_memory_multiplier == doctest::Approx(26.4));
  CHECK(p.baseline_memory_bytes == 4668160);
  CHECK(p.projected_memory_bytes == doctest::Approx(4668160 / 26.4));
  REQUIRE(p.executable_memory_bytes);
  CHECK(*p.executable_memory_bytes == 16 + (352447ull * 13 + 7) / 8);
  REQUIRE(p.factors.size() == 4);
  CHECK(p.factors[0].technique == "quant");
  CHECK(p.factors[3].technique == "dataflow");

  const auto perm = fg::ProjectTechniques(
      155.5, w, fg::ParseTechniqueString("dataflow=1.4,rlc,quant=8,prune=0.151"));
  CHECK(perm.projected_energy_nj_per_pixel == p.projected_energy_nj_per_pixel);
  CHECK(perm.combined_memory_multiplier == p.combined_memory_multiplier);

  const auto none = fg::ProjectTechniques(155.5, w, {});
  CHECK(none.projected_energy_nj_per_pixel == 155.5);
  CHECK(none.projected_memory_bytes == 4668160.0);
  CHECK(!none.executable_memory_bytes);

  fg::TechniqueSet bad;
  bad.dataflow_multiplier = 3.0;
  CHECK_THROWS_AS(fg::ProjectTechniques(155.5, w, bad), fg::DomainError);
  CHECK(fg::BudgetCheck(p.projected_energy_nj_per_pixel).pass == false);
}

TEST_CASE("hardwire feasibility") {
  const auto r = fg::HardwireFeasibility({}, 2334080);
  CHECK(r.multipliers_affordable == 10000);
  CHECK(r.weights_in_sram == 153600);
  CHECK(r.coverage_fraction == doctest::Approx(10000.0 / 2334080));
  CHECK(r.coverage_fraction < 0.005);
  CHECK(r.memory_ratio == doctest::Approx(2334080.0 / 153600));
  CHECK(r.memory_ratio > 15.0);

  fg::HardwireBudget b;
  b.gate_budget_kgates = 2000;
  CHECK(fg::HardwireFeasibility(b, 2334080).multipliers_affordable == 20000);
  b = {};
  b.bytes_per_weight = 2;
  CHECK(fg::HardwireFeasibility(b, 2334080).weights_in_sram == 76800);
  CHECK(fg::HardwireFeasibility({}, 10000).coverage_fraction == 1.0);
  b = {};
  b.gates_per_multiplier = 0;
  CHECK_THROWS_AS(fg::HardwireFeasibility(b, 10), fg::DomainError);
  CHECK_THROWS_AS(fg::HardwireFeasibility({}, 0), fg::DomainError);
}

TEST_CASE("near-sensor budget") {
  CHECK(!fg::BudgetCheck(1.0).pass);
  CHECK(fg::BudgetCheck(0.999).pass);
  CHECK(fg::BudgetCheck(0.5, "hog").pass);
  CHECK(!fg::BudgetCheck(155.5).pass);
}

TEST_CASE("pareto frontier") {
  const auto single = fg::ParetoFrontier({P("a", 10, 1)});
  CHECK(single.frontier.size() == 1);

  const auto eq = fg::ParetoFrontier({P("dear", 50, 9), P("cheap", 50, 3)});
  REQUIRE(eq.frontier.size() == 1);
  CHECK(eq.frontier[0].label == "cheap");

  const auto dup = fg::ParetoFrontier({P("x", 5, 5), P("y", 5, 5)});
  CHECK(dup.frontier.size() == 1);

  const std::vector<fg::ParetoPoint> pts = {P("a", 30, 4), P("b", 20, 5), P("c", 40, 2),
                                            P("d", 60, 9), P("e", 55, 10)};
  const auto r = fg::ParetoFrontier(pts);
  REQUIRE(r.frontier.size() == 2);
  CHECK(r.frontier[0].label == "c");
  CHECK(r.frontier[1].label == "d");
  CHECK(fg::ParetoFrontier(r.frontier).frontier == r.frontier);
  for (const auto& p : pts) {
    bool dominated = false;
    for (const auto& q : pts) dominated = dominated || fg::Dominates(q, p);
    const bool on = std::any_of(r.frontier.begin(), r.frontier.end(),
                                [&](const auto& f) { return f.label == p.label; });
    CHECK(on == !dominated);
  }
  for (std::size_t i = 1; i < r.frontier.size(); ++i) {
    CHECK(r.frontier[i].energy_nj_per_pixel > r.frontier[i - 1].energy_nj_per_pixel);
    CHECK(r.frontier[i].map_percent > r.frontier[i - 1].map_percent);
  }
}

TEST_CASE("bundled trade-off dataset") {
  const auto pts = fg::LoadTradeoffDataset(fg::DefaultTradeoffPath());
  CHECK(fg::PointIssues(pts).empty());
  const auto r = fg::ParetoFrontier(pts);
  REQUIRE(r.frontier.size() == 4);
  CHECK(r.frontier[0].label == "HOG");
  CHECK(r.frontier[1].label == "AlexNet-CONV3");
  CHECK(r.frontier[2].label == "AlexNet-CONV5");
  CHECK(r.frontier[3].label == "VGG");
  const auto checks = fg::TradeoffRatioChecks(pts);
  CHECK(checks.size() == 5);
  for (const auto& c : checks) CHECK_MESSAGE(c.pass, c.relation);
  CHECK(checks[2].value == doctest::Approx(30000.0));
}

TEST_CASE("trade-off relation failures") {
  auto pts = fg::LoadTradeoffDataset(fg::DefaultTradeoffPath());
  for (auto& p : pts) {
    if (p.label == "AlexNet-CONV5") p.energy_nj_per_pixel = 50.0;
  }
  const auto checks = fg::TradeoffRatioChecks(pts);
  for (const auto& c : checks) {
    CHECK_MESSAGE(c.pass == (c.relation.find("CONV5 / CONV3") == std::string::npos), c.relation);
  }
  CHECK_THROWS_AS(fg::TradeoffRatioChecks({P("HOG", 33.7, 0.5)}), fg::DomainError);
  CHECK(fg::PointIssues({P("x", 101, 1)}).size() == 1);
  CHECK(fg::PointIssues({P("x", -1, 1), P("y", 50, 0)}).size() == 2);
}

TEST_CASE("trade-off parsing") {
  CHECK_THROWS_AS(fg::ParseTradeoffDataset("{}"), fg::ParseError);
  CHECK_THROWS_AS(fg::ParseTradeoffDataset("not json"), fg::ParseError);
  const std::string dup =
      R"({"points":[{"label":"a","map_percent":1,"energy_nj_per_pixel":1},)"
      R"({"label":"a","map_percent":2,"energy_nj_per_pixel":2}]})";
  CHECK_THROWS_AS(fg::ParseTradeoffDataset(dup), fg::ParseError);
}

TEST_CASE("DRAM lower bound is within 2x of the reported traffic") {
  const auto a = std::get<fg::CnnArchitecture>(fg::ResolveWorkload("alexnet").descriptor);
  const double est = fg::DramTrafficLowerBound(a);
  CHECK(est == doctest::Approx(126.58).epsilon(1e-3));
  CHECK(est / 74.7 < 2.0);
  CHECK(est / 74.7 > 0.5);
  CHECK(fg::DramTrafficLowerBound(a, 1) == doctest::Approx(est / 2));
}

TEST_CASE("doubling any checked measurement field is detected") {
  const auto path = fg::DefaultMeasurementPath();
  const json base = BundledJson(path);
  CHECK(!MeasurementsFlagged(fg::ParseMeasurementSet(base.dump(), path.parent_path())));
  const std::vector<std::string> fields = {
      "gate_count_kgates", "memory_kb", "throughput_mpixel_s", "throughput_gops",
      "power_mw", "energy_nj_per_pixel", "efficiency_gops_per_w"};
  for (std::size_t i = 0; i < base["entries"].size(); ++i) {
    for (const auto& f : fields) {
      json j = base;
      j["entries"][i][f] = j["entries"][i][f].get<double>() * 2;
      const auto set = fg::ParseMeasurementSet(j.dump(), path.parent_path());
      CHECK_MESSAGE(MeasurementsFlagged(set), (j["entries"][i]["name"].get<std::string>() + "." + f));
    }
  }
}

TEST_CASE("doubling any trade-off field is detected") {
  const json base = BundledJson(fg::DefaultTradeoffPath());
  CHECK(!TradeoffFlagged(fg::ParseTradeoffDataset(base.dump())));
  for (std::size_t i = 0; i < base["points"].size(); ++i) {
    for (const std::string f : {"map_percent", "energy_nj_per_pixel"}) {
      json j = base;
      j["points"][i][f] = j["points"][i][f].get<double>() * 2;
      CHECK_MESSAGE(TradeoffFlagged(fg::ParseTradeoffDataset(j.dump())),
                    (j["points"][i]["label"].get<std::string>() + "." + f));
    }
  }
}
