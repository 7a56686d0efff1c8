#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "featgap/error.h"
#include "featgap/techniques.h"
#include "featgap/workload.h"

namespace fg = featgap;

namespace {

std::vector<std::int16_t> SparseSamples(std::mt19937_64& rng, std::size_t n, double zero_fraction) {
  std::bernoulli_distribution zero(zero_fraction);
  std::uniform_int_distribution<int> v(-32768, 32767);
  std::vector<std::int16_t> out(n);
  for (auto& s : out) {
    int x = 0;
    if (!zero(rng)) {
      do x = v(rng); while (x == 0);
    }
    s = static_cast<std::int16_t>(x);
  }
  return out;
}

std::string Bytes(std::initializer_list<int> b) {
  std::string s;
  for (int x : b) s.push_back(static_cast<char>(x));
  return s;
}

}  // namespace

TEST_CASE("technique string grammar") {
  const auto a = fg::ParseTechniqueString("quant=8,prune=0.151,rlc,dataflow=1.4");
  REQUIRE(a.quantization);
  CHECK(a.quantization->bits == 8);
  CHECK(a.quantization->mode == fg::QuantMode::kUniformSymmetric);
  CHECK(a.pruning->target_density == 0.151);
  CHECK(a.compression);
  CHECK(*a.dataflow_multiplier == 1.4);
  CHECK(a == fg::ParseTechniqueString("dataflow=1.4,rlc,prune=0.151,quant=8"));
  CHECK(a == fg::ParseTechniqueString(fg::FormatTechniqueSet(a)));
  CHECK(fg::ParseTechniqueString("quant=4:log").quantization->mode == fg::QuantMode::kNonuniformLog);
  CHECK(fg::ParseTechniqueString("quant=4:uniform") == fg::ParseTechniqueString("quant=4"));
  CHECK(fg::ParseTechniqueString("") == fg::TechniqueSet{});

  CHECK_THROWS_AS(fg::ParseTechniqueString("bogus"), fg::ParseError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("rlc,rlc"), fg::ParseError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("rlc=1"), fg::ParseError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("quant="), fg::ParseError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("quant=8x"), fg::ParseError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("quant=8:cubic"), fg::ParseError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("quant=0"), fg::DomainError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("quant=17"), fg::DomainError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("quant=1:log"), fg::DomainError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("prune=0"), fg::DomainError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("prune=1.5"), fg::DomainError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("dataflow=1.3"), fg::DomainError);
  CHECK_THROWS_AS(fg::ParseTechniqueString("dataflow=2.6"), fg::DomainError);
  CHECK_NOTHROW(fg::ParseTechniqueString("dataflow=2.5"));
}

TEST_CASE("2-bit uniform quantization worked example") {
  const std::vector<double> v = {-1.0, -0.5, 0.0, 0.5, 1.0};
  const auto r = fg::Quantize(v, 16, {2, fg::QuantMode::kUniformSymmetric});
  CHECK(r.tensor.step == doctest::Approx(2.0 / 3.0));
  const std::vector<double> expect = {-1.0, -1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0};
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(r.tensor.values[i] == doctest::Approx(expect[i]));
  CHECK(r.tensor.codes == std::vector<std::int32_t>{0, 1, 2, 2, 3});
  CHECK(r.max_abs_error == doctest::Approx(1.0 / 3));
}

TEST_CASE("uniform quantization error is bounded by half a step") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  for (int bits = 2; bits <= 12; ++bits) {
    std::vector<double> v(500);
    for (auto& x : v) x = d(rng);
    const auto r = fg::Quantize(v, 16, {bits, fg::QuantMode::kUniformSymmetric});
    double max_abs = 0.0;
    for (double x : v) max_abs = std::max(max_abs, std::abs(x));
    CHECK(r.tensor.step == doctest::Approx(2 * max_abs / (std::ldexp(1.0, bits) - 1)));
    CHECK(r.max_abs_error <= r.tensor.step / 2 + 1e-12);
    for (auto c : r.tensor.codes) {
      REQUIRE(c >= 0);
      REQUIRE(c < (1 << bits));
    }
  }
}

TEST_CASE("quantization storage and edge cases") {
  fg::FixedPointTensor t(1, 10, 10);
  std::mt19937_64 rng(2);
  for (auto& s : t.samples) s = std::uniform_int_distribution<int>(-2000, 2000)(rng);
  const auto q8 = fg::Quantize(t, {8, fg::QuantMode::kUniformSymmetric});
  const auto q16 = fg::Quantize(t, {16, fg::QuantMode::kUniformSymmetric});
  CHECK(q16.tensor.StoredBytes() == 200);
  CHECK(q8.tensor.StoredBytes() == 100);
  CHECK(q16.max_abs_error == 0.0);
  CHECK(q16.tensor.codes == t.samples);
  CHECK_THROWS_AS(fg::Quantize(std::vector<double>{1.0}, 8, {12, fg::QuantMode::kUniformSymmetric}),
                  fg::DomainError);

  const std::vector<double> zeros(7, 0.0);
  const auto z = fg::Quantize(zeros, 16, {4, fg::QuantMode::kUniformSymmetric});
  CHECK(z.tensor.values == zeros);
  CHECK(z.max_abs_error == 0.0);
  const auto zl = fg::Quantize(zeros, 16, {4, fg::QuantMode::kNonuniformLog});
  CHECK(zl.tensor.values == zeros);
}

TEST_CASE("log quantization yields signed powers of two") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-4.0, 4.0);
  std::vector<double> v(1000);
  for (auto& x : v) x = d(rng);
  const auto r = fg::Quantize(v, 16, {4, fg::QuantMode::kNonuniformLog});
  std::set<double> distinct;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double q = r.tensor.values[i];
    distinct.insert(std::abs(q));
    if (q == 0.0) continue;
    CHECK((q < 0) == (v[i] < 0));
    const double e = std::log2(std::abs(q));
    CHECK(e == std::round(e));
    CHECK(std::abs(r.tensor.codes[i]) <= 7);
  }
  CHECK(distinct.size() <= 8);  // zero plus 2^(4-1)-1 magnitudes
  CHECK(*distinct.rbegin() == 4.0);
  CHECK_THROWS_AS(fg::Quantize(v, 16, {1, fg::QuantMode::kNonuniformLog}), fg::DomainError);
}

TEST_CASE("magnitude pruning") {
  const std::vector<std::int32_t> v = {3, -5, 1, 4};
  CHECK(fg::PruneFlat(v, {0.5}) == std::vector<std::int32_t>{0, -5, 0, 4});
  CHECK(fg::PruneFlat(v, {1.0}) == v);
  CHECK(fg::PruneFlat(v, {0.01}) == std::vector<std::int32_t>{0, -5, 0, 0});
  const std::vector<std::int32_t> ties = {2, -2, 2, 1};
  CHECK(fg::PruneFlat(ties, {0.5}) == std::vector<std::int32_t>{2, -2, 0, 0});

  CHECK(fg::PruneKeepCount(10, 0.35) == 4);
  CHECK(fg::PruneKeepCount(10, 0.3) == 3);
  CHECK(fg::PruneKeepCount(10, 0.001) == 1);
  CHECK(fg::PruneKeepCount(2334080, 352.0 / 2334.0) == 352013);
  CHECK_THROWS_AS(fg::PruneKeepCount(10, 0.0), fg::DomainError);

  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::int32_t> x(std::uniform_int_distribution<int>(1, 300)(rng));
    for (auto& s : x) s = std::uniform_int_distribution<int>(-20, 20)(rng);
    const double d = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    const auto once = fg::PruneFlat(x, {d});
    CHECK(fg::PruneFlat(once, {d}) == once);
    // every kept magnitude is at least every dropped one
    int min_kept = 1 << 30;
    int max_dropped = -1;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (once[i] != 0) {
        CHECK(once[i] == x[i]);
        min_kept = std::min(min_kept, std::abs(x[i]));
        ++kept;
      } else {
        max_dropped = std::max(max_dropped, std::abs(x[i]));
      }
    }
    CHECK(kept <= fg::PruneKeepCount(x.size(), d));
    if (kept > 0 && max_dropped > 0) CHECK(min_kept >= max_dropped);
  }
}

TEST_CASE("global pruning over a network") {
  const auto a = std::get<fg::CnnArchitecture>(fg::ResolveWorkload("alexnet").descriptor);
  const auto w = fg::RandomWeights(a, 11);
  const auto r = fg::PruneByMagnitude(w, {352.0 / 2334.0});
  CHECK(r.weights.NonzeroCount() <= 352013);
  CHECK(r.weights.NonzeroCount() >= 352013 - 200);  // draws that quantize to zero
  CHECK(r.density_achieved == doctest::Approx(r.weights.NonzeroCount() / 2334080.0));
  CHECK(r.weights.TotalCount() == w.TotalCount());
  CHECK(fg::PruneByMagnitude(r.weights, {352.0 / 2334.0}).weights == r.weights);
}

TEST_CASE("run-length tokens") {
  std::vector<std::int16_t> a(62, 0);
  a.push_back(7);
  const auto s = fg::RlcEncode(a);
  CHECK(s.tokens == std::vector<fg::RlcToken>{{31, 0}, {30, 7}});
  CHECK(!s.terminal);
  CHECK(fg::RlcEncodedBits(s) - 128 == 42);
  CHECK(fg::RlcDecode(s) == a);

  const std::vector<std::int16_t> z(310, 0);
  const auto zs = fg::RlcEncode(z);
  CHECK(zs.tokens.size() == 10);
  CHECK(zs.terminal);
  CHECK(zs.tokens.back() == fg::RlcToken{22, 0});
  CHECK(fg::RlcDecode(zs) == z);

  const auto e = fg::RlcEncode({});
  CHECK(e.tokens.empty());
  CHECK(fg::RlcEncodedBits(e) == 128);
  CHECK(fg::SerializeRlc(e).size() == 16);
  CHECK(fg::RlcDecode(e).empty());

  std::vector<std::int16_t> dense(100000, 3);
  CHECK(fg::CompressionRatio(dense) == doctest::Approx(1.6e6 / (128 + 2.1e6)));
  CHECK(fg::CompressionRatio(dense) < 16.0 / 21.0);
}

TEST_CASE("serialized byte layout") {
  const std::vector<std::int16_t> v = {0, 0, 5, -1, 0};
  const auto s = fg::RlcEncode(v);
  // (2,5) -> 0x000A2, (0,-1) -> 0x1FFFE0, terminal (1,0) -> 0x000001
  CHECK(s.tokens == std::vector<fg::RlcToken>{{2, 5}, {0, -1}, {1, 0}});
  const std::string expect =
      std::string("RLC1") + Bytes({5, 0, 0, 0, 3, 0, 0, 0, 1, 0, 0, 0}) +
      Bytes({0xA2, 0x00, 0x00, 0xFC, 0xFF, 0x07, 0x00, 0x00});
  CHECK(fg::SerializeRlc(s) == expect);
  CHECK(fg::DeserializeRlc(expect) == s);
}

TEST_CASE("codec round trip") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 2000; ++t) {
    const auto n = std::uniform_int_distribution<std::size_t>(0, 200)(rng);
    const double zf = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto v = SparseSamples(rng, n, zf);
    const auto s = fg::RlcEncode(v);
    const auto bytes = fg::SerializeRlc(s);
    REQUIRE(bytes.size() == (fg::RlcEncodedBits(s) + 7) / 8);
    const auto back = fg::DeserializeRlc(bytes);
    REQUIRE(back == s);
    REQUIRE(fg::RlcDecode(back) == v);
  }
}

TEST_CASE("malformed streams are rejected") {
  const std::vector<std::int16_t> v = {0, 0, 5, -1, 0, 9};
  const auto s = fg::RlcEncode(v);
  const auto bytes = fg::SerializeRlc(s);
  CHECK_THROWS_AS(fg::DeserializeRlc(bytes.substr(0, bytes.size() - 1)), fg::DecodeError);
  CHECK_THROWS_AS(fg::DeserializeRlc(bytes.substr(0, 10)), fg::DecodeError);
  CHECK_THROWS_AS(fg::DeserializeRlc(bytes + '\0'), fg::DecodeError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(fg::DeserializeRlc(magic), fg::DecodeError);
  auto flags = bytes;
  flags[12] = 2;
  CHECK_THROWS_AS(fg::DeserializeRlc(flags), fg::DecodeError);

  auto count = s;
  count.element_count += 1;
  CHECK_THROWS_AS(fg::RlcDecode(count), fg::DecodeError);
  count.element_count -= 2;
  CHECK_THROWS_AS(fg::RlcDecode(count), fg::DecodeError);
  auto run = s;
  run.tokens[0].run = 40;
  CHECK_THROWS_AS(fg::RlcDecode(run), fg::DecodeError);
  auto term = s;
  term.terminal = true;  // last token carries 9
  CHECK_THROWS_AS(fg::RlcDecode(term), fg::DecodeError);
  fg::RlcStream empty;
  empty.terminal = true;
  CHECK_THROWS_AS(fg::RlcDecode(empty), fg::DecodeError);
}

TEST_CASE("compression ratio grows with sparsity") {
  std::mt19937_64 rng(6);
  double prev = 0.0;
  for (int k = 1; k <= 9; ++k) {
    double sum = 0.0;
    for (int t = 0; t < 10; ++t) sum += fg::CompressionRatio(SparseSamples(rng, 4096, k / 10.0));
    const double mean = sum / 10;
    CHECK(mean > prev);
    prev = mean;
  }
}

TEST_CASE("weight memory model") {
  CHECK(fg::WeightMemoryBytes(2334080, 2334080, 8, false) == 2334080);
  CHECK(fg::WeightMemoryBytes(2334080, 2334080, 16, false) == 4668160);
  CHECK(fg::WeightMemoryBytes(2334080, 0, 8, true) == 16);
  CHECK(fg::WeightMemoryBytes(2334080, 352013, 8, true) == 572038);
  CHECK(fg::WeightMemoryBytes(3, 3, 3, false) == 2);
  fg::WeightSet w;
  w.layers.resize(1);
  w.layers[0].weights = {0, 1, 0, 2};
  w.layers[0].bias = {0};
  CHECK(fg::WeightMemoryBytes(w, 16, false) == 10);
  CHECK(fg::WeightMemoryBytes(w, 8, true) == 16 + 4);
}
