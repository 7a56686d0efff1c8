#ifndef FEATGAP_VERIFY_H_
#define FEATGAP_VERIFY_H_

// Reproduction checks over the bundled datasets. Shared by the command-line
// `verify-paper` matrix and the acceptance test binary.

#include <functional>
#include <string>
#include <vector>

namespace featgap {

struct CriterionResult {
  std::string id;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  int threads = 1;
  // Called after each criterion, in order.
  std::function<void(const CriterionResult&)> on_result;
};

// Golden feature document and its source image, relative to DataDir().
inline constexpr const char* kFixtureImage = "fixtures/astronaut64.pgm";
inline constexpr const char* kFixtureGolden = "fixtures/astronaut64.features.json";

std::vector<CriterionResult> RunAcceptanceSuite(const VerifyOptions& options);

// "[PASS] id  title: detail"
std::string FormatCriterion(const CriterionResult& result);

}  // namespace featgap

#endif  // FEATGAP_VERIFY_H_
