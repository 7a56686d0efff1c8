#include <cstdio>
#include <thread>

#include "featgap/error.h"
#include "featgap/verify.h"

int main() {
  featgap::VerifyOptions opts;
  opts.threads = static_cast<int>(std::max(2u, std::thread::hardware_concurrency()));
  opts.on_result = [](const featgap::CriterionResult& r) {
    std::printf("%s\n", featgap::FormatCriterion(r).c_str());
    std::fflush(stdout);
  };
  int failed = 0;
  try {
    for (const auto& r : featgap::RunAcceptanceSuite(opts)) failed += r.pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
