#ifndef FEATGAP_OP_COUNT_H_
#define FEATGAP_OP_COUNT_H_

#include <cstdint>
#include <string>

namespace featgap {

// Running tally of arithmetic operations, incremented by instrumented code.
struct OpCounter {
  std::uint64_t macs = 0;
  std::uint64_t additions = 0;
  std::uint64_t multiplications = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t divisions = 0;

  OpCounter& operator+=(const OpCounter& other);
  bool operator==(const OpCounter&) const = default;

  // 1 MAC = 2 ops.
  std::uint64_t TotalOps() const;
};

OpCounter operator+(OpCounter a, const OpCounter& b);

// Categorized tally normalized by input-image pixels.
//   total_ops      = 2*macs + additions + multiplications + comparisons + divisions
//   gop_per_mpixel = total_ops / pixels * 1e-3   (GOP/Mpixel == kilo-ops/pixel)
struct OpCountReport {
  std::uint64_t macs = 0;
  std::uint64_t additions = 0;
  std::uint64_t multiplications = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t divisions = 0;
  std::uint64_t total_ops = 0;
  std::uint64_t pixels = 0;
  double gop_per_mpixel = 0.0;

  static OpCountReport FromCounter(const OpCounter& counter, std::uint64_t pixels);
  OpCounter Counter() const;

  bool operator==(const OpCountReport&) const = default;
};

}  // namespace featgap

#endif  // FEATGAP_OP_COUNT_H_
