#include "featgap/op_count.h"

namespace featgap {

OpCounter& OpCounter::operator+=(const OpCounter& other) {
  macs += other.macs;
  additions += other.additions;
  multiplications += other.multiplications;
  comparisons += other.comparisons;
  divisions += other.divisions;
  return *this;
}

std::uint64_t OpCounter::TotalOps() const {
  return 2 * macs + additions + multiplications + comparisons + divisions;
}

OpCounter operator+(OpCounter a, const OpCounter& b) {
  a += b;
  return a;
}

OpCountReport OpCountReport::FromCounter(const OpCounter& counter,
                                         std::uint64_t pixels) {
  OpCountReport report;
  report.macs = counter.macs;
  report.additions = counter.additions;
  report.multiplications = counter.multiplications;
  report.comparisons = counter.comparisons;
  report.divisions = counter.divisions;
  report.total_ops = counter.TotalOps();
  report.pixels = pixels;
  report.gop_per_mpixel =
      pixels == 0 ? 0.0
                  : static_cast<double>(report.total_ops) /
                        static_cast<double>(pixels) * 1e-3;
  return report;
}

OpCounter OpCountReport::Counter() const {
  return OpCounter{macs, additions, multiplications, comparisons, divisions};
}

}  // namespace featgap
