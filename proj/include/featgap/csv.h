#ifndef FEATGAP_CSV_H_
#define FEATGAP_CSV_H_

// RFC 4180 output: comma separated, CRLF-free ("\n") rows, fields quoted when
// they contain a comma, quote, CR or LF, with embedded quotes doubled.

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace featgap {

std::string CsvField(std::string_view field);
std::string CsvRow(const std::vector<std::string>& fields);

// Fixed-point decimal with `precision` digits after the point.
std::string FormatFixed(double value, int precision);
// Shortest decimal that round-trips.
std::string FormatDouble(double value);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void Row(const std::vector<std::string>& fields) { out_ << CsvRow(fields); }

 private:
  std::ostream& out_;
};

}  // namespace featgap

#endif  // FEATGAP_CSV_H_
