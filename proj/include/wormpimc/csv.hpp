#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wormpimc {

// "%.17g", enough digits to round-trip a double exactly
std::string format_g17(double v);

struct SummaryRow {
  std::string observable;
  double mean = 0.0;
  double stderr_ = 0.0;
  long blocks = 0;
};

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(std::istream& is);

// coordinate columns followed by weight and count
struct HistogramTable {
  std::vector<std::string> coords;
  std::vector<std::vector<double>> rows;  // each of size coords.size() + 2
};

void write_histogram_csv(std::ostream& os, const HistogramTable& t);

}  // namespace wormpimc
