#include "wormpimc/csv.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace wormpimc {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "# wormpimc summary v1\n";
  os << "observable,mean,stderr,blocks\n";
  for (const SummaryRow& r : rows)
    os << r.observable << ',' << format_g17(r.mean) << ',' << format_g17(r.stderr_) << ','
       << r.blocks << "\n";
}

std::vector<SummaryRow> read_summary_csv(std::istream& is) {
  auto fail = [](const std::string& why) {
    return std::runtime_error("summary csv: " + why);
  };
  std::string line;
  if (!std::getline(is, line) || line != "# wormpimc summary v1") throw fail("bad header");
  if (!std::getline(is, line) || line != "observable,mean,stderr,blocks")
    throw fail("bad column row");
  std::vector<SummaryRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    SummaryRow r;
    std::string f;
    if (!std::getline(ls, r.observable, ',')) throw fail("bad row '" + line + "'");
    try {
      if (!std::getline(ls, f, ',')) throw std::invalid_argument("");
      r.mean = std::stod(f);
      if (!std::getline(ls, f, ',')) throw std::invalid_argument("");
      r.stderr_ = std::stod(f);
      if (!std::getline(ls, f, ',')) throw std::invalid_argument("");
      r.blocks = std::stol(f);
    } catch (const std::exception&) {
      throw fail("bad row '" + line + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_histogram_csv(std::ostream& os, const HistogramTable& t) {
  os << "# wormpimc histogram v1\n";
  for (const std::string& c : t.coords) os << c << ',';
  os << "weight,count\n";
  for (const auto& row : t.rows) {
    if (row.size() != t.coords.size() + 2)
      throw std::invalid_argument("histogram csv: row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << format_g17(row[i]);
    os << "\n";
  }
}

}  // namespace wormpimc
