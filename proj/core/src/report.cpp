#include "hai/report.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "csv.hpp"
#include "hai/error.hpp"

namespace hai {

std::vector<TradeoffPoint> pareto_frontier(const std::vector<TradeoffPoint>& points) {
  std::vector<TradeoffPoint> sorted = points;
  // Carbon ascending, accuracy descending: a point survives iff its accuracy is at least the best
  // accuracy seen at strictly lower carbon and it is not beaten at equal carbon.
  std::stable_sort(sorted.begin(), sorted.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    if (a.cumulative_kg != b.cumulative_kg) return a.cumulative_kg < b.cumulative_kg;
    if (a.mean_accuracy != b.mean_accuracy) return a.mean_accuracy > b.mean_accuracy;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.model_version < b.model_version;
  });
  std::vector<TradeoffPoint> frontier;
  bool have_best = false;
  double best_accuracy = 0.0;  // best at carbon strictly below the current group
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].cumulative_kg == sorted[i].cumulative_kg) ++j;
    const double group_best = sorted[i].mean_accuracy;
    for (std::size_t k = i; k < j; ++k) {
      const bool beaten_in_group = sorted[k].mean_accuracy < group_best;
      const bool beaten_below = have_best && best_accuracy >= sorted[k].mean_accuracy;
      if (!beaten_in_group && !beaten_below) frontier.push_back(sorted[k]);
    }
    if (!have_best || group_best > best_accuracy) best_accuracy = group_best;
    have_best = true;
    i = j;
  }
  return frontier;
}

void write_tradeoff_csv(std::ostream& out, const std::vector<TradeoffPoint>& points) {
  using detail::format_double;
  out << "timestamp,model_version,cumulative_kg,mean_accuracy,labels_spent\n";
  for (const auto& p : points) {
    out << p.timestamp << ',' << p.model_version << ',' << format_double(p.cumulative_kg) << ','
        << format_double(p.mean_accuracy) << ',' << p.labels_spent << '\n';
  }
}

std::vector<TradeoffPoint> read_tradeoff_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || detail::trim(line) != "timestamp,model_version,cumulative_kg,mean_accuracy,labels_spent") {
    throw ParseError(source, 1, "bad tradeoff header");
  }
  std::vector<TradeoffPoint> points;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split(detail::trim(line));
    if (cols.size() != 5) throw ParseError(source, line_no, "expected 5 columns");
    const auto ts = detail::parse_int<std::int64_t>(cols[0]);
    const auto version = detail::parse_int<std::uint64_t>(cols[1]);
    const auto kg = detail::parse_double(cols[2]);
    const auto acc = detail::parse_double(cols[3]);
    const auto labels = detail::parse_int<std::uint64_t>(cols[4]);
    if (!ts || !version || !kg || !acc || !labels) throw ParseError(source, line_no, "bad number");
    points.push_back({*kg, *acc, *labels, *ts, *version});
  }
  return points;
}

}  // namespace hai
