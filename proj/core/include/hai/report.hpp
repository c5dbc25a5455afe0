#pragma once

// Carbon-accuracy tradeoff points and their Pareto frontier.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hai/types.hpp"

namespace hai {

struct TradeoffPoint {
  double cumulative_kg = 0.0;
  double mean_accuracy = 0.0;  // over tasks seen so far
  std::uint64_t labels_spent = 0;
  std::int64_t timestamp = 0;  // logical slot
  std::uint64_t model_version = 0;

  friend bool operator==(const TradeoffPoint&, const TradeoffPoint&) = default;
};

/// Points not dominated by another (<= carbon and >= accuracy, one strictly), sorted by carbon
/// ascending; equal carbon falls back to earlier timestamp, then lower model version.
std::vector<TradeoffPoint> pareto_frontier(const std::vector<TradeoffPoint>& points);

/// CSV `timestamp,model_version,cumulative_kg,mean_accuracy,labels_spent`.
void write_tradeoff_csv(std::ostream& out, const std::vector<TradeoffPoint>& points);
std::vector<TradeoffPoint> read_tradeoff_csv(std::istream& in, const std::string& source = "tradeoff");

}  // namespace hai
