#include "hai/report.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hai/error.hpp"
#include "oracles.hpp"

namespace hai {
namespace {

TEST(Pareto, SinglePointIsItsOwnFrontier) {
  const std::vector<TradeoffPoint> p{{1.0, 0.5, 3, 2, 1}};
  EXPECT_EQ(pareto_frontier(p), p);
  EXPECT_TRUE(pareto_frontier({}).empty());
}

TEST(Pareto, StrictDomination) {
  const TradeoffPoint a{1.0, 0.8, 10, 1, 1}, b{2.0, 0.7, 20, 2, 2};
  EXPECT_EQ(pareto_frontier({b, a}), std::vector<TradeoffPoint>{a});
}

TEST(Pareto, EqualCarbonTieBreaksByTimestamp) {
  const TradeoffPoint a{1.0, 0.8, 0, 5, 3}, b{1.0, 0.8, 0, 2, 4}, c{2.0, 0.9, 0, 1, 1};
  EXPECT_EQ(pareto_frontier({a, c, b}), (std::vector<TradeoffPoint>{b, a, c}));
}

TEST(Pareto, TwentyRandomPointsMatchOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<TradeoffPoint> pts;
    for (int i = 0; i < 20; ++i) pts.push_back({u(rng), u(rng), 0, i, static_cast<std::uint64_t>(i)});
    EXPECT_EQ(pareto_frontier(pts), testing::pareto_oracle(pts));
  }
}

TEST(Pareto, FrontierIsMonotone) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> g(0, 10);
  std::vector<TradeoffPoint> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({g(rng) * 0.1, g(rng) * 0.1, 0, i, 0});
  const auto f = pareto_frontier(pts);
  for (std::size_t i = 1; i < f.size(); ++i) {
    EXPECT_LE(f[i - 1].cumulative_kg, f[i].cumulative_kg);
    EXPECT_LE(f[i - 1].mean_accuracy, f[i].mean_accuracy);
  }
}

TEST(TradeoffCsv, RoundTripIsExact) {
  const std::vector<TradeoffPoint> pts{{0.1, 1.0 / 3.0, 5, 2, 1}, {0.1 + 1e-17, 0.9, 12, 7, 4}};
  std::stringstream ss;
  write_tradeoff_csv(ss, pts);
  EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "timestamp,model_version,cumulative_kg,mean_accuracy,labels_spent");
  EXPECT_EQ(read_tradeoff_csv(ss), pts);
}

TEST(TradeoffCsv, ErrorsCarryLineNumbers) {
  std::stringstream ss("timestamp,model_version,cumulative_kg,mean_accuracy,labels_spent\n1,1,0.1,0.5,3\n2,x,0.2,0.6,4\n");
  try {
    (void)read_tradeoff_csv(ss);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream header("a,b\n");
  EXPECT_THROW(read_tradeoff_csv(header), ParseError);
}

}  // namespace
}  // namespace hai
