#include "hai/acquisition.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hai/error.hpp"
#include "oracles.hpp"

namespace hai {
namespace {

const ModelShape kShape{Architecture::Logistic, 2, 3, 0};

std::vector<UnlabeledSample> random_pool(std::size_t n, std::mt19937_64& rng, SampleId first = 0) {
  std::normal_distribution<double> g(0.0, 1.5);
  std::vector<UnlabeledSample> pool;
  for (std::size_t i = 0; i < n; ++i) pool.push_back({first + i, {g(rng), g(rng)}});
  return pool;
}

Ensemble random_ensemble(std::size_t k, std::mt19937_64& rng) {
  std::vector<ModelState> members;
  for (std::size_t i = 0; i < k; ++i) members.push_back(testing::random_model(kShape, rng, 1.5));
  return Ensemble(members);
}

TEST(Entropy, ClosedForms) {
  EXPECT_EQ(entropy(std::vector<double>{1.0, 0.0}), 0.0);
  EXPECT_NEAR(entropy(std::vector<double>{0.5, 0.5}), std::log(2.0), 1e-15);
  const double expected = -(0.7 * std::log(0.7) + 0.2 * std::log(0.2) + 0.1 * std::log(0.1));
  EXPECT_NEAR(entropy(std::vector<double>{0.7, 0.2, 0.1}), expected, 1e-15);
  EXPECT_NEAR(expected, 0.8018, 1e-4);
}

TEST(Entropy, RejectsInvalidDistributions) {
  EXPECT_THROW(entropy(std::vector<double>{0.5, 0.6}), InvalidInput);
  EXPECT_THROW(entropy(std::vector<double>{1.2, -0.2}), InvalidInput);
  EXPECT_THROW(entropy(std::vector<double>{}), InvalidInput);
  EXPECT_NO_THROW(entropy(std::vector<double>{0.5, 0.5 + 5e-7}));
}

TEST(Entropy, BoundedByLogClassCount) {
  std::mt19937_64 rng(1);
  std::gamma_distribution<double> gamma(0.3, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t k = 2 + i % 6;
    std::vector<double> p(k);
    double s = 0.0;
    for (auto& v : p) s += (v = gamma(rng) + 1e-300);
    for (auto& v : p) v /= s;
    const double h = entropy(p);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, std::log(static_cast<double>(k)) + 1e-12);
  }
}

TEST(Utility, DisagreeingPairHandArithmetic) {
  const std::vector<std::vector<double>> probs{{0.9, 0.1}, {0.1, 0.9}};
  const auto s = score_distributions(probs, 1.0, 7);
  EXPECT_EQ(s.sample_id, 7u);
  EXPECT_NEAR(s.entropy_term, std::log(2.0), 1e-15);
  EXPECT_NEAR(s.variance_term, 0.32, 1e-15);
  EXPECT_NEAR(s.utility, std::log(2.0) + 0.32, 1e-15);
  EXPECT_NEAR(s.utility, 1.0131, 1e-4);
  const double h09 = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1));
  EXPECT_NEAR(s.info_gain, std::log(2.0) - h09, 1e-15);
  EXPECT_NEAR(s.info_gain, 0.3680, 1e-4);
}

TEST(Utility, IdenticalMembersHaveNoDisagreement) {
  std::mt19937_64 rng(2);
  const auto m = testing::random_model(kShape, rng);
  const Ensemble ens({m, m, m});
  const std::vector<double> x{0.4, -1.2};
  const auto s = utility(ens, x, 2.0);
  EXPECT_NEAR(s.variance_term, 0.0, 1e-15);
  EXPECT_NEAR(s.info_gain, 0.0, 1e-15);
  EXPECT_NEAR(s.utility, entropy(predict_proba(m, x)), 1e-15);
}

TEST(Utility, BetaZeroIsEntropyExactly) {
  std::mt19937_64 rng(3);
  const auto ens = random_ensemble(4, rng);
  const std::vector<double> x{1.0, 2.0};
  const auto s = utility(ens, x, 0.0);
  EXPECT_EQ(s.utility, s.entropy_term);
  EXPECT_EQ(s.beta, 0.0);
}

TEST(Utility, SingleMemberOnlyWithoutVariance) {
  std::mt19937_64 rng(4);
  const Ensemble one({testing::random_model(kShape, rng)});
  const std::vector<double> x{0.0, 1.0};
  EXPECT_NO_THROW(utility(one, x, 0.0));
  EXPECT_THROW(utility(one, x, 0.5), InvalidInput);
}

TEST(Utility, PropertiesOverRandomEnsembles) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const auto ens = random_ensemble(2 + i % 4, rng);
    std::normal_distribution<double> g(0.0, 2.0);
    const std::vector<double> x{g(rng), g(rng)};
    const auto lo = utility(ens, x, 0.3);
    const auto hi = utility(ens, x, 3.0);
    EXPECT_GE(lo.info_gain, -1e-12);
    EXPECT_GE(lo.variance_term, 0.0);
    EXPECT_LE(lo.entropy_term, std::log(3.0) + 1e-9);
    EXPECT_GE(hi.utility, lo.utility);
    EXPECT_DOUBLE_EQ(lo.utility, lo.entropy_term + 0.3 * lo.variance_term);
  }
}

TEST(Ensemble, RejectsMismatchedMembers) {
  EXPECT_THROW(Ensemble({}), InvalidInput);
  EXPECT_THROW(Ensemble({ModelState::zeros(kShape), ModelState::zeros({Architecture::Logistic, 3, 3, 0})}),
               InvalidInput);
  EXPECT_THROW(Ensemble({ModelState::zeros(kShape), ModelState::zeros({Architecture::Logistic, 2, 2, 0})}),
               InvalidInput);
}

TEST(QueryBudget, SpentNeverExceedsB) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::uint32_t> bdist(0, 20), charge(0, 6);
    QueryBudget q(bdist(rng));
    for (int op = 0; op < 30; ++op) {
      const auto before = q.spent();
      const auto n = charge(rng);
      if (before + n > q.b()) {
        EXPECT_THROW(q.charge(n), InvalidInput);
        EXPECT_EQ(q.spent(), before);
      } else {
        q.charge(n);
      }
      ASSERT_LE(q.spent(), q.b());
    }
  }
  EXPECT_THROW(QueryBudget(3, 4), InvalidInput);
  EXPECT_THROW(QueryBudget(3, 0, 0.0), InvalidInput);
  EXPECT_THROW(QueryBudget(3, 0, 1.5), InvalidInput);
}

TEST(SelectTopB, EmptyWhenNothingRemains) {
  std::mt19937_64 rng(7);
  const auto pool = random_pool(5, rng);
  const auto ens = random_ensemble(3, rng);
  EXPECT_TRUE(select_top_b(pool, ens, QueryBudget(4, 4), 1.0).empty());
  EXPECT_TRUE(select_top_b({}, ens, QueryBudget(4), 1.0).empty());
}

TEST(SelectTopB, SingletonPool) {
  std::mt19937_64 rng(8);
  const auto pool = random_pool(1, rng, 42);
  EXPECT_EQ(select_top_b(pool, random_ensemble(3, rng), QueryBudget(5), 1.0), std::vector<SampleId>{42});
}

TEST(SelectTopB, TenPoolMatchesEnumeration) {
  std::mt19937_64 rng(9);
  const auto pool = random_pool(10, rng, 100);
  const auto ens = random_ensemble(5, rng);
  auto got = select_top_b(pool, ens, QueryBudget(3), 1.0);
  std::vector<std::pair<SampleId, double>> scores;
  for (const auto& s : score_pool(pool, ens, 1.0)) scores.emplace_back(s.sample_id, s.utility);
  std::sort(got.begin(), got.end());
  EXPECT_EQ(got, testing::best_subset(scores, 3));
}

TEST(SelectTopB, ReturnsIdsInDescendingUtility) {
  std::mt19937_64 rng(10);
  const auto pool = random_pool(30, rng);
  const auto ens = random_ensemble(4, rng);
  const auto got = select_top_b(pool, ens, QueryBudget(8), 0.5);
  ASSERT_EQ(got.size(), 8u);
  const auto scores = score_pool(pool, ens, 0.5);
  for (std::size_t i = 1; i < got.size(); ++i) {
    EXPECT_GE(scores[got[i - 1]].utility, scores[got[i]].utility);
  }
}

TEST(SelectTopB, TiesGoToLowestSampleId) {
  std::vector<AcquisitionScore> scores;
  for (SampleId id : {9u, 3u, 5u, 1u}) scores.push_back({id, 0, 0, 0, 1.0, 0});
  scores.push_back({7, 0, 0, 0, 2.0, 0});
  EXPECT_EQ(select_top(scores, 3), (std::vector<SampleId>{7, 1, 3}));
}

TEST(SelectTopB, InfoGainCriterionRanksByInfoGain) {
  std::vector<AcquisitionScore> scores{{1, 0, 0, 0, 5.0, 0.1}, {2, 0, 0, 0, 1.0, 0.9}, {3, 0, 0, 0, 3.0, 0.5}};
  EXPECT_EQ(select_top(scores, 2, SelectionCriterion::InfoGain), (std::vector<SampleId>{2, 3}));
  EXPECT_EQ(select_top(scores, 2), (std::vector<SampleId>{1, 3}));
}

TEST(SelectionSize, ThrottleRoundsDownWithFloorOfOne) {
  EXPECT_EQ(selection_size(QueryBudget(10, 0, 0.25), 100), 2u);
  EXPECT_EQ(selection_size(QueryBudget(10, 8, 0.25), 100), 1u);
  EXPECT_EQ(selection_size(QueryBudget(10, 0, 1.0), 4), 4u);
  EXPECT_EQ(selection_size(QueryBudget(10, 10, 1.0), 4), 0u);
  EXPECT_EQ(selection_size(QueryBudget(10, 0, 1.0), 0), 0u);
}

TEST(SelectRandom, DistinctSortedAndSeeded) {
  std::mt19937_64 rng(11), a(5), b(5);
  const auto pool = random_pool(50, rng);
  const auto x = select_random(pool, 10, a);
  EXPECT_EQ(x, select_random(pool, 10, b));
  EXPECT_TRUE(std::is_sorted(x.begin(), x.end()));
  EXPECT_EQ(std::adjacent_find(x.begin(), x.end()), x.end());
  EXPECT_EQ(select_random(pool, 80, a).size(), 50u);
}

TEST(Throttle, WorkedExamples) {
  EXPECT_DOUBLE_EQ(throttle_factor({true, 1.0, 0.0}), 1.0);
  EXPECT_DOUBLE_EQ(throttle_factor({false, 1.0, 0.0}), 0.25);
  EXPECT_DOUBLE_EQ(throttle_factor({true, 1.0, 1.0}), 0.5);
  EXPECT_DOUBLE_EQ(throttle_factor({true, 0.0, 0.0}), 0.5);
  // Clamped at the floor.
  EXPECT_DOUBLE_EQ(throttle_factor({false, 0.0, 1.0}), 0.0625);
  ThrottleCoefficients c;
  c.base = 0.1;
  EXPECT_DOUBLE_EQ(throttle_factor({false, 0.0, 1.0}, c), 0.05);
}

TEST(Throttle, AppliesToBudgetAndStaysInRange) {
  const auto q = throttle(QueryBudget(20, 5), {false, 1.0, 0.0});
  EXPECT_EQ(q.b(), 20u);
  EXPECT_EQ(q.spent(), 5u);
  EXPECT_DOUBLE_EQ(q.throttle_factor(), 0.25);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double f = throttle_factor({u(rng) < 0.5, u(rng), u(rng)});
    EXPECT_GE(f, 0.05);
    EXPECT_LE(f, 1.0);
  }
}

}  // namespace
}  // namespace hai
