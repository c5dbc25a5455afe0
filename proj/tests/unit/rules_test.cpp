#include "hai/rules.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "hai/error.hpp"

namespace hai {
namespace {

const std::vector<UnlabeledSample> kPool{{1, {1.0, 5.0}}, {2, {-1.0, 5.0}}};

TEST(Rules, ZeroMatchesEmitNothing) {
  const Rule r{0, Comparator::Greater, 10.0, 1};
  EXPECT_TRUE(apply_rule(r, kPool, 2, 2).empty());
}

TEST(Rules, PositiveFeatureRuleLabelsExactlyOne) {
  const Rule r{0, Comparator::Greater, 0.0, 1};
  const auto labels = apply_rule(r, kPool, 2, 2);
  ASSERT_EQ(labels.size(), 1u);
  EXPECT_EQ(labels[0].id, 1u);
  EXPECT_EQ(labels[0].label, 1u);
  EXPECT_EQ(labels[0].provenance, Provenance::Rule);
  EXPECT_DOUBLE_EQ(labels[0].weight, kDefaultRuleWeight);
  EXPECT_EQ(labels[0].features, kPool[0].features);
}

TEST(Rules, ComparatorsAtTheThreshold) {
  const std::vector<double> x{2.0};
  EXPECT_FALSE(matches({0, Comparator::Greater, 2.0, 0}, x));
  EXPECT_TRUE(matches({0, Comparator::GreaterEqual, 2.0, 0}, x));
  EXPECT_FALSE(matches({0, Comparator::Less, 2.0, 0}, x));
  EXPECT_TRUE(matches({0, Comparator::LessEqual, 2.0, 0}, x));
  EXPECT_TRUE(matches({0, Comparator::Equal, 2.0, 0}, x));
}

TEST(Rules, ParseComparatorSpellings) {
  EXPECT_EQ(parse_comparator(">"), Comparator::Greater);
  EXPECT_EQ(parse_comparator("ge"), Comparator::GreaterEqual);
  EXPECT_EQ(parse_comparator("<"), Comparator::Less);
  EXPECT_EQ(parse_comparator("le"), Comparator::LessEqual);
  EXPECT_EQ(parse_comparator("=="), Comparator::Equal);
  EXPECT_FALSE(parse_comparator("!=").has_value());
  for (auto c : {Comparator::Greater, Comparator::GreaterEqual, Comparator::Less, Comparator::LessEqual,
                 Comparator::Equal}) {
    EXPECT_EQ(parse_comparator(to_string(c)), c);
  }
}

TEST(Rules, MalformedRulesAreRejected) {
  EXPECT_THROW(validate_rule({2, Comparator::Greater, 0.0, 0}, 2, 2), InvalidInput);
  EXPECT_THROW(validate_rule({0, Comparator::Greater, 0.0, 2}, 2, 2), InvalidInput);
  EXPECT_THROW(validate_rule({0, Comparator::Greater, std::nan(""), 0}, 2, 2), InvalidInput);
  EXPECT_THROW(apply_rule({0, Comparator::Greater, 0.0, 1}, kPool, 2, 2, 1.0), InvalidInput);
  EXPECT_THROW(apply_rule({0, Comparator::Greater, 0.0, 1}, kPool, 2, 2, 0.0), InvalidInput);
  EXPECT_NO_THROW(validate_rule({1, Comparator::Less, 0.0, 1}, 2, 2));
}

}  // namespace
}  // namespace hai
