#pragma once

// Human-injected labeling rules: "if x[feature_index] <cmp> threshold then label".
// Matching pool samples receive weak labels weighted below direct labels; weak labels never
// consume the annotation budget.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hai/types.hpp"

namespace hai {

enum class Comparator : std::uint8_t { Greater, GreaterEqual, Less, LessEqual, Equal };

/// Accepts ">", ">=", "<", "<=", "==" and the names gt, ge, lt, le, eq.
std::optional<Comparator> parse_comparator(std::string_view text);
std::string_view to_string(Comparator c);

struct Rule {
  std::size_t feature_index = 0;
  Comparator comparator = Comparator::Greater;
  double threshold = 0.0;
  ClassLabel label = 0;
};

inline constexpr double kDefaultRuleWeight = 0.5;

/// Throws InvalidInput with the reason when the rule cannot apply to this feature/label space.
void validate_rule(const Rule& rule, std::size_t d_in, std::size_t n_classes);
bool matches(const Rule& rule, std::span<const double> x);

/// Weak labels (Provenance::Rule, weight `weight` in (0, 1)) for every matching pool sample.
std::vector<LabeledSample> apply_rule(const Rule& rule, std::span<const UnlabeledSample> pool, std::size_t d_in,
                                      std::size_t n_classes, double weight = kDefaultRuleWeight);

}  // namespace hai
