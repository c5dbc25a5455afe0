#include "hai/rules.hpp"

#include <cmath>
#include <string>

#include "hai/error.hpp"

namespace hai {

std::optional<Comparator> parse_comparator(std::string_view text) {
  if (text == ">" || text == "gt") return Comparator::Greater;
  if (text == ">=" || text == "ge") return Comparator::GreaterEqual;
  if (text == "<" || text == "lt") return Comparator::Less;
  if (text == "<=" || text == "le") return Comparator::LessEqual;
  if (text == "==" || text == "eq") return Comparator::Equal;
  return std::nullopt;
}

std::string_view to_string(Comparator c) {
  switch (c) {
    case Comparator::Greater: return ">";
    case Comparator::GreaterEqual: return ">=";
    case Comparator::Less: return "<";
    case Comparator::LessEqual: return "<=";
    case Comparator::Equal: return "==";
  }
  return "?";
}

void validate_rule(const Rule& rule, std::size_t d_in, std::size_t n_classes) {
  if (rule.feature_index >= d_in) {
    throw InvalidInput("feature_index " + std::to_string(rule.feature_index) + " out of range for " +
                       std::to_string(d_in) + " features");
  }
  if (rule.label >= n_classes) {
    throw InvalidInput("label " + std::to_string(rule.label) + " out of range for " + std::to_string(n_classes) +
                       " classes");
  }
  if (!std::isfinite(rule.threshold)) throw InvalidInput("threshold must be finite");
}

bool matches(const Rule& rule, std::span<const double> x) {
  const double v = x[rule.feature_index];
  switch (rule.comparator) {
    case Comparator::Greater: return v > rule.threshold;
    case Comparator::GreaterEqual: return v >= rule.threshold;
    case Comparator::Less: return v < rule.threshold;
    case Comparator::LessEqual: return v <= rule.threshold;
    case Comparator::Equal: return v == rule.threshold;
  }
  return false;
}

std::vector<LabeledSample> apply_rule(const Rule& rule, std::span<const UnlabeledSample> pool, std::size_t d_in,
                                      std::size_t n_classes, double weight) {
  validate_rule(rule, d_in, n_classes);
  if (!(weight > 0.0 && weight < 1.0)) throw InvalidInput("rule weight must lie in (0, 1)");
  std::vector<LabeledSample> out;
  for (const auto& s : pool) {
    if (s.features.size() != d_in) throw InvalidInput("pool sample dimension mismatch");
    if (matches(rule, s.features)) out.push_back({s.id, s.features, rule.label, Provenance::Rule, weight});
  }
  return out;
}

}  // namespace hai
