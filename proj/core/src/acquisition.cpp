#include "hai/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hai/error.hpp"

namespace hai {

double entropy(std::span<const double> p) {
  if (p.empty()) throw InvalidInput("entropy of an empty distribution");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("probabilities must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InvalidInput("probabilities sum to " + std::to_string(sum));
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

Ensemble::Ensemble(std::vector<ModelState> members) : members_(std::move(members)) {
  if (members_.empty()) throw InvalidInput("ensemble needs at least one member");
  for (const auto& m : members_) {
    if (m.d_in() != members_.front().d_in() || m.n_classes() != members_.front().n_classes()) {
      throw InvalidInput("ensemble members disagree on input or class dimension");
    }
  }
}

AcquisitionScore score_distributions(std::span<const std::vector<double>> member_probs, double beta,
                                     SampleId id) {
  if (member_probs.empty()) throw InvalidInput("no member distributions");
  if (!(beta >= 0.0)) throw InvalidInput("beta must be >= 0");
  const std::size_t k = member_probs.size();
  if (beta > 0.0 && k < 2) throw InvalidInput("variance term needs at least two ensemble members");
  const std::size_t n_classes = member_probs.front().size();

  std::vector<double> mean(n_classes, 0.0);
  double mean_member_entropy = 0.0;
  for (const auto& p : member_probs) {
    if (p.size() != n_classes) throw InvalidInput("member distributions differ in length");
    for (std::size_t c = 0; c < n_classes; ++c) mean[c] += p[c];
    mean_member_entropy += entropy(p);
  }
  const double inv_k = 1.0 / static_cast<double>(k);
  for (auto& v : mean) v *= inv_k;
  mean_member_entropy *= inv_k;

  double variance = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    double ss = 0.0;
    for (const auto& p : member_probs) ss += (p[c] - mean[c]) * (p[c] - mean[c]);
    variance += ss * inv_k;
  }

  AcquisitionScore score;
  score.sample_id = id;
  score.entropy_term = entropy(mean);
  score.variance_term = variance;
  score.beta = beta;
  score.utility = score.entropy_term + beta * variance;
  score.info_gain = score.entropy_term - mean_member_entropy;
  return score;
}

AcquisitionScore utility(const Ensemble& ensemble, std::span<const double> x, double beta, SampleId id) {
  if (beta > 0.0 && ensemble.size() < 2) {
    throw InvalidInput("variance term needs at least two ensemble members");
  }
  std::vector<std::vector<double>> probs;
  probs.reserve(ensemble.size());
  for (const auto& m : ensemble.members()) probs.push_back(predict_proba(m, x));
  return score_distributions(probs, beta, id);
}

std::vector<AcquisitionScore> score_pool(std::span<const UnlabeledSample> pool, const Ensemble& ensemble,
                                         double beta) {
  std::vector<AcquisitionScore> scores;
  scores.reserve(pool.size());
  for (const auto& s : pool) scores.push_back(utility(ensemble, s.features, beta, s.id));
  return scores;
}

QueryBudget::QueryBudget(std::uint32_t b, std::uint32_t spent, double throttle_factor)
    : b_(b), spent_(spent), throttle_(throttle_factor) {
  if (spent_ > b_) throw InvalidInput("spent exceeds label budget");
  if (!(throttle_ > 0.0 && throttle_ <= 1.0)) throw InvalidInput("throttle factor must lie in (0, 1]");
}

void QueryBudget::charge(std::uint32_t n) {
  if (n > remaining()) {
    throw InvalidInput("charging " + std::to_string(n) + " labels exceeds remaining budget " +
                       std::to_string(remaining()));
  }
  spent_ += n;
}

QueryBudget QueryBudget::with_throttle(double factor) const { return QueryBudget(b_, spent_, factor); }

std::size_t selection_size(const QueryBudget& budget, std::size_t pool_size) {
  if (budget.remaining() == 0 || pool_size == 0) return 0;
  const auto scaled =
      static_cast<std::size_t>(std::floor(static_cast<double>(budget.remaining()) * budget.throttle_factor()));
  return std::min(std::max<std::size_t>(scaled, 1), pool_size);
}

std::vector<SampleId> select_top(std::span<const AcquisitionScore> scores, std::size_t count,
                                 SelectionCriterion criterion) {
  auto key = [criterion](const AcquisitionScore& s) {
    return criterion == SelectionCriterion::Utility ? s.utility : s.info_gain;
  };
  std::vector<const AcquisitionScore*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  count = std::min(count, order.size());
  auto better = [&](const AcquisitionScore* a, const AcquisitionScore* b) {
    const double ka = key(*a);
    const double kb = key(*b);
    if (ka != kb) return ka > kb;
    return a->sample_id < b->sample_id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(), better);
  std::vector<SampleId> ids;
  ids.reserve(count);
  for (std::size_t i = 0; i < count; ++i) ids.push_back(order[i]->sample_id);
  return ids;
}

std::vector<SampleId> select_top_b(std::span<const UnlabeledSample> pool, const Ensemble& ensemble,
                                   const QueryBudget& budget, double beta, SelectionCriterion criterion) {
  const std::size_t count = selection_size(budget, pool.size());
  if (count == 0) return {};
  const auto scores = score_pool(pool, ensemble, beta);
  return select_top(scores, count, criterion);
}

std::vector<SampleId> select_random(std::span<const UnlabeledSample> pool, std::size_t count,
                                    std::mt19937_64& rng) {
  std::vector<SampleId> ids;
  ids.reserve(pool.size());
  for (const auto& s : pool) ids.push_back(s.id);
  count = std::min(count, ids.size());
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

double throttle_factor(const ThrottleContext& context, const ThrottleCoefficients& k) {
  if (!(context.urgency >= 0.0 && context.urgency <= 1.0)) throw InvalidInput("urgency must lie in [0, 1]");
  if (!(context.carbon_pressure >= 0.0 && context.carbon_pressure <= 1.0)) {
    throw InvalidInput("carbon pressure must lie in [0, 1]");
  }
  const double availability = context.human_available ? 1.0 : k.unavailable_factor;
  const double urgency = k.urgency_floor + (1.0 - k.urgency_floor) * context.urgency;
  const double carbon = 1.0 - k.carbon_weight * context.carbon_pressure;
  return std::clamp(k.base * availability * urgency * carbon, k.min_factor, k.max_factor);
}

QueryBudget throttle(const QueryBudget& budget, const ThrottleContext& context,
                     const ThrottleCoefficients& coefficients) {
  return budget.with_throttle(throttle_factor(context, coefficients));
}

}  // namespace hai
