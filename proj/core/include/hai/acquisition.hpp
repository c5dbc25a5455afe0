#pragma once

// Uncertainty scoring and budgeted query selection.
//
//   U(x) = H[mean_k p(y|x; theta_k)] + beta * sum_c Var_k[p_c(x; theta_k)]
//
// The posterior over weights is approximated by an ensemble of K models. Variance is the
// population variance over members, summed over classes. `info_gain` is the BALD mutual
// information H[mean_k p_k] - mean_k H[p_k].

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hai/learner.hpp"
#include "hai/types.hpp"

namespace hai {

/// Shannon entropy in nats with 0 ln 0 = 0. Throws InvalidInput unless p is a distribution
/// (entries >= 0, sum within 1e-6 of 1).
double entropy(std::span<const double> p);

class Ensemble {
 public:
  /// Throws InvalidInput if empty or members disagree on d_in / n_classes.
  explicit Ensemble(std::vector<ModelState> members);

  [[nodiscard]] const std::vector<ModelState>& members() const { return members_; }
  [[nodiscard]] std::size_t size() const { return members_.size(); }
  [[nodiscard]] std::size_t d_in() const { return members_.front().d_in(); }
  [[nodiscard]] std::size_t n_classes() const { return members_.front().n_classes(); }

 private:
  std::vector<ModelState> members_;
};

struct AcquisitionScore {
  SampleId sample_id = 0;
  double entropy_term = 0.0;
  double variance_term = 0.0;
  double beta = 0.0;
  double utility = 0.0;
  double info_gain = 0.0;
};

/// Scores from already-computed member distributions (one row per member).
AcquisitionScore score_distributions(std::span<const std::vector<double>> member_probs, double beta,
                                     SampleId id = 0);

/// Throws InvalidInput when beta > 0 and the ensemble has fewer than two members.
AcquisitionScore utility(const Ensemble& ensemble, std::span<const double> x, double beta, SampleId id = 0);

std::vector<AcquisitionScore> score_pool(std::span<const UnlabeledSample> pool, const Ensemble& ensemble,
                                         double beta);

class QueryBudget {
 public:
  QueryBudget() = default;
  /// Throws InvalidInput if spent > b or throttle is outside (0, 1].
  QueryBudget(std::uint32_t b, std::uint32_t spent = 0, double throttle_factor = 1.0);

  [[nodiscard]] std::uint32_t b() const { return b_; }
  [[nodiscard]] std::uint32_t spent() const { return spent_; }
  [[nodiscard]] std::uint32_t remaining() const { return b_ - spent_; }
  [[nodiscard]] double throttle_factor() const { return throttle_; }

  /// Throws InvalidInput if the charge would exceed b; the budget is unchanged in that case.
  void charge(std::uint32_t n);
  [[nodiscard]] QueryBudget with_throttle(double factor) const;

 private:
  std::uint32_t b_ = 0;
  std::uint32_t spent_ = 0;
  double throttle_ = 1.0;
};

enum class SelectionCriterion : std::uint8_t { Utility, InfoGain };

/// How many samples select_top_b returns: floor(remaining * throttle), at least 1 when anything
/// remains and the pool is non-empty, never more than the pool.
std::size_t selection_size(const QueryBudget& budget, std::size_t pool_size);

/// Highest-scoring `count` ids, ties broken by lowest sample id.
std::vector<SampleId> select_top(std::span<const AcquisitionScore> scores, std::size_t count,
                                 SelectionCriterion criterion = SelectionCriterion::Utility);

std::vector<SampleId> select_top_b(std::span<const UnlabeledSample> pool, const Ensemble& ensemble,
                                   const QueryBudget& budget, double beta,
                                   SelectionCriterion criterion = SelectionCriterion::Utility);

/// Uniform-random baseline: `count` distinct ids, returned in ascending id order.
std::vector<SampleId> select_random(std::span<const UnlabeledSample> pool, std::size_t count,
                                    std::mt19937_64& rng);

struct ThrottleContext {
  bool human_available = true;
  double urgency = 1.0;          // [0, 1]
  double carbon_pressure = 0.0;  // [0, 1]
};

struct ThrottleCoefficients {
  double base = 1.0;
  double unavailable_factor = 0.25;
  double urgency_floor = 0.5;
  double carbon_weight = 0.5;
  double min_factor = 0.05;
  double max_factor = 1.0;
};

/// throttle = clamp(base * avail * (floor + (1 - floor) * urgency) * (1 - carbon_weight * pressure),
///                  min_factor, max_factor)
double throttle_factor(const ThrottleContext& context, const ThrottleCoefficients& coefficients = {});

QueryBudget throttle(const QueryBudget& budget, const ThrottleContext& context,
                     const ThrottleCoefficients& coefficients = {});

}  // namespace hai
