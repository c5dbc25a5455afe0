#pragma once

// Independent reference implementations used by unit and acceptance tests. They favour
// obviously-correct brute force over speed and share no code paths with the library beyond
// the public types.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "hai/carbon.hpp"
#include "hai/learner.hpp"
#include "hai/orchestrator.hpp"
#include "hai/report.hpp"

namespace hai::testing {

/// Max-sum subset of size `k` by full enumeration; ties go to the lexicographically smallest
/// sorted id list. Returns sorted ids.
std::vector<SampleId> best_subset(const std::vector<std::pair<SampleId, double>>& scores, std::size_t k);

/// O(n^2) domination filter, ordered by carbon, then timestamp, then model version.
std::vector<TradeoffPoint> pareto_oracle(const std::vector<TradeoffPoint>& points);

/// Central finite differences of sum(w_i * nll_i) / n, computed from an independent
/// forward pass written against the documented parameter layout.
std::vector<double> numeric_gradient(const ModelState& model, const Batch& batch, double h);
double reference_loss(const ModelShape& shape, const std::vector<double>& weights, const Batch& batch);

/// Minimal feasible emission over every (slot, pathway) pair the scheduler may consider, or
/// nullopt when none fits the ledger.
std::optional<double> min_feasible_emission(const WorkItem& item, const CarbonIntensityTrace& trace,
                                            std::int64_t now, const CarbonLedger& ledger,
                                            const DeviceProfile& device, std::int64_t lookahead);

struct RetrainBaseline {
  ModelState model;
  std::uint64_t flops = 0;
};

/// Retrains a fresh model from zeros at every task arrival on the union of all labels seen so
/// far, `epochs` passes of mini-batch SGD per retrain.
RetrainBaseline retrain_from_scratch(const ModelShape& shape, const std::vector<std::vector<LabeledSample>>& per_task,
                                     double learning_rate, int epochs, std::size_t batch_size);

/// Random weights in [-scale, scale].
ModelState random_model(const ModelShape& shape, std::mt19937_64& rng, double scale = 1.0);

}  // namespace hai::testing
