#include "oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace hai::testing {

std::vector<SampleId> best_subset(const std::vector<std::pair<SampleId, double>>& scores, std::size_t k) {
  const std::size_t n = scores.size();
  k = std::min(k, n);
  std::vector<SampleId> best;
  double best_sum = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != k) continue;
    double sum = 0.0;
    std::vector<SampleId> ids;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sum += scores[i].second;
        ids.push_back(scores[i].first);
      }
    }
    std::sort(ids.begin(), ids.end());
    if (!have || sum > best_sum || (sum == best_sum && ids < best)) {
      best = ids;
      best_sum = sum;
      have = true;
    }
  }
  return best;
}

std::vector<TradeoffPoint> pareto_oracle(const std::vector<TradeoffPoint>& points) {
  std::vector<TradeoffPoint> out;
  for (const auto& p : points) {
    bool dominated = false;
    for (const auto& q : points) {
      const bool no_worse = q.cumulative_kg <= p.cumulative_kg && q.mean_accuracy >= p.mean_accuracy;
      const bool better = q.cumulative_kg < p.cumulative_kg || q.mean_accuracy > p.mean_accuracy;
      if (no_worse && better) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(p);
  }
  std::sort(out.begin(), out.end(), [](const TradeoffPoint& a, const TradeoffPoint& b) {
    if (a.cumulative_kg != b.cumulative_kg) return a.cumulative_kg < b.cumulative_kg;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.model_version < b.model_version;
  });
  return out;
}

namespace {

// Dense layer out = W x + b with rows of (in weights, bias).
std::vector<double> dense(const std::vector<double>& w, std::size_t offset, std::size_t in, std::size_t out,
                          const std::vector<double>& x) {
  std::vector<double> y(out);
  for (std::size_t r = 0; r < out; ++r) {
    const std::size_t row = offset + r * (in + 1);
    long double acc = w[row + in];
    for (std::size_t c = 0; c < in; ++c) acc += static_cast<long double>(w[row + c]) * x[c];
    y[r] = static_cast<double>(acc);
  }
  return y;
}

}  // namespace

double reference_loss(const ModelShape& shape, const std::vector<double>& weights, const Batch& batch) {
  long double total = 0.0L;
  for (const auto& s : batch.samples) {
    std::vector<double> z;
    if (shape.architecture == Architecture::Logistic) {
      z = dense(weights, 0, shape.d_in, shape.n_classes, s.features);
    } else {
      auto h = dense(weights, 0, shape.d_in, shape.hidden, s.features);
      for (auto& v : h) v = std::tanh(v);
      z = dense(weights, shape.hidden * (shape.d_in + 1), shape.hidden, shape.n_classes, h);
    }
    const double m = *std::max_element(z.begin(), z.end());
    long double denom = 0.0L;
    for (double v : z) denom += std::exp(static_cast<long double>(v - m));
    const long double nll = std::log(denom) - static_cast<long double>(z[s.label] - m);
    total += s.weight * nll;
  }
  return static_cast<double>(total / static_cast<long double>(batch.size()));
}

std::vector<double> numeric_gradient(const ModelState& model, const Batch& batch, double h) {
  std::vector<double> w(model.weights().begin(), model.weights().end());
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double orig = w[i];
    w[i] = orig + h;
    const double up = reference_loss(model.shape(), w, batch);
    w[i] = orig - h;
    const double down = reference_loss(model.shape(), w, batch);
    w[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

std::optional<double> min_feasible_emission(const WorkItem& item, const CarbonIntensityTrace& trace,
                                            std::int64_t now, const CarbonLedger& ledger,
                                            const DeviceProfile& device, std::int64_t lookahead) {
  std::optional<double> best;
  const auto last_slot = static_cast<std::int64_t>(trace.size()) - 1;
  for (std::int64_t slot = now; slot <= last_slot; ++slot) {
    if (slot > now + lookahead) break;
    if (item.deadline_slot && slot > *item.deadline_slot && slot > now) break;
    for (const auto& option : item.pathway_options) {
      // Arithmetic goes through the library formulas, which are checked separately; only the search
      // is independent here.
      const double kg = emission_kg(energy_kwh(option.flops, device), trace.slots()[static_cast<std::size_t>(slot)].ci);
      if (!ledger.fits(kg, item.task)) continue;
      if (!best || kg < *best) best = kg;
    }
  }
  return best;
}

RetrainBaseline retrain_from_scratch(const ModelShape& shape, const std::vector<std::vector<LabeledSample>>& per_task,
                                     double learning_rate, int epochs, std::size_t batch_size) {
  RetrainBaseline out{ModelState::zeros(shape), 0};
  Batch seen;
  const auto profile = flop_profile(shape, pathway_mask(shape, Pathway::Full));
  for (const auto& task : per_task) {
    seen.samples.insert(seen.samples.end(), task.begin(), task.end());
    if (seen.empty()) continue;
    UpdateConfig cfg;
    cfg.learning_rate = learning_rate;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    auto result = update(ModelState::zeros(shape), seen, cfg);
    out.model = result.model;
    out.flops += update_flops(profile, seen.size(), epochs);
  }
  return out;
}

ModelState random_model(const ModelShape& shape, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> w(shape.parameter_count());
  for (auto& v : w) v = u(rng);
  return ModelState::from_parts(shape, std::move(w), pathway_mask(shape, Pathway::Full), 0);
}

}  // namespace hai::testing
