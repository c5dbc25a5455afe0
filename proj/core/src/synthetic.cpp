#include "hai/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hai/error.hpp"
#include "hai/rng.hpp"

namespace hai {

namespace {

struct Draw {
  FeatureVector x;
  ClassLabel y = 0;
};

Draw draw(const std::vector<GaussianClass>& classes, std::discrete_distribution<std::size_t>& pick,
          std::mt19937_64& rng) {
  const auto& c = classes[pick(rng)];
  Draw d;
  d.y = c.label;
  d.x.resize(c.mean.size());
  for (std::size_t j = 0; j < c.mean.size(); ++j) {
    std::normal_distribution<double> n(c.mean[j], c.stddev[j]);
    d.x[j] = n(rng);
  }
  return d;
}

}  // namespace

TaskStream make_stream(const std::vector<TaskSpec>& specs, std::size_t n_classes, std::uint64_t seed) {
  TaskStream stream;
  stream.n_classes = n_classes;
  SampleId next_id = 0;
  for (const auto& spec : specs) {
    if (spec.classes.empty()) throw InvalidInput("task spec has no classes");
    const std::size_t dim = spec.classes.front().mean.size();
    if (stream.d_in == 0) stream.d_in = dim;
    std::vector<double> weights;
    for (const auto& c : spec.classes) {
      if (c.mean.size() != stream.d_in || c.stddev.size() != stream.d_in) {
        throw InvalidInput("class cluster dimension mismatch");
      }
      weights.push_back(c.weight);
    }
    std::mt19937_64 rng(derive_seed(seed, {0x57AE, spec.id}));
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

    Task task;
    task.id = spec.id;
    task.arrival = spec.arrival;
    task.noise_rate = spec.noise_rate;
    task.urgency = spec.urgency;
    task.eval.task_id = spec.id;
    for (const auto& c : spec.classes) {
      for (std::size_t i = 0; i < spec.seeds_per_class; ++i) {
        Draw d;
        d.y = c.label;
        d.x.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) d.x[j] = std::normal_distribution<double>(c.mean[j], c.stddev[j])(rng);
        task.seed_labels.push_back({next_id++, std::move(d.x), d.y, Provenance::Seed, 1.0});
      }
    }
    for (std::size_t i = 0; i < spec.pool_size; ++i) {
      auto d = draw(spec.classes, pick, rng);
      task.pool_truth[next_id] = d.y;
      task.pool.push_back({next_id++, std::move(d.x)});
    }
    for (std::size_t i = 0; i < spec.eval_size; ++i) {
      auto d = draw(spec.classes, pick, rng);
      task.eval.samples.push_back({next_id++, std::move(d.x), d.y, Provenance::Oracle, 1.0});
    }
    stream.tasks.push_back(std::move(task));
  }
  stream.validate();
  return stream;
}

TaskSpec two_gaussian_spec(TaskId id, double separation, double stddev, std::size_t pool_size,
                           std::size_t eval_size, double positive_weight) {
  TaskSpec spec;
  spec.id = id;
  spec.pool_size = pool_size;
  spec.eval_size = eval_size;
  spec.classes = {
      {0, {-separation / 2.0, 0.0}, {stddev, stddev}, 1.0},
      {1, {separation / 2.0, 0.0}, {stddev, stddev}, positive_weight},
  };
  return spec;
}

std::vector<TaskSpec> class_pair_specs(std::size_t n_tasks, double radius, double stddev, std::size_t pool_size,
                                       std::size_t eval_size, Slot arrival_gap) {
  std::vector<TaskSpec> specs;
  const std::size_t n_clusters = 2 * n_tasks;
  for (std::size_t k = 0; k < n_tasks; ++k) {
    TaskSpec spec;
    spec.id = static_cast<TaskId>(k);
    spec.arrival = static_cast<Slot>(k) * arrival_gap;
    spec.pool_size = pool_size;
    spec.eval_size = eval_size;
    for (std::size_t c = 2 * k; c < 2 * k + 2; ++c) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(n_clusters);
      spec.classes.push_back(
          {static_cast<ClassLabel>(c), {radius * std::cos(angle), radius * std::sin(angle)}, {stddev, stddev}, 1.0});
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<TaskSpec> drifting_specs(std::size_t n_tasks, double separation, double stddev, double drift,
                                     std::size_t pool_size, std::size_t eval_size, Slot arrival_gap) {
  std::vector<TaskSpec> specs;
  for (std::size_t k = 0; k < n_tasks; ++k) {
    auto spec = two_gaussian_spec(static_cast<TaskId>(k), separation, stddev, pool_size, eval_size);
    spec.arrival = static_cast<Slot>(k) * arrival_gap;
    const double shift = drift * (static_cast<double>(k) - static_cast<double>(n_tasks - 1) / 2.0);
    for (auto& c : spec.classes) c.mean[1] += shift;
    specs.push_back(std::move(spec));
  }
  return specs;
}

CarbonIntensityTrace diurnal_trace(std::size_t n_slots, double base, double amplitude, double jitter,
                                   std::uint64_t seed, std::int64_t start_unix) {
  if (n_slots == 0) throw InvalidInput("trace needs at least one slot");
  std::mt19937_64 rng(derive_seed(seed, {0xC1}));
  std::uniform_real_distribution<double> noise(-jitter, jitter);
  std::vector<double> ci(n_slots);
  for (std::size_t i = 0; i < n_slots; ++i) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(i % 24) / 24.0;
    ci[i] = std::max(0.0, (base + amplitude * std::sin(phase)) * (1.0 + noise(rng)));
  }
  return CarbonIntensityTrace::from_values(ci, start_unix);
}

}  // namespace hai
