#pragma once

// Seeded synthetic task streams built from Gaussian class clusters, and synthetic CI traces.

#include <cstdint>
#include <vector>

#include "hai/carbon.hpp"
#include "hai/stream.hpp"

namespace hai {

struct GaussianClass {
  ClassLabel label = 0;
  FeatureVector mean;
  FeatureVector stddev;  // per dimension
  double weight = 1.0;   // relative class frequency
};

struct TaskSpec {
  TaskId id = 0;
  Slot arrival = 0;
  std::vector<GaussianClass> classes;
  std::size_t pool_size = 200;
  std::size_t eval_size = 200;
  std::size_t seeds_per_class = 0;
  double noise_rate = 0.0;
  double urgency = 1.0;
};

/// Sample ids are assigned consecutively across the whole stream in task order.
TaskStream make_stream(const std::vector<TaskSpec>& specs, std::size_t n_classes, std::uint64_t seed);

/// Two isotropic Gaussians in 2D centred at (-separation/2, 0) and (+separation/2, 0);
/// `positive_weight` is the relative frequency of class 1.
TaskSpec two_gaussian_spec(TaskId id, double separation, double stddev, std::size_t pool_size,
                           std::size_t eval_size, double positive_weight = 1.0);

/// Class-incremental stream: task k introduces classes 2k and 2k+1, with cluster centres spread
/// on a circle of the given radius.
std::vector<TaskSpec> class_pair_specs(std::size_t n_tasks, double radius, double stddev, std::size_t pool_size,
                                       std::size_t eval_size, Slot arrival_gap = 0);

/// Domain-incremental stream: every task shares the two-class boundary x0 = 0 while both
/// clusters slide along x1 from task to task.
std::vector<TaskSpec> drifting_specs(std::size_t n_tasks, double separation, double stddev, double drift,
                                     std::size_t pool_size, std::size_t eval_size, Slot arrival_gap = 0);

/// Day-periodic CI curve `base + amplitude * sin` with multiplicative jitter, clipped at 0.
CarbonIntensityTrace diurnal_trace(std::size_t n_slots, double base, double amplitude, double jitter,
                                   std::uint64_t seed, std::int64_t start_unix = 1704067200);

}  // namespace hai
