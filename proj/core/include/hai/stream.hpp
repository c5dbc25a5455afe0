#pragma once

// Task streams and their on-disk layout.
//
// A stream directory holds `manifest.csv` with header `task_id,arrival_slot,file,noise_rate,urgency`
// and one CSV per task with header `sample_id,split,label,x0,...,x{d-1}`, where split is one of
// pool, eval or seed. Pool labels are the ground truth used by the simulated annotator.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hai/types.hpp"

namespace hai {

struct Task {
  TaskId id = 0;
  Slot arrival = 0;
  std::vector<UnlabeledSample> pool;
  std::map<SampleId, ClassLabel> pool_truth;
  Batch eval;
  std::vector<LabeledSample> seed_labels;
  double noise_rate = 0.0;  // probability the simulated annotator answers a wrong class
  double urgency = 1.0;     // [0, 1], feeds the query throttle
};

struct TaskStream {
  std::vector<Task> tasks;
  std::size_t d_in = 0;
  std::size_t n_classes = 0;

  [[nodiscard]] bool empty() const { return tasks.empty(); }
  /// Throws InvalidInput on: duplicate task or sample ids, pools overlapping eval splits,
  /// decreasing arrivals, empty eval splits, dimension or label-range mismatches, missing pool
  /// truth, noise or urgency outside [0, 1].
  void validate() const;
};

/// Reads a stream directory. `n_classes` of 0 infers it as 1 + the largest label seen.
/// Throws ParseError with file and line on malformed input.
TaskStream load_stream(const std::string& dir, std::size_t n_classes = 0);
void write_stream(const std::string& dir, const TaskStream& stream);

}  // namespace hai
