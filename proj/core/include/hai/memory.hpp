#pragma once

// Continual memory: a bounded exemplar store with per-task reservoir sampling, rehearsal
// batch construction and the forgetting monitor L_k(theta_t) - L_k(theta_k) <= delta.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hai/learner.hpp"
#include "hai/types.hpp"

namespace hai {

struct BufferSlot {
  LabeledSample sample;
  TaskId task_id = 0;
  double weight = 1.0;    // retention weight (stored utility) when weighted retention is on
  double priority = 0.0;  // weighted-reservoir key; unused for uniform retention
};

struct TaskReference {
  double reference_loss = 0.0;
  std::string eval_set_id;
};

enum class RetentionPolicy : std::uint8_t { Uniform, UncertaintyWeighted };

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity, RetentionPolicy policy = RetentionPolicy::Uniform);

  /// Reservoir insertion. Each known task gets an equal share of the capacity (floor division,
  /// remainder to the earliest tasks); when a new task shrinks the shares, surplus slots are
  /// evicted uniformly at random. All randomness derives from `seed` and the task's seen count.
  /// `retention_weight` only matters under UncertaintyWeighted retention.
  void insert(const LabeledSample& sample, TaskId task_id, std::uint64_t seed, double retention_weight = 1.0);

  /// Freezes L_k(theta_k). Throws InvalidInput if the task already has a reference.
  void set_reference(TaskId task_id, double reference_loss, std::string eval_set_id);

  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] bool empty() const { return size() == 0; }
  [[nodiscard]] RetentionPolicy policy() const { return policy_; }
  [[nodiscard]] std::size_t share(TaskId task_id) const;
  [[nodiscard]] std::uint64_t seen_count(TaskId task_id) const;
  /// Slots in task-arrival order.
  [[nodiscard]] std::vector<BufferSlot> slots() const;
  [[nodiscard]] const std::vector<BufferSlot>& task_slots(TaskId task_id) const;
  [[nodiscard]] const std::vector<TaskId>& task_order() const { return task_order_; }
  [[nodiscard]] const std::map<TaskId, TaskReference>& references() const { return references_; }

  /// Rebuilds a buffer from checkpointed state; throws InvalidInput when it violates capacity.
  static ReplayBuffer restore(std::size_t capacity, RetentionPolicy policy, std::vector<TaskId> task_order,
                              std::map<TaskId, std::vector<BufferSlot>> slots,
                              std::map<TaskId, std::uint64_t> seen, std::map<TaskId, TaskReference> references);

  [[nodiscard]] const std::map<TaskId, std::vector<BufferSlot>>& slots_by_task() const { return slots_; }
  [[nodiscard]] const std::map<TaskId, std::uint64_t>& seen_counts() const { return seen_; }

 private:
  void rebalance(std::uint64_t seed);

  std::size_t capacity_;
  RetentionPolicy policy_;
  std::vector<TaskId> task_order_;
  std::map<TaskId, std::vector<BufferSlot>> slots_;
  std::map<TaskId, std::uint64_t> seen_;
  std::map<TaskId, TaskReference> references_;
};

struct RehearsalResult {
  Batch batch;
  std::size_t replayed = 0;
  /// Replay was requested but the buffer was empty, so only current samples were used.
  bool fell_back = false;
};

/// round(mix * size) samples drawn uniformly over buffer slots (without replacement while the
/// buffer suffices), tagged Provenance::Replay, followed by the first size - replayed samples of
/// `current`. Deterministic for a fixed seed.
RehearsalResult rehearsal_batch(const ReplayBuffer& buffer, std::size_t size, double mix, const Batch& current,
                                std::uint64_t seed);

struct TaskForgetting {
  TaskId task_id = 0;
  double current_loss = 0.0;
  double reference_loss = 0.0;
  double delta = 0.0;
};

struct ForgettingReport {
  std::vector<TaskForgetting> tasks;  // ascending task id
  double worst_delta = 0.0;           // 0 when no task is monitored
  std::vector<TaskId> violations;     // delta_k > margin, largest delta first
  double margin = 0.0;
};

/// Evaluates every task in `eval_sets` against its frozen reference. Throws InvalidInput when a
/// task lacks a reference.
ForgettingReport check_forgetting(const ReplayBuffer& buffer, const ModelState& model,
                                  const std::map<TaskId, Batch>& eval_sets, double delta);

}  // namespace hai
