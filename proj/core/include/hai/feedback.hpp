#pragma once

// Messages exchanged between the orchestrator loop and whoever answers its queries: a simulated
// annotator in unattended runs, the HITL service in live runs.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hai/acquisition.hpp"
#include "hai/report.hpp"
#include "hai/rules.hpp"
#include "hai/types.hpp"

namespace hai {

using QueryId = std::uint64_t;

struct QueryRequest {
  QueryId query_id = 0;
  TaskId task = 0;
  SampleId sample_id = 0;
  FeatureVector features;
  AcquisitionScore score;
  ClassLabel predicted = 0;
  double confidence = 0.0;
  std::vector<double> explanation;  // length d_in
  Slot issued_slot = 0;
};

enum class FeedbackKind : std::uint8_t { Label, Correction, Confirmation, Skip };

std::string_view to_string(FeedbackKind kind);
std::optional<FeedbackKind> parse_feedback_kind(std::string_view text);

struct Feedback {
  QueryId query_id = 0;
  FeedbackKind kind = FeedbackKind::Label;
  ClassLabel label = 0;  // resolved class; for Confirmation the predicted class, unused for Skip
  Slot submitted_at = 0;
};

struct RuleSubmission {
  Rule rule;
  Slot submitted_at = 0;
};

/// Everything that arrived since the previous collect, in arrival order.
struct ChannelBatch {
  std::vector<Feedback> feedback;
  std::vector<QueryId> expired;
  std::vector<RuleSubmission> rules;
};

struct TaskLabelStatus {
  TaskId task = 0;
  std::uint32_t spent = 0;
  std::uint32_t b = 0;
  std::uint64_t weak_labels = 0;
};

struct AccuracySample {
  Slot slot = 0;
  std::uint64_t model_version = 0;
  double mean_accuracy = 0.0;
};

struct ForgettingStatus {
  double worst_delta = 0.0;
  double margin = 0.0;
  std::map<TaskId, double> deltas;
  std::vector<TaskId> violations;
};

/// Loop state taken at a step boundary. All counters agree with a replay of the event log up to
/// the same point.
struct StatusSnapshot {
  Slot slot = 0;
  std::uint64_t model_version = 0;
  double carbon_used_kg = 0.0;
  double epsilon_kg = 0.0;
  std::vector<TaskLabelStatus> labels;
  std::vector<AccuracySample> accuracy_history;
  ForgettingStatus forgetting;
  double throttle_factor = 1.0;
  std::optional<TaskId> current_task;
  /// Unlabeled pool of the current task, for answering rule previews.
  std::vector<UnlabeledSample> pool;
  std::size_t d_in = 0;
  std::size_t n_classes = 0;
  std::vector<TradeoffPoint> tradeoff;
  bool finished = false;
  std::optional<std::string> halt_reason;
};

class LabelChannel {
 public:
  virtual ~LabelChannel() = default;

  virtual void post(const QueryRequest& request) = 0;
  /// Feedback, expiries and rules that became visible at or before `now`.
  virtual ChannelBatch collect(Slot now) = 0;
  [[nodiscard]] virtual bool human_available(Slot now) const = 0;
  /// Provenance stamped on labels answered through this channel.
  [[nodiscard]] virtual Provenance provenance() const = 0;
  /// The loop abandoned an open query (its task ended); later feedback for it is ignored.
  virtual void cancel(QueryId /*query_id*/) {}
  /// Whether `publish` should be fed; building a snapshot copies the pool.
  [[nodiscard]] virtual bool wants_status() const { return false; }
  virtual void publish(const StatusSnapshot& /*snapshot*/) {}
};

}  // namespace hai
