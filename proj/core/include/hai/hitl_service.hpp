#pragma once

// Backend of the human feedback interface. Implements LabelChannel for the orchestrator loop and
// a thread-safe API for concurrent clients; every mutation is queued for the loop, which
// integrates it at its next step boundary.

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hai/feedback.hpp"

namespace hai {

enum class QueryState : std::uint8_t { Open, Answered, Skipped, Expired, Cancelled };
std::string_view to_string(QueryState s);

struct PendingQuery {
  QueryRequest request;
  QueryState state = QueryState::Open;
  std::optional<Feedback> terminal;
};

struct SubmitResult {
  enum class Code : std::uint8_t { Accepted, Noop, NotFound, Conflict, Invalid };
  Code code = Code::Accepted;
  std::string message;
  QueryState state = QueryState::Open;
};

struct RuleResult {
  bool accepted = false;
  std::string message;
  std::size_t matched = 0;  // preview against the pool at the last step boundary
};

class HitlService final : public LabelChannel {
 public:
  static constexpr Slot kDefaultTtl = 24;

  explicit HitlService(std::size_t n_classes, Slot ttl = kDefaultTtl, bool human_available = true);

  void post(const QueryRequest& request) override;
  ChannelBatch collect(Slot now) override;
  [[nodiscard]] bool human_available(Slot now) const override;
  [[nodiscard]] Provenance provenance() const override { return Provenance::Human; }
  void cancel(QueryId query_id) override;
  [[nodiscard]] bool wants_status() const override { return true; }
  void publish(const StatusSnapshot& snapshot) override;

  /// Open, unexpired queries by utility descending, then query id ascending.
  [[nodiscard]] std::vector<PendingQuery> list_pending() const;
  /// `value` is the class for label and correction, optional for confirmation (must then match
  /// the prediction), and ignored for skip. A repeat of the terminal feedback is a no-op.
  SubmitResult submit(QueryId query_id, FeedbackKind kind, std::optional<ClassLabel> value);
  RuleResult submit_rule(const Rule& rule);
  [[nodiscard]] StatusSnapshot status() const;
  [[nodiscard]] std::vector<TradeoffPoint> tradeoff() const;
  [[nodiscard]] std::optional<PendingQuery> query(QueryId query_id) const;

  void set_human_available(bool available);

 private:
  [[nodiscard]] bool expired_locked(const PendingQuery& q) const;

  mutable std::mutex mutex_;
  std::size_t n_classes_;
  Slot ttl_;
  bool human_available_;
  Slot now_ = 0;
  std::map<QueryId, PendingQuery> queries_;
  std::vector<Feedback> feedback_;
  std::vector<QueryId> expired_;
  std::vector<RuleSubmission> rules_;
  StatusSnapshot snapshot_;
};

nlohmann::json to_json(const PendingQuery& query);
nlohmann::json to_json(const StatusSnapshot& status);
nlohmann::json to_json(const TradeoffPoint& point);

}  // namespace hai
