#pragma once

// Append-only run log, one JSON object per line: {"seq", "slot", "kind", "payload"}.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hai/report.hpp"
#include "hai/types.hpp"

namespace hai {

enum class EventKind : std::uint8_t {
  QueryIssued,
  LabelReceived,
  RuleApplied,
  UpdateCommitted,
  UpdateSkipped,
  Deferred,
  ForgettingViolation,
  CorrectiveUpdate,
  TradeoffPoint,
  Halt,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

struct Event {
  std::uint64_t seq = 0;
  Slot slot = 0;
  EventKind kind = EventKind::Halt;
  nlohmann::json payload;
};

nlohmann::json to_json(const Event& event);

class EventLog {
 public:
  const Event& append(Slot slot, EventKind kind, nlohmann::json payload);

  [[nodiscard]] const std::vector<Event>& events() const { return events_; }
  [[nodiscard]] std::size_t size() const { return events_.size(); }

  void write_jsonl(std::ostream& out) const;
  /// Throws ParseError naming the offending line.
  static EventLog read_jsonl(std::istream& in, const std::string& source = "events");

 private:
  std::vector<Event> events_;
};

/// Counters reconstructed purely from a log.
struct ReplayState {
  double cumulative_kg = 0.0;
  std::map<TaskId, std::uint32_t> labels_per_task;
  std::uint64_t labels_spent = 0;
  std::uint64_t weak_labels = 0;
  std::uint64_t model_version = 0;
  std::uint64_t committed = 0;
  std::uint64_t skipped = 0;
  std::vector<TradeoffPoint> curve;
  std::optional<std::string> halt_reason;
};

ReplayState replay(std::span<const Event> events);

}  // namespace hai
