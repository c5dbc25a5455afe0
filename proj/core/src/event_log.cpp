#include "hai/event_log.hpp"

#include <array>
#include <istream>
#include <ostream>

#include "hai/error.hpp"

namespace hai {

namespace {

constexpr std::array<std::string_view, 10> kKindNames = {
    "query_issued",         "label_received",    "rule_applied", "update_committed", "update_skipped",
    "deferred",             "forgetting_violation", "corrective_update", "tradeoff_point",   "halt",
};

}  // namespace

std::string_view to_string(EventKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<EventKind>(i);
  }
  return std::nullopt;
}

nlohmann::json to_json(const Event& event) {
  return nlohmann::json{{"seq", event.seq}, {"slot", event.slot}, {"kind", to_string(event.kind)},
                        {"payload", event.payload}};
}

const Event& EventLog::append(Slot slot, EventKind kind, nlohmann::json payload) {
  events_.push_back(Event{events_.size(), slot, kind, std::move(payload)});
  return events_.back();
}

void EventLog::write_jsonl(std::ostream& out) const {
  for (const auto& e : events_) out << to_json(e).dump() << '\n';
}

EventLog EventLog::read_jsonl(std::istream& in, const std::string& source) {
  EventLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("seq") || !j.contains("slot") || !j.contains("kind") ||
        !j.contains("payload") || !j["seq"].is_number_unsigned() || !j["slot"].is_number_integer() ||
        !j["kind"].is_string()) {
      throw ParseError(source, line_no, "record must have seq, slot, kind and payload");
    }
    const auto kind = parse_event_kind(j["kind"].get<std::string>());
    if (!kind) throw ParseError(source, line_no, "unknown event kind '" + j["kind"].get<std::string>() + "'");
    const auto seq = j["seq"].get<std::uint64_t>();
    if (seq != log.events_.size()) throw ParseError(source, line_no, "sequence number out of order");
    log.events_.push_back(Event{seq, j["slot"].get<Slot>(), *kind, j["payload"]});
  }
  return log;
}

ReplayState replay(std::span<const Event> events) {
  ReplayState state;
  for (const auto& e : events) {
    const auto& p = e.payload;
    switch (e.kind) {
      case EventKind::LabelReceived: {
        const auto task = p.at("task").get<TaskId>();
        ++state.labels_per_task[task];
        ++state.labels_spent;
        break;
      }
      case EventKind::RuleApplied:
        state.weak_labels += p.at("matched").get<std::uint64_t>();
        break;
      case EventKind::UpdateCommitted:
      case EventKind::CorrectiveUpdate:
        state.cumulative_kg = state.cumulative_kg + p.at("emitted_kg").get<double>();
        state.model_version = std::max(state.model_version, p.at("model_version").get<std::uint64_t>());
        ++state.committed;
        break;
      case EventKind::UpdateSkipped:
        ++state.skipped;
        break;
      case EventKind::TradeoffPoint:
        state.curve.push_back({p.at("cumulative_kg").get<double>(), p.at("mean_accuracy").get<double>(),
                               p.at("labels_spent").get<std::uint64_t>(), p.at("timestamp").get<std::int64_t>(),
                               p.at("model_version").get<std::uint64_t>()});
        break;
      case EventKind::Halt:
        state.halt_reason = p.at("reason").get<std::string>();
        break;
      default:
        break;
    }
  }
  return state;
}

}  // namespace hai
