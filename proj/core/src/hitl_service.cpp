#include "hai/hitl_service.hpp"

#include <algorithm>
#include <utility>

#include "hai/error.hpp"

namespace hai {

std::string_view to_string(QueryState s) {
  switch (s) {
    case QueryState::Open: return "open";
    case QueryState::Answered: return "answered";
    case QueryState::Skipped: return "skipped";
    case QueryState::Expired: return "expired";
    case QueryState::Cancelled: return "cancelled";
  }
  return "?";
}

HitlService::HitlService(std::size_t n_classes, Slot ttl, bool human_available)
    : n_classes_(n_classes), ttl_(ttl), human_available_(human_available) {
  if (n_classes_ < 2) throw InvalidInput("service needs at least two classes");
  if (ttl_ < 1) throw InvalidInput("query TTL must be >= 1 slot");
}

bool HitlService::expired_locked(const PendingQuery& q) const {
  return q.state == QueryState::Expired || (q.state == QueryState::Open && now_ >= q.request.issued_slot + ttl_);
}

void HitlService::post(const QueryRequest& request) {
  std::lock_guard lock(mutex_);
  queries_[request.query_id] = PendingQuery{request, QueryState::Open, std::nullopt};
}

ChannelBatch HitlService::collect(Slot now) {
  std::lock_guard lock(mutex_);
  now_ = now;
  for (auto& [id, q] : queries_) {
    if (q.state == QueryState::Open && now_ >= q.request.issued_slot + ttl_) {
      q.state = QueryState::Expired;
      expired_.push_back(id);
    }
  }
  ChannelBatch batch;
  batch.feedback = std::exchange(feedback_, {});
  batch.expired = std::exchange(expired_, {});
  batch.rules = std::exchange(rules_, {});
  return batch;
}

bool HitlService::human_available(Slot) const {
  std::lock_guard lock(mutex_);
  return human_available_;
}

void HitlService::set_human_available(bool available) {
  std::lock_guard lock(mutex_);
  human_available_ = available;
}

void HitlService::cancel(QueryId query_id) {
  std::lock_guard lock(mutex_);
  const auto it = queries_.find(query_id);
  if (it != queries_.end() && it->second.state == QueryState::Open) it->second.state = QueryState::Cancelled;
}

void HitlService::publish(const StatusSnapshot& snapshot) {
  std::lock_guard lock(mutex_);
  snapshot_ = snapshot;
}

std::vector<PendingQuery> HitlService::list_pending() const {
  std::lock_guard lock(mutex_);
  std::vector<PendingQuery> out;
  for (const auto& [id, q] : queries_) {
    if (q.state == QueryState::Open && !expired_locked(q)) out.push_back(q);
  }
  std::stable_sort(out.begin(), out.end(), [](const PendingQuery& a, const PendingQuery& b) {
    if (a.request.score.utility != b.request.score.utility) return a.request.score.utility > b.request.score.utility;
    return a.request.query_id < b.request.query_id;
  });
  return out;
}

std::optional<PendingQuery> HitlService::query(QueryId query_id) const {
  std::lock_guard lock(mutex_);
  const auto it = queries_.find(query_id);
  if (it == queries_.end()) return std::nullopt;
  return it->second;
}

SubmitResult HitlService::submit(QueryId query_id, FeedbackKind kind, std::optional<ClassLabel> value) {
  using Code = SubmitResult::Code;
  std::lock_guard lock(mutex_);
  const auto it = queries_.find(query_id);
  if (it == queries_.end()) return {Code::NotFound, "unknown query " + std::to_string(query_id), QueryState::Open};
  PendingQuery& q = it->second;

  ClassLabel label = 0;
  switch (kind) {
    case FeedbackKind::Label:
    case FeedbackKind::Correction:
      if (!value) return {Code::Invalid, std::string(to_string(kind)) + " needs a class value", q.state};
      label = *value;
      break;
    case FeedbackKind::Confirmation:
      label = q.request.predicted;
      if (value && *value != label) {
        return {Code::Invalid, "confirmation value differs from the predicted class", q.state};
      }
      break;
    case FeedbackKind::Skip:
      break;
  }
  if (kind != FeedbackKind::Skip && label >= n_classes_) {
    return {Code::Invalid,
            "label " + std::to_string(label) + " out of range for " + std::to_string(n_classes_) + " classes", q.state};
  }

  if (q.state == QueryState::Open && expired_locked(q)) {
    q.state = QueryState::Expired;
    expired_.push_back(query_id);
  }
  switch (q.state) {
    case QueryState::Open: {
      Feedback fb{query_id, kind, label, now_};
      q.state = kind == FeedbackKind::Skip ? QueryState::Skipped : QueryState::Answered;
      q.terminal = fb;
      feedback_.push_back(fb);
      return {Code::Accepted, "accepted", q.state};
    }
    case QueryState::Answered:
    case QueryState::Skipped: {
      const bool same = q.terminal && q.terminal->kind == kind && (kind == FeedbackKind::Skip || q.terminal->label == label);
      if (same) return {Code::Noop, "already recorded", q.state};
      return {Code::Conflict, "query already " + std::string(to_string(q.state)), q.state};
    }
    case QueryState::Expired:
      return {Code::Conflict, "query expired", q.state};
    case QueryState::Cancelled:
      return {Code::Conflict, "query was withdrawn", q.state};
  }
  return {Code::Conflict, "unexpected state", q.state};
}

RuleResult HitlService::submit_rule(const Rule& rule) {
  std::lock_guard lock(mutex_);
  if (!snapshot_.current_task) return {false, "no task is active", 0};
  try {
    validate_rule(rule, snapshot_.d_in, snapshot_.n_classes);
  } catch (const InvalidInput& e) {
    return {false, e.what(), 0};
  }
  std::size_t matched = 0;
  for (const auto& s : snapshot_.pool) matched += matches(rule, s.features) ? 1 : 0;
  rules_.push_back({rule, now_});
  return {true, matched == 0 ? "rule matches no pool samples" : "accepted", matched};
}

StatusSnapshot HitlService::status() const {
  std::lock_guard lock(mutex_);
  StatusSnapshot s = snapshot_;
  s.pool.clear();
  return s;
}

std::vector<TradeoffPoint> HitlService::tradeoff() const {
  std::lock_guard lock(mutex_);
  return snapshot_.tradeoff;
}

nlohmann::json to_json(const TradeoffPoint& p) {
  return {{"timestamp", p.timestamp},
          {"model_version", p.model_version},
          {"cumulative_kg", p.cumulative_kg},
          {"mean_accuracy", p.mean_accuracy},
          {"labels_spent", p.labels_spent}};
}

nlohmann::json to_json(const PendingQuery& q) {
  const auto& r = q.request;
  return {{"query_id", r.query_id},
          {"task", r.task},
          {"sample_id", r.sample_id},
          {"features", r.features},
          {"utility", r.score.utility},
          {"entropy_term", r.score.entropy_term},
          {"variance_term", r.score.variance_term},
          {"beta", r.score.beta},
          {"info_gain", r.score.info_gain},
          {"predicted", r.predicted},
          {"confidence", r.confidence},
          {"explanation", r.explanation},
          {"issued_slot", r.issued_slot},
          {"state", to_string(q.state)}};
}

nlohmann::json to_json(const StatusSnapshot& s) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& l : s.labels) {
    labels.push_back({{"task", l.task}, {"spent", l.spent}, {"b", l.b}, {"weak_labels", l.weak_labels}});
  }
  nlohmann::json history = nlohmann::json::array();
  for (const auto& a : s.accuracy_history) {
    history.push_back({{"slot", a.slot}, {"model_version", a.model_version}, {"mean_accuracy", a.mean_accuracy}});
  }
  nlohmann::json deltas = nlohmann::json::array();
  for (const auto& [task, d] : s.forgetting.deltas) deltas.push_back({{"task", task}, {"delta", d}});
  return {{"slot", s.slot},
          {"model_version", s.model_version},
          {"carbon", {{"used_kg", s.carbon_used_kg}, {"epsilon_kg", s.epsilon_kg}}},
          {"labels", labels},
          {"accuracy_history", history},
          {"forgetting",
           {{"worst_delta", s.forgetting.worst_delta},
            {"margin", s.forgetting.margin},
            {"deltas", deltas},
            {"violations", s.forgetting.violations}}},
          {"throttle_factor", s.throttle_factor},
          {"current_task", s.current_task ? nlohmann::json(*s.current_task) : nlohmann::json(nullptr)},
          {"finished", s.finished},
          {"halt_reason", s.halt_reason ? nlohmann::json(*s.halt_reason) : nlohmann::json(nullptr)}};
}

}  // namespace hai
