#include "hai/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <spdlog/spdlog.h>

#include "hai/error.hpp"
#include "hai/rng.hpp"
#include "hai/rules.hpp"

namespace hai {

namespace {

constexpr std::uint64_t kInitTag = 0x1417;
constexpr std::uint64_t kNoiseTag = 0x0415E;
constexpr std::uint64_t kRandomTag = 0x7A4D;
constexpr std::uint64_t kRehearsalTag = 0x4E4E;
constexpr std::uint64_t kCorrectiveTag = 0xC044;
constexpr std::uint64_t kEnsembleTag = 0xE45B;

std::string_view purpose_name(int purpose) {
  switch (purpose) {
    case 0: return "update";
    case 1: return "corrective";
    default: return "ensemble";
  }
}

void insert_sorted(std::vector<UnlabeledSample>& pool, UnlabeledSample sample) {
  const auto it = std::lower_bound(pool.begin(), pool.end(), sample.id,
                                   [](const UnlabeledSample& s, SampleId id) { return s.id < id; });
  pool.insert(it, std::move(sample));
}

}  // namespace

std::string_view to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::Utility: return "utility";
    case SelectionStrategy::InfoGain: return "info_gain";
    case SelectionStrategy::Random: return "random";
  }
  return "?";
}

std::string_view to_string(PathwayPolicy p) {
  switch (p) {
    case PathwayPolicy::Full: return "full";
    case PathwayPolicy::Shallow: return "shallow";
    case PathwayPolicy::Adaptive: return "adaptive";
  }
  return "?";
}

std::string_view to_string(TaskOutcome o) {
  switch (o) {
    case TaskOutcome::Pending: return "pending";
    case TaskOutcome::Active: return "active";
    case TaskOutcome::Completed: return "completed";
    case TaskOutcome::Interrupted: return "interrupted";
    case TaskOutcome::Unattempted: return "unattempted";
  }
  return "?";
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidInput(what);
  };
  require(budgets.epsilon_kg > 0.0 && std::isfinite(budgets.epsilon_kg), "budgets.epsilon_kg must be > 0");
  require(budgets.delta >= 0.0, "budgets.delta must be >= 0");
  require(budgets.lambda >= 0.0, "objective.lambda must be >= 0");
  require(budgets.beta >= 0.0, "acquisition.beta must be >= 0");
  require(!budgets.task_epsilon_kg || *budgets.task_epsilon_kg > 0.0, "budgets.task_epsilon_kg must be > 0");
  require(architecture == Architecture::Logistic || hidden > 0, "learner.hidden must be > 0 for the MLP");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learner.learning_rate must be > 0");
  require(epochs >= 1, "learner.epochs must be >= 1");
  require(ensemble_k >= 1, "acquisition.ensemble_k must be >= 1");
  require(ensemble_k >= 2 || budgets.beta == 0.0 || strategy == SelectionStrategy::Random,
          "acquisition.ensemble_k must be >= 2 when beta > 0");
  require(ensemble_epochs >= 1, "acquisition.ensemble_epochs must be >= 1");
  require(ensemble_jitter >= 0.0, "acquisition.ensemble_jitter must be >= 0");
  require(queries_per_round >= 1, "acquisition.queries_per_round must be >= 1");
  require(query_ttl >= 1, "acquisition.query_ttl must be >= 1");
  require(throttle.base > 0.0, "throttle.base must be > 0");
  require(throttle.min_factor > 0.0 && throttle.min_factor <= throttle.max_factor && throttle.max_factor <= 1.0,
          "throttle bounds must satisfy 0 < min <= max <= 1");
  require(rule_weight > 0.0 && rule_weight < 1.0, "run.rule_weight must lie in (0, 1)");
  device.validate();
  require(!trace.empty(), "trace must have at least one slot");
  require(lookahead >= 0, "scheduler.lookahead must be >= 0");
  require(deadline_slack >= 0, "scheduler.deadline_slack must be >= 0");
  require(shallow_pressure >= 0.0 && shallow_pressure <= 1.0, "scheduler.shallow_pressure must lie in [0, 1]");
  require(pressure_window >= 1, "scheduler.pressure_window must be >= 1");
  require(memory_capacity >= 1, "memory.capacity must be >= 1");
  require(rehearsal_mix >= 0.0 && rehearsal_mix < 1.0, "memory.mix must lie in [0, 1)");
  require(corrective_batch >= 1, "memory.corrective_batch must be >= 1");
  require(eval_cadence >= 1, "run.eval_cadence must be >= 1");
  require(max_task_slots >= 1, "run.max_task_slots must be >= 1");
}

ObjectiveReport objective(const ModelState& model, const std::vector<const Task*>& seen, double lambda,
                          ConstraintStatus constraints) {
  if (seen.empty()) throw InvalidInput("objective needs at least one seen task");
  if (!(lambda >= 0.0)) throw InvalidInput("lambda must be >= 0");
  ObjectiveReport report;
  double total = 0.0;
  for (const Task* t : seen) total += evaluate(model, t->eval).mean_loss;
  report.mean_task_loss = total / static_cast<double>(seen.size());
  report.regularizer_value = regularizer(model);
  report.lambda = lambda;
  report.penalized_objective = report.mean_task_loss + lambda * report.regularizer_value;
  report.constraints = constraints;
  return report;
}

SimulatedAnnotator::SimulatedAnnotator(const TaskStream& stream, std::uint64_t seed, bool available)
    : n_classes_(std::max<std::size_t>(stream.n_classes, 2)), seed_(seed), available_(available) {
  for (const auto& t : stream.tasks) {
    for (const auto& [id, y] : t.pool_truth) truth_[id] = Truth{y, t.noise_rate};
  }
}

void SimulatedAnnotator::post(const QueryRequest& request) { posted_.push_back(request); }

void SimulatedAnnotator::queue_rule(const Rule& rule, Slot at) { rules_.push_back({rule, at}); }

ChannelBatch SimulatedAnnotator::collect(Slot now) {
  ChannelBatch batch;
  std::vector<QueryRequest> waiting;
  for (auto& q : posted_) {
    if (q.issued_slot >= now) {
      waiting.push_back(std::move(q));
      continue;
    }
    const auto it = truth_.find(q.sample_id);
    if (it == truth_.end()) continue;
    ClassLabel y = it->second.label;
    SplitMix64 gen(derive_seed(seed_, {kNoiseTag, q.sample_id}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (it->second.noise > 0.0 && u(gen) < it->second.noise) {
      std::uniform_int_distribution<ClassLabel> other(0, static_cast<ClassLabel>(n_classes_ - 2));
      const ClassLabel draw = other(gen);
      y = draw >= y ? draw + 1 : draw;
    }
    batch.feedback.push_back({q.query_id, FeedbackKind::Label, y, now});
  }
  posted_ = std::move(waiting);
  std::vector<RuleSubmission> later;
  for (auto& r : rules_) {
    if (r.submitted_at <= now) {
      batch.rules.push_back(r);
    } else {
      later.push_back(r);
    }
  }
  rules_ = std::move(later);
  return batch;
}

struct Orchestrator::TaskState {
  const Task* task = nullptr;
  std::vector<UnlabeledSample> pool;  // queryable candidates, ascending id
  std::map<SampleId, LabeledSample> labeled;
  std::vector<LabeledSample> fresh;  // labeled but not yet trained on
  std::map<SampleId, double> retention_weight;
  std::uint32_t spent = 0;
  std::uint32_t open = 0;
  std::uint64_t weak = 0;
  std::uint32_t round = 0;
  std::optional<Slot> pending_since;
  std::optional<Slot> deferred_to;
  Slot started = 0;
  TaskOutcome outcome = TaskOutcome::Pending;
};

Orchestrator::Orchestrator(TaskStream stream, RunConfig config, LabelChannel* channel)
    : stream_(std::move(stream)),
      config_(std::move(config)),
      channel_(channel),
      model_(ModelState::zeros({Architecture::Logistic, 1, 2, 0})),
      ledger_(config_.budgets.epsilon_kg > 0.0 ? config_.budgets.epsilon_kg : 1.0),
      buffer_(config_.memory_capacity > 0 ? config_.memory_capacity : 1, config_.retention) {
  config_.validate();
  stream_.validate();
  if (!channel_) {
    owned_channel_ = std::make_unique<SimulatedAnnotator>(stream_, config_.seed);
    channel_ = owned_channel_.get();
  }
  for (const auto& t : stream_.tasks) {
    auto st = std::make_unique<TaskState>();
    st->task = &t;
    tasks_.emplace(t.id, std::move(st));
  }
  if (!stream_.empty()) {
    const ModelShape shape{config_.architecture, stream_.d_in, stream_.n_classes,
                           config_.architecture == Architecture::Mlp ? config_.hidden : 0};
    const InitMode init =
        config_.init.value_or(config_.architecture == Architecture::Logistic ? InitMode::Zeros : InitMode::Seeded);
    model_ = init == InitMode::Zeros ? ModelState::zeros(shape)
                                     : ModelState::seeded(shape, derive_seed(config_.seed, {kInitTag}));
  } else {
    finished_ = true;
    halt_reason_ = "completed";
  }
}

Orchestrator::~Orchestrator() = default;

Orchestrator::TaskState& Orchestrator::state(TaskId id) { return *tasks_.at(id); }

const Task& Orchestrator::task(TaskId id) const { return *tasks_.at(id)->task; }

std::size_t Orchestrator::trace_index(Slot slot) const {
  return static_cast<std::size_t>(std::min<Slot>(std::max<Slot>(slot, 0), static_cast<Slot>(config_.trace.size()) - 1));
}

double Orchestrator::current_pressure() const {
  return carbon_pressure(config_.trace, static_cast<std::int64_t>(trace_index(now_)), config_.pressure_window);
}

bool Orchestrator::step() {
  if (finished_) return false;

  if (!current_ && next_task_ < stream_.tasks.size() && stream_.tasks[next_task_].arrival <= now_) {
    start_task(next_task_++);
  }
  integrate(channel_->collect(now_));
  if (!finished_ && current_) try_update();
  if (!finished_ && pending_recheck_ && now_ % config_.eval_cadence == 0) run_forgetting_check();
  if (!finished_ && current_) acquire();

  if (!finished_ && current_) {
    auto& st = state(stream_.tasks[*current_].id);
    const bool exhausted = st.spent + st.open >= config_.budgets.labels_per_task || st.pool.empty();
    const bool idle = st.open == 0 && st.fresh.empty();
    if ((exhausted && idle) || now_ - st.started + 1 >= config_.max_task_slots) complete_current_task();
  }
  if (!finished_ && !current_ && next_task_ == stream_.tasks.size()) {
    if (buffer_.references().size() > 0) run_forgetting_check();
    if (!finished_) halt("completed");
  }

  publish();
  ++now_;
  return !finished_;
}

void Orchestrator::start_task(std::size_t index) {
  const Task& t = stream_.tasks[index];
  auto& st = state(t.id);
  st.outcome = TaskOutcome::Active;
  st.started = now_;
  st.pool = t.pool;
  std::sort(st.pool.begin(), st.pool.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (const auto& s : t.seed_labels) {
    st.labeled[s.id] = s;
    st.fresh.push_back(s);
  }
  if (!st.fresh.empty()) st.pending_since = now_;
  if (config_.budgets.task_epsilon_kg) ledger_.set_task_budget(t.id, *config_.budgets.task_epsilon_kg);
  current_ = index;
}

void Orchestrator::complete_current_task() {
  const Task& t = stream_.tasks[*current_];
  auto& st = state(t.id);
  for (auto it = open_queries_.begin(); it != open_queries_.end();) {
    if (it->second.task == t.id) {
      channel_->cancel(it->first);
      it = open_queries_.erase(it);
    } else {
      ++it;
    }
  }
  st.open = 0;
  st.outcome = TaskOutcome::Completed;
  buffer_.set_reference(t.id, evaluate(model_, t.eval).mean_loss, "task-" + std::to_string(t.id) + "-eval");
  current_.reset();
  pending_recheck_ = true;
}

void Orchestrator::integrate(const ChannelBatch& batch) {
  for (const auto& fb : batch.feedback) {
    const auto it = open_queries_.find(fb.query_id);
    if (it == open_queries_.end()) continue;
    const OpenQuery q = it->second;
    open_queries_.erase(it);
    auto& st = state(q.task);
    --st.open;
    if (fb.kind == FeedbackKind::Skip) continue;
    if (fb.label >= stream_.n_classes) continue;
    LabeledSample s{q.sample.id, q.sample.features, fb.label, channel_->provenance(), 1.0};
    st.labeled[s.id] = s;
    st.fresh.push_back(std::move(s));
    ++st.spent;
    if (!st.pending_since) st.pending_since = now_;
    log_.append(now_, EventKind::LabelReceived,
                {{"query_id", fb.query_id},
                 {"task", q.task},
                 {"sample_id", q.sample.id},
                 {"label", fb.label},
                 {"kind", to_string(fb.kind)},
                 {"provenance", to_string(channel_->provenance())}});
  }
  for (QueryId id : batch.expired) {
    const auto it = open_queries_.find(id);
    if (it == open_queries_.end()) continue;
    auto& st = state(it->second.task);
    --st.open;
    if (st.outcome == TaskOutcome::Active) insert_sorted(st.pool, it->second.sample);
    open_queries_.erase(it);
  }
  for (const auto& submission : batch.rules) {
    const Rule& rule = submission.rule;
    nlohmann::json payload{{"feature_index", rule.feature_index},
                           {"comparator", to_string(rule.comparator)},
                           {"threshold", rule.threshold},
                           {"label", rule.label},
                           {"weight", config_.rule_weight}};
    std::size_t matched = 0;
    try {
      validate_rule(rule, stream_.d_in, stream_.n_classes);
      if (current_) {
        auto& st = state(stream_.tasks[*current_].id);
        std::vector<UnlabeledSample> candidates;
        for (const auto& s : st.pool) {
          if (!st.labeled.count(s.id)) candidates.push_back(s);
        }
        for (auto& weak : apply_rule(rule, candidates, stream_.d_in, stream_.n_classes, config_.rule_weight)) {
          st.labeled[weak.id] = weak;
          st.fresh.push_back(std::move(weak));
          ++matched;
        }
        st.weak += matched;
        if (matched > 0 && !st.pending_since) st.pending_since = now_;
        payload["task"] = st.task->id;
      } else {
        payload["task"] = nullptr;
      }
    } catch (const InvalidInput& e) {
      payload["rejected"] = e.what();
      payload["task"] = nullptr;
    }
    payload["matched"] = matched;
    log_.append(now_, EventKind::RuleApplied, std::move(payload));
  }
}

std::vector<PathwayOption> Orchestrator::pathway_options(std::size_t batch_size, int epochs) const {
  const ModelShape& shape = model_.shape();
  const auto flops_for = [&](Pathway p) {
    return update_flops(flop_profile(shape, hai::pathway_mask(shape, p)), batch_size, epochs);
  };
  const PathwayOption full{Pathway::Full, flops_for(Pathway::Full)};
  if (!shape.has_shallow_pathway()) return {full};
  const PathwayOption shallow{Pathway::Shallow, flops_for(Pathway::Shallow)};
  switch (config_.pathway_policy) {
    case PathwayPolicy::Full: return {full};
    case PathwayPolicy::Shallow: return {shallow};
    case PathwayPolicy::Adaptive:
      if (current_pressure() >= config_.shallow_pressure) return {full, shallow};
      return {full};
  }
  return {full};
}

bool Orchestrator::affordable_ever(const std::vector<PathwayOption>& options, std::optional<TaskId> task) const {
  std::uint64_t cheapest = std::numeric_limits<std::uint64_t>::max();
  for (const auto& o : options) cheapest = std::min(cheapest, o.flops);
  double min_ci = std::numeric_limits<double>::infinity();
  for (std::size_t i = trace_index(now_); i < config_.trace.size(); ++i) min_ci = std::min(min_ci, config_.trace.ci(i));
  return ledger_.fits(emission_kg(energy_kwh(cheapest, config_.device), min_ci), task);
}

Orchestrator::Execution Orchestrator::schedule_and_commit(Purpose purpose, std::optional<TaskId> task,
                                                          const std::vector<PathwayOption>& options,
                                                          std::int64_t lookahead, std::optional<Slot> deadline) {
  const auto now_index = static_cast<std::int64_t>(trace_index(now_));
  WorkItem item;
  item.id = log_.size();
  item.pathway_options = options;
  item.task = task;
  if (deadline) item.deadline_slot = now_index + std::max<Slot>(*deadline - now_, 0);

  Execution exec;
  exec.decision = schedule(item, config_.trace, now_index, ledger_, config_.device, lookahead);
  const auto name = purpose_name(static_cast<int>(purpose));
  nlohmann::json task_json = task ? nlohmann::json(*task) : nlohmann::json(nullptr);

  if (exec.decision.kind == Decision::Kind::Defer) {
    exec.deferred = true;
    const Slot to = now_ + (exec.decision.slot - now_index);
    exec.decision.slot = to;
    log_.append(now_, EventKind::Deferred,
                {{"purpose", name},
                 {"task", task_json},
                 {"to_slot", to},
                 {"pathway", to_string(exec.decision.pathway)},
                 {"emission_kg", exec.decision.emission_kg}});
    return exec;
  }
  if (exec.decision.kind == Decision::Kind::Skip) {
    std::uint64_t cheapest = std::numeric_limits<std::uint64_t>::max();
    for (const auto& o : options) cheapest = std::min(cheapest, o.flops);
    log_.append(now_, EventKind::UpdateSkipped,
                {{"purpose", name}, {"task", task_json}, {"reason", "carbon_budget"}, {"flops", cheapest}});
    if (purpose != Purpose::Ensemble && !affordable_ever(options, task)) {
      budget_halted_ = true;
      halt("budget_exhausted");
    }
    return exec;
  }

  CarbonEvent event{exec.decision.energy_kwh, exec.decision.ci, std::string(name), now_, task};
  auto committed = ledger_.try_commit(event);
  if (std::holds_alternative<BudgetExceeded>(committed)) {
    log_.append(now_, EventKind::UpdateSkipped,
                {{"purpose", name}, {"task", task_json}, {"reason", "carbon_budget"}, {"flops", exec.decision.flops}});
    return exec;
  }
  exec.committed = true;
  return exec;
}

void Orchestrator::commit_model(ModelState next) { model_ = std::move(next); }

double Orchestrator::seen_mean_accuracy() const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& t : stream_.tasks) {
    const auto outcome = tasks_.at(t.id)->outcome;
    if (outcome == TaskOutcome::Pending || outcome == TaskOutcome::Unattempted) continue;
    total += evaluate(model_, t.eval).accuracy;
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

void Orchestrator::emit_tradeoff() {
  std::uint64_t labels = 0;
  for (const auto& [id, st] : tasks_) labels += st->spent;
  const TradeoffPoint point{ledger_.cumulative_kg(), seen_mean_accuracy(), labels, now_, model_.version()};
  curve_.push_back(point);
  accuracy_history_.push_back({now_, point.model_version, point.mean_accuracy});
  log_.append(now_, EventKind::TradeoffPoint,
              {{"cumulative_kg", point.cumulative_kg},
               {"mean_accuracy", point.mean_accuracy},
               {"labels_spent", point.labels_spent},
               {"timestamp", point.timestamp},
               {"model_version", point.model_version}});
}

void Orchestrator::try_update() {
  const Task& t = stream_.tasks[*current_];
  auto& st = state(t.id);
  if (st.fresh.empty()) return;
  if (st.deferred_to && now_ < *st.deferred_to) return;

  Batch current{st.fresh, t.id};
  const double mix = config_.rehearsal_mix;
  const auto n_replay =
      static_cast<std::size_t>(std::llround(static_cast<double>(current.size()) * mix / (1.0 - mix)));
  const std::size_t size = current.size() + n_replay;
  const auto rehearsal = rehearsal_batch(buffer_, size, static_cast<double>(n_replay) / static_cast<double>(size),
                                         current, derive_seed(config_.seed, {kRehearsalTag, t.id, model_.version()}));

  const auto options = pathway_options(rehearsal.batch.size(), config_.epochs);
  const Slot deadline = st.pending_since.value_or(now_) + config_.deadline_slack;
  const auto exec = schedule_and_commit(Purpose::Update, t.id, options, config_.lookahead, deadline);
  if (exec.deferred) {
    st.deferred_to = exec.decision.slot;
    return;
  }
  st.deferred_to.reset();
  if (!exec.committed) return;

  UpdateConfig cfg;
  cfg.learning_rate = config_.learning_rate;
  cfg.epochs = config_.epochs;
  cfg.batch_size = config_.batch_size;
  cfg.pathway = exec.decision.pathway;
  auto result = update(model_, rehearsal.batch, cfg);
  const auto& entry = ledger_.entries().back();
  nlohmann::json payload{{"purpose", "update"},
                         {"task", t.id},
                         {"pathway", to_string(exec.decision.pathway)},
                         {"flops", exec.decision.flops},
                         {"energy_kwh", entry.energy_kwh},
                         {"ci", entry.ci},
                         {"emitted_kg", entry.emitted_kg},
                         {"cumulative_kg", entry.cumulative_kg},
                         {"batch_size", rehearsal.batch.size()},
                         {"replayed", rehearsal.replayed},
                         {"fell_back", rehearsal.fell_back}};
  if (result.status != UpdateStatus::Ok) {
    payload["status"] = "non_finite_gradient";
  } else {
    if (result.loss_increase_epochs > 0) {
      spdlog::debug("update at slot {} raised the training loss in {} epoch(s)", now_, result.loss_increase_epochs);
    }
    update_flops_ += result.flops;
    commit_model(std::move(result.model));
    payload["status"] = "ok";
    payload["loss_increase_epochs"] = result.loss_increase_epochs;
  }
  payload["model_version"] = model_.version();
  log_.append(now_, EventKind::UpdateCommitted, std::move(payload));

  for (const auto& s : st.fresh) {
    const auto w = st.retention_weight.find(s.id);
    buffer_.insert(s, t.id, config_.seed, w == st.retention_weight.end() ? 1.0 : w->second);
  }
  st.fresh.clear();
  st.pending_since.reset();
  emit_tradeoff();
  pending_recheck_ = true;
}

void Orchestrator::run_forgetting_check() {
  pending_recheck_ = false;
  if (buffer_.references().empty()) return;
  std::map<TaskId, Batch> eval_sets;
  for (const auto& [id, ref] : buffer_.references()) eval_sets[id] = task(id).eval;

  for (std::size_t attempt = 0;; ++attempt) {
    auto report = check_forgetting(buffer_, model_, eval_sets, config_.budgets.delta);
    last_forgetting_ = report;
    if (report.violations.empty()) return;

    nlohmann::json tasks = nlohmann::json::array();
    for (TaskId id : report.violations) {
      for (const auto& f : report.tasks) {
        if (f.task_id == id) tasks.push_back({{"task", id}, {"delta", f.delta}});
      }
    }
    log_.append(now_, EventKind::ForgettingViolation,
                {{"worst_delta", report.worst_delta},
                 {"margin", report.margin},
                 {"violations", tasks},
                 {"attempt", attempt}});
    if (attempt >= config_.max_corrections || buffer_.empty()) {
      forgetting_infeasible_ = true;
      halt("forgetting_infeasible");
      return;
    }

    const auto rehearsal = rehearsal_batch(buffer_, config_.corrective_batch, 1.0, Batch{{}, 0},
                                           derive_seed(config_.seed, {kCorrectiveTag, model_.version(), attempt}));
    const auto options = pathway_options(rehearsal.batch.size(), config_.epochs);
    const auto exec = schedule_and_commit(Purpose::Corrective, std::nullopt, options, 0, now_);
    if (finished_) return;
    if (!exec.committed) {
      forgetting_infeasible_ = true;
      halt("forgetting_infeasible");
      return;
    }
    UpdateConfig cfg;
    cfg.learning_rate = config_.learning_rate;
    cfg.epochs = config_.epochs;
    cfg.batch_size = config_.batch_size;
    cfg.pathway = exec.decision.pathway;
    auto result = update(model_, rehearsal.batch, cfg);
    const auto& entry = ledger_.entries().back();
    nlohmann::json payload{{"purpose", "corrective"},
                           {"task", nullptr},
                           {"pathway", to_string(exec.decision.pathway)},
                           {"flops", exec.decision.flops},
                           {"energy_kwh", entry.energy_kwh},
                           {"ci", entry.ci},
                           {"emitted_kg", entry.emitted_kg},
                           {"cumulative_kg", entry.cumulative_kg},
                           {"batch_size", rehearsal.batch.size()},
                           {"attempt", attempt}};
    if (result.status == UpdateStatus::Ok) {
      update_flops_ += result.flops;
      commit_model(std::move(result.model));
      payload["status"] = "ok";
    } else {
      payload["status"] = "non_finite_gradient";
    }
    payload["model_version"] = model_.version();
    log_.append(now_, EventKind::CorrectiveUpdate, std::move(payload));
    emit_tradeoff();
  }
}

void Orchestrator::acquire() {
  const Task& t = stream_.tasks[*current_];
  auto& st = state(t.id);
  if (st.open > 0 || !st.fresh.empty()) return;
  const std::uint32_t b = config_.budgets.labels_per_task;
  if (st.spent + st.open >= b || st.pool.empty()) return;

  const ThrottleContext context{channel_->human_available(now_), t.urgency, current_pressure()};
  const QueryBudget budget = QueryBudget(b, st.spent + st.open).with_throttle(throttle_factor(context, config_.throttle));
  last_throttle_ = budget.throttle_factor();
  const std::size_t count = std::min(selection_size(budget, st.pool.size()), config_.queries_per_round);
  if (count == 0) return;

  std::vector<ModelState> members;
  bool random = config_.strategy == SelectionStrategy::Random || model_.version() == 0;
  if (!random) {
    Batch train{{}, t.id};
    for (const auto& [id, s] : st.labeled) train.samples.push_back(s);
    const auto full_mask = hai::pathway_mask(model_.shape(), Pathway::Full);
    const std::uint64_t per_member =
        train.empty() ? 0 : update_flops(flop_profile(model_.shape(), full_mask), train.size(), config_.ensemble_epochs);
    const std::uint64_t total = per_member * config_.ensemble_k;
    bool fitted = total == 0;
    if (total > 0) {
      const auto exec = schedule_and_commit(Purpose::Ensemble, t.id, {{Pathway::Full, total}}, 0, now_);
      if (exec.committed) {
        fitted = true;
        const auto& entry = ledger_.entries().back();
        log_.append(now_, EventKind::UpdateCommitted,
                    {{"purpose", "ensemble"},
                     {"task", t.id},
                     {"pathway", "full"},
                     {"flops", total},
                     {"energy_kwh", entry.energy_kwh},
                     {"ci", entry.ci},
                     {"emitted_kg", entry.emitted_kg},
                     {"cumulative_kg", entry.cumulative_kg},
                     {"members", config_.ensemble_k},
                     {"model_version", model_.version()}});
        ensemble_flops_ += total;
      }
    }
    if (fitted) {
      for (std::size_t k = 0; k < config_.ensemble_k; ++k) {
        std::mt19937_64 rng(derive_seed(config_.seed, {kEnsembleTag, t.id, st.round, k}));
        std::uniform_real_distribution<double> jitter(-config_.ensemble_jitter, config_.ensemble_jitter);
        std::vector<double> w(model_.weights().begin(), model_.weights().end());
        for (auto& v : w) v += jitter(rng);
        auto member = ModelState::from_parts(model_.shape(), std::move(w), full_mask, model_.version());
        if (!train.empty()) {
          Batch fit{{}, t.id};
          if (config_.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
            for (std::size_t i = 0; i < train.size(); ++i) fit.samples.push_back(train.samples[pick(rng)]);
          } else {
            fit = train;
          }
          UpdateConfig cfg;
          cfg.learning_rate = config_.learning_rate;
          cfg.epochs = config_.ensemble_epochs;
          cfg.batch_size = config_.batch_size;
          cfg.pathway = Pathway::Full;
          auto fitted_member = update(member, fit, cfg);
          if (fitted_member.status == UpdateStatus::Ok) member = std::move(fitted_member.model);
        }
        members.push_back(std::move(member));
      }
    } else {
      random = true;
    }
  }

  std::vector<SampleId> chosen;
  std::map<SampleId, AcquisitionScore> scores;
  if (random) {
    std::mt19937_64 rng(derive_seed(config_.seed, {kRandomTag, t.id, st.round}));
    chosen = select_random(st.pool, count, rng);
    const Ensemble single({model_});
    for (const auto& s : st.pool) {
      if (std::binary_search(chosen.begin(), chosen.end(), s.id)) scores[s.id] = utility(single, s.features, 0.0, s.id);
    }
  } else {
    const Ensemble ensemble(std::move(members));
    const double beta = ensemble.size() >= 2 ? config_.budgets.beta : 0.0;
    const auto all = score_pool(st.pool, ensemble, beta);
    chosen = select_top(all, count,
                        config_.strategy == SelectionStrategy::InfoGain ? SelectionCriterion::InfoGain
                                                                        : SelectionCriterion::Utility);
    for (const auto& s : all) scores[s.sample_id] = s;
  }

  for (SampleId id : chosen) {
    const auto it = std::lower_bound(st.pool.begin(), st.pool.end(), id,
                                     [](const UnlabeledSample& s, SampleId v) { return s.id < v; });
    UnlabeledSample sample = std::move(*it);
    st.pool.erase(it);
    QueryRequest q;
    q.query_id = next_query_id_++;
    q.task = t.id;
    q.sample_id = id;
    q.features = sample.features;
    q.score = scores.at(id);
    const auto proba = predict_proba(model_, sample.features);
    q.predicted = predict(model_, sample.features);
    q.confidence = proba[q.predicted];
    q.explanation = explain(model_, sample.features, q.predicted);
    q.issued_slot = now_;
    st.retention_weight[id] = std::max(q.score.utility, 1e-6);
    open_queries_[q.query_id] = OpenQuery{t.id, std::move(sample)};
    ++st.open;
    log_.append(now_, EventKind::QueryIssued,
                {{"query_id", q.query_id},
                 {"task", t.id},
                 {"sample_id", id},
                 {"strategy", random ? "random" : to_string(config_.strategy)},
                 {"utility", q.score.utility},
                 {"entropy", q.score.entropy_term},
                 {"variance", q.score.variance_term},
                 {"info_gain", q.score.info_gain},
                 {"predicted", q.predicted},
                 {"confidence", q.confidence}});
    channel_->post(q);
  }
  ++st.round;
}

void Orchestrator::halt(const std::string& reason) {
  finished_ = true;
  halt_reason_ = reason;
  nlohmann::json unattempted = nlohmann::json::array();
  nlohmann::json interrupted = nullptr;
  for (std::size_t i = 0; i < stream_.tasks.size(); ++i) {
    auto& st = state(stream_.tasks[i].id);
    if (st.outcome == TaskOutcome::Active) {
      st.outcome = TaskOutcome::Interrupted;
      interrupted = stream_.tasks[i].id;
    } else if (st.outcome == TaskOutcome::Pending) {
      st.outcome = TaskOutcome::Unattempted;
      unattempted.push_back(stream_.tasks[i].id);
    }
  }
  for (const auto& [id, q] : open_queries_) channel_->cancel(id);
  open_queries_.clear();
  current_.reset();
  log_.append(now_, EventKind::Halt,
              {{"reason", reason},
               {"unattempted", unattempted},
               {"interrupted", interrupted},
               {"cumulative_kg", ledger_.cumulative_kg()},
               {"model_version", model_.version()}});
}

StatusSnapshot Orchestrator::snapshot() const {
  StatusSnapshot s;
  s.slot = now_;
  s.model_version = model_.version();
  s.carbon_used_kg = ledger_.cumulative_kg();
  s.epsilon_kg = ledger_.budget_epsilon_kg();
  for (const auto& t : stream_.tasks) {
    const auto& st = *tasks_.at(t.id);
    if (st.outcome == TaskOutcome::Pending) continue;
    s.labels.push_back({t.id, st.spent, config_.budgets.labels_per_task, st.weak});
  }
  s.accuracy_history = accuracy_history_;
  if (last_forgetting_) {
    s.forgetting.worst_delta = last_forgetting_->worst_delta;
    s.forgetting.violations = last_forgetting_->violations;
    for (const auto& f : last_forgetting_->tasks) s.forgetting.deltas[f.task_id] = f.delta;
  }
  s.forgetting.margin = config_.budgets.delta;
  s.throttle_factor = last_throttle_;
  if (current_) {
    const auto& st = *tasks_.at(stream_.tasks[*current_].id);
    s.current_task = st.task->id;
    s.pool = st.pool;
  }
  s.d_in = stream_.d_in;
  s.n_classes = stream_.n_classes;
  s.tradeoff = curve_;
  s.finished = finished_;
  if (finished_) s.halt_reason = halt_reason_;
  return s;
}

void Orchestrator::publish() {
  if (channel_->wants_status()) channel_->publish(snapshot());
}

RunResult Orchestrator::take_result() {
  RunResult r;
  for (const auto& t : stream_.tasks) {
    const auto& st = *tasks_.at(t.id);
    r.labels_spent[t.id] = st.spent;
    r.outcomes[t.id] = st.outcome;
    if (st.outcome != TaskOutcome::Pending && st.outcome != TaskOutcome::Unattempted) {
      auto& labeled = r.labeled[t.id];
      for (const auto& [id, s] : st.labeled) labeled.push_back(s);
    }
  }
  std::vector<const Task*> seen;
  double total = 0.0;
  for (const auto& t : stream_.tasks) {
    const auto outcome = r.outcomes[t.id];
    if (outcome == TaskOutcome::Completed || outcome == TaskOutcome::Interrupted || outcome == TaskOutcome::Active) {
      seen.push_back(&t);
      const double acc = evaluate(model_, t.eval).accuracy;
      r.final_accuracy[t.id] = acc;
      total += acc;
    }
  }
  r.mean_accuracy = seen.empty() ? 0.0 : total / static_cast<double>(seen.size());
  if (!seen.empty()) {
    ConstraintStatus c;
    c.carbon_ok = ledger_.cumulative_kg() <= ledger_.budget_epsilon_kg();
    for (const auto& [id, n] : r.labels_spent) c.label_ok = c.label_ok && n <= config_.budgets.labels_per_task;
    c.forgetting_ok = !last_forgetting_ || last_forgetting_->violations.empty();
    r.objective = objective(model_, seen, config_.budgets.lambda, c);
  }
  r.model = model_;
  r.ledger = ledger_;
  r.curve = curve_;
  r.log = log_;
  r.buffer = buffer_;
  r.update_flops = update_flops_;
  r.ensemble_flops = ensemble_flops_;
  r.last_forgetting = last_forgetting_;
  r.halt_reason = halt_reason_;
  r.budget_halted = budget_halted_;
  r.forgetting_infeasible = forgetting_infeasible_;
  return r;
}

RunResult run(const TaskStream& stream, const RunConfig& config, LabelChannel* channel) {
  Orchestrator orchestrator(stream, config, channel);
  while (orchestrator.step()) {
  }
  return orchestrator.take_result();
}

}  // namespace hai
