#pragma once

// The lifelong loop: acquisition, labeling, carbon-gated updates with rehearsal, forgetting
// checks with corrective updates, and the tradeoff curve, advanced one logical slot at a time.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hai/acquisition.hpp"
#include "hai/carbon.hpp"
#include "hai/event_log.hpp"
#include "hai/feedback.hpp"
#include "hai/learner.hpp"
#include "hai/memory.hpp"
#include "hai/report.hpp"
#include "hai/stream.hpp"

namespace hai {

struct BudgetSet {
  double epsilon_kg = 1.0;
  std::uint32_t labels_per_task = 50;
  double delta = 0.1;
  double lambda = 0.0;
  double beta = 1.0;
  /// Optional per-task carbon sub-budget, enforced alongside the global epsilon.
  std::optional<double> task_epsilon_kg;
};

enum class SelectionStrategy : std::uint8_t { Utility, InfoGain, Random };

/// Full: only the full pathway is offered to the scheduler. Shallow: only shallow, when the
/// architecture has one. Adaptive: shallow is offered as well once carbon pressure reaches
/// `shallow_pressure`.
enum class PathwayPolicy : std::uint8_t { Full, Shallow, Adaptive };

enum class InitMode : std::uint8_t { Zeros, Seeded };

std::string_view to_string(SelectionStrategy s);
std::string_view to_string(PathwayPolicy p);

struct RunConfig {
  BudgetSet budgets;

  Architecture architecture = Architecture::Logistic;
  std::size_t hidden = 8;
  std::optional<InitMode> init;  // unset: zeros for logistic, seeded for MLP
  double learning_rate = 0.5;
  int epochs = 10;
  std::size_t batch_size = 0;

  SelectionStrategy strategy = SelectionStrategy::Utility;
  std::size_t ensemble_k = 5;
  bool bootstrap = false;
  int ensemble_epochs = 5;
  double ensemble_jitter = 0.1;  // members start from the model plus U[-jitter, jitter] noise
  std::size_t queries_per_round = 5;
  Slot query_ttl = 24;
  ThrottleCoefficients throttle;
  double rule_weight = 0.5;

  DeviceProfile device;
  CarbonIntensityTrace trace = CarbonIntensityTrace::constant(1, 0.4);
  std::int64_t lookahead = 4;
  std::int64_t deadline_slack = 4;  // a pending update must run within this many slots
  PathwayPolicy pathway_policy = PathwayPolicy::Adaptive;
  double shallow_pressure = 0.5;
  std::int64_t pressure_window = 12;

  std::size_t memory_capacity = 200;
  double rehearsal_mix = 0.5;  // fraction of every update batch drawn from the buffer, in [0, 1)
  RetentionPolicy retention = RetentionPolicy::Uniform;
  std::size_t corrective_batch = 32;
  std::size_t max_corrections = 3;

  Slot eval_cadence = 1;
  Slot max_task_slots = 200;
  std::uint64_t seed = 0;

  /// Throws InvalidInput naming the first offending field.
  void validate() const;
};

struct ConstraintStatus {
  bool carbon_ok = true;
  bool label_ok = true;
  bool forgetting_ok = true;
};

struct ObjectiveReport {
  double mean_task_loss = 0.0;
  double regularizer_value = 0.0;
  double lambda = 0.0;
  double penalized_objective = 0.0;
  ConstraintStatus constraints;
};

/// Mean eval loss over `seen` tasks plus lambda * R(theta). Throws InvalidInput when `seen` is
/// empty. Constraint flags are taken as given.
ObjectiveReport objective(const ModelState& model, const std::vector<const Task*>& seen, double lambda,
                          ConstraintStatus constraints = {});

enum class TaskOutcome : std::uint8_t { Pending, Active, Completed, Interrupted, Unattempted };
std::string_view to_string(TaskOutcome o);

struct RunResult {
  ModelState model = ModelState::zeros({Architecture::Logistic, 1, 2, 0});
  CarbonLedger ledger{1.0};
  std::vector<TradeoffPoint> curve;
  EventLog log;
  ReplayBuffer buffer{1};
  std::map<TaskId, std::uint32_t> labels_spent;
  std::map<TaskId, std::vector<LabeledSample>> labeled;  // everything each task trained on, by id
  std::map<TaskId, TaskOutcome> outcomes;
  std::map<TaskId, double> final_accuracy;
  double mean_accuracy = 0.0;  // over attempted tasks
  std::uint64_t update_flops = 0;    // model and corrective updates
  std::uint64_t ensemble_flops = 0;  // acquisition ensemble fitting
  std::optional<ForgettingReport> last_forgetting;
  std::string halt_reason;
  bool budget_halted = false;
  bool forgetting_infeasible = false;
  std::optional<ObjectiveReport> objective;
};

/// Answers every query one slot after it is posted, from the task's ground truth, flipping to a
/// uniformly drawn wrong class with the task's noise rate.
class SimulatedAnnotator final : public LabelChannel {
 public:
  SimulatedAnnotator(const TaskStream& stream, std::uint64_t seed, bool available = true);

  void post(const QueryRequest& request) override;
  ChannelBatch collect(Slot now) override;
  [[nodiscard]] bool human_available(Slot) const override { return available_; }
  [[nodiscard]] Provenance provenance() const override { return Provenance::Oracle; }

  void queue_rule(const Rule& rule, Slot at);

 private:
  struct Truth {
    ClassLabel label = 0;
    double noise = 0.0;
  };
  std::map<SampleId, Truth> truth_;
  std::size_t n_classes_ = 2;
  std::uint64_t seed_;
  bool available_;
  std::vector<QueryRequest> posted_;
  std::vector<RuleSubmission> rules_;
};

class Orchestrator {
 public:
  /// Validates both inputs before any side effect. `channel` must outlive the orchestrator;
  /// when null a SimulatedAnnotator seeded from the config is used.
  Orchestrator(TaskStream stream, RunConfig config, LabelChannel* channel = nullptr);
  ~Orchestrator();
  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  /// Advances one slot. Returns false once the run has finished.
  bool step();
  [[nodiscard]] bool finished() const { return finished_; }
  [[nodiscard]] Slot now() const { return now_; }

  [[nodiscard]] StatusSnapshot snapshot() const;
  [[nodiscard]] const EventLog& log() const { return log_; }
  [[nodiscard]] const ModelState& model() const { return model_; }
  [[nodiscard]] const CarbonLedger& ledger() const { return ledger_; }
  [[nodiscard]] const ReplayBuffer& buffer() const { return buffer_; }

  /// Moves the run's artifacts out; call once the run has finished.
  RunResult take_result();

 private:
  struct TaskState;
  struct OpenQuery {
    TaskId task = 0;
    UnlabeledSample sample;
  };
  enum class Purpose : std::uint8_t { Update, Corrective, Ensemble };
  struct Execution {
    bool committed = false;
    bool deferred = false;
    Decision decision;
  };

  TaskState& state(TaskId id);
  [[nodiscard]] const Task& task(TaskId id) const;
  void start_task(std::size_t index);
  void complete_current_task();
  void integrate(const ChannelBatch& batch);
  void try_update();
  void run_forgetting_check();
  void acquire();
  Execution schedule_and_commit(Purpose purpose, std::optional<TaskId> task, const std::vector<PathwayOption>& options,
                                std::int64_t lookahead, std::optional<Slot> deadline);
  [[nodiscard]] std::vector<PathwayOption> pathway_options(std::size_t batch_size, int epochs) const;
  [[nodiscard]] bool affordable_ever(const std::vector<PathwayOption>& options, std::optional<TaskId> task) const;
  void commit_model(ModelState next);
  void emit_tradeoff();
  [[nodiscard]] double seen_mean_accuracy() const;
  [[nodiscard]] std::size_t trace_index(Slot slot) const;
  [[nodiscard]] double current_pressure() const;
  void halt(const std::string& reason);
  void publish();

  TaskStream stream_;
  RunConfig config_;
  std::unique_ptr<SimulatedAnnotator> owned_channel_;
  LabelChannel* channel_;

  ModelState model_;
  CarbonLedger ledger_;
  ReplayBuffer buffer_;
  EventLog log_;
  std::vector<TradeoffPoint> curve_;
  std::vector<AccuracySample> accuracy_history_;
  std::map<TaskId, std::unique_ptr<TaskState>> tasks_;
  std::map<QueryId, OpenQuery> open_queries_;
  QueryId next_query_id_ = 1;
  std::size_t next_task_ = 0;
  std::optional<std::size_t> current_;
  std::optional<ForgettingReport> last_forgetting_;
  bool pending_recheck_ = false;
  double last_throttle_ = 1.0;
  std::uint64_t update_flops_ = 0;
  std::uint64_t ensemble_flops_ = 0;
  Slot now_ = 0;
  bool finished_ = false;
  bool budget_halted_ = false;
  bool forgetting_infeasible_ = false;
  std::string halt_reason_;
};

/// Runs a whole stream with the simulated annotator (or `channel`) and returns the artifacts.
RunResult run(const TaskStream& stream, const RunConfig& config, LabelChannel* channel = nullptr);

}  // namespace hai
