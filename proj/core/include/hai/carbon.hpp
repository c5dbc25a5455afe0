#pragma once

// Energy and emission accounting (C = E x CI = (P x T) x CI), the append-only carbon ledger,
// the carbon-intensity trace, and the carbon-aware scheduler.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hai/learner.hpp"
#include "hai/types.hpp"

namespace hai {

inline constexpr double kKgPerPound = 0.45359237;

struct DeviceProfile {
  double power_draw_kw = 0.3;
  double flops_per_second = 1e9;
  double idle_overhead_factor = 1.0;  // folds cooling / PUE into one multiplier

  /// Throws InvalidInput unless all fields are positive and the overhead is >= 1.
  void validate() const;
  [[nodiscard]] double energy_per_flop_kwh() const;
};

double energy_kwh(std::uint64_t flops, const DeviceProfile& device);
double emission_kg(double energy_kwh, double ci_kg_per_kwh);
double pounds_to_kg(double pounds);

/// Extension point for measured energy. Only the FLOP-model implementation ships.
class EnergyMeter {
 public:
  virtual ~EnergyMeter() = default;
  [[nodiscard]] virtual double energy_kwh(std::uint64_t flops) const = 0;
};

class ModeledEnergyMeter final : public EnergyMeter {
 public:
  explicit ModeledEnergyMeter(DeviceProfile device);
  [[nodiscard]] double energy_kwh(std::uint64_t flops) const override;

 private:
  DeviceProfile device_;
};

struct TraceSlot {
  std::int64_t start_unix = 0;  // seconds, UTC
  double ci = 0.0;              // kg CO2e per kWh
};

class CarbonIntensityTrace {
 public:
  static constexpr std::int64_t kDefaultSlotSeconds = 3600;

  CarbonIntensityTrace() = default;
  /// Throws InvalidInput unless slots are non-empty, strictly increasing with uniform spacing,
  /// and every ci is finite and >= 0.
  CarbonIntensityTrace(std::vector<TraceSlot> slots, std::int64_t slot_seconds);

  /// Slots starting at `start_unix`, spaced `slot_seconds` apart.
  static CarbonIntensityTrace from_values(const std::vector<double>& ci, std::int64_t start_unix = 0,
                                          std::int64_t slot_seconds = kDefaultSlotSeconds);
  static CarbonIntensityTrace constant(std::size_t n, double ci);

  [[nodiscard]] std::size_t size() const { return slots_.size(); }
  [[nodiscard]] bool empty() const { return slots_.empty(); }
  [[nodiscard]] double ci(std::size_t slot) const;
  [[nodiscard]] const std::vector<TraceSlot>& slots() const { return slots_; }
  [[nodiscard]] std::int64_t slot_seconds() const { return slot_seconds_; }

 private:
  std::vector<TraceSlot> slots_;
  std::int64_t slot_seconds_ = kDefaultSlotSeconds;
};

/// Strict "YYYY-MM-DDTHH:MM:SSZ". Throws InvalidInput otherwise.
std::int64_t parse_iso8601_utc(std::string_view text);
std::string format_iso8601_utc(std::int64_t unix_seconds);

/// CSV with header `slot_start_iso8601,ci_kg_per_kwh`. Throws ParseError with the line number.
CarbonIntensityTrace read_trace_csv(std::istream& in, const std::string& source = "trace");
CarbonIntensityTrace load_trace_csv(const std::string& path);
void write_trace_csv(std::ostream& out, const CarbonIntensityTrace& trace);

struct CarbonEvent {
  double energy_kwh = 0.0;
  double ci = 0.0;
  std::string tag;
  std::int64_t timestamp = 0;  // logical slot in simulation
  std::optional<TaskId> task;
};

struct LedgerEntry {
  std::uint64_t event_id = 0;
  std::int64_t timestamp = 0;
  std::string tag;
  double energy_kwh = 0.0;
  double ci = 0.0;
  double emitted_kg = 0.0;
  double cumulative_kg = 0.0;
  std::optional<TaskId> task;
};

struct BudgetExceeded {
  double overshoot_kg = 0.0;
  std::optional<TaskId> task;  // set when a per-task sub-budget was the binding constraint
};

/// Append-only emission record enforcing cumulative_kg <= epsilon after every entry, plus
/// optional per-task sub-budgets.
class CarbonLedger {
 public:
  explicit CarbonLedger(double budget_epsilon_kg);

  void set_task_budget(TaskId task, double epsilon_kg);

  /// Whether appending `emitted_kg` (optionally attributed to `task`) keeps every budget.
  [[nodiscard]] bool fits(double emitted_kg, std::optional<TaskId> task = std::nullopt) const;
  [[nodiscard]] std::optional<BudgetExceeded> check(double emitted_kg,
                                                    std::optional<TaskId> task = std::nullopt) const;

  /// All-or-nothing append. On failure the ledger is untouched.
  [[nodiscard]] std::variant<LedgerEntry, BudgetExceeded> try_commit(const CarbonEvent& event);

  [[nodiscard]] double cumulative_kg() const { return cumulative_kg_; }
  [[nodiscard]] double budget_epsilon_kg() const { return epsilon_kg_; }
  [[nodiscard]] double headroom_kg() const { return epsilon_kg_ - cumulative_kg_; }
  [[nodiscard]] double task_cumulative_kg(TaskId task) const;
  [[nodiscard]] const std::vector<LedgerEntry>& entries() const { return entries_; }

 private:
  struct SubBudget {
    double epsilon_kg = 0.0;
    double cumulative_kg = 0.0;
  };

  std::vector<LedgerEntry> entries_;
  double cumulative_kg_ = 0.0;
  double epsilon_kg_;
  std::map<TaskId, SubBudget> task_budgets_;
};

/// Functional form: returns the extended ledger or the would-be overshoot.
std::variant<CarbonLedger, BudgetExceeded> commit(const CarbonLedger& ledger, const CarbonEvent& event);

/// CSV `event_id,timestamp,tag,energy_kwh,ci,emitted_kg,cumulative_kg`.
void write_ledger_csv(std::ostream& out, const CarbonLedger& ledger);
std::vector<LedgerEntry> read_ledger_csv(std::istream& in, const std::string& source = "ledger");

struct PathwayOption {
  Pathway pathway = Pathway::Full;
  std::uint64_t flops = 0;
};

struct WorkItem {
  std::uint64_t id = 0;
  std::optional<std::int64_t> deadline_slot;
  std::vector<PathwayOption> pathway_options;
  std::optional<TaskId> task;

  /// Throws InvalidInput on no options, duplicate pathways, or shallow flops >= full flops.
  void validate() const;
};

struct Decision {
  enum class Kind : std::uint8_t { ProceedFull, ProceedShallow, Defer, Skip };

  Kind kind = Kind::Skip;
  std::int64_t slot = 0;
  Pathway pathway = Pathway::Full;
  std::uint64_t flops = 0;
  double energy_kwh = 0.0;
  double ci = 0.0;
  double emission_kg = 0.0;
};

std::string_view to_string(Decision::Kind kind);

/// Greedy minimal-emission placement of one work item:
/// candidates are slots now..min(now + lookahead, deadline, last slot) crossed with the item's
/// pathways; the cheapest pair that fits the ledger wins, full before shallow and earlier
/// before later on equal emission. Skip when nothing fits.
Decision schedule(const WorkItem& item, const CarbonIntensityTrace& trace, std::int64_t now_slot,
                  const CarbonLedger& ledger, const DeviceProfile& device, std::int64_t lookahead);

/// Rank of ci(now) among the slots within `window` on either side of now (clipped to the trace),
/// normalized to [0, 1]. Ties rank lowest, so 0 means now is (one of) the cleanest.
double carbon_pressure(const CarbonIntensityTrace& trace, std::int64_t now_slot, std::int64_t window);

}  // namespace hai
