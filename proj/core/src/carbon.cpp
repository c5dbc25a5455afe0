#include "hai/carbon.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "csv.hpp"
#include "hai/error.hpp"

namespace hai {

void DeviceProfile::validate() const {
  if (!(power_draw_kw > 0.0) || !std::isfinite(power_draw_kw)) throw InvalidInput("power_draw_kw must be > 0");
  if (!(flops_per_second > 0.0) || !std::isfinite(flops_per_second)) {
    throw InvalidInput("flops_per_second must be > 0");
  }
  if (!(idle_overhead_factor >= 1.0) || !std::isfinite(idle_overhead_factor)) {
    throw InvalidInput("idle_overhead_factor must be >= 1");
  }
}

double DeviceProfile::energy_per_flop_kwh() const {
  return power_draw_kw * idle_overhead_factor / (flops_per_second * 3600.0);
}

double energy_kwh(std::uint64_t flops, const DeviceProfile& device) {
  device.validate();
  if (flops == 0) return 0.0;
  // runtime_h * P * overhead, with runtime_h = flops / (flops_per_second * 3600)
  const double hours = static_cast<double>(flops) / (device.flops_per_second * 3600.0);
  return device.power_draw_kw * hours * device.idle_overhead_factor;
}

double emission_kg(double energy, double ci) {
  if (!(energy >= 0.0) || !(ci >= 0.0)) throw InvalidInput("energy and carbon intensity must be >= 0");
  return energy * ci;
}

double pounds_to_kg(double pounds) { return pounds * kKgPerPound; }

ModeledEnergyMeter::ModeledEnergyMeter(DeviceProfile device) : device_(device) { device_.validate(); }

double ModeledEnergyMeter::energy_kwh(std::uint64_t flops) const { return hai::energy_kwh(flops, device_); }

CarbonIntensityTrace::CarbonIntensityTrace(std::vector<TraceSlot> slots, std::int64_t slot_seconds)
    : slots_(std::move(slots)), slot_seconds_(slot_seconds) {
  if (slots_.empty()) throw InvalidInput("carbon-intensity trace is empty");
  if (slot_seconds_ <= 0) throw InvalidInput("slot duration must be positive");
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (!(slots_[i].ci >= 0.0) || !std::isfinite(slots_[i].ci)) {
      throw InvalidInput("slot " + std::to_string(i) + " has invalid carbon intensity");
    }
    if (i > 0 && slots_[i].start_unix - slots_[i - 1].start_unix != slot_seconds_) {
      throw InvalidInput("slot " + std::to_string(i) + " breaks the uniform " + std::to_string(slot_seconds_) +
                         " s spacing");
    }
  }
}

CarbonIntensityTrace CarbonIntensityTrace::from_values(const std::vector<double>& ci, std::int64_t start_unix,
                                                       std::int64_t slot_seconds) {
  std::vector<TraceSlot> slots;
  slots.reserve(ci.size());
  for (std::size_t i = 0; i < ci.size(); ++i) {
    slots.push_back({start_unix + static_cast<std::int64_t>(i) * slot_seconds, ci[i]});
  }
  return CarbonIntensityTrace(std::move(slots), slot_seconds);
}

CarbonIntensityTrace CarbonIntensityTrace::constant(std::size_t n, double ci) {
  return from_values(std::vector<double>(n, ci));
}

double CarbonIntensityTrace::ci(std::size_t slot) const {
  if (slot >= slots_.size()) throw InvalidInput("slot " + std::to_string(slot) + " outside trace");
  return slots_[slot].ci;
}

std::int64_t parse_iso8601_utc(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SSZ
  auto fail = [&] { throw InvalidInput("not a strict ISO-8601 UTC timestamp: '" + std::string(text) + "'"); };
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':' || text[19] != 'Z') {
    fail();
  }
  auto field = [&](std::size_t pos, std::size_t len) {
    const auto part = text.substr(pos, len);
    if (!std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; })) fail();
    return *detail::parse_int<int>(part);
  };
  const int y = field(0, 4), mo = field(5, 2), d = field(8, 2);
  const int h = field(11, 2), mi = field(14, 2), s = field(17, 2);
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) fail();
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_iso8601_utc(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const auto days = static_cast<int>(std::floor(static_cast<double>(unix_seconds) / 86400.0));
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  std::int64_t rem = unix_seconds - static_cast<std::int64_t>(days) * 86400;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

CarbonIntensityTrace read_trace_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  ++line_no;
  if (detail::trim(line) != "slot_start_iso8601,ci_kg_per_kwh") {
    throw ParseError(source, line_no, "expected header 'slot_start_iso8601,ci_kg_per_kwh'");
  }
  std::vector<TraceSlot> slots;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split(detail::trim(line));
    if (cols.size() != 2) throw ParseError(source, line_no, "expected 2 columns");
    TraceSlot slot;
    try {
      slot.start_unix = parse_iso8601_utc(detail::trim(cols[0]));
    } catch (const InvalidInput& e) {
      throw ParseError(source, line_no, e.what());
    }
    const auto ci = detail::parse_double(cols[1]);
    if (!ci || !(*ci >= 0.0) || !std::isfinite(*ci)) {
      throw ParseError(source, line_no, "carbon intensity must be a finite number >= 0");
    }
    slot.ci = *ci;
    if (!slots.empty() && slot.start_unix <= slots.back().start_unix) {
      throw ParseError(source, line_no, "slot starts must be strictly increasing");
    }
    if (slots.size() >= 2 &&
        slot.start_unix - slots.back().start_unix != slots[1].start_unix - slots[0].start_unix) {
      throw ParseError(source, line_no, "slot spacing is not uniform");
    }
    slots.push_back(slot);
  }
  if (slots.empty()) throw ParseError(source, line_no, "trace has no slots");
  const std::int64_t spacing =
      slots.size() >= 2 ? slots[1].start_unix - slots[0].start_unix : CarbonIntensityTrace::kDefaultSlotSeconds;
  return CarbonIntensityTrace(std::move(slots), spacing);
}

CarbonIntensityTrace load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open trace file");
  return read_trace_csv(in, path);
}

void write_trace_csv(std::ostream& out, const CarbonIntensityTrace& trace) {
  out << "slot_start_iso8601,ci_kg_per_kwh\n";
  for (const auto& s : trace.slots()) out << format_iso8601_utc(s.start_unix) << ',' << detail::format_double(s.ci) << '\n';
}

CarbonLedger::CarbonLedger(double budget_epsilon_kg) : epsilon_kg_(budget_epsilon_kg) {
  if (!(epsilon_kg_ > 0.0)) throw InvalidInput("carbon budget epsilon must be > 0");
}

void CarbonLedger::set_task_budget(TaskId task, double epsilon_kg) {
  if (!(epsilon_kg > 0.0)) throw InvalidInput("task carbon budget must be > 0");
  auto& sub = task_budgets_[task];
  if (sub.cumulative_kg > epsilon_kg) throw InvalidInput("task already exceeds the requested budget");
  sub.epsilon_kg = epsilon_kg;
}

std::optional<BudgetExceeded> CarbonLedger::check(double emitted_kg, std::optional<TaskId> task) const {
  if (!(emitted_kg >= 0.0) || !std::isfinite(emitted_kg)) throw InvalidInput("emission must be finite and >= 0");
  const double next = cumulative_kg_ + emitted_kg;
  if (next > epsilon_kg_) return BudgetExceeded{next - epsilon_kg_, std::nullopt};
  if (task) {
    if (auto it = task_budgets_.find(*task); it != task_budgets_.end() && it->second.epsilon_kg > 0.0) {
      const double task_next = it->second.cumulative_kg + emitted_kg;
      if (task_next > it->second.epsilon_kg) return BudgetExceeded{task_next - it->second.epsilon_kg, task};
    }
  }
  return std::nullopt;
}

bool CarbonLedger::fits(double emitted_kg, std::optional<TaskId> task) const {
  return !check(emitted_kg, task).has_value();
}

std::variant<LedgerEntry, BudgetExceeded> CarbonLedger::try_commit(const CarbonEvent& event) {
  const double emitted = emission_kg(event.energy_kwh, event.ci);
  if (auto over = check(emitted, event.task)) return *over;
  LedgerEntry entry;
  entry.event_id = entries_.size();
  entry.timestamp = event.timestamp;
  entry.tag = event.tag;
  entry.energy_kwh = event.energy_kwh;
  entry.ci = event.ci;
  entry.emitted_kg = emitted;
  entry.task = event.task;
  cumulative_kg_ = cumulative_kg_ + emitted;
  entry.cumulative_kg = cumulative_kg_;
  if (event.task) {
    if (auto it = task_budgets_.find(*event.task); it != task_budgets_.end()) it->second.cumulative_kg += emitted;
  }
  entries_.push_back(entry);
  return entry;
}

double CarbonLedger::task_cumulative_kg(TaskId task) const {
  double total = 0.0;
  for (const auto& e : entries_) {
    if (e.task == task) total += e.emitted_kg;
  }
  return total;
}

std::variant<CarbonLedger, BudgetExceeded> commit(const CarbonLedger& ledger, const CarbonEvent& event) {
  CarbonLedger next = ledger;
  auto outcome = next.try_commit(event);
  if (auto* over = std::get_if<BudgetExceeded>(&outcome)) return *over;
  return next;
}

void write_ledger_csv(std::ostream& out, const CarbonLedger& ledger) {
  using detail::format_double;
  out << "event_id,timestamp,tag,energy_kwh,ci,emitted_kg,cumulative_kg\n";
  for (const auto& e : ledger.entries()) {
    out << e.event_id << ',' << e.timestamp << ',' << e.tag << ',' << format_double(e.energy_kwh) << ','
        << format_double(e.ci) << ',' << format_double(e.emitted_kg) << ',' << format_double(e.cumulative_kg)
        << '\n';
  }
}

std::vector<LedgerEntry> read_ledger_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || detail::trim(line) != "event_id,timestamp,tag,energy_kwh,ci,emitted_kg,cumulative_kg") {
    throw ParseError(source, 1, "bad ledger header");
  }
  std::vector<LedgerEntry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split(detail::trim(line));
    if (cols.size() != 7) throw ParseError(source, line_no, "expected 7 columns");
    LedgerEntry e;
    const auto id = detail::parse_int<std::uint64_t>(cols[0]);
    const auto ts = detail::parse_int<std::int64_t>(cols[1]);
    const auto energy = detail::parse_double(cols[3]);
    const auto ci = detail::parse_double(cols[4]);
    const auto emitted = detail::parse_double(cols[5]);
    const auto cumulative = detail::parse_double(cols[6]);
    if (!id || !ts || !energy || !ci || !emitted || !cumulative) throw ParseError(source, line_no, "bad number");
    e.event_id = *id;
    e.timestamp = *ts;
    e.tag = std::string(cols[2]);
    e.energy_kwh = *energy;
    e.ci = *ci;
    e.emitted_kg = *emitted;
    e.cumulative_kg = *cumulative;
    entries.push_back(std::move(e));
  }
  return entries;
}

void WorkItem::validate() const {
  if (pathway_options.empty()) throw InvalidInput("work item has no pathway options");
  std::optional<std::uint64_t> full, shallow;
  for (const auto& o : pathway_options) {
    auto& slot = o.pathway == Pathway::Full ? full : shallow;
    if (slot) throw InvalidInput("duplicate pathway option");
    slot = o.flops;
  }
  if (full && shallow && !(*shallow < *full)) throw InvalidInput("shallow pathway must cost fewer flops than full");
}

std::string_view to_string(Decision::Kind kind) {
  switch (kind) {
    case Decision::Kind::ProceedFull: return "proceed_full";
    case Decision::Kind::ProceedShallow: return "proceed_shallow";
    case Decision::Kind::Defer: return "defer";
    case Decision::Kind::Skip: return "skip";
  }
  return "unknown";
}

Decision schedule(const WorkItem& item, const CarbonIntensityTrace& trace, std::int64_t now_slot,
                  const CarbonLedger& ledger, const DeviceProfile& device, std::int64_t lookahead) {
  item.validate();
  device.validate();
  if (trace.empty()) throw InvalidInput("malformed trace: no slots");
  if (now_slot < 0 || now_slot >= static_cast<std::int64_t>(trace.size())) {
    throw InvalidInput("now_slot " + std::to_string(now_slot) + " outside trace");
  }
  if (lookahead < 0) throw InvalidInput("lookahead must be >= 0");

  std::int64_t last = std::min<std::int64_t>(now_slot + lookahead, static_cast<std::int64_t>(trace.size()) - 1);
  if (item.deadline_slot) last = std::min(last, std::max(*item.deadline_slot, now_slot));

  // Full first so that, on equal emission, the first-seen full option is kept.
  std::vector<PathwayOption> options = item.pathway_options;
  std::stable_sort(options.begin(), options.end(),
                   [](const PathwayOption& a, const PathwayOption& b) { return a.pathway < b.pathway; });

  std::optional<Decision> best;
  for (std::int64_t slot = now_slot; slot <= last; ++slot) {
    const double ci = trace.ci(static_cast<std::size_t>(slot));
    for (const auto& option : options) {
      const double energy = energy_kwh(option.flops, device);
      const double emitted = emission_kg(energy, ci);
      if (!ledger.fits(emitted, item.task)) continue;
      const bool better = !best || emitted < best->emission_kg ||
                          (emitted == best->emission_kg && option.pathway == Pathway::Full &&
                           best->pathway == Pathway::Shallow);
      if (better) best = Decision{Decision::Kind::Skip, slot, option.pathway, option.flops, energy, ci, emitted};
    }
  }
  if (!best) return Decision{};
  if (best->slot != now_slot) {
    best->kind = Decision::Kind::Defer;
  } else {
    best->kind = best->pathway == Pathway::Full ? Decision::Kind::ProceedFull : Decision::Kind::ProceedShallow;
  }
  return *best;
}

double carbon_pressure(const CarbonIntensityTrace& trace, std::int64_t now_slot, std::int64_t window) {
  if (window < 1) throw InvalidInput("carbon pressure window must be >= 1");
  if (now_slot < 0 || now_slot >= static_cast<std::int64_t>(trace.size())) {
    throw InvalidInput("now_slot outside trace");
  }
  const std::int64_t lo = std::max<std::int64_t>(0, now_slot - window);
  const std::int64_t hi = std::min<std::int64_t>(static_cast<std::int64_t>(trace.size()) - 1, now_slot + window);
  const double now_ci = trace.ci(static_cast<std::size_t>(now_slot));
  std::size_t below = 0;
  for (std::int64_t s = lo; s <= hi; ++s) {
    if (trace.ci(static_cast<std::size_t>(s)) < now_ci) ++below;
  }
  const auto n = static_cast<std::size_t>(hi - lo + 1);
  return n == 1 ? 0.0 : static_cast<double>(below) / static_cast<double>(n - 1);
}

}  // namespace hai
