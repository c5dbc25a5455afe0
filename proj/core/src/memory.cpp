#include "hai/memory.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hai/error.hpp"
#include "hai/rng.hpp"

namespace hai {

namespace {

constexpr std::uint64_t kInsertTag = 0x1A5E;
constexpr std::uint64_t kEvictTag = 0xE71C;

std::uint64_t uniform_index(std::uint64_t seed, std::uint64_t n) {
  SplitMix64 gen(seed);
  std::uniform_int_distribution<std::uint64_t> pick(0, n - 1);
  return pick(gen);
}

double uniform_open01(std::uint64_t seed) {
  SplitMix64 gen(seed);
  // (0, 1): 53 random bits offset by half an ulp.
  return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity, RetentionPolicy policy) : capacity_(capacity), policy_(policy) {
  if (capacity_ == 0) throw InvalidInput("replay buffer capacity must be > 0");
}

std::size_t ReplayBuffer::size() const {
  std::size_t n = 0;
  for (const auto& [task, slots] : slots_) n += slots.size();
  return n;
}

std::size_t ReplayBuffer::share(TaskId task_id) const {
  const auto it = std::find(task_order_.begin(), task_order_.end(), task_id);
  if (it == task_order_.end()) return 0;
  const std::size_t idx = static_cast<std::size_t>(it - task_order_.begin());
  const std::size_t n = task_order_.size();
  return capacity_ / n + (idx < capacity_ % n ? 1 : 0);
}

std::uint64_t ReplayBuffer::seen_count(TaskId task_id) const {
  const auto it = seen_.find(task_id);
  return it == seen_.end() ? 0 : it->second;
}

std::vector<BufferSlot> ReplayBuffer::slots() const {
  std::vector<BufferSlot> out;
  out.reserve(size());
  for (TaskId t : task_order_) {
    const auto& s = slots_.at(t);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

const std::vector<BufferSlot>& ReplayBuffer::task_slots(TaskId task_id) const {
  static const std::vector<BufferSlot> kEmpty;
  const auto it = slots_.find(task_id);
  return it == slots_.end() ? kEmpty : it->second;
}

void ReplayBuffer::rebalance(std::uint64_t seed) {
  for (TaskId t : task_order_) {
    auto& slots = slots_[t];
    const std::size_t s = share(t);
    while (slots.size() > s) {
      std::size_t victim = 0;
      if (policy_ == RetentionPolicy::Uniform) {
        victim = uniform_index(derive_seed(seed, {kEvictTag, t, seen_[t], slots.size()}), slots.size());
      } else {
        victim = static_cast<std::size_t>(
            std::min_element(slots.begin(), slots.end(),
                             [](const BufferSlot& a, const BufferSlot& b) { return a.priority < b.priority; }) -
            slots.begin());
      }
      slots.erase(slots.begin() + static_cast<std::ptrdiff_t>(victim));
    }
  }
}

void ReplayBuffer::insert(const LabeledSample& sample, TaskId task_id, std::uint64_t seed, double retention_weight) {
  if (sample.features.empty()) throw InvalidInput("sample has no features");
  if (policy_ == RetentionPolicy::UncertaintyWeighted && !(retention_weight > 0.0)) {
    throw InvalidInput("retention weight must be > 0");
  }
  if (!slots_.count(task_id)) {
    task_order_.push_back(task_id);
    slots_[task_id];
    seen_[task_id] = 0;
    rebalance(seed);
  }
  auto& slots = slots_[task_id];
  const std::uint64_t n = ++seen_[task_id];
  const std::size_t s = share(task_id);
  if (s == 0) return;

  BufferSlot slot{sample, task_id, retention_weight, 0.0};
  const std::uint64_t draw_seed = derive_seed(seed, {kInsertTag, task_id, n});

  if (policy_ == RetentionPolicy::UncertaintyWeighted) {
    // Efraimidis-Spirakis A-Res: keep the s largest u^(1/w).
    slot.priority = std::pow(uniform_open01(draw_seed), 1.0 / retention_weight);
    if (slots.size() < s) {
      slots.push_back(std::move(slot));
      return;
    }
    auto min_it = std::min_element(slots.begin(), slots.end(),
                                   [](const BufferSlot& a, const BufferSlot& b) { return a.priority < b.priority; });
    if (slot.priority > min_it->priority) *min_it = std::move(slot);
    return;
  }

  if (slots.size() < s) {
    slots.push_back(std::move(slot));
    return;
  }
  const std::uint64_t j = uniform_index(draw_seed, n);
  if (j < s) slots[static_cast<std::size_t>(j)] = std::move(slot);
}

void ReplayBuffer::set_reference(TaskId task_id, double reference_loss, std::string eval_set_id) {
  if (references_.count(task_id)) {
    throw InvalidInput("task " + std::to_string(task_id) + " already has a reference loss");
  }
  if (!std::isfinite(reference_loss) || reference_loss < 0.0) throw InvalidInput("reference loss must be >= 0");
  references_[task_id] = TaskReference{reference_loss, std::move(eval_set_id)};
}

ReplayBuffer ReplayBuffer::restore(std::size_t capacity, RetentionPolicy policy, std::vector<TaskId> task_order,
                                   std::map<TaskId, std::vector<BufferSlot>> slots,
                                   std::map<TaskId, std::uint64_t> seen, std::map<TaskId, TaskReference> references) {
  ReplayBuffer buffer(capacity, policy);
  buffer.task_order_ = std::move(task_order);
  buffer.slots_ = std::move(slots);
  buffer.seen_ = std::move(seen);
  buffer.references_ = std::move(references);
  for (TaskId t : buffer.task_order_) {
    buffer.slots_[t];
    buffer.seen_.try_emplace(t, 0);
  }
  if (buffer.slots_.size() != buffer.task_order_.size()) throw InvalidInput("buffer slots reference unknown tasks");
  for (TaskId t : buffer.task_order_) {
    if (buffer.slots_[t].size() > buffer.share(t)) throw InvalidInput("restored buffer exceeds a task share");
  }
  return buffer;
}

RehearsalResult rehearsal_batch(const ReplayBuffer& buffer, std::size_t size, double mix, const Batch& current,
                                std::uint64_t seed) {
  if (size < 1) throw InvalidInput("rehearsal batch size must be >= 1");
  if (!(mix >= 0.0 && mix <= 1.0)) throw InvalidInput("rehearsal mix must lie in [0, 1]");

  RehearsalResult result;
  result.batch.task_id = current.task_id;
  std::size_t n_replay = static_cast<std::size_t>(std::llround(mix * static_cast<double>(size)));
  const auto pool = buffer.slots();
  if (n_replay > 0 && pool.empty()) {
    result.fell_back = true;
    n_replay = 0;
  }

  SplitMix64 gen(seed);
  if (n_replay > 0) {
    std::vector<std::size_t> picks;
    if (n_replay <= pool.size()) {
      std::vector<std::size_t> idx(pool.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < n_replay; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(gen)]);
      }
      picks.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_replay));
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (std::size_t i = 0; i < n_replay; ++i) picks.push_back(pick(gen));
    }
    for (std::size_t i : picks) {
      LabeledSample s = pool[i].sample;
      s.provenance = Provenance::Replay;
      result.batch.samples.push_back(std::move(s));
    }
  }
  result.replayed = result.batch.samples.size();

  const std::size_t n_current = std::min(size - n_replay, current.samples.size());
  result.batch.samples.insert(result.batch.samples.end(), current.samples.begin(),
                              current.samples.begin() + static_cast<std::ptrdiff_t>(n_current));
  return result;
}

ForgettingReport check_forgetting(const ReplayBuffer& buffer, const ModelState& model,
                                  const std::map<TaskId, Batch>& eval_sets, double delta) {
  if (!(delta >= 0.0)) throw InvalidInput("forgetting margin must be >= 0");
  ForgettingReport report;
  report.margin = delta;
  const auto& refs = buffer.references();
  for (const auto& [task, eval] : eval_sets) {
    const auto it = refs.find(task);
    if (it == refs.end()) throw InvalidInput("task " + std::to_string(task) + " has no reference loss");
    TaskForgetting f;
    f.task_id = task;
    f.current_loss = evaluate(model, eval).mean_loss;
    f.reference_loss = it->second.reference_loss;
    f.delta = f.current_loss - f.reference_loss;
    report.tasks.push_back(f);
  }
  for (const auto& f : report.tasks) {
    report.worst_delta = (&f == &report.tasks.front()) ? f.delta : std::max(report.worst_delta, f.delta);
  }
  std::vector<const TaskForgetting*> bad;
  for (const auto& f : report.tasks) {
    if (f.delta > delta) bad.push_back(&f);
  }
  std::stable_sort(bad.begin(), bad.end(), [](const TaskForgetting* a, const TaskForgetting* b) { return a->delta > b->delta; });
  for (const auto* f : bad) report.violations.push_back(f->task_id);
  return report;
}

}  // namespace hai
