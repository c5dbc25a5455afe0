#include "hai/memory.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hai/error.hpp"

namespace hai {
namespace {

const ModelShape kShape{Architecture::Logistic, 1, 2, 0};

LabeledSample sample(SampleId id, ClassLabel label = 0) { return {id, {static_cast<double>(id)}, label}; }

Batch current_batch(std::size_t n, SampleId first = 10000) {
  Batch b;
  for (std::size_t i = 0; i < n; ++i) b.samples.push_back(sample(first + i));
  return b;
}

TEST(ReplayBuffer, UnderCapacityKeepsEverything) {
  ReplayBuffer buf(10);
  for (SampleId i = 0; i < 5; ++i) buf.insert(sample(i), 0, 1);
  EXPECT_EQ(buf.size(), 5u);
  EXPECT_EQ(buf.seen_count(0), 5u);
}

TEST(ReplayBuffer, SingleSlotStaysWithFirstTask) {
  ReplayBuffer buf(1);
  buf.insert(sample(1), 0, 1);
  buf.insert(sample(2), 1, 1);
  buf.insert(sample(3), 1, 1);
  EXPECT_EQ(buf.share(0), 1u);
  EXPECT_EQ(buf.share(1), 0u);
  ASSERT_EQ(buf.size(), 1u);
  EXPECT_EQ(buf.task_slots(0).front().sample.id, 1u);
  EXPECT_EQ(buf.seen_count(1), 2u);
}

TEST(ReplayBuffer, SharesUseFloorWithRemainderToEarliest) {
  ReplayBuffer buf(10);
  for (TaskId t = 0; t < 3; ++t) buf.insert(sample(t), t, 1);
  EXPECT_EQ(buf.share(0), 4u);
  EXPECT_EQ(buf.share(1), 3u);
  EXPECT_EQ(buf.share(2), 3u);
  EXPECT_EQ(buf.share(99), 0u);
}

TEST(ReplayBuffer, NewTaskShrinksEarlierShares) {
  ReplayBuffer buf(6);
  for (SampleId i = 0; i < 6; ++i) buf.insert(sample(i), 0, 3);
  EXPECT_EQ(buf.task_slots(0).size(), 6u);
  buf.insert(sample(100), 1, 3);
  EXPECT_EQ(buf.task_slots(0).size(), 3u);
  EXPECT_EQ(buf.task_slots(1).size(), 1u);
}

TEST(ReplayBuffer, CapacityNeverExceededUnderRandomOperations) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<std::size_t> cap(1, 30);
    ReplayBuffer buf(cap(rng), trial % 2 ? RetentionPolicy::UncertaintyWeighted : RetentionPolicy::Uniform);
    std::uniform_int_distribution<TaskId> task(0, 6);
    std::uniform_real_distribution<double> w(0.1, 2.0);
    for (SampleId i = 0; i < 300; ++i) {
      const TaskId t = task(rng);
      buf.insert(sample(i), t, trial, w(rng));
      ASSERT_LE(buf.size(), buf.capacity());
      for (TaskId k : buf.task_order()) ASSERT_LE(buf.task_slots(k).size(), buf.share(k));
    }
  }
}

TEST(ReplayBuffer, ReservoirRetentionIsUniform) {
  // capacity 20, 1000 insertions: each sample survives with p = 0.02.
  constexpr int kTrials = 10000;
  constexpr std::size_t kN = 1000;
  std::vector<int> kept(kN, 0);
  for (int trial = 0; trial < kTrials; ++trial) {
    ReplayBuffer buf(20);
    for (SampleId i = 0; i < kN; ++i) buf.insert(sample(i), 0, static_cast<std::uint64_t>(trial));
    for (const auto& s : buf.task_slots(0)) ++kept[s.sample.id];
  }
  const double p = 20.0 / kN;
  const double mean = kTrials * p;
  const double sigma = std::sqrt(kTrials * p * (1.0 - p));
  int beyond3 = 0;
  for (int k : kept) {
    const double z = std::abs(k - mean) / sigma;
    EXPECT_LT(z, 5.0);
    beyond3 += z > 3.0 ? 1 : 0;
  }
  // Under the null about 0.27% of samples land beyond 3 sigma.
  EXPECT_LE(beyond3, static_cast<int>(kN / 100));
}

TEST(ReplayBuffer, WeightedRetentionFavoursHeavySamples) {
  int heavy = 0, light = 0;
  for (int trial = 0; trial < 400; ++trial) {
    ReplayBuffer buf(10, RetentionPolicy::UncertaintyWeighted);
    for (SampleId i = 0; i < 100; ++i) buf.insert(sample(i), 0, trial, i < 50 ? 4.0 : 1.0);
    for (const auto& s : buf.task_slots(0)) (s.sample.id < 50 ? heavy : light)++;
  }
  EXPECT_GT(heavy, 2 * light);
  ReplayBuffer buf(3, RetentionPolicy::UncertaintyWeighted);
  EXPECT_THROW(buf.insert(sample(0), 0, 1, 0.0), InvalidInput);
}

TEST(ReplayBuffer, DeterministicForFixedSeed) {
  ReplayBuffer a(7), b(7);
  for (SampleId i = 0; i < 200; ++i) {
    a.insert(sample(i), i % 3, 42);
    b.insert(sample(i), i % 3, 42);
  }
  const auto sa = a.slots(), sb = b.slots();
  ASSERT_EQ(sa.size(), sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) EXPECT_EQ(sa[i].sample.id, sb[i].sample.id);
}

TEST(ReplayBuffer, ReferenceIsSetExactlyOnce) {
  ReplayBuffer buf(4);
  buf.set_reference(0, 0.3, "task-0/eval");
  EXPECT_THROW(buf.set_reference(0, 0.2, "again"), InvalidInput);
  EXPECT_THROW(buf.set_reference(1, -1.0, "neg"), InvalidInput);
  EXPECT_DOUBLE_EQ(buf.references().at(0).reference_loss, 0.3);
  EXPECT_THROW(ReplayBuffer(0), InvalidInput);
}

TEST(Rehearsal, MixZeroIsPureCurrent) {
  ReplayBuffer buf(10);
  for (SampleId i = 0; i < 10; ++i) buf.insert(sample(i), 0, 1);
  const auto r = rehearsal_batch(buf, 6, 0.0, current_batch(8), 5);
  EXPECT_EQ(r.replayed, 0u);
  ASSERT_EQ(r.batch.size(), 6u);
  for (const auto& s : r.batch.samples) EXPECT_NE(s.provenance, Provenance::Replay);
}

TEST(Rehearsal, MixOneIsPureReplayWithoutRepeats) {
  ReplayBuffer buf(10);
  for (SampleId i = 0; i < 10; ++i) buf.insert(sample(i), 0, 1);
  const auto r = rehearsal_batch(buf, 8, 1.0, current_batch(8), 5);
  ASSERT_EQ(r.batch.size(), 8u);
  std::set<SampleId> ids;
  for (const auto& s : r.batch.samples) {
    EXPECT_EQ(s.provenance, Provenance::Replay);
    ids.insert(s.id);
  }
  EXPECT_EQ(ids.size(), 8u);
}

TEST(Rehearsal, HalfMixCompositionByProvenance) {
  ReplayBuffer buf(10);
  for (SampleId i = 0; i < 10; ++i) buf.insert(sample(i), 0, 1);
  const auto r = rehearsal_batch(buf, 10, 0.5, current_batch(20), 5);
  const auto replay = std::count_if(r.batch.samples.begin(), r.batch.samples.end(),
                                    [](const LabeledSample& s) { return s.provenance == Provenance::Replay; });
  EXPECT_EQ(replay, 5);
  EXPECT_EQ(r.batch.size(), 10u);
  const auto again = rehearsal_batch(buf, 10, 0.5, current_batch(20), 5);
  for (std::size_t i = 0; i < r.batch.size(); ++i) EXPECT_EQ(r.batch.samples[i].id, again.batch.samples[i].id);
}

TEST(Rehearsal, EmptyBufferFallsBackAndFlags) {
  const ReplayBuffer buf(10);
  const auto r = rehearsal_batch(buf, 4, 0.5, current_batch(4), 1);
  EXPECT_TRUE(r.fell_back);
  EXPECT_EQ(r.replayed, 0u);
  EXPECT_EQ(r.batch.size(), 4u);
  EXPECT_THROW(rehearsal_batch(buf, 0, 0.5, current_batch(4), 1), InvalidInput);
  EXPECT_THROW(rehearsal_batch(buf, 4, 1.5, current_batch(4), 1), InvalidInput);
}

Batch eval_batch() {
  Batch b;
  b.samples = {sample(1, 0), sample(2, 1), sample(3, 1)};
  return b;
}

TEST(Forgetting, UnchangedModelHasZeroDelta) {
  const auto model = ModelState::seeded(kShape, 4);
  ReplayBuffer buf(4);
  buf.set_reference(0, evaluate(model, eval_batch()).mean_loss, "e0");
  const auto r = check_forgetting(buf, model, {{0, eval_batch()}}, 0.1);
  ASSERT_EQ(r.tasks.size(), 1u);
  EXPECT_EQ(r.tasks[0].delta, 0.0);
  EXPECT_TRUE(r.violations.empty());
}

TEST(Forgetting, SingleViolationArithmetic) {
  // The zero model scores ln 2 on every sample.
  const auto model = ModelState::zeros(kShape);
  ReplayBuffer buf(4);
  buf.set_reference(0, std::log(2.0) - 0.12, "e0");
  const auto r = check_forgetting(buf, model, {{0, eval_batch()}}, 0.10);
  EXPECT_NEAR(r.tasks[0].delta, 0.12, 1e-15);
  EXPECT_EQ(r.violations, std::vector<TaskId>{0});
}

TEST(Forgetting, WorstDeltaAndViolationOrder) {
  const auto model = ModelState::zeros(kShape);
  const double ln2 = std::log(2.0);
  ReplayBuffer buf(4);
  buf.set_reference(1, ln2 - 0.05, "e1");
  buf.set_reference(2, ln2 - 0.15, "e2");
  buf.set_reference(3, ln2 - 0.30, "e3");
  const auto r = check_forgetting(buf, model, {{1, eval_batch()}, {2, eval_batch()}, {3, eval_batch()}}, 0.1);
  EXPECT_NEAR(r.worst_delta, 0.30, 1e-15);
  EXPECT_EQ(r.violations, (std::vector<TaskId>{3, 2}));
  const auto two = check_forgetting(buf, model, {{1, eval_batch()}, {2, eval_batch()}}, 0.1);
  EXPECT_NEAR(two.worst_delta, 0.15, 1e-15);
  EXPECT_EQ(two.violations, std::vector<TaskId>{2});
}

TEST(Forgetting, MissingReferenceIsRejected) {
  const ReplayBuffer buf(4);
  EXPECT_THROW(check_forgetting(buf, ModelState::zeros(kShape), {{0, eval_batch()}}, 0.1), InvalidInput);
  EXPECT_THROW(check_forgetting(buf, ModelState::zeros(kShape), {}, -0.1), InvalidInput);
}

}  // namespace
}  // namespace hai
