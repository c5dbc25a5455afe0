#include "hai/hitl_service.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "hai/error.hpp"
#include "hai/orchestrator.hpp"
#include "hai/synthetic.hpp"

namespace hai {
namespace {

using Code = SubmitResult::Code;

QueryRequest request(QueryId id, double utility, Slot issued = 0, ClassLabel predicted = 1) {
  QueryRequest r;
  r.query_id = id;
  r.sample_id = 100 + id;
  r.features = {0.0, 0.0};
  r.score.utility = utility;
  r.predicted = predicted;
  r.issued_slot = issued;
  return r;
}

TEST(HitlService, PendingOrderedByUtilityThenId) {
  HitlService svc(2);
  svc.post(request(3, 0.5));
  svc.post(request(1, 0.9));
  svc.post(request(2, 0.5));
  const auto p = svc.list_pending();
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].request.query_id, 1u);
  EXPECT_EQ(p[1].request.query_id, 2u);
  EXPECT_EQ(p[2].request.query_id, 3u);
}

TEST(HitlService, LabelIsIdempotentAndConflictsDetected) {
  HitlService svc(3);
  svc.post(request(1, 0.5));
  EXPECT_EQ(svc.submit(1, FeedbackKind::Label, 2).code, Code::Accepted);
  EXPECT_EQ(svc.submit(1, FeedbackKind::Label, 2).code, Code::Noop);
  EXPECT_EQ(svc.submit(1, FeedbackKind::Label, 0).code, Code::Conflict);
  EXPECT_EQ(svc.submit(1, FeedbackKind::Skip, std::nullopt).code, Code::Conflict);
  const auto batch = svc.collect(1);
  ASSERT_EQ(batch.feedback.size(), 1u);
  EXPECT_EQ(batch.feedback[0].label, 2u);
  EXPECT_TRUE(svc.collect(2).feedback.empty());
  EXPECT_TRUE(svc.list_pending().empty());
}

TEST(HitlService, InvalidSubmissions) {
  HitlService svc(2);
  svc.post(request(1, 0.5, 0, 1));
  EXPECT_EQ(svc.submit(9, FeedbackKind::Label, 0).code, Code::NotFound);
  EXPECT_EQ(svc.submit(1, FeedbackKind::Label, std::nullopt).code, Code::Invalid);
  EXPECT_EQ(svc.submit(1, FeedbackKind::Correction, 5).code, Code::Invalid);
  EXPECT_EQ(svc.submit(1, FeedbackKind::Confirmation, 0).code, Code::Invalid);
  EXPECT_EQ(svc.query(1)->state, QueryState::Open);
  const auto ok = svc.submit(1, FeedbackKind::Confirmation, std::nullopt);
  EXPECT_EQ(ok.code, Code::Accepted);
  EXPECT_EQ(svc.collect(1).feedback.at(0).label, 1u);
  EXPECT_THROW(HitlService(1), InvalidInput);
  EXPECT_THROW(HitlService(2, 0), InvalidInput);
}

TEST(HitlService, SkipIsTerminal) {
  HitlService svc(2);
  svc.post(request(1, 0.5));
  EXPECT_EQ(svc.submit(1, FeedbackKind::Skip, std::nullopt).state, QueryState::Skipped);
  EXPECT_EQ(svc.submit(1, FeedbackKind::Skip, std::nullopt).code, Code::Noop);
  EXPECT_EQ(svc.collect(0).feedback.at(0).kind, FeedbackKind::Skip);
}

TEST(HitlService, QueriesExpireAfterTtl) {
  HitlService svc(2, 3);
  svc.post(request(1, 0.5, 0));
  EXPECT_TRUE(svc.collect(2).expired.empty());
  EXPECT_EQ(svc.list_pending().size(), 1u);
  const auto batch = svc.collect(3);
  EXPECT_EQ(batch.expired, std::vector<QueryId>{1});
  EXPECT_TRUE(svc.list_pending().empty());
  EXPECT_EQ(svc.submit(1, FeedbackKind::Label, 0).code, Code::Conflict);
}

TEST(HitlService, CancelledQueriesRejectFeedback) {
  HitlService svc(2);
  svc.post(request(1, 0.5));
  svc.cancel(1);
  EXPECT_EQ(svc.query(1)->state, QueryState::Cancelled);
  EXPECT_EQ(svc.submit(1, FeedbackKind::Label, 0).code, Code::Conflict);
}

TEST(HitlService, RulesNeedAnActiveTask) {
  HitlService svc(2);
  EXPECT_FALSE(svc.submit_rule({0, Comparator::Greater, 0.0, 1}).accepted);
  StatusSnapshot snap;
  snap.current_task = 0;
  snap.d_in = 2;
  snap.n_classes = 2;
  snap.pool = {{1, {1.0, 0.0}}, {2, {-1.0, 0.0}}, {3, {2.0, 0.0}}};
  svc.publish(snap);
  const auto r = svc.submit_rule({0, Comparator::Greater, 0.0, 1});
  EXPECT_TRUE(r.accepted);
  EXPECT_EQ(r.matched, 2u);
  EXPECT_FALSE(svc.submit_rule({5, Comparator::Greater, 0.0, 1}).accepted);
  EXPECT_EQ(svc.collect(0).rules.size(), 1u);
  EXPECT_TRUE(svc.status().pool.empty());
}

TEST(HitlService, JsonViews) {
  HitlService svc(2);
  svc.post(request(4, 0.25));
  const auto j = to_json(svc.list_pending().at(0));
  EXPECT_EQ(j.at("query_id"), 4);
  EXPECT_EQ(j.at("state"), "open");
  EXPECT_DOUBLE_EQ(j.at("utility").get<double>(), 0.25);
  const auto t = to_json(TradeoffPoint{0.5, 0.75, 3, 9, 2});
  EXPECT_EQ(t.at("labels_spent"), 3);
  EXPECT_EQ(t.at("timestamp"), 9);
}

TEST(HitlService, DrivesALiveRunWithAConcurrentAnnotator) {
  const auto stream = make_stream({two_gaussian_spec(0, 6.0, 1.0, 200, 200)}, 2, 5);
  RunConfig cfg;
  cfg.budgets.labels_per_task = 15;
  cfg.max_task_slots = 400;
  HitlService svc(2, 50);
  Orchestrator orch(stream, cfg, &svc);

  std::atomic<bool> done{false};
  std::thread annotator([&] {
    while (!done.load()) {
      for (const auto& q : svc.list_pending()) {
        (void)svc.submit(q.request.query_id, FeedbackKind::Label, stream.tasks[0].pool_truth.at(q.request.sample_id));
      }
      std::this_thread::yield();
    }
  });
  while (orch.step()) std::this_thread::yield();
  done = true;
  annotator.join();

  const auto r = orch.take_result();
  EXPECT_LE(r.labels_spent.at(0), 15u);
  EXPECT_GT(r.labels_spent.at(0), 0u);
  EXPECT_TRUE(svc.status().finished);
  EXPECT_GT(r.final_accuracy.at(0), 0.9);
}

}  // namespace
}  // namespace hai
