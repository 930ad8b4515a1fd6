#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "test_support.hpp"
#include "tutorqa/error.hpp"
#include "tutorqa/evaluator.hpp"
#include "tutorqa/rng.hpp"

using namespace tutorqa;
using namespace tutorqa::nn;
using test::SynthFixture;

namespace {

// Sort-based reference: rank = position of gold after a stable descending
// sort, skipping past tied scores (optimistic rule).
int reference_rank(const Eigen::VectorXd& scores, int gold) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  int rank = 1;
  for (int i : idx) {
    if (scores[i] == scores[gold]) break;
    ++rank;
  }
  return rank;
}

struct ReferenceMetrics {
  double mrr = 0, r1 = 0, r5 = 0, r10 = 0, avg = 0;
};

ReferenceMetrics reference_metrics(const std::vector<int>& ranks) {
  ReferenceMetrics m;
  for (int r : ranks) {
    m.mrr += 1.0 / r;
    m.r1 += r <= 1;
    m.r5 += r <= 5;
    m.r10 += r <= 10;
    m.avg += r;
  }
  const double n = static_cast<double>(ranks.size());
  m.mrr /= n;
  m.r1 /= n;
  m.r5 /= n;
  m.r10 /= n;
  m.avg /= n;
  return m;
}

}  // namespace

TEST_CASE("hand-checked report arithmetic") {
  EvalReport rep = report_from_ranks({"a", "b"}, {1, 4});
  CHECK(rep.mrr == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(rep.r1 == doctest::Approx(0.5));
  CHECK(rep.r5 == doctest::Approx(1.0));
  CHECK(rep.r10 == doctest::Approx(1.0));
  CHECK(rep.avg_rank == doctest::Approx(2.5));

  EvalReport perfect = report_from_ranks({"a", "b", "c"}, {1, 1, 1});
  CHECK(perfect.mrr == 1.0);
  CHECK(perfect.r1 == 1.0);
  CHECK(perfect.r10 == 1.0);
  CHECK(perfect.avg_rank == 1.0);
}

TEST_CASE("rank and metrics equal the sort-based reference on random scores") {
  Rng rng(101);
  std::vector<int> ours, ref;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + rng.uniform_int(40);
    Eigen::VectorXd scores(n);
    for (int i = 0; i < n; ++i) {
      // Coarse grid provokes plenty of exact ties.
      scores[i] = rng.uniform_int(10) / 4.0;
    }
    const int gold = rng.uniform_int(n);
    ours.push_back(rank_of(scores, gold));
    ref.push_back(reference_rank(scores, gold));
    CHECK(ours.back() == ref.back());
  }
  EvalReport rep = report_from_ranks(std::vector<std::string>(ours.size(), "t"), ours);
  ReferenceMetrics m = reference_metrics(ref);
  CHECK(rep.mrr == m.mrr);
  CHECK(rep.r1 == m.r1);
  CHECK(rep.r5 == m.r5);
  CHECK(rep.r10 == m.r10);
  CHECK(rep.avg_rank == m.avg);
}

TEST_CASE("evaluate rejects a mismatched pool") {
  SynthSpec spec;
  spec.n_videos = 1;
  spec.sents_per_video = 10;
  spec.kb_size = 14;
  spec.n_triples = 6;
  spec.seed = 3;
  SynthFixture fix(spec);
  QAModel model(test::mini_config(Variant::base, 1), fix.vocab, fix.pool.ids, 1);

  AnswerPool other = fix.pool;
  other.ids.push_back("extra");
  other.index["extra"] = other.size() - 1;
  CHECK_THROWS_WITH_AS(evaluate(model, fix.data.dataset, other), doctest::Contains("pool"), Error);

  EvalReport rep = evaluate(model, fix.data.dataset, fix.pool);
  CHECK(rep.count() == 6);
  CHECK(!rep.fingerprint.empty());
  CHECK(rep.avg_rank >= 1.0);
  CHECK(rep.r1 <= rep.r5);
  CHECK(rep.r5 <= rep.r10);
}

TEST_CASE("stratification buckets by window cue agreement") {
  KnowledgeBase kb = KnowledgeBase::from_parts(
      {{"t1", "T1", EntityType::Tool, {}},
       {"t2", "T2", EntityType::Tool, {}},
       {"p1", "P1", EntityType::Panel, {}}},
      {});
  std::vector<Sentence> sents;
  for (int i = 0; i < 9; ++i) sents.push_back({"v", i, i * 10, i * 10 + 9, {"w"}});
  std::map<SegmentKey, CueAnnotation> gold;
  gold[{"v", 1}] = {std::string("t1"), std::nullopt, std::nullopt};
  gold[{"v", 4}] = {std::string("t1"), std::string("p1"), std::nullopt};
  // Sentences around index 7 carry no cues at all.
  std::vector<QATriple> triples = {
      {"qa", "v", 1, {"q"}, "t1"},   // window covers the t1 cue
      {"qb", "v", 4, {"q"}, "p1"},   // window covers tool+panel cues
      {"qc", "v", 7, {"q"}, "t2"},   // no cue anywhere in window
  };
  Dataset ds = Dataset::from_parts(kb, sents, triples, gold);

  EvalReport results = report_from_ranks({"qa", "qb", "qc"}, {1, 3, 2});

  CueOverrides perfect;
  perfect[{"v", 1}] = *ds.gold_cue("v", 1);
  perfect[{"v", 4}] = *ds.gold_cue("v", 4);
  StratifiedReports all_correct = stratify_by_cue_error(results, ds, perfect, 1);
  CHECK(all_correct.correct.count() == 2);
  CHECK(all_correct.wrong.count() == 0);
  CHECK(all_correct.partial.count() == 0);
  CHECK(all_correct.no_cue_triples == 1);
  CHECK(all_correct.correct.r1 == doctest::Approx(0.5));

  StratifiedReports all_absent = stratify_by_cue_error(results, ds, {}, 1);
  CHECK(all_absent.wrong.count() == 2);
  CHECK(all_absent.no_cue_triples == 1);

  CueOverrides half;
  half[{"v", 4}] = {std::string("t1"), std::string("p1"), std::nullopt};
  // qa's window cue unmatched -> wrong; qb fully matched -> correct.
  StratifiedReports mixed = stratify_by_cue_error(results, ds, half, 1);
  CHECK(mixed.wrong.count() == 1);
  CHECK(mixed.correct.count() == 1);

  CueOverrides partial;
  partial[{"v", 4}] = {std::string("t1"), std::nullopt, std::nullopt};  // panel missed
  StratifiedReports p = stratify_by_cue_error(results, ds, partial, 1);
  CHECK(p.partial.count() == 1);
  // Bucket sizes always add up to the cue-bearing triples.
  CHECK(p.wrong.count() + p.partial.count() + p.correct.count() + p.no_cue_triples == 3);
}

TEST_CASE("attention trace serialization") {
  AttentionTrace none;
  nlohmann::json empty = attention_trace_json("q1", none, 2);
  CHECK(empty.contains("note"));

  AttentionTrace temporal;
  temporal.has_temporal = true;
  temporal.temporal = {0.1, 0.2, 0.4, 0.2, 0.1};
  nlohmann::json jt = attention_trace_json("q2", temporal, 2);
  REQUIRE(jt.contains("temporal"));
  CHECK(jt["temporal"].size() == 5);
  CHECK(jt["temporal"][0]["step"] == -2);
  CHECK(jt["temporal"][4]["step"] == 2);
  double sum = 0;
  for (const auto& a : jt["temporal"]) sum += a["weight"].get<double>();
  CHECK(sum == doctest::Approx(1.0));
  CHECK_FALSE(jt.contains("spatial"));

  AttentionTrace dual = temporal;
  dual.has_spatial = true;
  dual.spatial = {{0.2, 0.3, 0.5}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.4, 0.3, 0.3}};
  nlohmann::json jd = attention_trace_json("q3", dual, 2);
  CHECK(jd.contains("temporal"));
  REQUIRE(jd.contains("spatial"));
  CHECK(jd["spatial"].size() == 5);
  CHECK(jd["spatial"][0].contains("tool"));
  CHECK(jd["spatial"][0].contains("panel"));
  CHECK(jd["spatial"][0].contains("dialog"));
}

TEST_CASE("model attention traces flow into dumps per variant") {
  SynthSpec spec;
  spec.n_videos = 1;
  spec.sents_per_video = 12;
  spec.kb_size = 14;
  spec.n_triples = 5;
  spec.seed = 9;
  SynthFixture fix(spec);
  ExampleSet examples = fix.examples(2);

  QAModel base(test::mini_config(Variant::base, 2), fix.vocab, fix.pool.ids, 2);
  Tape t1;
  nlohmann::json jb =
      attention_trace_json("x", base.run(t1, examples[0].window).trace, 2);
  CHECK(jb.contains("note"));

  QAModel dual(test::mini_config(Variant::dual, 2), fix.vocab, fix.pool.ids, 2);
  Tape t2;
  nlohmann::json jd =
      attention_trace_json("x", dual.run(t2, examples[0].window).trace, 2);
  CHECK(jd["temporal"].size() == 5);
  CHECK(jd["spatial"].size() == 5);
}
