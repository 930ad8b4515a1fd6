// Acceptance suite: one pass/fail line per criterion, covering the one-shot
// matcher oracle, gradient correctness, attention normalization, the
// base/hard-temporal identity, overfitting, context ablation and
// graph-initialization trends, clique separation, the metrics oracle, and
// train determinism. Criterion 11 (released-data reproduction) is optional
// and reports SKIP unless TUTORQA_RELEASED_DATA is set.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "tutorqa/cues.hpp"
#include "tutorqa/deepwalk.hpp"
#include "tutorqa/error.hpp"
#include "tutorqa/evaluator.hpp"
#include "tutorqa/hash.hpp"
#include "tutorqa/manifest.hpp"
#include "tutorqa/synth.hpp"
#include "tutorqa/trainer.hpp"

using namespace tutorqa;
using nn::QAModel;
using nn::Tape;
using nn::Variant;

namespace {

struct CriterionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw CriterionFailure(msg);
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << std::fixed << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

nn::ModelConfig mini_config(Variant variant) {
  nn::ModelConfig cfg;
  cfg.variant = variant;
  cfg.window = 1;
  cfg.embed_dim = 6;
  cfg.filter_widths = {2, 3};
  cfg.maps_per_width = 3;
  cfg.answer_dim = 6;
  cfg.gru_hidden = 4;
  cfg.attn_hidden = 5;
  cfg.dropout = 0.0;
  return cfg;
}

nn::ModelConfig trend_config(Variant variant) {
  nn::ModelConfig cfg;
  cfg.variant = variant;
  cfg.window = 2;
  cfg.embed_dim = 32;
  cfg.filter_widths = {2, 3};
  cfg.maps_per_width = 16;
  cfg.answer_dim = 32;
  cfg.gru_hidden = 32;
  cfg.attn_hidden = 32;
  cfg.dropout = 0.3;
  return cfg;
}

struct MiniFixture {
  SynthData data;
  AnswerPool pool;
  Vocabulary vocab;
  ExampleSet examples;

  MiniFixture() : data(make()), pool(answer_pool(data.kb)), vocab(Vocabulary::build(data.dataset, 1)) {
    examples = make_examples(data.dataset, pool, 1);
  }

  static SynthData make() {
    SynthSpec spec;
    spec.n_videos = 2;
    spec.sents_per_video = 14;
    spec.kb_size = 21;
    spec.n_triples = 24;
    spec.cue_determined_fraction = 0.5;
    spec.seed = 2024;
    return synth_dataset(spec);
  }
};

MiniFixture& mini_fixture() {
  static MiniFixture fix;
  return fix;
}

// The expensive trend fixture (criteria 6 and 7): one synthetic corpus,
// five trained models.
struct TrendFixture {
  SynthData data;
  AnswerPool pool;
  Dataset train_ds, dev_ds, test_ds;
  std::vector<AblationResult> results;  // q, q+t, q+v, q+t+v, q+t+v+ge

  TrendFixture()
      : data(make()),
        pool(answer_pool(data.kb)),
        train_ds(data.dataset),
        dev_ds(data.dataset),
        test_ds(data.dataset) {
    SplitIndices split = split_synth(data, 0.25, 0.8, 0.1, 91);
    train_ds = dataset_subset(data.dataset, split.train);
    dev_ds = dataset_subset(data.dataset, split.dev);
    test_ds = dataset_subset(data.dataset, split.test);

    WalkConfig wc;
    wc.dim = 32;
    wc.walks_per_node = 40;
    wc.walk_length = 20;
    wc.window = 5;
    wc.epochs = 2;
    wc.seed = 17;
    NodeEmbeddings graph_vectors = deepwalk(to_graph(data.kb), wc);

    TrainConfig tc;
    tc.batch_size = 32;
    tc.max_epochs = 30;
    tc.dropout = 0.3;
    tc.seed = 7;

    std::vector<AblationRow> rows = {{"q", false, false, false},
                                     {"q+t", true, false, false},
                                     {"q+v", false, true, false},
                                     {"q+t+v", true, true, false},
                                     {"q+t+v+ge", true, true, true}};
    results = run_ablation(data.kb, pool, train_ds, dev_ds, test_ds, trend_config(Variant::base),
                           tc, rows, &graph_vectors, 11);
  }

  static SynthData make() {
    SynthSpec spec;
    spec.n_videos = 6;
    spec.sents_per_video = 30;
    spec.kb_size = 42;  // 6 clusters
    spec.n_triples = 600;
    spec.cue_determined_fraction = 0.5;
    spec.seed = 404;
    return synth_dataset(spec);
  }

  const EvalReport& row(const std::string& name) const {
    for (const AblationResult& r : results) {
      if (r.row.name == name) return r.test;
    }
    throw CriterionFailure("missing ablation row " + name);
  }
};

TrendFixture& trend_fixture() {
  static TrendFixture fix;
  return fix;
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

// Exhaustive double-loop reference for the one-shot matcher.
double oracle_similarity(const TokenBag& test, const TokenBag& train, const WordVectors& wv) {
  if (test.empty() || train.empty()) return 0.0;
  double total = 0.0;
  for (const auto& [tw, count] : test.counts) {
    double min_dist = std::numeric_limits<double>::infinity();
    for (const auto& [rw, unused] : train.counts) {
      double d = (wv.get(tw) - wv.get(rw)).norm();
      if (d < min_dist) min_dist = d;
    }
    total += count / std::max(min_dist, 1e-6);
  }
  return total;
}

std::string criterion_1_matcher_oracle() {
  Rng rng(1001);
  for (int instance = 0; instance < 200; ++instance) {
    const int dim = 2 + rng.uniform_int(7);  // <= 8
    WordVectors wv(dim);
    const int vocab_size = 10 + rng.uniform_int(40);
    for (int i = 0; i < vocab_size; ++i) {
      Eigen::VectorXd v(dim);
      for (int d = 0; d < dim; ++d) v[d] = rng.uniform(-2, 2);
      if (rng.uniform() < 0.7) wv.set("w" + std::to_string(i), v);  // rest exercise OOV
    }
    CueCatalog catalog;
    const int n_cand = 1 + rng.uniform_int(20);
    for (int c = 0; c < n_cand; ++c) {
      TokenBag ref;
      const int n_words = 1 + rng.uniform_int(30);
      for (int j = 0; j < n_words; ++j) {
        ref.add("w" + std::to_string(rng.uniform_int(vocab_size)), 1 + rng.uniform_int(2));
      }
      catalog.panel["p" + std::to_string(c)] = ref;
    }
    TokenBag test;
    const int n_words = 1 + rng.uniform_int(30);
    for (int j = 0; j < n_words; ++j) {
      test.add("w" + std::to_string(rng.uniform_int(vocab_size)), 1 + rng.uniform_int(3));
    }

    std::vector<MatchResult> fast = recognize(test, CueStream::panel, catalog, wv);
    std::vector<MatchResult> slow;
    for (const auto& [id, ref] : catalog.panel) slow.push_back({id, oracle_similarity(test, ref, wv)});
    std::sort(slow.begin(), slow.end(), [](const MatchResult& a, const MatchResult& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return a.id < b.id;
    });

    require(fast.size() == slow.size(), "ranking length mismatch");
    for (size_t i = 0; i < fast.size(); ++i) {
      require(fast[i].id == slow[i].id,
              "instance " + std::to_string(instance) + ": rank " + std::to_string(i) +
                  " differs (" + fast[i].id + " vs " + slow[i].id + ")");
      require(fast[i].similarity == slow[i].similarity,
              "instance " + std::to_string(instance) + ": similarity differs at rank " +
                  std::to_string(i));
    }
  }
  return "200/200 instances exact (similarity diff 0, identical ranking)";
}

std::string criterion_2_gradients() {
  MiniFixture& fix = mini_fixture();
  ExampleSet batch(fix.examples.begin(), fix.examples.begin() + 3);
  std::ostringstream detail;
  for (Variant variant : {Variant::base, Variant::temporal, Variant::spatial, Variant::dual}) {
    auto t0 = std::chrono::steady_clock::now();
    QAModel model(mini_config(variant), fix.vocab, fix.pool.ids, 21);
    GradCheckResult res = gradient_check(model, batch, 1e-4, -1);  // every coordinate
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    require(res.max_rel_error <= 1e-4,
            to_string(variant) + ": max rel error " + std::to_string(res.max_rel_error));
    require(secs < 60.0, to_string(variant) + " exceeded 60 s");
    detail << to_string(variant) << "=" << fmt(res.max_rel_error, 8) << "(" << res.coords_checked
           << " coords, " << fmt(secs, 1) << "s) ";
  }
  return detail.str();
}

std::string criterion_3_attention_normalization() {
  MiniFixture& fix = mini_fixture();
  int checked = 0;
  for (Variant variant : {Variant::temporal, Variant::spatial, Variant::dual}) {
    int inputs = 0;
    for (uint64_t seed = 1; inputs < 100; ++seed) {
      QAModel model(mini_config(variant), fix.vocab, fix.pool.ids, seed * 77 + 5);
      for (const TrainExample& ex : fix.examples) {
        if (inputs >= 100) break;
        Tape tape;
        QAModel::Result res = model.run(tape, ex.window);
        if (res.trace.has_temporal) {
          double sum = 0.0;
          for (double a : res.trace.temporal) {
            require(a >= 0.0, "negative temporal weight");
            sum += a;
          }
          require(std::abs(sum - 1.0) <= 1e-6, "temporal weights sum to " + std::to_string(sum));
        }
        if (res.trace.has_spatial) {
          for (const auto& beta : res.trace.spatial) {
            double sum = 0.0;
            for (double b : beta) {
              require(b >= 0.0, "negative spatial weight");
              sum += b;
            }
            require(std::abs(sum - 1.0) <= 1e-6, "spatial weights sum to " + std::to_string(sum));
          }
        }
        ++inputs;
        ++checked;
      }
    }
  }
  return std::to_string(checked) + " inputs across temporal/spatial/dual, all normalized";
}

std::string criterion_4_base_equals_hard_temporal() {
  MiniFixture& fix = mini_fixture();
  const int w = 1;
  double worst = 0.0;
  int inputs = 0;
  for (uint64_t seed : {3u, 4u, 5u}) {
    QAModel temporal(mini_config(Variant::temporal), fix.vocab, fix.pool.ids, seed);
    QAModel base(mini_config(Variant::base), fix.vocab, fix.pool.ids, seed + 100);
    base.copy_parameters_from(temporal);

    std::vector<double> hard(2 * w + 1, 0.0);
    hard[w] = 1.0;
    QAModel::Overrides ov;
    ov.temporal_alpha = &hard;
    QAModel::RunOptions opts;
    opts.overrides = &ov;

    for (const TrainExample& ex : fix.examples) {
      if (inputs >= 50) break;
      Tape t1, t2;
      Eigen::VectorXd a = temporal.run(t1, ex.window, opts).score_values;
      Eigen::VectorXd b = base.run(t2, ex.window).score_values;
      worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
      ++inputs;
    }
  }
  require(inputs >= 50, "not enough inputs");
  require(worst <= 1e-6, "max |temporal - base| = " + std::to_string(worst));
  return std::to_string(inputs) + " inputs, max abs diff " + fmt(worst, 10);
}

std::string criterion_5_overfit() {
  SynthSpec spec;
  spec.n_videos = 2;
  spec.sents_per_video = 14;
  spec.kb_size = 20;  // pool of exactly 20
  spec.n_triples = 50;
  spec.cue_determined_fraction = 0.5;
  spec.seed = 555;
  SynthData data = synth_dataset(spec);
  AnswerPool pool = answer_pool(data.kb);
  require(pool.size() == 20, "pool size");
  Vocabulary vocab = Vocabulary::build(data.dataset, 1);
  ExampleSet examples = make_examples(data.dataset, pool, 2);

  nn::ModelConfig mc = trend_config(Variant::base);
  mc.dropout = 0.0;
  QAModel model(mc, vocab, pool.ids, 99);
  TrainConfig tc;
  tc.batch_size = 16;
  tc.max_epochs = 200;
  tc.dropout = 0.0;
  tc.seed = 13;
  TrainHistory history = train(model, examples, examples, tc);

  double best = 0.0;
  int best_epoch = 0;
  for (const EpochRecord& e : history.epochs) {
    if (e.dev.r1 > best) {
      best = e.dev.r1;
      best_epoch = e.epoch;
    }
  }
  require(best >= 0.95, "best dev R@1 " + fmt(best) + " < 0.95");
  return "50 triples, pool 20: best dev R@1 " + fmt(best) + " at epoch " +
         std::to_string(best_epoch);
}

std::string criterion_6_context_ablation_trend() {
  TrendFixture& fix = trend_fixture();
  const double full = fix.row("q+t+v+ge").r1;
  const double q_only = fix.row("q").r1;
  const double qt = fix.row("q+t").r1;
  const double qv = fix.row("q+v").r1;
  require(full - q_only >= 0.20,
          "full R@1 " + fmt(full) + " vs question-only " + fmt(q_only) + ": margin < 0.20");
  require(full > qt, "full R@1 " + fmt(full) + " does not exceed q+t " + fmt(qt));
  require(full > qv, "full R@1 " + fmt(full) + " does not exceed q+v " + fmt(qv));
  return "test R@1: q=" + fmt(q_only) + " q+t=" + fmt(qt) + " q+v=" + fmt(qv) +
         " full=" + fmt(full);
}

std::string criterion_7_graph_init_benefit() {
  TrendFixture& fix = trend_fixture();
  const double graph_mrr = fix.row("q+t+v+ge").mrr;
  const double random_mrr = fix.row("q+t+v").mrr;
  require(graph_mrr >= random_mrr + 0.03, "graph-init MRR " + fmt(graph_mrr) +
                                              " vs random-init " + fmt(random_mrr) +
                                              ": margin < 0.03");
  return "test MRR: random-init=" + fmt(random_mrr) + " graph-init=" + fmt(graph_mrr);
}

std::string criterion_8_clique_separation() {
  std::vector<Entity> entities;
  std::vector<Relation> relations;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 5; ++i) {
      entities.push_back({"n" + std::to_string(c * 5 + i), "N", EntityType::Menu, {}});
    }
    for (int i = 0; i < 5; ++i) {
      for (int j = i + 1; j < 5; ++j) {
        relations.push_back({"n" + std::to_string(c * 5 + i), "n" + std::to_string(c * 5 + j),
                             RelationKind::IsA});
      }
    }
  }
  KnowledgeBase kb = KnowledgeBase::from_parts(std::move(entities), std::move(relations));
  Graph g = to_graph(kb);
  require(g.edge_count() == 20, "expected two 5-cliques");

  WalkConfig wc;
  wc.dim = 16;
  wc.walks_per_node = 40;
  wc.walk_length = 20;
  wc.window = 5;
  wc.epochs = 3;
  wc.seed = 7;
  NodeEmbeddings emb = deepwalk(g, wc);

  auto clique = [&](const std::string& id) { return id[1] < '5' ? 0 : 1; };
  double min_intra = 1.0, max_inter = -1.0;
  for (int i = 0; i < emb.count(); ++i) {
    for (int j = i + 1; j < emb.count(); ++j) {
      double cos = emb.vectors.col(i).dot(emb.vectors.col(j)) /
                   (emb.vectors.col(i).norm() * emb.vectors.col(j).norm());
      if (clique(emb.ids[i]) == clique(emb.ids[j])) {
        min_intra = std::min(min_intra, cos);
      } else {
        max_inter = std::max(max_inter, cos);
      }
    }
  }
  require(min_intra > max_inter, "min intra " + fmt(min_intra) + " <= max inter " + fmt(max_inter));
  return "min intra-clique cos " + fmt(min_intra) + " > max inter-clique cos " + fmt(max_inter);
}

std::string criterion_9_metrics_oracle() {
  Rng rng(909);
  for (int trial = 0; trial < 1000; ++trial) {
    const int pool = 2 + rng.uniform_int(60);
    const int triples = 1 + rng.uniform_int(12);
    std::vector<int> ours_ranks, ref_ranks;
    std::vector<std::string> ids;
    for (int t = 0; t < triples; ++t) {
      Eigen::VectorXd scores(pool);
      for (int i = 0; i < pool; ++i) scores[i] = rng.uniform_int(9) / 3.0;  // many exact ties
      const int gold = rng.uniform_int(pool);

      // Naive reference: stable descending sort, count strictly-greater.
      std::vector<double> sorted(scores.data(), scores.data() + pool);
      std::sort(sorted.begin(), sorted.end(), std::greater<double>());
      int rank = 1;
      for (double s : sorted) {
        if (s <= scores[gold]) break;
        ++rank;
      }
      ref_ranks.push_back(rank);
      ours_ranks.push_back(nn::rank_of(scores, gold));
      ids.push_back("t" + std::to_string(t));
      require(ours_ranks.back() == ref_ranks.back(), "rank mismatch");
    }
    EvalReport ours = report_from_ranks(ids, ours_ranks);

    // Reference metric accumulation, same triple order.
    double mrr = 0, r1 = 0, r5 = 0, r10 = 0, avg = 0;
    for (int r : ref_ranks) {
      mrr += 1.0 / r;
      r1 += r <= 1;
      r5 += r <= 5;
      r10 += r <= 10;
      avg += r;
    }
    const double n = static_cast<double>(ref_ranks.size());
    require(ours.mrr == mrr / n, "MRR mismatch");
    require(ours.r1 == r1 / n, "R@1 mismatch");
    require(ours.r5 == r5 / n, "R@5 mismatch");
    require(ours.r10 == r10 / n, "R@10 mismatch");
    require(ours.avg_rank == avg / n, "AvgRank mismatch");
  }
  return "1000 random score matrices: ranks and all five metrics exact";
}

std::string criterion_10_train_determinism() {
  MiniFixture& fix = mini_fixture();
  ExampleSet dev(fix.examples.begin(), fix.examples.begin() + 8);
  TrainConfig tc;
  tc.batch_size = 8;
  tc.max_epochs = 4;
  tc.dropout = 0.5;
  tc.seed = 2718;

  nlohmann::json manifests[2];
  std::string dev_sequences[2];
  for (int run = 0; run < 2; ++run) {
    QAModel model(mini_config(Variant::temporal), fix.vocab, fix.pool.ids, 2718);
    TrainHistory history = train(model, fix.examples, dev, tc);
    // The manifest exactly as the train command writes it.
    nlohmann::json results = history.to_json();
    results["train_triples"] = fix.examples.size();
    results["dev_triples"] = dev.size();
    manifests[run] =
        make_manifest("train",
                      nlohmann::json{{"model", model.config().to_json()}, {"train", tc.to_json()}},
                      {{"dataset", hash_hex(fix.data.dataset.fingerprint())}}, results);
    std::ostringstream seq;
    for (const EpochRecord& e : history.epochs) seq << e.dev.r1 << "," << e.dev.mrr << ";";
    dev_sequences[run] = seq.str();
  }
  require(manifests[0].dump() == manifests[1].dump(), "manifests differ");
  require(dev_sequences[0] == dev_sequences[1], "dev metric sequences differ");
  return "two runs: identical manifests and dev-metric sequences";
}

std::optional<std::string> criterion_11_released_data() {
  const char* dir = std::getenv("TUTORQA_RELEASED_DATA");
  if (!dir) return std::nullopt;  // optional stretch check
  // With the released corpus mounted, run the full pipeline at w=5 and
  // report deviation from the reference numbers instead of failing.
  KnowledgeBase kb = KnowledgeBase::load(std::string(dir) + "/kb.json");
  AnswerPool pool = answer_pool(kb);
  Dataset train_ds = Dataset::load(kb, std::string(dir) + "/transcripts.jsonl",
                                   std::string(dir) + "/qa_train.jsonl",
                                   std::string(dir) + "/cues.jsonl", "");
  Dataset dev_ds = Dataset::load(kb, std::string(dir) + "/transcripts.jsonl",
                                 std::string(dir) + "/qa_dev.jsonl",
                                 std::string(dir) + "/cues.jsonl", "");
  Dataset test_ds = Dataset::load(kb, std::string(dir) + "/transcripts.jsonl",
                                  std::string(dir) + "/qa_test.jsonl",
                                  std::string(dir) + "/cues.jsonl", "");
  WalkConfig wc;
  wc.dim = 300;
  NodeEmbeddings graph_vectors = deepwalk(to_graph(kb), wc);
  nn::ModelConfig mc;  // paper-scale defaults, w=5
  mc.answer_init = nn::AnswerInit::graph;
  TrainConfig tc;
  Vocabulary vocab = Vocabulary::build(train_ds, 1);
  QAModel model(mc, vocab, pool.ids, tc.seed, nullptr, &graph_vectors);
  train(model, make_examples(train_ds, pool, mc.window), make_examples(dev_ds, pool, mc.window),
        tc);
  EvalReport rep = evaluate(model, test_ds, pool);
  return "full-data MRR " + fmt(rep.mrr) + " (reference 0.6637, deviation " +
         fmt(rep.mrr - 0.6637) + ")";
}

struct Criterion {
  int id;
  std::string name;
  std::function<std::string()> run;
};

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "one-shot matcher equals exhaustive oracle", criterion_1_matcher_oracle},
      {2, "gradient check, all four variants", criterion_2_gradients},
      {3, "attention weights normalized", criterion_3_attention_normalization},
      {4, "base equals hard temporal attention", criterion_4_base_equals_hard_temporal},
      {5, "overfit 50-triple synthetic set", criterion_5_overfit},
      {6, "context ablation trend", criterion_6_context_ablation_trend},
      {7, "graph-init beats random-init", criterion_7_graph_init_benefit},
      {8, "walk embedding clique separation", criterion_8_clique_separation},
      {9, "metrics equal sort-based oracle", criterion_9_metrics_oracle},
      {10, "train determinism", criterion_10_train_determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    try {
      std::string detail = c.run();
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << "[PASS] C" << c.id << " " << c.name << " (" << fmt(secs, 1) << "s): " << detail
                << "\n";
    } catch (const std::exception& e) {
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << "[FAIL] C" << c.id << " " << c.name << " (" << fmt(secs, 1)
                << "s): " << e.what() << "\n";
      ++failures;
    }
    std::cout.flush();
  }

  try {
    if (auto detail = criterion_11_released_data()) {
      std::cout << "[INFO] C11 released-data reproduction: " << *detail << "\n";
    } else {
      std::cout << "[SKIP] C11 released-data reproduction: TUTORQA_RELEASED_DATA not set\n";
    }
  } catch (const std::exception& e) {
    std::cout << "[INFO] C11 released-data reproduction failed to run: " << e.what() << "\n";
  }

  if (failures > 0) {
    std::cout << failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
