#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>

#include "doctest.h"
#include "test_support.hpp"
#include "tutorqa/error.hpp"
#include "tutorqa/trainer.hpp"

using namespace tutorqa;
using namespace tutorqa::nn;
using test::SynthFixture;

namespace {

SynthSpec tiny_spec() {
  SynthSpec spec;
  spec.n_videos = 2;
  spec.sents_per_video = 12;
  spec.kb_size = 21;  // 3 clusters
  spec.n_triples = 12;
  spec.cue_determined_fraction = 0.5;
  spec.seed = 31;
  return spec;
}

}  // namespace

TEST_CASE("all variants produce full score vectors and valid traces") {
  SynthFixture fix(tiny_spec());
  ExampleSet examples = fix.examples(1);
  REQUIRE(!examples.empty());

  for (Variant variant : {Variant::base, Variant::temporal, Variant::spatial, Variant::dual}) {
    QAModel model(test::mini_config(variant, 1), fix.vocab, fix.pool.ids, 5);
    Tape tape;
    QAModel::Result res = model.run(tape, examples[0].window);
    CHECK(res.score_values.size() == fix.pool.size());
    CHECK(res.score_values.allFinite());

    const bool has_t = variant == Variant::temporal || variant == Variant::dual;
    const bool has_s = variant == Variant::spatial || variant == Variant::dual;
    CHECK(res.trace.has_temporal == has_t);
    CHECK(res.trace.has_spatial == has_s);
    if (has_t) {
      CHECK(res.trace.temporal.size() == 3);
      double sum = 0.0;
      for (double a : res.trace.temporal) {
        CHECK(a >= 0.0);
        sum += a;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
    if (has_s) {
      CHECK(res.trace.spatial.size() == 3);
      for (const auto& beta : res.trace.spatial) {
        double sum = beta[0] + beta[1] + beta[2];
        CHECK(std::abs(sum - 1.0) <= 1e-6);
        for (double b : beta) CHECK(b >= 0.0);
      }
    }
  }
}

TEST_CASE("the default window spans eleven steps") {
  SynthSpec spec = tiny_spec();
  spec.sents_per_video = 24;
  SynthFixture fix(spec);
  QAModel model(test::mini_config(Variant::temporal, 5), fix.vocab, fix.pool.ids, 4);
  ExampleSet examples = fix.examples(5);
  Tape tape;
  QAModel::Result res = model.run(tape, examples[0].window);
  CHECK(examples[0].window.steps.size() == 11);
  CHECK(res.trace.temporal.size() == 11);  // one state per GRU step
}

TEST_CASE("eval mode forward is deterministic") {
  SynthFixture fix(tiny_spec());
  ExampleSet examples = fix.examples(1);
  QAModel model(test::mini_config(Variant::dual, 1), fix.vocab, fix.pool.ids, 6);
  Tape t1, t2;
  QAModel::Result a = model.run(t1, examples[0].window);
  QAModel::Result b = model.run(t2, examples[0].window);
  CHECK(a.score_values == b.score_values);
}

TEST_CASE("zeroed attention output layer gives uniform weights over non-pads") {
  SynthFixture fix(tiny_spec());
  QAModel model(test::mini_config(Variant::temporal, 1), fix.vocab, fix.pool.ids, 7);
  model.find_parameter("attn.t.w2")->value.setZero();
  model.find_parameter("attn.t.b2")->value.setZero();

  // Pick an example with no pads (anchor away from the video edges).
  ExampleSet examples = fix.examples(1);
  const TrainExample* pick = nullptr;
  for (const TrainExample& ex : examples) {
    bool padded = false;
    for (const WindowStep& s : ex.window.steps) padded |= s.pad;
    if (!padded) pick = &ex;
  }
  REQUIRE(pick != nullptr);

  Tape tape;
  QAModel::Result res = model.run(tape, pick->window);
  for (double a : res.trace.temporal) CHECK(a == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("pad steps get zero temporal attention") {
  SynthFixture fix(tiny_spec());
  QAModel model(test::mini_config(Variant::temporal, 2), fix.vocab, fix.pool.ids, 8);
  ExampleSet examples = fix.examples(2);
  const TrainExample* padded = nullptr;
  for (const TrainExample& ex : examples) {
    if (ex.window.steps.front().pad || ex.window.steps.back().pad) padded = &ex;
  }
  REQUIRE(padded != nullptr);

  Tape tape;
  QAModel::Result res = model.run(tape, padded->window);
  for (size_t j = 0; j < padded->window.steps.size(); ++j) {
    if (padded->window.steps[j].pad) CHECK(res.trace.temporal[j] == 0.0);
  }
}

TEST_CASE("temporal with one-hot attention at the center equals base") {
  SynthFixture fix(tiny_spec());
  const int w = 1;
  QAModel temporal(test::mini_config(Variant::temporal, w), fix.vocab, fix.pool.ids, 9);
  QAModel base(test::mini_config(Variant::base, w), fix.vocab, fix.pool.ids, 10);
  base.copy_parameters_from(temporal);  // shared subset: encoders, GRU, projection

  std::vector<double> hard(2 * w + 1, 0.0);
  hard[w] = 1.0;
  QAModel::Overrides ov;
  ov.temporal_alpha = &hard;
  QAModel::RunOptions opts;
  opts.overrides = &ov;

  for (const TrainExample& ex : fix.examples(w)) {
    Tape t1, t2;
    Eigen::VectorXd a = temporal.run(t1, ex.window, opts).score_values;
    Eigen::VectorXd b = base.run(t2, ex.window).score_values;
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("candidate permutation equivariance") {
  SynthFixture fix(tiny_spec());
  const int w = 1;
  QAModel model(test::mini_config(Variant::base, w), fix.vocab, fix.pool.ids, 11);

  // Same parameters, pool order reversed, answer columns re-ordered to match.
  std::vector<std::string> permuted_ids(fix.pool.ids.rbegin(), fix.pool.ids.rend());
  QAModel permuted(test::mini_config(Variant::base, w), fix.vocab, permuted_ids, 12);
  permuted.copy_parameters_from(model);
  Parameter* src = model.find_parameter("answer_table");
  Parameter* dst = permuted.find_parameter("answer_table");
  const int n = fix.pool.size();
  for (int i = 0; i < n; ++i) dst->value.col(n - 1 - i) = src->value.col(i);

  ExampleSet examples = fix.examples(w);
  for (size_t k = 0; k < 3 && k < examples.size(); ++k) {
    Tape t1, t2;
    Eigen::VectorXd a = model.run(t1, examples[k].window).score_values;
    Eigen::VectorXd b = permuted.run(t2, examples[k].window).score_values;
    for (int i = 0; i < n; ++i) CHECK(a[i] == doctest::Approx(b[n - 1 - i]).epsilon(1e-12));
    const int gold = examples[k].gold;
    CHECK(rank_of(a, gold) == rank_of(b, n - 1 - gold));
  }
}

TEST_CASE("rank_of counts strictly greater scores") {
  Eigen::VectorXd s(3);
  s << 0.9, 0.5, 0.7;
  CHECK(rank_of(s, 2) == 2);
  CHECK(rank_of(s, 0) == 1);
  CHECK(rank_of(s, 1) == 3);

  Eigen::VectorXd ties = Eigen::VectorXd::Constant(5, 1.0);
  CHECK(rank_of(ties, 3) == 1);  // optimistic tie rule

  Eigen::VectorXd unique_max(4);
  unique_max << 0, 0, 9, 0;
  CHECK(rank_of(unique_max, 2) == 1);
}

TEST_CASE("loss values match hand arithmetic") {
  Eigen::VectorXd uniform = Eigen::VectorXd::Zero(7);
  CHECK(nll_loss_value(uniform, 3) == doctest::Approx(std::log(7.0)).epsilon(1e-12));

  Eigen::VectorXd spread(3);
  spread << 1, 2, 3;
  CHECK(nll_loss_value(spread, 2) == doctest::Approx(0.40760596444438).epsilon(1e-9));

  Eigen::VectorXd dominant(4);
  dominant << 0, 0, 200, 0;
  CHECK(nll_loss_value(dominant, 2) < 1e-12);
}

TEST_CASE("window length mismatch is rejected") {
  SynthFixture fix(tiny_spec());
  QAModel model(test::mini_config(Variant::base, 2), fix.vocab, fix.pool.ids, 13);
  ExampleSet examples = fix.examples(1);  // 3 steps, model expects 5
  Tape tape;
  CHECK_THROWS_WITH_AS(model.run(tape, examples[0].window), doctest::Contains("steps"), Error);
}

TEST_CASE("dropout training path stays finite and differs from eval") {
  SynthFixture fix(tiny_spec());
  QAModel model(test::mini_config(Variant::dual, 1), fix.vocab, fix.pool.ids, 14);
  ExampleSet examples = fix.examples(1);

  Rng rng(55);
  QAModel::RunOptions opts;
  opts.training = true;
  opts.dropout = 0.5;
  opts.rng = &rng;
  opts.gold = examples[0].gold;
  Tape tape;
  QAModel::Result res = model.run(tape, examples[0].window, opts);
  CHECK(res.score_values.allFinite());
  CHECK(std::isfinite(res.loss->value(0, 0)));

  Tape t2;
  Eigen::VectorXd eval_scores = model.run(t2, examples[0].window).score_values;
  CHECK((res.score_values - eval_scores).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("checkpoint round trip preserves scores and rejects tampering") {
  SynthFixture fix(tiny_spec());
  QAModel model(test::mini_config(Variant::dual, 1), fix.vocab, fix.pool.ids, 15);
  ExampleSet examples = fix.examples(1);
  Tape t1;
  Eigen::VectorXd before = model.run(t1, examples[0].window).score_values;

  const std::string path = "/tmp/tutorqa_ckpt_test.bin";
  model.save(path);
  auto loaded = QAModel::load(path);
  Tape t2;
  Eigen::VectorXd after = loaded->run(t2, examples[0].window).score_values;
  CHECK(before == after);
  CHECK(loaded->config().variant == Variant::dual);
  CHECK(loaded->pool_hash() == model.pool_hash());

  // Flip one pool id inside the header: hash check must refuse the load.
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    size_t at = bytes.find(fix.pool.ids[0]);
    REQUIRE(at != std::string::npos);
    bytes[at] = 'Z';
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(QAModel::load(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("miniature gradient check per variant (sampled)") {
  SynthFixture fix(tiny_spec());
  ExampleSet examples = fix.examples(1);
  ExampleSet batch(examples.begin(), examples.begin() + 3);
  for (Variant variant : {Variant::base, Variant::temporal, Variant::spatial, Variant::dual}) {
    QAModel model(test::mini_config(variant, 1), fix.vocab, fix.pool.ids, 16);
    GradCheckResult res = gradient_check(model, batch, 1e-4, 250, 99);
    INFO("variant ", to_string(variant), " max rel err ", res.max_rel_error);
    CHECK(res.max_rel_error <= 1e-4);
  }
}
