#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "tutorqa/error.hpp"
#include "tutorqa/nn/encoders.hpp"
#include "tutorqa/wordvec.hpp"

using namespace tutorqa;
using namespace tutorqa::nn;

namespace {

Vocabulary toy_vocab() {
  return Vocabulary::from_tokens({"<pad>", "<unk>", "alpha", "beta", "gamma", "delta", "epsilon",
                                  "zeta", "eta"});
}

}  // namespace

TEST_CASE("cnn window arithmetic: 7 tokens, width 5 -> 3 windows") {
  Vocabulary vocab = toy_vocab();
  WordTable words(vocab, 6, Rng(1));
  Parameter w("w", 4, 5 * 6), b("b", 4, 1);
  Rng wrng(2);
  init_xavier(w, wrng);

  Tape tape;
  std::vector<int> ids = {2, 3, 4, 5, 6, 7, 8};
  Var conv = tape.conv1d(w, b, words.embed(tape, ids), 5);
  CHECK(conv->value.rows() == 4);
  CHECK(conv->value.cols() == 3);
}

TEST_CASE("sentence encoder output dim and determinism") {
  Vocabulary vocab = toy_vocab();
  WordTable words(vocab, 6, Rng(1));
  TextCnn cnn(6, {3, 4, 5}, 10, Rng(2));
  CHECK(cnn.out_dim() == 30);

  Tape t1, t2;
  std::vector<int> ids = {2, 3, 4, 5, 6, 7, 8};
  Var a = cnn.encode(t1, words, ids);
  Var b = cnn.encode(t2, words, ids);
  CHECK(a->value.rows() == 30);
  CHECK(a->value.cols() == 1);
  CHECK(a->value == b->value);
  CHECK(a->value.allFinite());
}

TEST_CASE("empty sentence encodes the rectified biases") {
  Vocabulary vocab = toy_vocab();
  WordTable words(vocab, 6, Rng(3));
  TextCnn cnn(6, {3, 4, 5}, 4, Rng(4));

  Tape tape;
  Var out = cnn.encode(tape, words, {});
  // All-PAD input is all-zero embeddings, so each conv window yields the
  // bias; pooling then gives relu(bias) per map.
  std::vector<Parameter*> ps = cnn.parameters();
  Eigen::VectorXd expected(12);
  int at = 0;
  for (size_t i = 0; i < ps.size(); i += 2) {
    Parameter* bias = ps[i + 1];
    for (int m = 0; m < 4; ++m) expected[at++] = std::max(0.0, bias->value(m, 0));
  }
  CHECK((out->value.col(0) - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("encoder is order-sensitive") {
  Vocabulary vocab = toy_vocab();
  WordTable words(vocab, 8, Rng(5));
  TextCnn cnn(8, {3, 4, 5}, 6, Rng(6));

  Tape t1, t2;
  Var a = cnn.encode(t1, words, {2, 3, 4, 5, 6, 7});
  Var b = cnn.encode(t2, words, {3, 2, 4, 5, 6, 7});
  CHECK((a->value - b->value).cwiseAbs().maxCoeff() > 1e-8);
}

TEST_CASE("pad embedding is zero and excluded from pretrained overrides") {
  Vocabulary vocab = toy_vocab();
  WordVectors pre(6);
  Eigen::VectorXd v(6);
  v << 1, 2, 3, 4, 5, 6;
  pre.set("alpha", v);
  pre.set("<pad>", v);  // must not survive into the table

  WordTable words(vocab, 6, Rng(7), &pre);
  CHECK(words.parameter().value.col(Vocabulary::kPad).isZero());
  CHECK(words.parameter().value.col(2) == v);
  // Tokens without pretrained vectors keep their random init.
  CHECK(words.parameter().value.col(3).cwiseAbs().maxCoeff() <= 0.25);
}

TEST_CASE("answer table graph initialization matches node embeddings") {
  std::vector<std::string> pool = {"a", "b", "c"};
  NodeEmbeddings emb;
  emb.ids = pool;
  for (int i = 0; i < 3; ++i) emb.index[pool[i]] = i;
  emb.vectors = Eigen::MatrixXd::Random(5, 3);

  AnswerTable random_init(pool, 5, AnswerInit::random, Rng(8));
  CHECK(random_init.parameter().value.cwiseAbs().maxCoeff() <= 0.01);

  AnswerTable graph_init(pool, 5, AnswerInit::graph, Rng(8), &emb);
  CHECK(graph_init.parameter().value == emb.vectors);

  CHECK_THROWS_AS(AnswerTable(pool, 5, AnswerInit::graph, Rng(8), nullptr), Error);
}

TEST_CASE("score_all computes dot products in pool order") {
  std::vector<std::string> pool = {"a", "b", "c"};
  AnswerTable table(pool, 2, AnswerInit::random, Rng(9));
  table.parameter().value << 1, 0, 2,
                             0, 1, 2;
  Parameter f("f", 2, 1);
  f.value << 3, 4;

  Tape tape;
  Var scores = table.score_all(tape, tape.embed_cols(f, {0}));
  CHECK(scores->value(0, 0) == 3.0);
  CHECK(scores->value(1, 0) == 4.0);
  CHECK(scores->value(2, 0) == 14.0);

  // Zero feature vector scores zero everywhere.
  Parameter z("z", 2, 1);
  Tape t2;
  Var zs = table.score_all(t2, t2.embed_cols(z, {0}));
  CHECK(zs->value.isZero());
}

TEST_CASE("cue encoding shares the answer table parameters") {
  std::vector<std::string> pool = {"tool_a", "panel_b", "dialog_c"};
  AnswerTable answers(pool, 4, AnswerInit::random, Rng(10));
  NoneVectors none(4, Rng(11));

  Tape tape;
  std::vector<Var> cues = encode_cues(tape, answers, none, 0, -1, 2);
  CHECK(cues[0]->value == answers.parameter().value.col(0));
  CHECK(cues[1]->value == none.panel.value);
  CHECK(cues[2]->value == answers.parameter().value.col(2));

  // An update to the answer row is visible to the cue encoder immediately.
  answers.parameter().value.col(0).setConstant(0.5);
  Tape t2;
  std::vector<Var> again = encode_cues(t2, answers, none, 0, -1, -1);
  CHECK(again[0]->value == answers.parameter().value.col(0));

  // Gradients through the cue path land in the answer table.
  answers.parameter().zero_grad();
  Tape t3;
  std::vector<Var> c3 = encode_cues(t3, answers, none, 1, -1, -1);
  t3.backward(t3.sum(c3[0]));
  CHECK(answers.parameter().grad.col(1).isOnes());
  CHECK(answers.parameter().grad.col(0).isZero());
}

TEST_CASE("oov word vectors are deterministic unit vectors") {
  WordVectors wv(16);
  Eigen::VectorXd a = wv.get("never-seen");
  Eigen::VectorXd b = wv.get("never-seen");
  CHECK(a == b);
  CHECK(std::abs(a.norm() - 1.0) < 1e-12);
  CHECK(wv.get("another").norm() == doctest::Approx(1.0));
  CHECK((wv.get("another") - a).norm() > 0.1);
}
