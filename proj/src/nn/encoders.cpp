#include "tutorqa/nn/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "tutorqa/error.hpp"

namespace tutorqa::nn {

void init_uniform(Parameter& p, double limit, Rng& rng) {
  for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
      p.value(r, c) = rng.uniform(-limit, limit);
    }
  }
}

void init_xavier(Parameter& p, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  init_uniform(p, limit, rng);
}

WordTable::WordTable(const Vocabulary& vocab, int dim, Rng rng, const WordVectors* pretrained,
                     bool trainable)
    : table_("word_table", dim, vocab.size()) {
  init_uniform(table_, 0.25, rng);
  if (pretrained) {
    if (pretrained->dim() != dim) {
      throw validation_error("pretrained word vectors have dim " +
                             std::to_string(pretrained->dim()) + ", model expects " +
                             std::to_string(dim));
    }
    for (int i = 0; i < vocab.size(); ++i) {
      const std::string& token = vocab.tokens()[i];
      if (pretrained->contains(token)) table_.value.col(i) = pretrained->get(token);
    }
  }
  table_.value.col(Vocabulary::kPad).setZero();
  table_.trainable = trainable;
}

TextCnn::TextCnn(int embed_dim, const std::vector<int>& widths, int maps_per_width, Rng rng)
    : widths_(widths), maps_(maps_per_width) {
  if (widths_.empty() || maps_ <= 0) throw validation_error("TextCnn needs widths and maps");
  for (int w : widths_) {
    conv_w_.emplace_back("cnn.w" + std::to_string(w), maps_, w * embed_dim);
    conv_b_.emplace_back("cnn.b" + std::to_string(w), maps_, 1);
    init_xavier(conv_w_.back(), rng);
    // Strictly positive bias keeps the rectifier off its kink for all-PAD
    // inputs (zero embeddings reach the rectifier at exactly the bias).
    Parameter& b = conv_b_.back();
    for (Eigen::Index r = 0; r < b.value.rows(); ++r) b.value(r, 0) = rng.uniform(0.01, 0.05);
  }
}

int TextCnn::max_width() const { return *std::max_element(widths_.begin(), widths_.end()); }

Var TextCnn::encode(Tape& tape, WordTable& words, const std::vector<int>& ids) {
  std::vector<int> padded = ids;
  while (static_cast<int>(padded.size()) < max_width()) padded.push_back(Vocabulary::kPad);

  Var embedded = words.embed(tape, padded);
  std::vector<Var> pooled;
  pooled.reserve(widths_.size());
  for (size_t i = 0; i < widths_.size(); ++i) {
    Var conv = tape.conv1d(conv_w_[i], conv_b_[i], embedded, widths_[i]);
    pooled.push_back(tape.max_over_cols(tape.relu(conv)));
  }
  return tape.vcat(pooled);
}

std::vector<Parameter*> TextCnn::parameters() {
  std::vector<Parameter*> out;
  for (size_t i = 0; i < conv_w_.size(); ++i) {
    out.push_back(&conv_w_[i]);
    out.push_back(&conv_b_[i]);
  }
  return out;
}

std::string to_string(AnswerInit init) { return init == AnswerInit::random ? "random" : "graph"; }

AnswerInit answer_init_from_string(const std::string& s) {
  if (s == "random") return AnswerInit::random;
  if (s == "graph") return AnswerInit::graph;
  throw validation_error("unknown answer init '" + s + "' (expected random|graph)");
}

AnswerTable::AnswerTable(const std::vector<std::string>& pool_ids, int dim, AnswerInit init,
                         Rng rng, const NodeEmbeddings* graph_vectors)
    : table_("answer_table", dim, static_cast<int>(pool_ids.size())) {
  init_uniform(table_, 0.01, rng);
  if (init == AnswerInit::graph) {
    if (!graph_vectors) throw validation_error("graph answer init requires node embeddings");
    if (graph_vectors->dim() != dim) {
      throw validation_error("graph embeddings have dim " + std::to_string(graph_vectors->dim()) +
                             ", model expects " + std::to_string(dim));
    }
    for (size_t i = 0; i < pool_ids.size(); ++i) {
      table_.value.col(static_cast<Eigen::Index>(i)) = graph_vectors->vector_of(pool_ids[i]);
    }
  }
}

NoneVectors::NoneVectors(int dim, Rng rng)
    : tool("none.tool", dim, 1), panel("none.panel", dim, 1), dialog("none.dialog", dim, 1) {
  init_uniform(tool, 0.01, rng);
  init_uniform(panel, 0.01, rng);
  init_uniform(dialog, 0.01, rng);
}

std::vector<Var> encode_cues(Tape& tape, AnswerTable& answers, NoneVectors& none, int tool_idx,
                             int panel_idx, int dialog_idx) {
  auto one = [&](int idx, Parameter& fallback) -> Var {
    if (idx < 0) return tape.embed_cols(fallback, {0});
    if (idx >= answers.pool_size()) throw runtime_error("cue index out of pool range");
    return answers.encode(tape, idx);
  };
  return {one(tool_idx, none.tool), one(panel_idx, none.panel), one(dialog_idx, none.dialog)};
}

}  // namespace tutorqa::nn
