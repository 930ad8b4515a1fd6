#pragma once

#include <string>
#include <vector>

#include "tutorqa/corpus.hpp"
#include "tutorqa/deepwalk.hpp"
#include "tutorqa/nn/tensor.hpp"
#include "tutorqa/wordvec.hpp"

namespace tutorqa::nn {

// Uniform init in [-limit, limit], row-major traversal for reproducibility.
void init_uniform(Parameter& p, double limit, Rng& rng);
// Xavier/Glorot uniform for weight matrices.
void init_xavier(Parameter& p, Rng& rng);

// Word embedding table (dim x |vocab|). Column 0 is the PAD vector: all
// zeros, frozen (its gradient is cleared before every optimizer step).
class WordTable {
 public:
  WordTable(const Vocabulary& vocab, int dim, Rng rng, const WordVectors* pretrained = nullptr,
            bool trainable = true);

  Var embed(Tape& tape, const std::vector<int>& ids) { return tape.embed_cols(table_, ids); }
  Parameter& parameter() { return table_; }
  int dim() const { return static_cast<int>(table_.value.rows()); }
  void clear_pad_grad() { table_.grad.col(Vocabulary::kPad).setZero(); }

 private:
  Parameter table_;
};

// Kim-style sentence encoder: per filter width, valid convolution over the
// word embeddings, rectifier, max-over-time; pooled maps concatenated.
class TextCnn {
 public:
  TextCnn(int embed_dim, const std::vector<int>& widths, int maps_per_width, Rng rng);

  // ids are vocabulary indices; shorter inputs are right-padded with PAD up
  // to the largest filter width.
  Var encode(Tape& tape, WordTable& words, const std::vector<int>& ids);

  int out_dim() const { return static_cast<int>(widths_.size()) * maps_; }
  int max_width() const;
  std::vector<Parameter*> parameters();

 private:
  std::vector<int> widths_;
  int maps_;
  std::vector<Parameter> conv_w_;
  std::vector<Parameter> conv_b_;
};

enum class AnswerInit { random, graph };

std::string to_string(AnswerInit init);
AnswerInit answer_init_from_string(const std::string& s);

// Shared answer-candidate embedding table g(a) (dim x |pool|). Cue vectors
// are read from the same parameters, so an update to a candidate's answer
// row is immediately visible to the cue encoder.
class AnswerTable {
 public:
  AnswerTable(const std::vector<std::string>& pool_ids, int dim, AnswerInit init, Rng rng,
              const NodeEmbeddings* graph_vectors = nullptr);

  Var encode(Tape& tape, int index) { return tape.embed_cols(table_, {index}); }
  Var score_all(Tape& tape, Var f) { return tape.score_all(table_, f); }
  Parameter& parameter() { return table_; }
  int dim() const { return static_cast<int>(table_.value.rows()); }
  int pool_size() const { return static_cast<int>(table_.value.cols()); }

 private:
  Parameter table_;
};

// Learned stand-ins for absent cue streams, one per stream.
struct NoneVectors {
  Parameter tool;
  Parameter panel;
  Parameter dialog;

  NoneVectors(int dim, Rng rng);
  std::vector<Parameter*> parameters() { return {&tool, &panel, &dialog}; }
};

// Three cue vectors in (tool, panel, dialog) order; indices < 0 mean the
// stream is absent and the learned none-vector is used.
std::vector<Var> encode_cues(Tape& tape, AnswerTable& answers, NoneVectors& none, int tool_idx,
                             int panel_idx, int dialog_idx);

}  // namespace tutorqa::nn
