#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tutorqa/corpus.hpp"
#include "tutorqa/nn/encoders.hpp"
#include "tutorqa/nn/tensor.hpp"

namespace tutorqa::nn {

enum class Variant { base, temporal, spatial, dual };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ModelConfig {
  Variant variant = Variant::base;
  int window = 5;  // w: sentences before and after the anchor
  int embed_dim = 300;
  std::vector<int> filter_widths = {3, 4, 5};
  int maps_per_width = 100;
  int answer_dim = 300;
  int gru_hidden = 300;  // per direction
  int attn_hidden = 300;
  double dropout = 0.5;
  bool train_word_embeddings = true;
  AnswerInit answer_init = AnswerInit::random;

  int sentence_dim() const { return static_cast<int>(filter_widths.size()) * maps_per_width; }
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Per-inference attention weights, for inspection dumps. Streams in the
// spatial rows are ordered (tool, panel, dialog).
struct AttentionTrace {
  bool has_temporal = false;
  bool has_spatial = false;
  std::vector<double> temporal;
  std::vector<std::array<double, 3>> spatial;
};

// One bidirectional GRU direction.
struct GruParams {
  Parameter wz, uz, bz;
  Parameter wr, ur, br;
  Parameter wh, uh, bh;

  GruParams(const std::string& prefix, int in_dim, int hidden, Rng& rng);
  std::vector<Parameter*> parameters();
  int hidden() const { return wz.rows(); }
};

Var gru_step(Tape& tape, GruParams& p, Var x, Var h_prev);

struct BiGru {
  GruParams fwd;
  GruParams bwd;

  BiGru(const std::string& prefix, int in_dim, int hidden, Rng& rng);
  // One 2*hidden state per input step.
  std::vector<Var> run(Tape& tape, const std::vector<Var>& inputs);
  std::vector<Parameter*> parameters();
};

// Scalar scoring MLP: w2^T tanh(W1 [query; key] + b1) + b2.
struct AttnMlp {
  Parameter w1, b1, w2, b2;

  AttnMlp(const std::string& prefix, int query_dim, int key_dim, int hidden, Rng& rng);
  Var score(Tape& tape, Var query, Var key);
  std::vector<Parameter*> parameters();
};

// Context-fusion question answering model. All variants share the sentence
// encoder, the answer-embedding table (also used to encode cues), and the
// final projection; they differ in how the 2w+1 context steps are fused.
class QAModel {
 public:
  QAModel(ModelConfig cfg, Vocabulary vocab, std::vector<std::string> pool_ids, uint64_t seed,
          const WordVectors* word_init = nullptr, const NodeEmbeddings* graph_vectors = nullptr);
  QAModel(const QAModel&) = delete;
  QAModel& operator=(const QAModel&) = delete;

  struct Overrides {
    // Test hook: replaces the temporal attention weights (length 2w+1).
    const std::vector<double>* temporal_alpha = nullptr;
  };

  struct RunOptions {
    bool training = false;
    double dropout = 0.0;
    Rng* rng = nullptr;  // required when training with dropout > 0
    int gold = -1;       // pool index; >= 0 attaches an NLL loss node
    const Overrides* overrides = nullptr;
  };

  struct Result {
    Var scores = nullptr;
    Var loss = nullptr;
    Eigen::VectorXd score_values;
    AttentionTrace trace;
  };

  Result run(Tape& tape, const ContextWindow& window, const RunOptions& opts);
  Result run(Tape& tape, const ContextWindow& window) { return run(tape, window, RunOptions{}); }

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<std::string>& pool_ids() const { return pool_ids_; }
  int pool_index(const std::string& id) const;  // -1 when absent
  uint64_t vocab_hash() const { return vocab_.fingerprint(); }
  uint64_t pool_hash() const;

  const std::vector<Parameter*>& parameters() { return params_; }
  Parameter* find_parameter(const std::string& name);
  // Copies every parameter whose name and shape match; returns the count.
  int copy_parameters_from(QAModel& other);
  // Grad rules that hold regardless of optimizer: PAD embedding stays zero.
  void apply_grad_constraints();
  void zero_grads();
  size_t scalar_parameter_count() const;

  void save(const std::string& path) const;
  static std::unique_ptr<QAModel> load(const std::string& path);

 private:
  struct StepInputs;
  StepInputs prepare(Tape& tape, const ContextWindow& window, const RunOptions& opts);
  Var fuse_base(Tape& tape, StepInputs& in, const RunOptions& opts, AttentionTrace& trace);
  Var fuse_temporal(Tape& tape, StepInputs& in, const RunOptions& opts, AttentionTrace& trace);
  Var fuse_spatial(Tape& tape, StepInputs& in, const RunOptions& opts, AttentionTrace& trace);
  Var fuse_dual(Tape& tape, StepInputs& in, const RunOptions& opts, AttentionTrace& trace);
  Var temporal_alpha(Tape& tape, Var query, const std::vector<Var>& states,
                     const std::vector<char>& keep, const RunOptions& opts);
  Var spatial_combine(Tape& tape, Var query, const std::array<Var, 3>& cues,
                      std::array<double, 3>* beta_out);
  void register_params();

  ModelConfig cfg_;
  Vocabulary vocab_;
  std::vector<std::string> pool_ids_;
  std::unordered_map<std::string, int> pool_index_;

  WordTable words_;
  TextCnn cnn_;
  AnswerTable answers_;
  NoneVectors none_;
  std::optional<BiGru> gru_;            // context GRU (dual: transcript-only GRU)
  std::optional<BiGru> gru2_;           // dual: second GRU over [s; v-bar]
  std::optional<AttnMlp> temporal_mlp_;
  std::optional<AttnMlp> spatial_mlp_;
  Parameter proj_w_, proj_b_;

  std::vector<Parameter*> params_;
};

// 1 + number of candidates scoring strictly higher than gold.
int rank_of(const Eigen::VectorXd& scores, int gold);
// -log softmax(scores)[gold].
double nll_loss_value(const Eigen::VectorXd& scores, int gold);

}  // namespace tutorqa::nn
