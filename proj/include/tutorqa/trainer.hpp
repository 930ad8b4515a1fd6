#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tutorqa/deepwalk.hpp"
#include "tutorqa/evaluator.hpp"
#include "tutorqa/nn/model.hpp"

namespace tutorqa {

struct TrainConfig {
  int batch_size = 128;
  int max_epochs = 100;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double dropout = 0.5;
  uint64_t seed = 1;
  // Dev accuracy (recall@1) selects the best epoch; earliest wins ties.

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<nn::Parameter*> params, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step();

 private:
  std::vector<nn::Parameter*> params_;
  std::vector<nn::Mat> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  EvalReport dev;
  double wall_ms = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int selected_epoch = 0;  // 0 = initial parameters (no epochs or empty dev)

  // Wall times are excluded by default so identical runs serialize
  // identically.
  nlohmann::json to_json(bool include_wall = false) const;
};

// Mini-batch Adam over shuffled batches; dev accuracy after each epoch with
// dropout off; the model is left holding the best epoch's parameters.
TrainHistory train(nn::QAModel& model, const ExampleSet& train_set, const ExampleSet& dev_set,
                   const TrainConfig& cfg);

struct GradCheckResult {
  double max_rel_error = 0.0;
  size_t coords_checked = 0;
  std::string warning;
};

// Central-difference check of the mean-loss gradient. sample_coords < 0
// checks every coordinate; 0 checks none (reported with a warning);
// positive requests are raised to at least 200 sampled coordinates.
GradCheckResult gradient_check(nn::QAModel& model, const ExampleSet& batch, double epsilon = 1e-4,
                               long sample_coords = -1, uint64_t seed = 7);

struct AblationRow {
  std::string name;
  bool transcript = true;
  bool cues = true;
  bool graph_init = false;
};

// The eight standard rows: q, q+t, q+v, q+t+v, then the same with
// graph-initialized answer embeddings.
std::vector<AblationRow> default_ablation_rows();

struct AblationResult {
  AblationRow row;
  EvalReport test;
  TrainHistory history;
};

// Trains one model per row from a shared initialization seed and evaluates
// on the test split. Graph-initialized rows take their answer embeddings
// from `graph_vectors`.
std::vector<AblationResult> run_ablation(
    const KnowledgeBase& kb, const AnswerPool& pool, const Dataset& train_ds,
    const Dataset& dev_ds, const Dataset& test_ds, const nn::ModelConfig& model_cfg,
    const TrainConfig& train_cfg, const std::vector<AblationRow>& rows,
    const NodeEmbeddings* graph_vectors, uint64_t model_seed,
    CueSource test_cue_source = CueSource::gold, const CueOverrides* predicted = nullptr);

std::string ablation_text_table(const std::vector<AblationResult>& results);

}  // namespace tutorqa
