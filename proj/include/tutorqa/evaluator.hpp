#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "tutorqa/corpus.hpp"
#include "tutorqa/cues.hpp"
#include "tutorqa/kb.hpp"
#include "tutorqa/nn/model.hpp"

namespace tutorqa {

struct TrainExample {
  ContextWindow window;
  int gold = 0;  // pool index
  std::string triple_id;
};

using ExampleSet = std::vector<TrainExample>;

enum class CueSource { gold, predicted };

std::string to_string(CueSource s);
CueSource cue_source_from_string(const std::string& s);

// Materializes one window per triple. `predicted` must be non-null when
// source == predicted.
ExampleSet make_examples(const Dataset& ds, const AnswerPool& pool, int w,
                         CueSource source = CueSource::gold,
                         const CueOverrides* predicted = nullptr, ContextMask mask = {});

struct EvalReport {
  double mrr = 0.0;
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  double avg_rank = 0.0;
  std::vector<std::string> triple_ids;
  std::vector<int> ranks;
  std::string fingerprint;

  int count() const { return static_cast<int>(ranks.size()); }
  nlohmann::json to_json(bool include_ranks = false) const;
  std::string text_table(const std::string& label) const;
};

// Metrics from already-computed ranks (bucket reports, references).
EvalReport report_from_ranks(std::vector<std::string> ids, std::vector<int> ranks);

EvalReport evaluate_examples(nn::QAModel& model, const ExampleSet& examples);

// End-to-end evaluation; refuses to score a dataset whose candidate pool
// does not match the model checkpoint.
EvalReport evaluate(nn::QAModel& model, const Dataset& ds, const AnswerPool& pool,
                    CueSource source = CueSource::gold, const CueOverrides* predicted = nullptr,
                    ContextMask mask = {});

// Test-set split by how well the predicted cues match the gold cues over
// each triple's window: every present gold slot matched / none / some.
// Triples whose windows carry no gold cue at all are counted separately.
struct StratifiedReports {
  EvalReport wrong;
  EvalReport partial;
  EvalReport correct;
  int no_cue_triples = 0;

  nlohmann::json to_json() const;
  std::string text_table() const;
};

StratifiedReports stratify_by_cue_error(const EvalReport& results, const Dataset& ds,
                                        const CueOverrides& predicted, int w);

// One JSON line per triple with step-labelled temporal and spatial weights.
nlohmann::json attention_trace_json(const std::string& triple_id, const nn::AttentionTrace& trace,
                                    int w);

}  // namespace tutorqa
