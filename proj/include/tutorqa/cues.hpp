#pragma once

#include <map>
#include <string>
#include <vector>

#include "tutorqa/corpus.hpp"
#include "tutorqa/kb.hpp"
#include "tutorqa/wordvec.hpp"

namespace tutorqa {

enum class CueStream { tool, panel, dialog };

std::string to_string(CueStream s);

struct MatchResult {
  std::string id;
  double similarity = 0.0;
};

// One reference bag per recognizable candidate, split by stream. Panels and
// pop-up dialogs are matched from OCR text; tools come from an external
// image classifier and have no reference bags here.
struct CueCatalog {
  std::map<std::string, TokenBag> panel;
  std::map<std::string, TokenBag> dialog;

  const std::map<std::string, TokenBag>& for_stream(CueStream s) const;
  // ref_bags.jsonl rows: {"id", "bag": {word: count}}; stream derived from
  // the entity type in the KB.
  static CueCatalog load(const std::string& path, const KnowledgeBase& kb);
  void save(const std::string& path) const;
};

// Sum over distinct test words of count / max(eps, min distance to any
// train word). Empty test or train bag scores 0.
double bag_similarity(const TokenBag& test, const TokenBag& train, const WordVectors& wv);

inline constexpr double kDistanceClamp = 1e-6;

// All stream candidates ranked by similarity descending, ties by id
// ascending. Empty test bag yields no prediction (empty list).
std::vector<MatchResult> recognize(const TokenBag& test, CueStream stream, const CueCatalog& catalog,
                                   const WordVectors& wv);

// External tool classifier output, keyed by segment.
using ToolPredictions = std::map<SegmentKey, std::string>;

ToolPredictions load_tool_predictions(const std::string& path);
void save_tool_predictions(const ToolPredictions& preds, const std::string& path);

// Predicted per-segment cues: panel/dialog slots from top-1 recognition of
// the segment's OCR bags, tool slot copied from the external predictions.
CueOverrides predict_cue_streams(const OcrBags& ocr, const ToolPredictions& tools,
                                 const CueCatalog& catalog, const WordVectors& wv,
                                 const KnowledgeBase& kb);
CueOverrides predict_cue_streams(const Dataset& ds, const ToolPredictions& tools,
                                 const CueCatalog& catalog, const WordVectors& wv,
                                 const KnowledgeBase& kb);

void save_cues(const CueOverrides& cues, const std::string& path);
CueOverrides load_cues(const std::string& path);

struct CueAccuracy {
  double tool = 0.0, panel = 0.0, dialog = 0.0;
  int tool_total = 0, panel_total = 0, dialog_total = 0;
  int tool_correct = 0, panel_correct = 0, dialog_correct = 0;
};

// Per-stream exact-match accuracy over segments where the gold stream is
// present.
CueAccuracy cue_accuracy(const CueOverrides& predicted, const Dataset& gold);

}  // namespace tutorqa
