#pragma once

#include <cstdint>
#include <vector>

#include "tutorqa/corpus.hpp"
#include "tutorqa/cues.hpp"
#include "tutorqa/kb.hpp"

namespace tutorqa {

struct SynthSpec {
  int n_videos = 4;
  int sents_per_video = 30;
  int kb_size = 35;  // total candidates (entities + options); must be >= 7
  int n_triples = 200;
  double cue_determined_fraction = 0.5;
  uint64_t seed = 1;
};

enum class TripleKind { cue, mention, relation };

// Desk-scale stand-in for the real corpus. The KB is a set of disjoint
// clusters (tool, its shortcut, a panel and a dialog with options), so graph
// embeddings separate clusters cleanly. Transcripts narrate one cluster at a
// time; some segments show cues from a different cluster than the narration
// ("diverged" segments), which makes cue questions unanswerable from text.
// Question kinds:
//   cue      - asks for the tool/panel/dialog shown at step t (diverged
//              segments only, so only the cue stream carries the answer)
//   mention  - asks for the option named in sentence t
//   relation - asks for the shortcut of the tool shown at step t; shortcut
//              names never appear in transcripts or cues
struct SynthData {
  KnowledgeBase kb;
  Dataset dataset;
  CueCatalog catalog;
  ToolPredictions tool_predictions;  // gold tool stream, classifier stand-in
  std::vector<TripleKind> kinds;     // per triple
  std::vector<int> cluster_of;       // cluster of the gold answer, per triple
  int n_clusters = 0;
};

SynthData synth_dataset(const SynthSpec& spec);

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> dev;
  std::vector<int> test;
};

// Relation triples whose cluster falls in the held-out tail go entirely to
// test (their shortcut answers never appear in training); everything else is
// shuffled into train/dev/test by the given fractions.
SplitIndices split_synth(const SynthData& data, double heldout_cluster_fraction, double train_frac,
                         double dev_frac, uint64_t seed);

Dataset dataset_subset(const Dataset& ds, const std::vector<int>& triple_indices);

// Replaces a fraction of the distinct words in every OCR bag with junk
// tokens; used to exercise noisy cue recognition.
Dataset corrupt_ocr_bags(const KnowledgeBase& kb, const Dataset& ds, double word_replace_fraction,
                         uint64_t seed);

}  // namespace tutorqa
