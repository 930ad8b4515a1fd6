#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tutorqa/kb.hpp"

namespace tutorqa {

struct Sentence {
  std::string video_id;
  int index = 0;  // 0-based, contiguous within a video
  int64_t start_ms = 0;
  int64_t end_ms = 0;
  std::vector<std::string> tokens;  // lowercase
};

struct QATriple {
  std::string id;
  std::string video_id;
  int t = 0;  // index of the sentence being spoken when the question was asked
  std::vector<std::string> question_tokens;
  std::string answer_id;
};

struct CueAnnotation {
  std::optional<std::string> tool;
  std::optional<std::string> panel;
  std::optional<std::string> dialog;

  bool any() const { return tool || panel || dialog; }
  bool operator==(const CueAnnotation&) const = default;
};

enum class OcrRegion { panel, dialog };

// OCR word-count bag. Ordered map keeps word iteration canonical so that
// similarity sums are reproducible bit-for-bit.
struct TokenBag {
  std::map<std::string, int> counts;

  bool empty() const { return counts.empty(); }
  int distinct() const { return static_cast<int>(counts.size()); }
  void add(const std::string& word, int count = 1) { counts[word] += count; }
};

struct SegmentKey {
  std::string video_id;
  int index = 0;
  auto operator<=>(const SegmentKey&) const = default;
};

using OcrBags = std::map<std::pair<SegmentKey, OcrRegion>, TokenBag>;

class Dataset {
 public:
  static Dataset from_parts(const KnowledgeBase& kb, std::vector<Sentence> sentences,
                            std::vector<QATriple> triples,
                            std::map<SegmentKey, CueAnnotation> cues, OcrBags ocr = {});
  static Dataset load(const KnowledgeBase& kb, const std::string& transcripts_path,
                      const std::string& qa_path, const std::string& cues_path,
                      const std::string& ocr_path = "");

  const std::vector<std::string>& video_ids() const { return video_ids_; }
  // Sentences of one video, in index order. Empty vector for unknown videos.
  const std::vector<Sentence>& sentences(const std::string& video_id) const;
  int video_length(const std::string& video_id) const;
  const std::vector<QATriple>& triples() const { return triples_; }

  const CueAnnotation* gold_cue(const std::string& video_id, int index) const;
  const std::map<SegmentKey, CueAnnotation>& gold_cues() const { return cues_; }
  const TokenBag* ocr_bag(const std::string& video_id, int index, OcrRegion region) const;
  const OcrBags& ocr_bags() const { return ocr_; }

  size_t sentence_count() const;
  Dataset with_triples(std::vector<QATriple> triples) const;  // shares context, revalidates anchors
  uint64_t fingerprint() const;

 private:
  std::vector<std::string> video_ids_;
  std::map<std::string, std::vector<Sentence>> videos_;
  std::vector<QATriple> triples_;
  std::map<SegmentKey, CueAnnotation> cues_;
  OcrBags ocr_;
};

// Standalone JSONL readers/writers for the corpus file formats.
OcrBags load_ocr_bags(const std::string& path);
void save_ocr_bags(const OcrBags& bags, const std::string& path);
void save_transcripts(const Dataset& ds, const std::string& path);
void save_qa(const std::vector<QATriple>& triples, const std::string& path);
void save_gold_cues(const Dataset& ds, const std::string& path);

// Ablation switch: drop transcripts and/or cues from extracted windows.
struct ContextMask {
  bool transcript = true;
  bool cues = true;
};

// Alternate cue source (predictions) keyed by segment.
using CueOverrides = std::map<SegmentKey, CueAnnotation>;

struct WindowStep {
  std::vector<std::string> tokens;
  CueAnnotation cue;
  bool pad = false;
};

struct ContextWindow {
  std::vector<std::string> question_tokens;
  std::vector<WindowStep> steps;  // exactly 2w+1, centered at t
  int w = 0;
};

ContextWindow context_window(const Dataset& ds, const QATriple& triple, int w,
                             const CueOverrides* cue_override = nullptr,
                             ContextMask mask = {});

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  static Vocabulary build(const Dataset& ds, int min_count);
  static Vocabulary from_tokens(std::vector<std::string> tokens);  // checkpoint restore

  int lookup(const std::string& token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  int size() const { return static_cast<int>(tokens_.size()); }
  uint64_t fingerprint() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

std::string lowercase(const std::string& s);

}  // namespace tutorqa
