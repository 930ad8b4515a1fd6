#include "tutorqa/corpus.hpp"

#include <algorithm>
#include <cctype>

#include "tutorqa/error.hpp"
#include "tutorqa/hash.hpp"
#include "tutorqa/jsonl.hpp"

namespace tutorqa {

using nlohmann::json;

std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace {

std::vector<std::string> lower_tokens(const json& arr) {
  std::vector<std::string> out;
  out.reserve(arr.size());
  for (const auto& t : arr) out.push_back(lowercase(t.get<std::string>()));
  return out;
}

void validate_cue_slot(const KnowledgeBase& kb, const std::optional<std::string>& id,
                       EntityType expected, const SegmentKey& key) {
  if (!id) return;
  auto type = kb.entity_type_of(*id);
  if (!type) {
    throw validation_error("cue at " + key.video_id + ":" + std::to_string(key.index) +
                           " references unknown entity '" + *id + "'");
  }
  if (*type != expected) {
    throw validation_error("cue at " + key.video_id + ":" + std::to_string(key.index) + " slot '" +
                           to_string(expected) + "' holds entity '" + *id + "' of type '" +
                           to_string(*type) + "'");
  }
}

}  // namespace

Dataset Dataset::from_parts(const KnowledgeBase& kb, std::vector<Sentence> sentences,
                            std::vector<QATriple> triples,
                            std::map<SegmentKey, CueAnnotation> cues, OcrBags ocr) {
  Dataset ds;
  for (Sentence& s : sentences) {
    if (s.start_ms > s.end_ms) {
      throw validation_error("sentence " + s.video_id + ":" + std::to_string(s.index) +
                             " has start_ms > end_ms");
    }
    for (std::string& t : s.tokens) t = lowercase(t);
    ds.videos_[s.video_id].push_back(std::move(s));
  }
  for (auto& [vid, sents] : ds.videos_) {
    std::sort(sents.begin(), sents.end(),
              [](const Sentence& a, const Sentence& b) { return a.index < b.index; });
    for (int i = 0; i < static_cast<int>(sents.size()); ++i) {
      if (sents[i].index != i) {
        throw validation_error("video '" + vid + "' sentence indices not contiguous at " +
                               std::to_string(sents[i].index));
      }
    }
    ds.video_ids_.push_back(vid);
  }

  for (QATriple& q : triples) {
    for (std::string& t : q.question_tokens) t = lowercase(t);
    auto vit = ds.videos_.find(q.video_id);
    if (vit == ds.videos_.end()) {
      throw validation_error("triple '" + q.id + "' references unknown video '" + q.video_id + "'");
    }
    if (q.t < 0 || q.t >= static_cast<int>(vit->second.size())) {
      throw validation_error("triple '" + q.id + "' anchors sentence " + std::to_string(q.t) +
                             " outside video '" + q.video_id + "' of length " +
                             std::to_string(vit->second.size()));
    }
    if (!kb.has_candidate(q.answer_id)) {
      throw validation_error("triple '" + q.id + "' has unknown answer_id '" + q.answer_id + "'");
    }
  }
  ds.triples_ = std::move(triples);

  for (auto& [key, cue] : cues) {
    auto vit = ds.videos_.find(key.video_id);
    if (vit == ds.videos_.end() || key.index < 0 ||
        key.index >= static_cast<int>(vit->second.size())) {
      throw validation_error("cue record at " + key.video_id + ":" + std::to_string(key.index) +
                             " does not match any sentence");
    }
    validate_cue_slot(kb, cue.tool, EntityType::Tool, key);
    validate_cue_slot(kb, cue.panel, EntityType::Panel, key);
    validate_cue_slot(kb, cue.dialog, EntityType::Dialog, key);
  }
  ds.cues_ = std::move(cues);

  for (auto& [key, bag] : ocr) {
    auto vit = ds.videos_.find(key.first.video_id);
    if (vit == ds.videos_.end() || key.first.index < 0 ||
        key.first.index >= static_cast<int>(vit->second.size())) {
      throw validation_error("ocr record at " + key.first.video_id + ":" +
                             std::to_string(key.first.index) + " does not match any sentence");
    }
    for (const auto& [word, count] : bag.counts) {
      if (count <= 0) {
        throw validation_error("ocr bag at " + key.first.video_id + ":" +
                               std::to_string(key.first.index) + " has non-positive count for '" +
                               word + "'");
      }
    }
  }
  ds.ocr_ = std::move(ocr);
  return ds;
}

Dataset Dataset::load(const KnowledgeBase& kb, const std::string& transcripts_path,
                      const std::string& qa_path, const std::string& cues_path,
                      const std::string& ocr_path) {
  std::vector<Sentence> sentences;
  for (const json& row : read_jsonl(transcripts_path)) {
    try {
      Sentence s;
      s.video_id = row.at("video_id").get<std::string>();
      s.index = row.at("index").get<int>();
      s.start_ms = row.at("start_ms").get<int64_t>();
      s.end_ms = row.at("end_ms").get<int64_t>();
      s.tokens = lower_tokens(row.at("tokens"));
      sentences.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw validation_error(transcripts_path + ": malformed record: " + e.what());
    }
  }

  std::vector<QATriple> triples;
  for (const json& row : read_jsonl(qa_path)) {
    try {
      QATriple q;
      q.id = row.at("id").get<std::string>();
      q.video_id = row.at("video_id").get<std::string>();
      q.t = row.at("t").get<int>();
      q.question_tokens = lower_tokens(row.at("question_tokens"));
      q.answer_id = row.at("answer_id").get<std::string>();
      triples.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw validation_error(qa_path + ": malformed record: " + e.what());
    }
  }

  std::map<SegmentKey, CueAnnotation> cues;
  if (!cues_path.empty()) {
    for (const json& row : read_jsonl(cues_path)) {
      try {
        SegmentKey key{row.at("video_id").get<std::string>(), row.at("index").get<int>()};
        CueAnnotation cue;
        auto read_slot = [&](const char* field) -> std::optional<std::string> {
          if (!row.contains(field) || row.at(field).is_null()) return std::nullopt;
          return row.at(field).get<std::string>();
        };
        cue.tool = read_slot("tool");
        cue.panel = read_slot("panel");
        cue.dialog = read_slot("dialog");
        cues[key] = cue;
      } catch (const json::exception& e) {
        throw validation_error(cues_path + ": malformed record: " + e.what());
      }
    }
  }

  OcrBags ocr;
  if (!ocr_path.empty()) ocr = load_ocr_bags(ocr_path);
  return from_parts(kb, std::move(sentences), std::move(triples), std::move(cues), std::move(ocr));
}

const std::vector<Sentence>& Dataset::sentences(const std::string& video_id) const {
  static const std::vector<Sentence> empty;
  auto it = videos_.find(video_id);
  return it == videos_.end() ? empty : it->second;
}

int Dataset::video_length(const std::string& video_id) const {
  auto it = videos_.find(video_id);
  return it == videos_.end() ? 0 : static_cast<int>(it->second.size());
}

const CueAnnotation* Dataset::gold_cue(const std::string& video_id, int index) const {
  auto it = cues_.find({video_id, index});
  return it == cues_.end() ? nullptr : &it->second;
}

const TokenBag* Dataset::ocr_bag(const std::string& video_id, int index, OcrRegion region) const {
  auto it = ocr_.find({{video_id, index}, region});
  return it == ocr_.end() ? nullptr : &it->second;
}

size_t Dataset::sentence_count() const {
  size_t n = 0;
  for (const auto& [_, sents] : videos_) n += sents.size();
  return n;
}

Dataset Dataset::with_triples(std::vector<QATriple> triples) const {
  Dataset out = *this;
  for (const QATriple& q : triples) {
    int len = out.video_length(q.video_id);
    if (q.t < 0 || q.t >= len) {
      throw validation_error("triple '" + q.id + "' anchors outside video '" + q.video_id + "'");
    }
  }
  out.triples_ = std::move(triples);
  return out;
}

uint64_t Dataset::fingerprint() const {
  uint64_t h = kFnvOffset;
  for (const std::string& vid : video_ids_) {
    h = fnv1a_field(vid, h);
    for (const Sentence& s : sentences(vid)) {
      h = fnv1a_field(static_cast<uint64_t>(s.index), h);
      h = fnv1a_field(static_cast<uint64_t>(s.start_ms), h);
      h = fnv1a_field(static_cast<uint64_t>(s.end_ms), h);
      for (const std::string& t : s.tokens) h = fnv1a_field(t, h);
    }
  }
  for (const QATriple& q : triples_) {
    h = fnv1a_field(q.id, h);
    h = fnv1a_field(q.video_id, h);
    h = fnv1a_field(static_cast<uint64_t>(q.t), h);
    for (const std::string& t : q.question_tokens) h = fnv1a_field(t, h);
    h = fnv1a_field(q.answer_id, h);
  }
  for (const auto& [key, cue] : cues_) {
    h = fnv1a_field(key.video_id, h);
    h = fnv1a_field(static_cast<uint64_t>(key.index), h);
    h = fnv1a_field(cue.tool.value_or("-"), h);
    h = fnv1a_field(cue.panel.value_or("-"), h);
    h = fnv1a_field(cue.dialog.value_or("-"), h);
  }
  for (const auto& [key, bag] : ocr_) {
    h = fnv1a_field(key.first.video_id, h);
    h = fnv1a_field(static_cast<uint64_t>(key.first.index), h);
    h = fnv1a_field(key.second == OcrRegion::panel ? "panel" : "dialog", h);
    for (const auto& [word, count] : bag.counts) {
      h = fnv1a_field(word, h);
      h = fnv1a_field(static_cast<uint64_t>(count), h);
    }
  }
  return h;
}

OcrBags load_ocr_bags(const std::string& path) {
  OcrBags ocr;
  for (const json& row : read_jsonl(path)) {
    try {
      SegmentKey key{row.at("video_id").get<std::string>(), row.at("index").get<int>()};
      std::string region = row.at("region").get<std::string>();
      OcrRegion r;
      if (region == "panel") {
        r = OcrRegion::panel;
      } else if (region == "dialog") {
        r = OcrRegion::dialog;
      } else {
        throw validation_error(path + ": unknown region '" + region + "'");
      }
      TokenBag bag;
      for (const auto& [word, count] : row.at("bag").items()) {
        bag.add(lowercase(word), count.get<int>());
      }
      ocr[{key, r}] = std::move(bag);
    } catch (const json::exception& e) {
      throw validation_error(path + ": malformed record: " + e.what());
    }
  }
  return ocr;
}

void save_ocr_bags(const OcrBags& bags, const std::string& path) {
  std::vector<json> rows;
  for (const auto& [key, bag] : bags) {
    json jbag = json::object();
    for (const auto& [word, count] : bag.counts) jbag[word] = count;
    rows.push_back({{"video_id", key.first.video_id},
                    {"index", key.first.index},
                    {"region", key.second == OcrRegion::panel ? "panel" : "dialog"},
                    {"bag", std::move(jbag)}});
  }
  write_jsonl(path, rows);
}

void save_transcripts(const Dataset& ds, const std::string& path) {
  std::vector<json> rows;
  for (const std::string& vid : ds.video_ids()) {
    for (const Sentence& s : ds.sentences(vid)) {
      rows.push_back({{"video_id", s.video_id},
                      {"index", s.index},
                      {"start_ms", s.start_ms},
                      {"end_ms", s.end_ms},
                      {"tokens", s.tokens}});
    }
  }
  write_jsonl(path, rows);
}

void save_qa(const std::vector<QATriple>& triples, const std::string& path) {
  std::vector<json> rows;
  for (const QATriple& q : triples) {
    rows.push_back({{"id", q.id},
                    {"video_id", q.video_id},
                    {"t", q.t},
                    {"question_tokens", q.question_tokens},
                    {"answer_id", q.answer_id}});
  }
  write_jsonl(path, rows);
}

void save_gold_cues(const Dataset& ds, const std::string& path) {
  std::vector<json> rows;
  for (const auto& [key, cue] : ds.gold_cues()) {
    rows.push_back({{"video_id", key.video_id},
                    {"index", key.index},
                    {"tool", cue.tool ? json(*cue.tool) : json(nullptr)},
                    {"panel", cue.panel ? json(*cue.panel) : json(nullptr)},
                    {"dialog", cue.dialog ? json(*cue.dialog) : json(nullptr)}});
  }
  write_jsonl(path, rows);
}

ContextWindow context_window(const Dataset& ds, const QATriple& triple, int w,
                             const CueOverrides* cue_override, ContextMask mask) {
  if (w < 0) throw validation_error("window size must be >= 0");
  const auto& sents = ds.sentences(triple.video_id);
  const int len = static_cast<int>(sents.size());

  ContextWindow win;
  win.w = w;
  win.question_tokens = triple.question_tokens;
  win.steps.resize(2 * w + 1);
  for (int i = 0; i < 2 * w + 1; ++i) {
    const int idx = triple.t - w + i;
    WindowStep& step = win.steps[i];
    if (idx < 0 || idx >= len) {
      step.pad = true;  // empty tokens, all-absent cues
      continue;
    }
    if (mask.transcript) step.tokens = sents[idx].tokens;
    if (mask.cues) {
      if (cue_override) {
        auto it = cue_override->find({triple.video_id, idx});
        if (it != cue_override->end()) step.cue = it->second;
      } else if (const CueAnnotation* cue = ds.gold_cue(triple.video_id, idx)) {
        step.cue = *cue;
      }
    }
  }
  return win;
}

Vocabulary Vocabulary::build(const Dataset& ds, int min_count) {
  std::map<std::string, int> counts;
  auto feed = [&](const std::vector<std::string>& tokens) {
    for (const std::string& t : tokens) {
      std::string low = lowercase(t);
      if (low == "<pad>" || low == "<unk>") continue;  // reserved
      ++counts[low];
    }
  };
  for (const std::string& vid : ds.video_ids()) {
    for (const Sentence& s : ds.sentences(vid)) feed(s.tokens);
  }
  for (const QATriple& q : ds.triples()) feed(q.question_tokens);

  std::vector<std::string> tokens = {"<pad>", "<unk>"};
  for (const auto& [token, count] : counts) {
    if (count >= min_count) tokens.push_back(token);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>") {
    throw validation_error("vocabulary must start with <pad>, <unk>");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (int i = 0; i < static_cast<int>(v.tokens_.size()); ++i) {
    if (!v.index_.emplace(v.tokens_[i], i).second) {
      throw validation_error("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(lowercase(token));
  return it == index_.end() ? kUnk : it->second;
}

uint64_t Vocabulary::fingerprint() const {
  uint64_t h = kFnvOffset;
  for (const std::string& t : tokens_) h = fnv1a_field(t, h);
  return h;
}

}  // namespace tutorqa
