#include "tutorqa/cues.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tutorqa/error.hpp"
#include "tutorqa/jsonl.hpp"

namespace tutorqa {

using nlohmann::json;

std::string to_string(CueStream s) {
  switch (s) {
    case CueStream::tool: return "tool";
    case CueStream::panel: return "panel";
    case CueStream::dialog: return "dialog";
  }
  return "tool";
}

const std::map<std::string, TokenBag>& CueCatalog::for_stream(CueStream s) const {
  switch (s) {
    case CueStream::panel: return panel;
    case CueStream::dialog: return dialog;
    default: throw validation_error("no reference bags for stream '" + to_string(s) + "'");
  }
}

CueCatalog CueCatalog::load(const std::string& path, const KnowledgeBase& kb) {
  CueCatalog catalog;
  for (const json& row : read_jsonl(path)) {
    std::string id;
    try {
      id = row.at("id").get<std::string>();
      TokenBag bag;
      for (const auto& [word, count] : row.at("bag").items()) {
        bag.add(lowercase(word), count.get<int>());
      }
      auto type = kb.entity_type_of(id);
      if (!type) throw validation_error(path + ": reference bag for unknown entity '" + id + "'");
      if (*type == EntityType::Panel) {
        catalog.panel[id] = std::move(bag);
      } else if (*type == EntityType::Dialog) {
        catalog.dialog[id] = std::move(bag);
      } else {
        throw validation_error(path + ": entity '" + id + "' of type '" + to_string(*type) +
                               "' cannot carry a reference bag");
      }
    } catch (const json::exception& e) {
      throw validation_error(path + ": malformed record: " + e.what());
    }
  }
  return catalog;
}

void CueCatalog::save(const std::string& path) const {
  std::vector<json> rows;
  auto emit = [&](const std::map<std::string, TokenBag>& bags) {
    for (const auto& [id, bag] : bags) {
      json jbag = json::object();
      for (const auto& [word, count] : bag.counts) jbag[word] = count;
      rows.push_back({{"id", id}, {"bag", jbag}});
    }
  };
  emit(panel);
  emit(dialog);
  write_jsonl(path, rows);
}

double bag_similarity(const TokenBag& test, const TokenBag& train, const WordVectors& wv) {
  if (test.empty() || train.empty()) return 0.0;

  // Cache train vectors once; each distinct test word scans them all.
  std::vector<Eigen::VectorXd> train_vecs;
  train_vecs.reserve(train.counts.size());
  for (const auto& [word, _] : train.counts) train_vecs.push_back(wv.get(word));

  double similarity = 0.0;
  for (const auto& [word, count] : test.counts) {
    Eigen::VectorXd tv = wv.get(word);
    double min_dist = std::numeric_limits<double>::infinity();
    for (const Eigen::VectorXd& rv : train_vecs) {
      double d = (tv - rv).norm();
      if (d < min_dist) min_dist = d;
    }
    similarity += static_cast<double>(count) / std::max(min_dist, kDistanceClamp);
  }
  return similarity;
}

std::vector<MatchResult> recognize(const TokenBag& test, CueStream stream, const CueCatalog& catalog,
                                   const WordVectors& wv) {
  const auto& bags = catalog.for_stream(stream);
  if (bags.empty()) throw validation_error("empty reference catalog for stream '" + to_string(stream) + "'");
  if (test.empty()) return {};

  std::vector<MatchResult> out;
  out.reserve(bags.size());
  for (const auto& [id, ref] : bags) out.push_back({id, bag_similarity(test, ref, wv)});
  std::stable_sort(out.begin(), out.end(), [](const MatchResult& a, const MatchResult& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  return out;
}

ToolPredictions load_tool_predictions(const std::string& path) {
  ToolPredictions out;
  for (const json& row : read_jsonl(path)) {
    try {
      SegmentKey key{row.at("video_id").get<std::string>(), row.at("index").get<int>()};
      if (row.contains("tool") && !row.at("tool").is_null()) {
        out[key] = row.at("tool").get<std::string>();
      }
    } catch (const json::exception& e) {
      throw validation_error(path + ": malformed record: " + e.what());
    }
  }
  return out;
}

void save_tool_predictions(const ToolPredictions& preds, const std::string& path) {
  std::vector<json> rows;
  for (const auto& [key, tool] : preds) {
    rows.push_back({{"video_id", key.video_id}, {"index", key.index}, {"tool", tool}});
  }
  write_jsonl(path, rows);
}

CueOverrides predict_cue_streams(const Dataset& ds, const ToolPredictions& tools,
                                 const CueCatalog& catalog, const WordVectors& wv,
                                 const KnowledgeBase& kb) {
  return predict_cue_streams(ds.ocr_bags(), tools, catalog, wv, kb);
}

CueOverrides predict_cue_streams(const OcrBags& ocr, const ToolPredictions& tools,
                                 const CueCatalog& catalog, const WordVectors& wv,
                                 const KnowledgeBase& kb) {
  CueOverrides out;
  for (const auto& [key, tool_id] : tools) {
    auto type = kb.entity_type_of(tool_id);
    if (!type || *type != EntityType::Tool) {
      throw validation_error("tool prediction at " + key.video_id + ":" +
                             std::to_string(key.index) + " references unknown tool '" + tool_id +
                             "'");
    }
    out[key].tool = tool_id;
  }
  for (const auto& [key, bag] : ocr) {
    CueStream stream = key.second == OcrRegion::panel ? CueStream::panel : CueStream::dialog;
    if (catalog.for_stream(stream).empty()) continue;
    std::vector<MatchResult> ranked = recognize(bag, stream, catalog, wv);
    if (ranked.empty()) continue;  // empty OCR bag: no prediction
    CueAnnotation& cue = out[key.first];
    if (stream == CueStream::panel) {
      cue.panel = ranked.front().id;
    } else {
      cue.dialog = ranked.front().id;
    }
  }
  return out;
}

void save_cues(const CueOverrides& cues, const std::string& path) {
  std::vector<json> rows;
  for (const auto& [key, cue] : cues) {
    json row;
    row["video_id"] = key.video_id;
    row["index"] = key.index;
    row["tool"] = cue.tool ? json(*cue.tool) : json(nullptr);
    row["panel"] = cue.panel ? json(*cue.panel) : json(nullptr);
    row["dialog"] = cue.dialog ? json(*cue.dialog) : json(nullptr);
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

CueOverrides load_cues(const std::string& path) {
  CueOverrides out;
  for (const json& row : read_jsonl(path)) {
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
      out[key] = cue;
    } catch (const json::exception& e) {
      throw validation_error(path + ": malformed record: " + e.what());
    }
  }
  return out;
}

CueAccuracy cue_accuracy(const CueOverrides& predicted, const Dataset& gold) {
  CueAccuracy acc;
  for (const auto& [key, cue] : gold.gold_cues()) {
    const CueAnnotation* pred = nullptr;
    auto it = predicted.find(key);
    if (it != predicted.end()) pred = &it->second;

    auto score = [&](const std::optional<std::string>& g,
                     const std::optional<std::string>& p, int& total, int& correct) {
      if (!g) return;
      ++total;
      if (p && *p == *g) ++correct;
    };
    static const CueAnnotation absent;
    const CueAnnotation& p = pred ? *pred : absent;
    score(cue.tool, p.tool, acc.tool_total, acc.tool_correct);
    score(cue.panel, p.panel, acc.panel_total, acc.panel_correct);
    score(cue.dialog, p.dialog, acc.dialog_total, acc.dialog_correct);
  }
  acc.tool = acc.tool_total ? static_cast<double>(acc.tool_correct) / acc.tool_total : 0.0;
  acc.panel = acc.panel_total ? static_cast<double>(acc.panel_correct) / acc.panel_total : 0.0;
  acc.dialog = acc.dialog_total ? static_cast<double>(acc.dialog_correct) / acc.dialog_total : 0.0;
  return acc;
}

}  // namespace tutorqa
