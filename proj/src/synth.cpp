#include "tutorqa/synth.hpp"

#include <algorithm>
#include <cmath>

#include "tutorqa/error.hpp"
#include "tutorqa/rng.hpp"

namespace tutorqa {

namespace {

struct ClusterIds {
  std::string tool, shortcut, panel, dialog;
  std::vector<std::string> panel_options;
  std::vector<std::string> dialog_options;
};

TokenBag reference_bag(const Entity& e) {
  TokenBag bag;
  bag.add(e.name, 2);
  bag.add(to_string(e.etype), 1);
  for (const OptionRec& o : e.options) bag.add(o.name, 1);
  return bag;
}

struct SentInfo {
  int cluster = 0;
  bool diverged = false;
  int cue_cluster = 0;  // cluster the cue streams show
  std::optional<std::string> mentioned_option;
};

const std::vector<std::string> kFillers = {"here",  "first", "next", "again",
                                           "slowly", "carefully", "together", "once"};

}  // namespace

SynthData synth_dataset(const SynthSpec& spec) {
  if (spec.n_videos <= 0 || spec.sents_per_video <= 0 || spec.n_triples < 0) {
    throw validation_error("synth spec sizes must be positive");
  }
  if (spec.kb_size < 7) {
    throw validation_error("synth kb_size must be >= 7 (one full cluster)");
  }
  if (spec.cue_determined_fraction < 0.0 || spec.cue_determined_fraction > 1.0) {
    throw validation_error("cue_determined_fraction must be in [0, 1]");
  }

  const int n_clusters = spec.kb_size / 7;
  const int remainder = spec.kb_size - 7 * n_clusters;

  // Knowledge base: disjoint clusters tool--shortcut, tool--panel,
  // tool--dialog, options hanging off panel and dialog.
  std::vector<ClusterIds> clusters(n_clusters);
  std::vector<Entity> entities;
  std::vector<Relation> relations;
  for (int k = 0; k < n_clusters; ++k) {
    ClusterIds& c = clusters[k];
    const std::string suffix = std::to_string(k);
    c.tool = "tool" + suffix;
    c.shortcut = "short" + suffix;
    c.panel = "panel" + suffix;
    c.dialog = "dialog" + suffix;
    c.panel_options = {c.panel + "opta", c.panel + "optb"};
    c.dialog_options = {c.dialog + "opta"};
    if (k == 0) {
      for (int i = 0; i < remainder; ++i) c.panel_options.push_back(c.panel + "optx" + std::to_string(i));
    }

    entities.push_back({c.tool, c.tool, EntityType::Tool, {}});
    entities.push_back({c.shortcut, c.shortcut, EntityType::Shortcut, {}});
    Entity panel{c.panel, c.panel, EntityType::Panel, {}};
    for (const std::string& o : c.panel_options) panel.options.push_back({o, o});
    entities.push_back(std::move(panel));
    Entity dialog{c.dialog, c.dialog, EntityType::Dialog, {}};
    for (const std::string& o : c.dialog_options) dialog.options.push_back({o, o});
    entities.push_back(std::move(dialog));

    relations.push_back({c.shortcut, c.tool, RelationKind::IsShortcutOf});
    relations.push_back({c.tool, c.panel, RelationKind::BelongsTo});
    relations.push_back({c.dialog, c.tool, RelationKind::IsOpenedBy});
  }
  KnowledgeBase kb = KnowledgeBase::from_parts(std::move(entities), std::move(relations));

  // Transcripts, cue streams and OCR bags.
  std::vector<Sentence> sentences;
  std::map<SegmentKey, CueAnnotation> cues;
  std::map<std::pair<SegmentKey, OcrRegion>, TokenBag> ocr;
  ToolPredictions tool_predictions;
  std::map<SegmentKey, SentInfo> infos;
  std::vector<SegmentKey> cue_anchors;      // diverged segments
  std::vector<SegmentKey> mention_anchors;  // option-naming segments
  std::vector<SegmentKey> all_segments;

  auto entity_of = [&](const std::string& id) -> const Entity& {
    for (const Entity& e : kb.entities()) {
      if (e.id == id) return e;
    }
    throw runtime_error("missing entity " + id);
  };

  for (int v = 0; v < spec.n_videos; ++v) {
    const std::string video_id = "vid" + std::to_string(v);
    Rng rng(Rng::mix(spec.seed, 0x5e17, static_cast<uint64_t>(v)));
    int cluster = rng.uniform_int(n_clusters);
    int pos_in_run = 0;
    int run_len = 4 + rng.uniform_int(3);

    for (int i = 0; i < spec.sents_per_video; ++i) {
      if (pos_in_run >= run_len) {
        pos_in_run = 0;
        run_len = 4 + rng.uniform_int(3);
        if (n_clusters > 1) {
          int next = rng.uniform_int(n_clusters - 1);
          cluster = next >= cluster ? next + 1 : next;
        }
      }
      const ClusterIds& c = clusters[cluster];
      SegmentKey key{video_id, i};
      SentInfo info;
      info.cluster = cluster;
      info.cue_cluster = cluster;

      Sentence s;
      s.video_id = video_id;
      s.index = i;
      s.start_ms = static_cast<int64_t>(i) * 3000;
      s.end_ms = s.start_ms + 2999;
      CueAnnotation cue;
      bool panel_visible = false;
      bool dialog_visible = false;

      if (pos_in_run == 0) {
        s.tokens = {"now", "use", "the", c.tool, "tool", kFillers[rng.uniform_int(8)]};
        panel_visible = rng.uniform() < 0.5;
      } else if (pos_in_run == 1) {
        const std::string& opt = c.panel_options[rng.uniform_int(
            static_cast<int>(c.panel_options.size()))];
        s.tokens = {"set", "the", opt, "option", "in", "the", c.panel, "panel"};
        info.mentioned_option = opt;
        mention_anchors.push_back(key);
        panel_visible = true;
      } else if (pos_in_run == 2) {
        if (rng.uniform() < 0.5) {
          const std::string& opt = c.dialog_options[rng.uniform_int(
              static_cast<int>(c.dialog_options.size()))];
          s.tokens = {"adjust", "the", opt, "option", "in", "the", c.dialog, "dialog"};
          info.mentioned_option = opt;
          mention_anchors.push_back(key);
          dialog_visible = true;
        } else {
          s.tokens = {"open", "the", c.panel, "panel", kFillers[rng.uniform_int(8)]};
          panel_visible = true;
        }
      } else {
        // Filler narration; the first filler of every run (and half of the
        // rest) shows cues from another cluster, so the visible state is not
        // recoverable from the words.
        s.tokens = {"keep", "going", "with", "this", "step",
                    kFillers[rng.uniform_int(8)]};
        if (n_clusters > 1 && (pos_in_run == 3 || rng.uniform() < 0.5)) {
          int other = rng.uniform_int(n_clusters - 1);
          info.cue_cluster = other >= cluster ? other + 1 : other;
          info.diverged = true;
          panel_visible = true;
          dialog_visible = true;
          cue_anchors.push_back(key);
        } else {
          panel_visible = rng.uniform() < 0.5;
          dialog_visible = rng.uniform() < 0.25;
        }
      }

      const ClusterIds& cc = clusters[info.cue_cluster];
      cue.tool = cc.tool;
      if (panel_visible) cue.panel = cc.panel;
      if (dialog_visible) cue.dialog = cc.dialog;
      cues[key] = cue;
      tool_predictions[key] = cc.tool;
      if (cue.panel) ocr[{key, OcrRegion::panel}] = reference_bag(entity_of(*cue.panel));
      if (cue.dialog) ocr[{key, OcrRegion::dialog}] = reference_bag(entity_of(*cue.dialog));

      infos[key] = info;
      all_segments.push_back(key);
      sentences.push_back(std::move(s));
      ++pos_in_run;
    }
  }

  if (spec.n_triples > 0 && n_clusters > 1 && cue_anchors.empty()) {
    throw validation_error("synth spec too small: no diverged segments generated");
  }
  if (spec.n_triples > 0 && mention_anchors.empty()) {
    throw validation_error("synth spec too small: no option mentions generated");
  }

  // Question triples.
  const int n_cue = n_clusters > 1
                        ? static_cast<int>(std::llround(spec.cue_determined_fraction * spec.n_triples))
                        : 0;
  const int n_rest = spec.n_triples - n_cue;
  const int n_mention = (n_rest + 1) / 2;
  const int n_rel = n_rest - n_mention;

  std::vector<QATriple> triples;
  std::vector<TripleKind> kinds;
  std::vector<int> cluster_of;
  Rng rng(Rng::mix(spec.seed, 0x7153));
  int qid = 0;

  for (int i = 0; i < n_cue; ++i) {
    const SegmentKey& key = cue_anchors[rng.uniform_int(static_cast<int>(cue_anchors.size()))];
    const SentInfo& info = infos[key];
    const ClusterIds& cc = clusters[info.cue_cluster];
    QATriple q;
    q.id = "q" + std::to_string(qid++);
    q.video_id = key.video_id;
    q.t = key.index;
    switch (i % 3) {
      case 0:
        q.question_tokens = {"what", "tool", "is", "selected", "right", "now"};
        q.answer_id = cc.tool;
        break;
      case 1:
        q.question_tokens = {"which", "panel", "is", "open", "right", "now"};
        q.answer_id = cc.panel;
        break;
      default:
        q.question_tokens = {"what", "dialog", "is", "shown", "right", "now"};
        q.answer_id = cc.dialog;
        break;
    }
    triples.push_back(std::move(q));
    kinds.push_back(TripleKind::cue);
    cluster_of.push_back(info.cue_cluster);
  }

  for (int i = 0; i < n_mention; ++i) {
    const SegmentKey& key =
        mention_anchors[rng.uniform_int(static_cast<int>(mention_anchors.size()))];
    const SentInfo& info = infos[key];
    QATriple q;
    q.id = "q" + std::to_string(qid++);
    q.video_id = key.video_id;
    q.t = key.index;
    q.question_tokens = {"which", "option", "was", "mentioned", "just", "now"};
    q.answer_id = *info.mentioned_option;
    triples.push_back(std::move(q));
    kinds.push_back(TripleKind::mention);
    cluster_of.push_back(info.cluster);
  }

  for (int i = 0; i < n_rel; ++i) {
    const SegmentKey& key = all_segments[rng.uniform_int(static_cast<int>(all_segments.size()))];
    const SentInfo& info = infos[key];
    const ClusterIds& cc = clusters[info.cue_cluster];
    QATriple q;
    q.id = "q" + std::to_string(qid++);
    q.video_id = key.video_id;
    q.t = key.index;
    q.question_tokens = {"what", "is", "the", "shortcut", "for", "this", "tool"};
    q.answer_id = cc.shortcut;
    triples.push_back(std::move(q));
    kinds.push_back(TripleKind::relation);
    cluster_of.push_back(info.cue_cluster);
  }

  SynthData data;
  for (int k = 0; k < n_clusters; ++k) {
    const ClusterIds& c = clusters[k];
    data.catalog.panel[c.panel] = reference_bag(entity_of(c.panel));
    data.catalog.dialog[c.dialog] = reference_bag(entity_of(c.dialog));
  }
  data.kb = std::move(kb);
  data.dataset =
      Dataset::from_parts(data.kb, std::move(sentences), std::move(triples), std::move(cues),
                          std::move(ocr));
  data.tool_predictions = std::move(tool_predictions);
  data.kinds = std::move(kinds);
  data.cluster_of = std::move(cluster_of);
  data.n_clusters = n_clusters;
  return data;
}

SplitIndices split_synth(const SynthData& data, double heldout_cluster_fraction, double train_frac,
                         double dev_frac, uint64_t seed) {
  if (train_frac < 0 || dev_frac < 0 || train_frac + dev_frac > 1.0) {
    throw validation_error("invalid split fractions");
  }
  const int n = static_cast<int>(data.dataset.triples().size());
  const int held_from = heldout_cluster_fraction <= 0.0
                            ? data.n_clusters
                            : data.n_clusters -
                                  std::max(1, static_cast<int>(std::ceil(
                                                  heldout_cluster_fraction * data.n_clusters)));

  SplitIndices split;
  std::vector<int> rest;
  for (int i = 0; i < n; ++i) {
    if (data.kinds[i] == TripleKind::relation && data.cluster_of[i] >= held_from) {
      split.test.push_back(i);
    } else {
      rest.push_back(i);
    }
  }
  Rng rng(Rng::mix(seed, 0x5b17));
  rng.shuffle(rest);
  const int n_train = static_cast<int>(std::llround(train_frac * rest.size()));
  const int n_dev = static_cast<int>(std::llround(dev_frac * rest.size()));
  for (int i = 0; i < static_cast<int>(rest.size()); ++i) {
    if (i < n_train) {
      split.train.push_back(rest[i]);
    } else if (i < n_train + n_dev) {
      split.dev.push_back(rest[i]);
    } else {
      split.test.push_back(rest[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.dev.begin(), split.dev.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Dataset dataset_subset(const Dataset& ds, const std::vector<int>& triple_indices) {
  std::vector<QATriple> subset;
  subset.reserve(triple_indices.size());
  for (int i : triple_indices) {
    if (i < 0 || i >= static_cast<int>(ds.triples().size())) {
      throw validation_error("triple index out of range in subset");
    }
    subset.push_back(ds.triples()[i]);
  }
  return ds.with_triples(std::move(subset));
}

Dataset corrupt_ocr_bags(const KnowledgeBase& kb, const Dataset& ds, double word_replace_fraction,
                         uint64_t seed) {
  if (word_replace_fraction < 0.0 || word_replace_fraction > 1.0) {
    throw validation_error("word_replace_fraction must be in [0, 1]");
  }
  std::map<std::pair<SegmentKey, OcrRegion>, TokenBag> corrupted;
  Rng rng(Rng::mix(seed, 0xbadb));
  for (const auto& [key, bag] : ds.ocr_bags()) {
    std::vector<std::pair<std::string, int>> words(bag.counts.begin(), bag.counts.end());
    const int n_replace = static_cast<int>(std::llround(word_replace_fraction * words.size()));
    // Deterministic choice of which words to corrupt.
    std::vector<int> idx(words.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    rng.shuffle(idx);
    TokenBag out;
    for (size_t i = 0; i < words.size(); ++i) {
      if (static_cast<int>(i) < n_replace) {
        out.add("junk" + std::to_string(rng.uniform_int(1 << 20)), words[idx[i]].second);
      } else {
        out.add(words[idx[i]].first, words[idx[i]].second);
      }
    }
    corrupted[key] = std::move(out);
  }

  std::vector<Sentence> sentences;
  for (const std::string& vid : ds.video_ids()) {
    for (const Sentence& s : ds.sentences(vid)) sentences.push_back(s);
  }
  return Dataset::from_parts(kb, std::move(sentences), ds.triples(), ds.gold_cues(),
                             std::move(corrupted));
}

}  // namespace tutorqa
