#include "tutorqa/evaluator.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "tutorqa/error.hpp"
#include "tutorqa/hash.hpp"
#include "tutorqa/trainer.hpp"

namespace tutorqa {

using nn::QAModel;
using nn::Tape;

std::string to_string(CueSource s) { return s == CueSource::gold ? "gold" : "predicted"; }

CueSource cue_source_from_string(const std::string& s) {
  if (s == "gold") return CueSource::gold;
  if (s == "predicted") return CueSource::predicted;
  throw validation_error("unknown cue source '" + s + "' (expected gold|predicted)");
}

ExampleSet make_examples(const Dataset& ds, const AnswerPool& pool, int w, CueSource source,
                         const CueOverrides* predicted, ContextMask mask) {
  if (source == CueSource::predicted && predicted == nullptr) {
    throw validation_error("predicted cue source requires a predictions map");
  }
  const CueOverrides* override_map = source == CueSource::predicted ? predicted : nullptr;
  ExampleSet out;
  out.reserve(ds.triples().size());
  for (const QATriple& triple : ds.triples()) {
    int gold = pool.index_of(triple.answer_id);
    if (gold < 0) {
      throw validation_error("triple '" + triple.id + "' answer '" + triple.answer_id +
                             "' is not in the answer pool");
    }
    out.push_back({context_window(ds, triple, w, override_map, mask), gold, triple.id});
  }
  return out;
}

nlohmann::json EvalReport::to_json(bool include_ranks) const {
  nlohmann::json out{{"mrr", mrr},   {"r1", r1},           {"r5", r5},
                     {"r10", r10},   {"avg_rank", avg_rank}, {"count", count()},
                     {"fingerprint", fingerprint}};
  if (include_ranks) {
    out["ranks"] = nlohmann::json::array();
    for (size_t i = 0; i < ranks.size(); ++i) {
      out["ranks"].push_back({{"id", triple_ids[i]}, {"rank", ranks[i]}});
    }
  }
  return out;
}

std::string EvalReport::text_table(const std::string& label) const {
  std::ostringstream os;
  os << std::left << std::setw(24) << label << std::right << std::fixed << std::setprecision(4)
     << "  MRR " << std::setw(7) << mrr << "  R@1 " << std::setw(7) << r1 << "  R@5 "
     << std::setw(7) << r5 << "  R@10 " << std::setw(7) << r10 << "  AvgRank " << std::setw(8)
     << std::setprecision(2) << avg_rank << "  n=" << count();
  return os.str();
}

EvalReport report_from_ranks(std::vector<std::string> ids, std::vector<int> ranks) {
  if (ids.size() != ranks.size()) throw runtime_error("ids/ranks length mismatch");
  EvalReport rep;
  rep.triple_ids = std::move(ids);
  rep.ranks = std::move(ranks);
  if (rep.ranks.empty()) return rep;
  double mrr = 0.0, r1 = 0.0, r5 = 0.0, r10 = 0.0, avg = 0.0;
  for (int rank : rep.ranks) {
    if (rank < 1) throw runtime_error("rank below 1");
    mrr += 1.0 / rank;
    r1 += rank <= 1 ? 1.0 : 0.0;
    r5 += rank <= 5 ? 1.0 : 0.0;
    r10 += rank <= 10 ? 1.0 : 0.0;
    avg += rank;
  }
  const double n = static_cast<double>(rep.ranks.size());
  rep.mrr = mrr / n;
  rep.r1 = r1 / n;
  rep.r5 = r5 / n;
  rep.r10 = r10 / n;
  rep.avg_rank = avg / n;
  return rep;
}

EvalReport evaluate_examples(QAModel& model, const ExampleSet& examples) {
  std::vector<std::string> ids;
  std::vector<int> ranks;
  ids.reserve(examples.size());
  ranks.reserve(examples.size());
  for (const TrainExample& ex : examples) {
    Tape tape;
    QAModel::Result res = model.run(tape, ex.window, {});
    ids.push_back(ex.triple_id);
    ranks.push_back(nn::rank_of(res.score_values, ex.gold));
  }
  return report_from_ranks(std::move(ids), std::move(ranks));
}

EvalReport evaluate(QAModel& model, const Dataset& ds, const AnswerPool& pool, CueSource source,
                    const CueOverrides* predicted, ContextMask mask) {
  if (pool.fingerprint() != model.pool_hash()) {
    throw validation_error("answer pool does not match the model checkpoint (pool/KB mismatch)");
  }
  ExampleSet examples = make_examples(ds, pool, model.config().window, source, predicted, mask);
  EvalReport rep = evaluate_examples(model, examples);
  uint64_t h = kFnvOffset;
  h = fnv1a_field(model.config().to_json().dump(), h);
  h = fnv1a_field(model.pool_hash(), h);
  h = fnv1a_field(ds.fingerprint(), h);
  h = fnv1a_field(to_string(source), h);
  h = fnv1a_field(mask.transcript ? "t1" : "t0", h);
  h = fnv1a_field(mask.cues ? "c1" : "c0", h);
  rep.fingerprint = hash_hex(h);
  return rep;
}

namespace {

enum class Bucket { wrong, partial, correct, none };

Bucket bucket_of(const Dataset& ds, const QATriple& triple, const CueOverrides& predicted, int w) {
  const int len = ds.video_length(triple.video_id);
  int present = 0;
  int matched = 0;
  for (int idx = triple.t - w; idx <= triple.t + w; ++idx) {
    if (idx < 0 || idx >= len) continue;
    const CueAnnotation* gold = ds.gold_cue(triple.video_id, idx);
    if (!gold || !gold->any()) continue;
    const CueAnnotation* pred = nullptr;
    auto it = predicted.find({triple.video_id, idx});
    if (it != predicted.end()) pred = &it->second;
    static const CueAnnotation absent;
    const CueAnnotation& p = pred ? *pred : absent;
    auto slot = [&](const std::optional<std::string>& g, const std::optional<std::string>& pr) {
      if (!g) return;
      ++present;
      if (pr && *pr == *g) ++matched;
    };
    slot(gold->tool, p.tool);
    slot(gold->panel, p.panel);
    slot(gold->dialog, p.dialog);
  }
  if (present == 0) return Bucket::none;
  if (matched == present) return Bucket::correct;
  if (matched == 0) return Bucket::wrong;
  return Bucket::partial;
}

}  // namespace

StratifiedReports stratify_by_cue_error(const EvalReport& results, const Dataset& ds,
                                        const CueOverrides& predicted, int w) {
  std::unordered_map<std::string, const QATriple*> by_id;
  for (const QATriple& t : ds.triples()) by_id[t.id] = &t;

  std::vector<std::string> ids[3];
  std::vector<int> ranks[3];
  StratifiedReports out;
  for (size_t i = 0; i < results.ranks.size(); ++i) {
    auto it = by_id.find(results.triple_ids[i]);
    if (it == by_id.end()) {
      throw validation_error("result for unknown triple '" + results.triple_ids[i] + "'");
    }
    switch (bucket_of(ds, *it->second, predicted, w)) {
      case Bucket::wrong:
        ids[0].push_back(results.triple_ids[i]);
        ranks[0].push_back(results.ranks[i]);
        break;
      case Bucket::partial:
        ids[1].push_back(results.triple_ids[i]);
        ranks[1].push_back(results.ranks[i]);
        break;
      case Bucket::correct:
        ids[2].push_back(results.triple_ids[i]);
        ranks[2].push_back(results.ranks[i]);
        break;
      case Bucket::none: ++out.no_cue_triples; break;
    }
  }
  out.wrong = report_from_ranks(std::move(ids[0]), std::move(ranks[0]));
  out.partial = report_from_ranks(std::move(ids[1]), std::move(ranks[1]));
  out.correct = report_from_ranks(std::move(ids[2]), std::move(ranks[2]));
  return out;
}

nlohmann::json StratifiedReports::to_json() const {
  return {{"wrong", wrong.to_json()},
          {"partially_correct", partial.to_json()},
          {"correct", correct.to_json()},
          {"no_cue_triples", no_cue_triples}};
}

std::string StratifiedReports::text_table() const {
  std::ostringstream os;
  os << wrong.text_table("wrong") << "\n"
     << partial.text_table("partially correct") << "\n"
     << correct.text_table("correct") << "\n"
     << "no-cue triples (excluded): " << no_cue_triples;
  return os.str();
}

nlohmann::json attention_trace_json(const std::string& triple_id, const nn::AttentionTrace& trace,
                                    int w) {
  nlohmann::json out;
  out["triple_id"] = triple_id;
  if (!trace.has_temporal && !trace.has_spatial) {
    out["note"] = "variant has no attention";
    return out;
  }
  if (trace.has_temporal) {
    nlohmann::json alpha = nlohmann::json::array();
    for (size_t j = 0; j < trace.temporal.size(); ++j) {
      alpha.push_back({{"step", static_cast<int>(j) - w}, {"weight", trace.temporal[j]}});
    }
    out["temporal"] = std::move(alpha);
  }
  if (trace.has_spatial) {
    nlohmann::json beta = nlohmann::json::array();
    for (size_t j = 0; j < trace.spatial.size(); ++j) {
      beta.push_back({{"step", static_cast<int>(j) - w},
                      {"tool", trace.spatial[j][0]},
                      {"panel", trace.spatial[j][1]},
                      {"dialog", trace.spatial[j][2]}});
    }
    out["spatial"] = std::move(beta);
  }
  return out;
}

std::vector<AblationRow> default_ablation_rows() {
  return {{"q", false, false, false},    {"q+t", true, false, false},
          {"q+v", false, true, false},   {"q+t+v", true, true, false},
          {"q+ge", false, false, true},  {"q+t+ge", true, false, true},
          {"q+v+ge", false, true, true}, {"q+t+v+ge", true, true, true}};
}

std::vector<AblationResult> run_ablation(const KnowledgeBase& kb, const AnswerPool& pool,
                                         const Dataset& train_ds, const Dataset& dev_ds,
                                         const Dataset& test_ds, const nn::ModelConfig& model_cfg,
                                         const TrainConfig& train_cfg,
                                         const std::vector<AblationRow>& rows,
                                         const NodeEmbeddings* graph_vectors, uint64_t model_seed,
                                         CueSource test_cue_source,
                                         const CueOverrides* predicted) {
  Vocabulary vocab = Vocabulary::build(train_ds, 1);
  std::vector<AblationResult> out;
  for (const AblationRow& row : rows) {
    if (row.graph_init && graph_vectors == nullptr) {
      throw validation_error("ablation row '" + row.name + "' needs graph embeddings");
    }
    nn::ModelConfig cfg = model_cfg;
    cfg.answer_init = row.graph_init ? nn::AnswerInit::graph : nn::AnswerInit::random;
    ContextMask mask{row.transcript, row.cues};

    nn::QAModel model(cfg, vocab, pool.ids, model_seed, nullptr,
                      row.graph_init ? graph_vectors : nullptr);
    ExampleSet train_set = make_examples(train_ds, pool, cfg.window, CueSource::gold, nullptr, mask);
    ExampleSet dev_set = make_examples(dev_ds, pool, cfg.window, CueSource::gold, nullptr, mask);
    AblationResult res;
    res.row = row;
    res.history = train(model, train_set, dev_set, train_cfg);
    res.test = evaluate(model, test_ds, pool, test_cue_source, predicted, mask);
    out.push_back(std::move(res));
  }
  return out;
}

std::string ablation_text_table(const std::vector<AblationResult>& results) {
  std::ostringstream os;
  for (const AblationResult& r : results) os << r.test.text_table(r.row.name) << "\n";
  return os.str();
}

}  // namespace tutorqa
