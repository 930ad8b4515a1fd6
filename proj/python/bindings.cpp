// Python bindings for the core operations: KB ingestion, graph embedding,
// one-shot cue recognition, synthetic data, training and evaluation.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "json.hpp"
#include "tutorqa/cues.hpp"
#include "tutorqa/deepwalk.hpp"
#include "tutorqa/error.hpp"
#include "tutorqa/evaluator.hpp"
#include "tutorqa/hash.hpp"
#include "tutorqa/synth.hpp"
#include "tutorqa/trainer.hpp"
#include "tutorqa/wordvec.hpp"

namespace py = pybind11;
using namespace tutorqa;
using nlohmann::json;

namespace {

json py_to_json(const py::handle& obj) {
  if (obj.is_none()) return nullptr;
  if (py::isinstance<py::bool_>(obj)) return obj.cast<bool>();
  if (py::isinstance<py::int_>(obj)) return obj.cast<int64_t>();
  if (py::isinstance<py::float_>(obj)) return obj.cast<double>();
  if (py::isinstance<py::str>(obj)) return obj.cast<std::string>();
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    json arr = json::array();
    for (const py::handle& item : obj) arr.push_back(py_to_json(item));
    return arr;
  }
  if (py::isinstance<py::dict>(obj)) {
    json out = json::object();
    for (const auto& item : obj.cast<py::dict>()) {
      out[item.first.cast<std::string>()] = py_to_json(item.second);
    }
    return out;
  }
  throw validation_error("unsupported config value type");
}

py::object json_to_py(const json& j) {
  switch (j.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(j.get<bool>());
    case json::value_t::number_integer: return py::int_(j.get<int64_t>());
    case json::value_t::number_unsigned: return py::int_(j.get<uint64_t>());
    case json::value_t::number_float: return py::float_(j.get<double>());
    case json::value_t::string: return py::str(j.get<std::string>());
    case json::value_t::array: {
      py::list out;
      for (const json& item : j) out.append(json_to_py(item));
      return out;
    }
    case json::value_t::object: {
      py::dict out;
      for (const auto& [key, value] : j.items()) out[py::str(key)] = json_to_py(value);
      return out;
    }
    default: return py::none();
  }
}

TokenBag bag_from_dict(const py::dict& d) {
  TokenBag bag;
  for (const auto& item : d) {
    bag.add(lowercase(item.first.cast<std::string>()), item.second.cast<int>());
  }
  return bag;
}

CueStream stream_from_string(const std::string& s) {
  if (s == "tool") return CueStream::tool;
  if (s == "panel") return CueStream::panel;
  if (s == "dialog") return CueStream::dialog;
  throw validation_error("unknown cue stream '" + s + "'");
}

nn::ModelConfig model_config_from_dict(const py::dict& d) {
  return nn::ModelConfig::from_json(py_to_json(d));
}

TrainConfig train_config_from_dict(const py::dict& d) {
  return TrainConfig::from_json(py_to_json(d));
}

py::dict report_to_dict(const EvalReport& rep) {
  return json_to_py(rep.to_json()).cast<py::dict>();
}

}  // namespace

PYBIND11_MODULE(_tutorqa, m) {
  m.doc() = "knowledge-grounded question answering over screencast tutorials";

  py::register_exception<Error>(m, "TutorqaError");

  py::class_<KnowledgeBase>(m, "KnowledgeBase")
      .def_static("load", &KnowledgeBase::load, py::arg("path"))
      .def("save", &KnowledgeBase::save, py::arg("path"))
      .def("entity_count", &KnowledgeBase::entity_count)
      .def("option_count", &KnowledgeBase::option_count)
      .def("has_candidate", &KnowledgeBase::has_candidate)
      .def("is_option", &KnowledgeBase::is_option)
      .def("entity_type",
           [](const KnowledgeBase& kb, const std::string& id) -> py::object {
             auto t = kb.entity_type_of(id);
             return t ? py::cast(to_string(*t)) : py::none();
           })
      .def("fingerprint", [](const KnowledgeBase& kb) { return hash_hex(kb.fingerprint()); });

  m.def("answer_pool", [](const KnowledgeBase& kb) { return answer_pool(kb).ids; },
        "ordered candidate ids: entities then options");

  py::class_<Graph>(m, "Graph")
      .def("node_count", &Graph::node_count)
      .def("edge_count", &Graph::edge_count)
      .def_readonly("nodes", &Graph::nodes)
      .def("neighbors", [](const Graph& g, const std::string& id) {
        auto it = g.index.find(id);
        if (it == g.index.end()) throw validation_error("unknown node '" + id + "'");
        std::vector<std::string> out;
        for (int v : g.adjacency[it->second]) out.push_back(g.nodes[v]);
        return out;
      });

  m.def("to_graph", &to_graph, py::arg("kb"));

  py::class_<Dataset>(m, "Dataset")
      .def_static(
          "load",
          [](const KnowledgeBase& kb, const std::string& transcripts, const std::string& qa,
             const std::string& cues, const std::string& ocr) {
            return Dataset::load(kb, transcripts, qa, cues, ocr);
          },
          py::arg("kb"), py::arg("transcripts"), py::arg("qa"), py::arg("cues"),
          py::arg("ocr") = "")
      .def("triple_count", [](const Dataset& ds) { return ds.triples().size(); })
      .def("triple_ids",
           [](const Dataset& ds) {
             std::vector<std::string> out;
             for (const QATriple& t : ds.triples()) out.push_back(t.id);
             return out;
           })
      .def("sentence_count", &Dataset::sentence_count)
      .def("video_ids", &Dataset::video_ids)
      .def("fingerprint", [](const Dataset& ds) { return hash_hex(ds.fingerprint()); });

  py::class_<CueCatalog>(m, "CueCatalog")
      .def_static("load", &CueCatalog::load, py::arg("path"), py::arg("kb"))
      .def("save", &CueCatalog::save, py::arg("path"))
      .def("panel_count", [](const CueCatalog& c) { return c.panel.size(); })
      .def("dialog_count", [](const CueCatalog& c) { return c.dialog.size(); });

  py::class_<SynthData>(m, "SynthData")
      .def_readonly("kb", &SynthData::kb)
      .def_readonly("dataset", &SynthData::dataset)
      .def_readonly("catalog", &SynthData::catalog)
      .def_readonly("n_clusters", &SynthData::n_clusters);

  m.def(
      "synth_dataset",
      [](int n_videos, int sents_per_video, int kb_size, int n_triples, double cue_fraction,
         uint64_t seed) {
        SynthSpec spec;
        spec.n_videos = n_videos;
        spec.sents_per_video = sents_per_video;
        spec.kb_size = kb_size;
        spec.n_triples = n_triples;
        spec.cue_determined_fraction = cue_fraction;
        spec.seed = seed;
        return synth_dataset(spec);
      },
      py::arg("n_videos") = 4, py::arg("sents_per_video") = 30, py::arg("kb_size") = 35,
      py::arg("n_triples") = 200, py::arg("cue_fraction") = 0.5, py::arg("seed") = 1);

  m.def(
      "split_synth",
      [](const SynthData& data, double holdout, double train_frac, double dev_frac,
         uint64_t seed) {
        SplitIndices split = split_synth(data, holdout, train_frac, dev_frac, seed);
        return py::make_tuple(dataset_subset(data.dataset, split.train),
                              dataset_subset(data.dataset, split.dev),
                              dataset_subset(data.dataset, split.test));
      },
      py::arg("data"), py::arg("holdout") = 0.2, py::arg("train_frac") = 0.8,
      py::arg("dev_frac") = 0.1, py::arg("seed") = 1);

  m.def(
      "deepwalk_embeddings",
      [](const KnowledgeBase& kb, int dim, int walks_per_node, int walk_length, int window,
         int negatives, int epochs, double initial_lr, uint64_t seed) {
        WalkConfig cfg;
        cfg.dim = dim;
        cfg.walks_per_node = walks_per_node;
        cfg.walk_length = walk_length;
        cfg.window = window;
        cfg.negatives = negatives;
        cfg.epochs = epochs;
        cfg.initial_lr = initial_lr;
        cfg.seed = seed;
        NodeEmbeddings emb = deepwalk(to_graph(kb), cfg);
        py::dict out;
        for (int c = 0; c < emb.count(); ++c) {
          std::vector<double> row(emb.vectors.col(c).data(),
                                  emb.vectors.col(c).data() + emb.dim());
          out[py::str(emb.ids[c])] = row;
        }
        return out;
      },
      py::arg("kb"), py::arg("dim") = 300, py::arg("walks_per_node") = 80,
      py::arg("walk_length") = 40, py::arg("window") = 10, py::arg("negatives") = 5,
      py::arg("epochs") = 1, py::arg("initial_lr") = 0.025, py::arg("seed") = 1);

  py::class_<WordVectors>(m, "WordVectors")
      .def(py::init<int>(), py::arg("dim"))
      .def_static("load", &WordVectors::load, py::arg("path"))
      .def("set",
           [](WordVectors& wv, const std::string& token, const std::vector<double>& values) {
             Eigen::VectorXd v(values.size());
             for (size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
             wv.set(token, std::move(v));
           })
      .def("dim", &WordVectors::dim);

  m.def(
      "bag_similarity",
      [](const py::dict& test, const py::dict& train, const WordVectors& wv) {
        return bag_similarity(bag_from_dict(test), bag_from_dict(train), wv);
      },
      py::arg("test"), py::arg("train"), py::arg("word_vectors"));

  m.def(
      "recognize",
      [](const py::dict& test, const std::string& stream, const CueCatalog& catalog,
         const WordVectors& wv) {
        std::vector<std::pair<std::string, double>> out;
        for (const MatchResult& r : recognize(bag_from_dict(test), stream_from_string(stream),
                                              catalog, wv)) {
          out.push_back({r.id, r.similarity});
        }
        return out;
      },
      py::arg("test"), py::arg("stream"), py::arg("catalog"), py::arg("word_vectors"));

  m.def(
      "predict_and_score_cues",
      [](const SynthData& data, int wordvec_dim) {
        WordVectors wv(wordvec_dim);
        CueOverrides pred =
            predict_cue_streams(data.dataset, data.tool_predictions, data.catalog, wv, data.kb);
        CueAccuracy acc = cue_accuracy(pred, data.dataset);
        py::dict out;
        out["tool"] = acc.tool;
        out["panel"] = acc.panel;
        out["dialog"] = acc.dialog;
        return out;
      },
      py::arg("data"), py::arg("wordvec_dim") = 300,
      "run one-shot recognition on a synthetic bundle and score it against gold");

  py::class_<nn::QAModel>(m, "Model")
      .def_static("load", &nn::QAModel::load, py::arg("path"))
      .def("save", &nn::QAModel::save, py::arg("path"))
      .def("pool_size", [](nn::QAModel& mdl) { return mdl.pool_ids().size(); })
      .def("parameter_count", &nn::QAModel::scalar_parameter_count)
      .def("config", [](nn::QAModel& mdl) { return json_to_py(mdl.config().to_json()); })
      .def("rank_answers",
           [](nn::QAModel& mdl, const Dataset& ds, const std::string& triple_id, int top_k) {
             for (const QATriple& triple : ds.triples()) {
               if (triple.id != triple_id) continue;
               ContextWindow window = context_window(ds, triple, mdl.config().window);
               nn::Tape tape;
               nn::QAModel::Result res = mdl.run(tape, window);
               std::vector<std::pair<std::string, double>> scored;
               for (size_t i = 0; i < mdl.pool_ids().size(); ++i) {
                 scored.push_back({mdl.pool_ids()[i], res.score_values[static_cast<long>(i)]});
               }
               std::sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
               if (top_k > 0 && static_cast<size_t>(top_k) < scored.size()) scored.resize(top_k);
               return scored;
             }
             throw validation_error("triple '" + triple_id + "' not found");
           },
           py::arg("dataset"), py::arg("triple_id"), py::arg("top_k") = 10);

  m.def(
      "train_model",
      [](const KnowledgeBase& kb, const Dataset& train_ds, const Dataset& dev_ds,
         const py::dict& model_cfg, const py::dict& train_cfg, uint64_t seed) {
        nn::ModelConfig mc = model_config_from_dict(model_cfg);
        TrainConfig tc = train_config_from_dict(train_cfg);
        AnswerPool pool = answer_pool(kb);
        Vocabulary vocab = Vocabulary::build(train_ds, 1);
        auto model = std::make_unique<nn::QAModel>(mc, vocab, pool.ids, seed);
        ExampleSet train_set = make_examples(train_ds, pool, mc.window);
        ExampleSet dev_set = make_examples(dev_ds, pool, mc.window);
        TrainHistory history = train(*model, train_set, dev_set, tc);
        py::object history_py = json_to_py(history.to_json());
        return py::make_tuple(std::move(model), history_py);
      },
      py::arg("kb"), py::arg("train"), py::arg("dev"), py::arg("model_config") = py::dict(),
      py::arg("train_config") = py::dict(), py::arg("seed") = 1);

  m.def(
      "evaluate_model",
      [](nn::QAModel& model, const Dataset& ds, const KnowledgeBase& kb) {
        AnswerPool pool = answer_pool(kb);
        return report_to_dict(evaluate(model, ds, pool));
      },
      py::arg("model"), py::arg("dataset"), py::arg("kb"));

  m.def(
      "gradient_check",
      [](nn::QAModel& model, const KnowledgeBase& kb, const Dataset& ds, double epsilon,
         long sample, uint64_t seed) {
        AnswerPool pool = answer_pool(kb);
        ExampleSet all = make_examples(ds, pool, model.config().window);
        ExampleSet batch(all.begin(), all.begin() + std::min<size_t>(3, all.size()));
        GradCheckResult res = gradient_check(model, batch, epsilon, sample, seed);
        py::dict out;
        out["max_rel_error"] = res.max_rel_error;
        out["coords_checked"] = res.coords_checked;
        if (!res.warning.empty()) out["warning"] = res.warning;
        return out;
      },
      py::arg("model"), py::arg("kb"), py::arg("dataset"), py::arg("epsilon") = 1e-4,
      py::arg("sample") = 300, py::arg("seed") = 7);

  m.def(
      "build_model",
      [](const KnowledgeBase& kb, const Dataset& vocab_source, const py::dict& model_cfg,
         uint64_t seed) {
        nn::ModelConfig mc = model_config_from_dict(model_cfg);
        AnswerPool pool = answer_pool(kb);
        Vocabulary vocab = Vocabulary::build(vocab_source, 1);
        return std::make_unique<nn::QAModel>(mc, vocab, pool.ids, seed);
      },
      py::arg("kb"), py::arg("vocab_source"), py::arg("model_config") = py::dict(),
      py::arg("seed") = 1, "untrained model, mainly for gradient checks");
}
