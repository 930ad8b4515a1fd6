// Command-line front end: wires ingestion, graph embedding, cue matching,
// training and evaluation into reproducible pipelines. Every command writes
// its artifact plus a run manifest. Exit codes: 0 success, 1 validation
// error, 2 runtime failure, 64 unknown command.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "CLI11.hpp"
#include "tutorqa/cues.hpp"
#include "tutorqa/deepwalk.hpp"
#include "tutorqa/error.hpp"
#include "tutorqa/evaluator.hpp"
#include "tutorqa/jsonl.hpp"
#include "tutorqa/manifest.hpp"
#include "tutorqa/synth.hpp"
#include "tutorqa/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tutorqa;

namespace {

const std::set<std::string> kCommands = {
    "build-graph", "embed-graph",       "match-cues", "synth-data", "train",
    "evaluate",    "ablate",            "stratify",   "inspect-attention",
    "grad-check"};

void print_usage() {
  std::cout << "usage: tutorqa <command> [options]\n"
            << "\ncommands:\n"
            << "  build-graph        convert a knowledge base into its undirected graph\n"
            << "  embed-graph        learn node embeddings by random walks + skip-gram\n"
            << "  match-cues         recognize panels/dialogs from OCR bags\n"
            << "  synth-data         generate a synthetic KB + dataset with splits\n"
            << "  train              train a context-fusion answer ranking model\n"
            << "  evaluate           score a checkpoint on a dataset (MRR, R@k, rank)\n"
            << "  ablate             train/evaluate the standard context ablation rows\n"
            << "  stratify           split test results by visual-cue prediction errors\n"
            << "  inspect-attention  dump temporal/spatial attention weights\n"
            << "  grad-check         finite-difference check of model gradients\n"
            << "\ncommon flags: --config FILE (flat dotted-key JSON), --seed, --out\n"
            << "run 'tutorqa <command> --help' for per-command options\n";
}

// Flat dotted-key JSON config; command-line flags override file values.
class Cfg {
 public:
  static Cfg preload(int argc, char** argv) {
    Cfg cfg;
    for (int i = 0; i < argc; ++i) {
      std::string arg = argv[i];
      std::string path;
      if (arg == "--config" && i + 1 < argc) {
        path = argv[i + 1];
      } else if (arg.rfind("--config=", 0) == 0) {
        path = arg.substr(9);
      }
      if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw validation_error("cannot open config file: " + path);
        try {
          in >> cfg.values_;
        } catch (const json::exception& e) {
          throw validation_error("config parse error in " + path + ": " + e.what());
        }
        if (!cfg.values_.is_object()) throw validation_error("config must be a JSON object");
      }
    }
    return cfg;
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return it->get<T>();
    } catch (const json::exception& e) {
      throw validation_error("config key '" + key + "': " + e.what());
    }
  }

 private:
  json values_ = json::object();
};

void add_config_flag(CLI::App& app) {
  static std::string ignored;
  app.add_option("--config", ignored, "flat dotted-key JSON config (flags override)");
}

struct ModelFlags {
  std::string variant;
  int w = 5;
  int embed_dim = 300;
  int maps = 100;
  int answer_dim = 300;
  int gru_hidden = 300;
  int attn_hidden = 300;
  double dropout = 0.5;
  std::string answer_init;
  bool freeze_words = false;

  void attach(CLI::App& app, const Cfg& cfg) {
    variant = cfg.get<std::string>("model.variant", "base");
    w = cfg.get<int>("model.w", 5);
    embed_dim = cfg.get<int>("model.embed_dim", 300);
    maps = cfg.get<int>("model.maps_per_width", 100);
    answer_dim = cfg.get<int>("model.answer_dim", 300);
    gru_hidden = cfg.get<int>("model.gru_hidden", 300);
    attn_hidden = cfg.get<int>("model.attn_hidden", 300);
    dropout = cfg.get<double>("model.dropout", 0.5);
    answer_init = cfg.get<std::string>("model.answer_init", "random");
    freeze_words = cfg.get<bool>("model.freeze_word_embeddings", false);

    app.add_option("--variant", variant, "base|temporal|spatial|dual")
        ->check(CLI::IsMember({"base", "temporal", "spatial", "dual"}));
    app.add_option("--w", w, "context window half-width (sentences)");
    app.add_option("--embed-dim", embed_dim, "word embedding dimension");
    app.add_option("--maps", maps, "CNN feature maps per filter width");
    app.add_option("--answer-dim", answer_dim, "answer embedding dimension");
    app.add_option("--gru-hidden", gru_hidden, "GRU hidden units per direction");
    app.add_option("--attn-hidden", attn_hidden, "attention MLP hidden units");
    app.add_option("--dropout", dropout, "dropout rate");
    app.add_option("--answer-init", answer_init, "random|graph")
        ->check(CLI::IsMember({"random", "graph"}));
    app.add_flag("--freeze-word-embeddings", freeze_words, "do not fine-tune word vectors");
  }

  nn::ModelConfig to_config() const {
    nn::ModelConfig mc;
    mc.variant = nn::variant_from_string(variant);
    mc.window = w;
    mc.embed_dim = embed_dim;
    mc.maps_per_width = maps;
    mc.answer_dim = answer_dim;
    mc.gru_hidden = gru_hidden;
    mc.attn_hidden = attn_hidden;
    mc.dropout = dropout;
    mc.answer_init = nn::answer_init_from_string(answer_init);
    mc.train_word_embeddings = !freeze_words;
    mc.validate();
    return mc;
  }
};

struct TrainFlags {
  int batch_size = 128;
  int epochs = 100;
  double lr = 1e-3;
  double dropout = 0.5;
  uint64_t seed = 1;

  void attach(CLI::App& app, const Cfg& cfg) {
    batch_size = cfg.get<int>("train.batch_size", 128);
    epochs = cfg.get<int>("train.max_epochs", 100);
    lr = cfg.get<double>("train.lr", 1e-3);
    dropout = cfg.get<double>("train.dropout", 0.5);
    seed = cfg.get<uint64_t>("seed", 1);
    app.add_option("--batch-size", batch_size, "mini-batch size");
    app.add_option("--epochs", epochs, "training epochs");
    app.add_option("--lr", lr, "Adam learning rate");
    app.add_option("--train-dropout", dropout, "dropout rate during training");
    app.add_option("--seed", seed, "master seed (init, shuffling, dropout)");
  }

  TrainConfig to_config() const {
    TrainConfig tc;
    tc.batch_size = batch_size;
    tc.max_epochs = epochs;
    tc.lr = lr;
    tc.dropout = dropout;
    tc.seed = seed;
    tc.validate();
    return tc;
  }
};

struct WalkFlags {
  int walks_per_node = 80;
  int walk_length = 40;
  int window = 10;
  int dim = 300;
  int negatives = 5;
  int epochs = 1;
  double lr = 0.025;
  uint64_t seed = 1;
  bool parallel = false;
  int threads = 0;

  void attach(CLI::App& app, const Cfg& cfg) {
    walks_per_node = cfg.get<int>("walk.walks_per_node", 80);
    walk_length = cfg.get<int>("walk.walk_length", 40);
    window = cfg.get<int>("walk.window", 10);
    dim = cfg.get<int>("walk.dim", 300);
    negatives = cfg.get<int>("walk.negatives", 5);
    epochs = cfg.get<int>("walk.epochs", 1);
    lr = cfg.get<double>("walk.initial_lr", 0.025);
    seed = cfg.get<uint64_t>("seed", 1);
    parallel = cfg.get<bool>("walk.parallel", false);
    threads = cfg.get<int>("walk.threads", 0);
    app.add_option("--walks-per-node", walks_per_node, "random walks started per node");
    app.add_option("--walk-length", walk_length, "nodes per walk");
    app.add_option("--walk-window", window, "skip-gram context window");
    app.add_option("--dim", dim, "embedding dimension");
    app.add_option("--negatives", negatives, "negative samples per positive");
    app.add_option("--walk-epochs", epochs, "passes over the walk corpus");
    app.add_option("--walk-lr", lr, "initial skip-gram learning rate");
    app.add_option("--walk-seed", seed, "walk + skip-gram seed");
    app.add_flag("--parallel", parallel, "lock-free threads (forfeits determinism)");
    app.add_option("--threads", threads, "thread count for --parallel (0 = auto)");
  }

  WalkConfig to_config() const {
    WalkConfig wc;
    wc.walks_per_node = walks_per_node;
    wc.walk_length = walk_length;
    wc.window = window;
    wc.dim = dim;
    wc.negatives = negatives;
    wc.epochs = epochs;
    wc.initial_lr = lr;
    wc.seed = seed;
    wc.parallel = parallel;
    wc.threads = threads;
    wc.validate();
    return wc;
  }
};

void write_manifest_for(const std::string& out_path, const std::string& command,
                        const json& config, const std::map<std::string, std::string>& inputs,
                        const json& extra = json::object()) {
  write_json_file(out_path + ".manifest.json", make_manifest(command, config, inputs, extra));
}

int cmd_build_graph(int argc, char** argv, const Cfg& cfg) {
  CLI::App app{"convert a knowledge base into its undirected graph"};
  add_config_flag(app);
  std::string kb_path = cfg.get<std::string>("paths.kb", "");
  std::string out = cfg.get<std::string>("paths.out", "graph.json");
  app.add_option("--kb", kb_path, "knowledge base JSON")->required(kb_path.empty());
  app.add_option("--out", out, "output graph JSON");
  app.parse(argc, argv);

  KnowledgeBase kb = KnowledgeBase::load(kb_path);
  Graph g = to_graph(kb);
  json doc;
  doc["nodes"] = g.nodes;
  doc["edges"] = json::array();
  for (int u = 0; u < g.node_count(); ++u) {
    for (int v : g.adjacency[u]) {
      if (u < v) doc["edges"].push_back({g.nodes[u], g.nodes[v]});
    }
  }
  write_json_file(out, doc);
  write_manifest_for(out, "build-graph", json{{"kb", kb_path}},
                     {{"kb", file_hash_hex(kb_path)}},
                     json{{"nodes", g.node_count()}, {"edges", g.edge_count()}});
  std::cout << "graph: " << g.node_count() << " nodes, " << g.edge_count() << " edges -> " << out
            << "\n";
  return 0;
}

int cmd_embed_graph(int argc, char** argv, const Cfg& cfg) {
  CLI::App app{"learn node embeddings by random walks + skip-gram"};
  add_config_flag(app);
  std::string kb_path = cfg.get<std::string>("paths.kb", "");
  std::string out = cfg.get<std::string>("paths.out", "embeddings.txt");
  WalkFlags wf;
  wf.attach(app, cfg);
  app.add_option("--kb", kb_path, "knowledge base JSON")->required(kb_path.empty());
  app.add_option("--out", out, "output embedding file");
  app.parse(argc, argv);

  KnowledgeBase kb = KnowledgeBase::load(kb_path);
  WalkConfig wc = wf.to_config();
  Graph g = to_graph(kb);
  NodeEmbeddings emb = deepwalk(g, wc);
  save_embeddings(emb, out);
  json config{{"kb", kb_path},
              {"walks_per_node", wc.walks_per_node},
              {"walk_length", wc.walk_length},
              {"window", wc.window},
              {"dim", wc.dim},
              {"negatives", wc.negatives},
              {"epochs", wc.epochs},
              {"initial_lr", wc.initial_lr},
              {"seed", wc.seed},
              {"parallel", wc.parallel}};
  write_manifest_for(out, "embed-graph", config, {{"kb", file_hash_hex(kb_path)}},
                     json{{"nodes", emb.count()}, {"dim", emb.dim()}});
  std::cout << "embeddings: " << emb.count() << " x " << emb.dim() << " -> " << out << "\n";
  return 0;
}

int cmd_match_cues(int argc, char** argv, const Cfg& cfg) {
  CLI::App app{"recognize panels/dialogs from OCR bags"};
  add_config_flag(app);
  std::string kb_path = cfg.get<std::string>("paths.kb", "");
  std::string ocr_path = cfg.get<std::string>("paths.ocr", "");
  std::string catalog_path = cfg.get<std::string>("paths.catalog", "");
  std::string tools_path = cfg.get<std::string>("paths.tool_predictions", "");
  std::string wordvec_path = cfg.get<std::string>("paths.wordvec", "");
  std::string gold_path = cfg.get<std::string>("paths.cues", "");
  std::string transcripts_path = cfg.get<std::string>("paths.transcripts", "");
  std::string out = cfg.get<std::string>("paths.out", "cues_pred.jsonl");
  int wordvec_dim = cfg.get<int>("cues.wordvec_dim", 300);
  app.add_option("--kb", kb_path)->required(kb_path.empty());
  app.add_option("--ocr", ocr_path, "ocr.jsonl")->required(ocr_path.empty());
  app.add_option("--catalog", catalog_path, "reference bags jsonl")->required(catalog_path.empty());
  app.add_option("--tool-predictions", tools_path, "external tool classifier output");
  app.add_option("--wordvec", wordvec_path, "word vector file (hash-seeded OOV otherwise)");
  app.add_option("--wordvec-dim", wordvec_dim, "vector dim when no file is given");
  app.add_option("--gold", gold_path, "gold cues.jsonl for accuracy reporting");
  app.add_option("--transcripts", transcripts_path, "needed with --gold");
  app.add_option("--out", out, "predicted cues output");
  app.parse(argc, argv);

  KnowledgeBase kb = KnowledgeBase::load(kb_path);
  OcrBags ocr = load_ocr_bags(ocr_path);
  CueCatalog catalog = CueCatalog::load(catalog_path, kb);
  ToolPredictions tools;
  if (!tools_path.empty()) tools = load_tool_predictions(tools_path);
  WordVectors wv = wordvec_path.empty() ? WordVectors(wordvec_dim) : WordVectors::load(wordvec_path);

  CueOverrides pred = predict_cue_streams(ocr, tools, catalog, wv, kb);
  save_cues(pred, out);

  std::map<std::string, std::string> inputs{{"kb", file_hash_hex(kb_path)},
                                            {"ocr", file_hash_hex(ocr_path)},
                                            {"catalog", file_hash_hex(catalog_path)}};
  if (!tools_path.empty()) inputs["tool_predictions"] = file_hash_hex(tools_path);
  json results{{"segments", pred.size()}};
  if (!gold_path.empty()) {
    if (transcripts_path.empty()) {
      throw validation_error("--gold needs --transcripts to resolve segments");
    }
    std::string empty_qa = out + ".emptyqa.tmp";
    {
      std::ofstream tmp(empty_qa);
    }
    Dataset ds = Dataset::load(kb, transcripts_path, empty_qa, gold_path, "");
    std::remove(empty_qa.c_str());
    CueAccuracy acc = cue_accuracy(pred, ds);
    results["accuracy"] = {{"tool", acc.tool},   {"panel", acc.panel},
                           {"dialog", acc.dialog}, {"tool_n", acc.tool_total},
                           {"panel_n", acc.panel_total}, {"dialog_n", acc.dialog_total}};
    std::cout << "accuracy  tools " << acc.tool << "  dialogs " << acc.dialog << "  panels "
              << acc.panel << "\n";
    inputs["gold"] = file_hash_hex(gold_path);
  }
  write_manifest_for(out, "match-cues", json{{"wordvec_dim", wordvec_dim}}, inputs, results);
  std::cout << "predicted cues for " << pred.size() << " segments -> " << out << "\n";
  return 0;
}

int cmd_synth_data(int argc, char** argv, const Cfg& cfg) {
  CLI::App app{"generate a synthetic KB + dataset with splits"};
  add_config_flag(app);
  SynthSpec spec;
  spec.n_videos = cfg.get<int>("synth.n_videos", 4);
  spec.sents_per_video = cfg.get<int>("synth.sents_per_video", 30);
  spec.kb_size = cfg.get<int>("synth.kb_size", 35);
  spec.n_triples = cfg.get<int>("synth.n_triples", 200);
  spec.cue_determined_fraction = cfg.get<double>("synth.cue_fraction", 0.5);
  spec.seed = cfg.get<uint64_t>("seed", 1);
  double holdout = cfg.get<double>("synth.holdout", 0.2);
  double train_frac = cfg.get<double>("synth.train_frac", 0.8);
  double dev_frac = cfg.get<double>("synth.dev_frac", 0.1);
  std::string outdir = cfg.get<std::string>("paths.out", "synth");
  app.add_option("--n-videos", spec.n_videos);
  app.add_option("--sents-per-video", spec.sents_per_video);
  app.add_option("--kb-size", spec.kb_size, "total candidates (>= 7)");
  app.add_option("--n-triples", spec.n_triples);
  app.add_option("--cue-fraction", spec.cue_determined_fraction,
                 "fraction of answers determined by the cue at t");
  app.add_option("--holdout", holdout, "fraction of clusters whose relation answers go to test");
  app.add_option("--train-frac", train_frac);
  app.add_option("--dev-frac", dev_frac);
  app.add_option("--seed", spec.seed);
  app.add_option("--out", outdir, "output directory");
  app.parse(argc, argv);

  SynthData data = synth_dataset(spec);
  SplitIndices split = split_synth(data, holdout, train_frac, dev_frac, spec.seed);

  fs::create_directories(outdir);
  auto at = [&](const std::string& name) { return (fs::path(outdir) / name).string(); };
  data.kb.save(at("kb.json"));
  save_transcripts(data.dataset, at("transcripts.jsonl"));
  save_gold_cues(data.dataset, at("cues.jsonl"));
  save_ocr_bags(data.dataset.ocr_bags(), at("ocr.jsonl"));
  save_tool_predictions(data.tool_predictions, at("tool_predictions.jsonl"));
  data.catalog.save(at("ref_bags.jsonl"));
  auto subset = [&](const std::vector<int>& idx) {
    std::vector<QATriple> out;
    for (int i : idx) out.push_back(data.dataset.triples()[i]);
    return out;
  };
  save_qa(data.dataset.triples(), at("qa_all.jsonl"));
  save_qa(subset(split.train), at("qa_train.jsonl"));
  save_qa(subset(split.dev), at("qa_dev.jsonl"));
  save_qa(subset(split.test), at("qa_test.jsonl"));

  json config{{"n_videos", spec.n_videos},
              {"sents_per_video", spec.sents_per_video},
              {"kb_size", spec.kb_size},
              {"n_triples", spec.n_triples},
              {"cue_fraction", spec.cue_determined_fraction},
              {"holdout", holdout},
              {"train_frac", train_frac},
              {"dev_frac", dev_frac},
              {"seed", spec.seed}};
  json results{{"clusters", data.n_clusters},
               {"pool", answer_pool(data.kb).size()},
               {"train", split.train.size()},
               {"dev", split.dev.size()},
               {"test", split.test.size()}};
  write_json_file(at("manifest.json"), make_manifest("synth-data", config, {}, results));
  std::cout << "synthetic dataset: " << data.dataset.triples().size() << " triples over "
            << spec.n_videos << " videos, pool " << answer_pool(data.kb).size() << " -> " << outdir
            << "\n";
  return 0;
}

struct LoadedData {
  KnowledgeBase kb;
  AnswerPool pool;
  Dataset dataset;
  std::map<std::string, std::string> hashes;
};

LoadedData load_data(const std::string& kb_path, const std::string& transcripts,
                     const std::string& qa, const std::string& cues, const std::string& ocr) {
  LoadedData d;
  d.kb = KnowledgeBase::load(kb_path);
  d.pool = answer_pool(d.kb);
  d.dataset = Dataset::load(d.kb, transcripts, qa, cues, ocr);
  d.hashes = {{"kb", file_hash_hex(kb_path)},
              {"transcripts", file_hash_hex(transcripts)},
              {"qa", file_hash_hex(qa)}};
  if (!cues.empty()) d.hashes["cues"] = file_hash_hex(cues);
  if (!ocr.empty()) d.hashes["ocr"] = file_hash_hex(ocr);
  return d;
}

int cmd_train(int argc, char** argv, const Cfg& cfg) {
  CLI::App app{"train a context-fusion answer ranking model"};
  add_config_flag(app);
  std::string kb_path = cfg.get<std::string>("paths.kb", "");
  std::string transcripts = cfg.get<std::string>("paths.transcripts", "");
  std::string qa_train = cfg.get<std::string>("paths.qa_train", "");
  std::string qa_dev = cfg.get<std::string>("paths.qa_dev", "");
  std::string cues_path = cfg.get<std::string>("paths.cues", "");
  std::string ocr_path = cfg.get<std::string>("paths.ocr", "");
  std::string emb_path = cfg.get<std::string>("paths.embeddings", "");
  std::string wordvec_path = cfg.get<std::string>("paths.wordvec", "");
  std::string pred_path = cfg.get<std::string>("paths.pred_cues", "");
  std::string cue_source = cfg.get<std::string>("train.cue_source", "gold");
  std::string out = cfg.get<std::string>("paths.out", "model.ckpt");
  int min_count = cfg.get<int>("vocab.min_count", 1);
  ModelFlags mf;
  TrainFlags tf;
  mf.attach(app, cfg);
  tf.attach(app, cfg);
  app.add_option("--kb", kb_path)->required(kb_path.empty());
  app.add_option("--transcripts", transcripts)->required(transcripts.empty());
  app.add_option("--qa-train", qa_train)->required(qa_train.empty());
  app.add_option("--qa-dev", qa_dev, "dev split (optional; last epoch wins without it)");
  app.add_option("--cues", cues_path, "gold cue annotations")->required(cues_path.empty());
  app.add_option("--ocr", ocr_path, "ocr.jsonl (optional)");
  app.add_option("--embeddings", emb_path, "graph embeddings for --answer-init graph");
  app.add_option("--wordvec", wordvec_path, "pretrained word vectors (optional)");
  app.add_option("--pred-cues", pred_path, "predicted cues for --cue-source predicted");
  app.add_option("--cue-source", cue_source, "gold|predicted training windows")
      ->check(CLI::IsMember({"gold", "predicted"}));
  app.add_option("--min-count", min_count, "vocabulary frequency threshold");
  app.add_option("--out", out, "checkpoint path");
  app.parse(argc, argv);

  LoadedData train_data = load_data(kb_path, transcripts, qa_train, cues_path, ocr_path);
  nn::ModelConfig mc = mf.to_config();
  TrainConfig tc = tf.to_config();

  std::unique_ptr<NodeEmbeddings> graph_vectors;
  if (mc.answer_init == nn::AnswerInit::graph) {
    if (emb_path.empty()) throw validation_error("--answer-init graph requires --embeddings");
    graph_vectors = std::make_unique<NodeEmbeddings>(load_embeddings(emb_path));
    train_data.hashes["embeddings"] = file_hash_hex(emb_path);
  }
  std::unique_ptr<WordVectors> wordvec;
  if (!wordvec_path.empty()) {
    wordvec = std::make_unique<WordVectors>(WordVectors::load(wordvec_path));
    train_data.hashes["wordvec"] = file_hash_hex(wordvec_path);
  }
  CueOverrides predicted;
  CueSource source = cue_source_from_string(cue_source);
  if (source == CueSource::predicted) {
    if (pred_path.empty()) throw validation_error("--cue-source predicted requires --pred-cues");
    predicted = load_cues(pred_path);
    train_data.hashes["pred_cues"] = file_hash_hex(pred_path);
  }

  Vocabulary vocab = Vocabulary::build(train_data.dataset, min_count);
  nn::QAModel model(mc, vocab, train_data.pool.ids, tc.seed, wordvec.get(), graph_vectors.get());
  std::cout << "model: " << to_string(mc.variant) << ", " << model.scalar_parameter_count()
            << " parameters, vocab " << vocab.size() << ", pool " << train_data.pool.size()
            << "\n";

  ExampleSet train_set = make_examples(train_data.dataset, train_data.pool, mc.window, source,
                                       source == CueSource::predicted ? &predicted : nullptr);
  ExampleSet dev_set;
  if (!qa_dev.empty()) {
    Dataset dev_ds = Dataset::load(train_data.kb, transcripts, qa_dev, cues_path, ocr_path);
    dev_set = make_examples(dev_ds, train_data.pool, mc.window, source,
                            source == CueSource::predicted ? &predicted : nullptr);
    train_data.hashes["qa_dev"] = file_hash_hex(qa_dev);
  }

  TrainHistory history = train(model, train_set, dev_set, tc);
  model.save(out);

  json config{{"model", mc.to_json()}, {"train", tc.to_json()}, {"cue_source", cue_source},
              {"min_count", min_count}};
  json results = history.to_json();
  results["train_triples"] = train_set.size();
  results["dev_triples"] = dev_set.size();
  write_manifest_for(out, "train", config, train_data.hashes, results);

  if (!history.epochs.empty()) {
    const EpochRecord& last = history.epochs.back();
    std::cout << "trained " << history.epochs.size() << " epochs; selected epoch "
              << history.selected_epoch << "; final train loss " << last.train_loss << "\n";
    for (const EpochRecord& e : history.epochs) {
      if (e.epoch == history.selected_epoch && e.dev.count() > 0) {
        std::cout << e.dev.text_table("dev@" + std::to_string(e.epoch)) << "\n";
      }
    }
  }
  std::cout << "checkpoint -> " << out << "\n";
  return 0;
}

int cmd_evaluate(int argc, char** argv, const Cfg& cfg) {
  CLI::App app{"score a checkpoint on a dataset"};
  add_config_flag(app);
  std::string kb_path = cfg.get<std::string>("paths.kb", "");
  std::string transcripts = cfg.get<std::string>("paths.transcripts", "");
  std::string qa_path = cfg.get<std::string>("paths.qa", "");
  std::string cues_path = cfg.get<std::string>("paths.cues", "");
  std::string ocr_path = cfg.get<std::string>("paths.ocr", "");
  std::string ckpt = cfg.get<std::string>("paths.checkpoint", "");
  std::string pred_path = cfg.get<std::string>("paths.pred_cues", "");
  std::string cue_source = cfg.get<std::string>("eval.cue_source", "gold");
  std::string out = cfg.get<std::string>("paths.out", "report.json");
  app.add_option("--kb", kb_path)->required(kb_path.empty());
  app.add_option("--transcripts", transcripts)->required(transcripts.empty());
  app.add_option("--qa", qa_path)->required(qa_path.empty());
  app.add_option("--cues", cues_path)->required(cues_path.empty());
  app.add_option("--ocr", ocr_path);
  app.add_option("--checkpoint", ckpt)->required(ckpt.empty());
  app.add_option("--pred-cues", pred_path, "predicted cues jsonl");
  app.add_option("--cue-source", cue_source, "gold|predicted")
      ->check(CLI::IsMember({"gold", "predicted"}));
  app.add_option("--out", out, "report path (JSON; .txt written beside)");
  app.parse(argc, argv);

  LoadedData d = load_data(kb_path, transcripts, qa_path, cues_path, ocr_path);
  d.hashes["checkpoint"] = file_hash_hex(ckpt);
  auto model = nn::QAModel::load(ckpt);

  CueSource source = cue_source_from_string(cue_source);
  CueOverrides predicted;
  if (source == CueSource::predicted) {
    if (pred_path.empty()) throw validation_error("--cue-source predicted requires --pred-cues");
    predicted = load_cues(pred_path);
    d.hashes["pred_cues"] = file_hash_hex(pred_path);
  }

  EvalReport rep = evaluate(*model, d.dataset, d.pool, source,
                            source == CueSource::predicted ? &predicted : nullptr);
  write_json_file(out, rep.to_json(true));
  {
    std::ofstream txt(out + ".txt");
    txt << rep.text_table("test[" + cue_source + "]") << "\n";
  }
  write_manifest_for(out, "evaluate",
                     json{{"cue_source", cue_source}, {"model", model->config().to_json()}},
                     d.hashes, rep.to_json());
  std::cout << rep.text_table("test[" + cue_source + "]") << "\n";
  std::cout << "report -> " << out << "\n";
  return 0;
}

int cmd_ablate(int argc, char** argv, const Cfg& cfg) {
  CLI::App app{"train/evaluate the standard context ablation rows"};
  add_config_flag(app);
  std::string kb_path = cfg.get<std::string>("paths.kb", "");
  std::string transcripts = cfg.get<std::string>("paths.transcripts", "");
  std::string qa_train = cfg.get<std::string>("paths.qa_train", "");
  std::string qa_dev = cfg.get<std::string>("paths.qa_dev", "");
  std::string qa_test = cfg.get<std::string>("paths.qa_test", "");
  std::string cues_path = cfg.get<std::string>("paths.cues", "");
  std::string ocr_path = cfg.get<std::string>("paths.ocr", "");
  std::string emb_path = cfg.get<std::string>("paths.embeddings", "");
  std::string rows_arg = cfg.get<std::string>("ablate.rows", "");
  std::string out = cfg.get<std::string>("paths.out", "ablation.json");
  ModelFlags mf;
  TrainFlags tf;
  WalkFlags wf;
  mf.attach(app, cfg);
  tf.attach(app, cfg);
  wf.attach(app, cfg);
  app.add_option("--kb", kb_path)->required(kb_path.empty());
  app.add_option("--transcripts", transcripts)->required(transcripts.empty());
  app.add_option("--qa-train", qa_train)->required(qa_train.empty());
  app.add_option("--qa-dev", qa_dev)->required(qa_dev.empty());
  app.add_option("--qa-test", qa_test)->required(qa_test.empty());
  app.add_option("--cues", cues_path)->required(cues_path.empty());
  app.add_option("--ocr", ocr_path);
  app.add_option("--embeddings", emb_path, "precomputed graph embeddings (else trained here)");
  app.add_option("--rows", rows_arg,
                 "comma-separated subset of q,q+t,q+v,q+t+v,q+ge,q+t+ge,q+v+ge,q+t+v+ge");
  app.add_option("--out", out);
  app.parse(argc, argv);

  LoadedData train_d = load_data(kb_path, transcripts, qa_train, cues_path, ocr_path);
  Dataset dev_ds = Dataset::load(train_d.kb, transcripts, qa_dev, cues_path, ocr_path);
  Dataset test_ds = Dataset::load(train_d.kb, transcripts, qa_test, cues_path, ocr_path);
  train_d.hashes["qa_dev"] = file_hash_hex(qa_dev);
  train_d.hashes["qa_test"] = file_hash_hex(qa_test);

  std::vector<AblationRow> rows = default_ablation_rows();
  if (!rows_arg.empty()) {
    std::vector<AblationRow> filtered;
    std::stringstream ss(rows_arg);
    std::string name;
    while (std::getline(ss, name, ',')) {
      bool found = false;
      for (const AblationRow& row : default_ablation_rows()) {
        if (row.name == name) {
          filtered.push_back(row);
          found = true;
        }
      }
      if (!found) throw validation_error("unknown ablation row '" + name + "'");
    }
    rows = std::move(filtered);
  }

  bool needs_graph = false;
  for (const AblationRow& row : rows) needs_graph |= row.graph_init;
  std::unique_ptr<NodeEmbeddings> graph_vectors;
  nn::ModelConfig mc = mf.to_config();
  if (needs_graph) {
    if (!emb_path.empty()) {
      graph_vectors = std::make_unique<NodeEmbeddings>(load_embeddings(emb_path));
      train_d.hashes["embeddings"] = file_hash_hex(emb_path);
    } else {
      WalkConfig wc = wf.to_config();
      wc.dim = mc.answer_dim;
      std::cout << "training graph embeddings (dim " << wc.dim << ")...\n";
      graph_vectors = std::make_unique<NodeEmbeddings>(deepwalk(to_graph(train_d.kb), wc));
    }
  }

  TrainConfig tc = tf.to_config();
  std::vector<AblationResult> results =
      run_ablation(train_d.kb, train_d.pool, train_d.dataset, dev_ds, test_ds, mc, tc, rows,
                   graph_vectors.get(), tc.seed);

  json doc = json::array();
  for (const AblationResult& r : results) {
    doc.push_back({{"row", r.row.name},
                   {"transcript", r.row.transcript},
                   {"cues", r.row.cues},
                   {"graph_init", r.row.graph_init},
                   {"test", r.test.to_json()},
                   {"selected_epoch", r.history.selected_epoch}});
  }
  write_json_file(out, doc);
  {
    std::ofstream txt(out + ".txt");
    txt << ablation_text_table(results);
  }
  write_manifest_for(out, "ablate", json{{"model", mc.to_json()}, {"train", tc.to_json()}},
                     train_d.hashes);
  std::cout << ablation_text_table(results) << "report -> " << out << "\n";
  return 0;
}

int cmd_stratify(int argc, char** argv, const Cfg& cfg) {
  CLI::App app{"split test results by visual-cue prediction errors"};
  add_config_flag(app);
  std::string kb_path = cfg.get<std::string>("paths.kb", "");
  std::string transcripts = cfg.get<std::string>("paths.transcripts", "");
  std::string qa_path = cfg.get<std::string>("paths.qa", "");
  std::string cues_path = cfg.get<std::string>("paths.cues", "");
  std::string pred_path = cfg.get<std::string>("paths.pred_cues", "");
  std::string ckpt = cfg.get<std::string>("paths.checkpoint", "");
  std::string out = cfg.get<std::string>("paths.out", "stratified.json");
  app.add_option("--kb", kb_path)->required(kb_path.empty());
  app.add_option("--transcripts", transcripts)->required(transcripts.empty());
  app.add_option("--qa", qa_path)->required(qa_path.empty());
  app.add_option("--cues", cues_path, "gold cues")->required(cues_path.empty());
  app.add_option("--pred-cues", pred_path, "predicted cues")->required(pred_path.empty());
  app.add_option("--checkpoint", ckpt)->required(ckpt.empty());
  app.add_option("--out", out);
  app.parse(argc, argv);

  LoadedData d = load_data(kb_path, transcripts, qa_path, cues_path, "");
  d.hashes["checkpoint"] = file_hash_hex(ckpt);
  d.hashes["pred_cues"] = file_hash_hex(pred_path);
  auto model = nn::QAModel::load(ckpt);
  CueOverrides predicted = load_cues(pred_path);

  EvalReport rep = evaluate(*model, d.dataset, d.pool, CueSource::predicted, &predicted);
  StratifiedReports strat =
      stratify_by_cue_error(rep, d.dataset, predicted, model->config().window);
  write_json_file(out, strat.to_json());
  {
    std::ofstream txt(out + ".txt");
    txt << strat.text_table() << "\n";
  }
  write_manifest_for(out, "stratify", json{{"model", model->config().to_json()}}, d.hashes,
                     strat.to_json());
  std::cout << strat.text_table() << "\nreport -> " << out << "\n";
  return 0;
}

int cmd_inspect_attention(int argc, char** argv, const Cfg& cfg) {
  CLI::App app{"dump temporal/spatial attention weights"};
  add_config_flag(app);
  std::string kb_path = cfg.get<std::string>("paths.kb", "");
  std::string transcripts = cfg.get<std::string>("paths.transcripts", "");
  std::string qa_path = cfg.get<std::string>("paths.qa", "");
  std::string cues_path = cfg.get<std::string>("paths.cues", "");
  std::string ckpt = cfg.get<std::string>("paths.checkpoint", "");
  std::string triple_id = cfg.get<std::string>("inspect.triple", "");
  std::string out = cfg.get<std::string>("paths.out", "attention.jsonl");
  app.add_option("--kb", kb_path)->required(kb_path.empty());
  app.add_option("--transcripts", transcripts)->required(transcripts.empty());
  app.add_option("--qa", qa_path)->required(qa_path.empty());
  app.add_option("--cues", cues_path)->required(cues_path.empty());
  app.add_option("--checkpoint", ckpt)->required(ckpt.empty());
  app.add_option("--triple", triple_id, "dump only this triple id");
  app.add_option("--out", out, "JSON-lines trace file");
  app.parse(argc, argv);

  LoadedData d = load_data(kb_path, transcripts, qa_path, cues_path, "");
  auto model = nn::QAModel::load(ckpt);
  if (d.pool.fingerprint() != model->pool_hash()) {
    throw validation_error("answer pool does not match the model checkpoint");
  }

  std::vector<json> lines;
  const int w = model->config().window;
  for (const QATriple& triple : d.dataset.triples()) {
    if (!triple_id.empty() && triple.id != triple_id) continue;
    ContextWindow window = context_window(d.dataset, triple, w);
    nn::Tape tape;
    nn::QAModel::Result res = model->run(tape, window);
    lines.push_back(attention_trace_json(triple.id, res.trace, w));
  }
  if (!triple_id.empty() && lines.empty()) {
    throw validation_error("triple '" + triple_id + "' not found in " + qa_path);
  }
  write_jsonl(out, lines);
  d.hashes["checkpoint"] = file_hash_hex(ckpt);
  write_manifest_for(out, "inspect-attention",
                     json{{"triple", triple_id}, {"variant", to_string(model->config().variant)}},
                     d.hashes, json{{"traces", lines.size()}});
  std::cout << lines.size() << " attention traces -> " << out << "\n";
  return 0;
}

int cmd_grad_check(int argc, char** argv, const Cfg& cfg) {
  CLI::App app{"finite-difference check of model gradients"};
  add_config_flag(app);
  std::string variant = cfg.get<std::string>("gradcheck.variant", "all");
  uint64_t seed = cfg.get<uint64_t>("seed", 7);
  double epsilon = cfg.get<double>("gradcheck.epsilon", 1e-4);
  double tolerance = cfg.get<double>("gradcheck.tolerance", 1e-4);
  long sample = cfg.get<long>("gradcheck.sample", -1);
  std::string out = cfg.get<std::string>("paths.out", "");
  app.add_option("--variant", variant, "base|temporal|spatial|dual|all")
      ->check(CLI::IsMember({"base", "temporal", "spatial", "dual", "all"}));
  app.add_option("--seed", seed);
  app.add_option("--epsilon", epsilon, "central difference step");
  app.add_option("--tolerance", tolerance, "max relative error accepted");
  app.add_option("--sample", sample, "coordinates to probe (-1 = all)");
  app.add_option("--out", out, "manifest path (optional)");
  app.parse(argc, argv);

  SynthSpec spec;
  spec.n_videos = 2;
  spec.sents_per_video = 12;
  spec.kb_size = 21;
  spec.n_triples = 12;
  spec.seed = seed;
  SynthData data = synth_dataset(spec);
  AnswerPool pool = answer_pool(data.kb);
  Vocabulary vocab = Vocabulary::build(data.dataset, 1);
  ExampleSet all = make_examples(data.dataset, pool, 1);
  ExampleSet batch(all.begin(), all.begin() + std::min<size_t>(3, all.size()));

  std::vector<std::string> variants;
  if (variant == "all") {
    variants = {"base", "temporal", "spatial", "dual"};
  } else {
    variants = {variant};
  }

  bool ok = true;
  json results = json::object();
  for (const std::string& name : variants) {
    nn::ModelConfig mc;
    mc.variant = nn::variant_from_string(name);
    mc.window = 1;
    mc.embed_dim = 6;
    mc.filter_widths = {2, 3};
    mc.maps_per_width = 3;
    mc.answer_dim = 6;
    mc.gru_hidden = 4;
    mc.attn_hidden = 5;
    mc.dropout = 0.0;
    nn::QAModel model(mc, vocab, pool.ids, seed);
    GradCheckResult res = gradient_check(model, batch, epsilon, sample, seed);
    const bool pass = res.max_rel_error <= tolerance;
    ok &= pass;
    std::cout << (pass ? "PASS" : "FAIL") << " " << name << ": max rel error "
              << res.max_rel_error << " over " << res.coords_checked << " coordinates\n";
    results[name] = {{"max_rel_error", res.max_rel_error},
                     {"coords", res.coords_checked},
                     {"pass", pass}};
  }
  if (!out.empty()) {
    write_json_file(out, make_manifest("grad-check",
                                       json{{"epsilon", epsilon},
                                            {"tolerance", tolerance},
                                            {"sample", sample},
                                            {"seed", seed}},
                                       {}, results));
  }
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    print_usage();
    return 64;
  }
  std::string command = argv[1];
  if (command == "-h" || command == "--help" || command == "help") {
    print_usage();
    return 0;
  }
  if (!kCommands.count(command)) {
    std::cerr << "unknown command: " << command << "\n\n";
    print_usage();
    return 64;
  }

  try {
    Cfg cfg = Cfg::preload(argc - 1, argv + 1);
    int sub_argc = argc - 1;
    char** sub_argv = argv + 1;
    if (command == "build-graph") return cmd_build_graph(sub_argc, sub_argv, cfg);
    if (command == "embed-graph") return cmd_embed_graph(sub_argc, sub_argv, cfg);
    if (command == "match-cues") return cmd_match_cues(sub_argc, sub_argv, cfg);
    if (command == "synth-data") return cmd_synth_data(sub_argc, sub_argv, cfg);
    if (command == "train") return cmd_train(sub_argc, sub_argv, cfg);
    if (command == "evaluate") return cmd_evaluate(sub_argc, sub_argv, cfg);
    if (command == "ablate") return cmd_ablate(sub_argc, sub_argv, cfg);
    if (command == "stratify") return cmd_stratify(sub_argc, sub_argv, cfg);
    if (command == "inspect-attention") return cmd_inspect_attention(sub_argc, sub_argv, cfg);
    if (command == "grad-check") return cmd_grad_check(sub_argc, sub_argv, cfg);
  } catch (const CLI::CallForHelp&) {
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::validation ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
