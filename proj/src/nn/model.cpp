#include "tutorqa/nn/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "tutorqa/error.hpp"
#include "tutorqa/hash.hpp"

namespace tutorqa::nn {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::base: return "base";
    case Variant::temporal: return "temporal";
    case Variant::spatial: return "spatial";
    case Variant::dual: return "dual";
  }
  return "base";
}

Variant variant_from_string(const std::string& s) {
  if (s == "base") return Variant::base;
  if (s == "temporal") return Variant::temporal;
  if (s == "spatial") return Variant::spatial;
  if (s == "dual") return Variant::dual;
  throw validation_error("unknown variant '" + s + "' (expected base|temporal|spatial|dual)");
}

void ModelConfig::validate() const {
  if (window < 0) throw validation_error("window must be >= 0");
  if (embed_dim <= 0 || maps_per_width <= 0 || answer_dim <= 0 || gru_hidden <= 0 ||
      attn_hidden <= 0) {
    throw validation_error("model dimensions must be positive");
  }
  if (filter_widths.empty()) throw validation_error("at least one filter width required");
  for (int w : filter_widths) {
    if (w <= 0) throw validation_error("filter widths must be positive");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw validation_error("dropout must be in [0, 1)");
}

json ModelConfig::to_json() const {
  return json{{"variant", to_string(variant)},
              {"window", window},
              {"embed_dim", embed_dim},
              {"filter_widths", filter_widths},
              {"maps_per_width", maps_per_width},
              {"answer_dim", answer_dim},
              {"gru_hidden", gru_hidden},
              {"attn_hidden", attn_hidden},
              {"dropout", dropout},
              {"train_word_embeddings", train_word_embeddings},
              {"answer_init", to_string(answer_init)}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig cfg;
  if (j.contains("variant")) cfg.variant = variant_from_string(j.at("variant").get<std::string>());
  if (j.contains("window")) cfg.window = j.at("window").get<int>();
  if (j.contains("embed_dim")) cfg.embed_dim = j.at("embed_dim").get<int>();
  if (j.contains("filter_widths")) cfg.filter_widths = j.at("filter_widths").get<std::vector<int>>();
  if (j.contains("maps_per_width")) cfg.maps_per_width = j.at("maps_per_width").get<int>();
  if (j.contains("answer_dim")) cfg.answer_dim = j.at("answer_dim").get<int>();
  if (j.contains("gru_hidden")) cfg.gru_hidden = j.at("gru_hidden").get<int>();
  if (j.contains("attn_hidden")) cfg.attn_hidden = j.at("attn_hidden").get<int>();
  if (j.contains("dropout")) cfg.dropout = j.at("dropout").get<double>();
  if (j.contains("train_word_embeddings")) {
    cfg.train_word_embeddings = j.at("train_word_embeddings").get<bool>();
  }
  if (j.contains("answer_init")) {
    cfg.answer_init = answer_init_from_string(j.at("answer_init").get<std::string>());
  }
  cfg.validate();
  return cfg;
}

GruParams::GruParams(const std::string& prefix, int in_dim, int hidden, Rng& rng)
    : wz(prefix + ".wz", hidden, in_dim),
      uz(prefix + ".uz", hidden, hidden),
      bz(prefix + ".bz", hidden, 1),
      wr(prefix + ".wr", hidden, in_dim),
      ur(prefix + ".ur", hidden, hidden),
      br(prefix + ".br", hidden, 1),
      wh(prefix + ".wh", hidden, in_dim),
      uh(prefix + ".uh", hidden, hidden),
      bh(prefix + ".bh", hidden, 1) {
  init_xavier(wz, rng);
  init_xavier(uz, rng);
  init_xavier(wr, rng);
  init_xavier(ur, rng);
  init_xavier(wh, rng);
  init_xavier(uh, rng);
}

std::vector<Parameter*> GruParams::parameters() {
  return {&wz, &uz, &bz, &wr, &ur, &br, &wh, &uh, &bh};
}

Var gru_step(Tape& tape, GruParams& p, Var x, Var h_prev) {
  Var z = tape.sigmoid(tape.add_bias(tape.add(tape.linear(p.wz, x), tape.linear(p.uz, h_prev)), p.bz));
  Var r = tape.sigmoid(tape.add_bias(tape.add(tape.linear(p.wr, x), tape.linear(p.ur, h_prev)), p.br));
  Var h_cand = tape.tanh(tape.add_bias(
      tape.add(tape.linear(p.wh, x), tape.linear(p.uh, tape.cmul(r, h_prev))), p.bh));
  // h = z * h_prev + (1 - z) * h_cand
  return tape.add(tape.cmul(z, h_prev), tape.cmul(tape.one_minus(z), h_cand));
}

BiGru::BiGru(const std::string& prefix, int in_dim, int hidden, Rng& rng)
    : fwd(prefix + ".fwd", in_dim, hidden, rng), bwd(prefix + ".bwd", in_dim, hidden, rng) {}

std::vector<Var> BiGru::run(Tape& tape, const std::vector<Var>& inputs) {
  const int steps = static_cast<int>(inputs.size());
  const int hidden = fwd.hidden();
  std::vector<Var> fstates(steps), bstates(steps);
  Var h = tape.constant(Mat::Zero(hidden, 1));
  for (int i = 0; i < steps; ++i) {
    h = gru_step(tape, fwd, inputs[i], h);
    fstates[i] = h;
  }
  h = tape.constant(Mat::Zero(hidden, 1));
  for (int i = steps - 1; i >= 0; --i) {
    h = gru_step(tape, bwd, inputs[i], h);
    bstates[i] = h;
  }
  std::vector<Var> out(steps);
  for (int i = 0; i < steps; ++i) out[i] = tape.vcat({fstates[i], bstates[i]});
  return out;
}

std::vector<Parameter*> BiGru::parameters() {
  auto out = fwd.parameters();
  auto b = bwd.parameters();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

AttnMlp::AttnMlp(const std::string& prefix, int query_dim, int key_dim, int hidden, Rng& rng)
    : w1(prefix + ".w1", hidden, query_dim + key_dim),
      b1(prefix + ".b1", hidden, 1),
      w2(prefix + ".w2", 1, hidden),
      b2(prefix + ".b2", 1, 1) {
  init_xavier(w1, rng);
  init_xavier(w2, rng);
}

Var AttnMlp::score(Tape& tape, Var query, Var key) {
  Var hidden = tape.tanh(tape.affine(w1, tape.vcat({query, key}), b1));
  return tape.affine(w2, hidden, b2);
}

std::vector<Parameter*> AttnMlp::parameters() { return {&w1, &b1, &w2, &b2}; }

namespace {

constexpr uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[5] = "TQAC";

uint64_t hash_ids(const std::vector<std::string>& ids) {
  uint64_t h = kFnvOffset;
  for (const std::string& id : ids) h = fnv1a_field(id, h);
  return h;
}

}  // namespace

QAModel::QAModel(ModelConfig cfg, Vocabulary vocab, std::vector<std::string> pool_ids,
                 uint64_t seed, const WordVectors* word_init, const NodeEmbeddings* graph_vectors)
    : cfg_((cfg.validate(), std::move(cfg))),
      vocab_(std::move(vocab)),
      pool_ids_(std::move(pool_ids)),
      words_(vocab_, cfg_.embed_dim, Rng(Rng::mix(seed, 0x51ed)), word_init,
             cfg_.train_word_embeddings),
      cnn_(cfg_.embed_dim, cfg_.filter_widths, cfg_.maps_per_width, Rng(Rng::mix(seed, 0xc44))),
      answers_(pool_ids_, cfg_.answer_dim, cfg_.answer_init, Rng(Rng::mix(seed, 0xa45)),
               graph_vectors),
      none_(cfg_.answer_dim, Rng(Rng::mix(seed, 0x40e))),
      proj_w_("proj.w", cfg_.answer_dim, 2 * cfg_.gru_hidden + cfg_.sentence_dim()),
      proj_b_("proj.b", cfg_.answer_dim, 1) {
  if (pool_ids_.empty()) throw validation_error("answer pool is empty");
  for (int i = 0; i < static_cast<int>(pool_ids_.size()); ++i) pool_index_[pool_ids_[i]] = i;

  Rng rng(Rng::mix(seed, 0x6a11));
  const int ds = cfg_.sentence_dim();
  const int da = cfg_.answer_dim;
  const int dh = cfg_.gru_hidden;
  switch (cfg_.variant) {
    case Variant::base:
      gru_.emplace("gru", ds + 3 * da, dh, rng);
      break;
    case Variant::temporal:
      gru_.emplace("gru", ds + 3 * da, dh, rng);
      temporal_mlp_.emplace("attn.t", ds, 2 * dh, cfg_.attn_hidden, rng);
      break;
    case Variant::spatial:
      gru_.emplace("gru", ds + da, dh, rng);
      spatial_mlp_.emplace("attn.s", ds, da, cfg_.attn_hidden, rng);
      break;
    case Variant::dual:
      gru_.emplace("gru", ds, dh, rng);
      temporal_mlp_.emplace("attn.t", ds, 2 * dh, cfg_.attn_hidden, rng);
      spatial_mlp_.emplace("attn.s", 2 * dh, da, cfg_.attn_hidden, rng);
      gru2_.emplace("gru2", ds + da, dh, rng);
      break;
  }
  init_xavier(proj_w_, rng);
  register_params();
}

void QAModel::register_params() {
  params_.clear();
  params_.push_back(&words_.parameter());
  for (Parameter* p : cnn_.parameters()) params_.push_back(p);
  params_.push_back(&answers_.parameter());
  for (Parameter* p : none_.parameters()) params_.push_back(p);
  if (gru_) {
    for (Parameter* p : gru_->parameters()) params_.push_back(p);
  }
  if (gru2_) {
    for (Parameter* p : gru2_->parameters()) params_.push_back(p);
  }
  if (temporal_mlp_) {
    for (Parameter* p : temporal_mlp_->parameters()) params_.push_back(p);
  }
  if (spatial_mlp_) {
    for (Parameter* p : spatial_mlp_->parameters()) params_.push_back(p);
  }
  params_.push_back(&proj_w_);
  params_.push_back(&proj_b_);
}

int QAModel::pool_index(const std::string& id) const {
  auto it = pool_index_.find(id);
  return it == pool_index_.end() ? -1 : it->second;
}

uint64_t QAModel::pool_hash() const { return hash_ids(pool_ids_); }

Parameter* QAModel::find_parameter(const std::string& name) {
  for (Parameter* p : params_) {
    if (p->name == name) return p;
  }
  return nullptr;
}

int QAModel::copy_parameters_from(QAModel& other) {
  int copied = 0;
  for (Parameter* p : params_) {
    Parameter* src = other.find_parameter(p->name);
    if (src && src->value.rows() == p->value.rows() && src->value.cols() == p->value.cols()) {
      p->value = src->value;
      ++copied;
    }
  }
  return copied;
}

void QAModel::apply_grad_constraints() { words_.clear_pad_grad(); }

void QAModel::zero_grads() {
  for (Parameter* p : params_) p->zero_grad();
}

size_t QAModel::scalar_parameter_count() const {
  size_t n = 0;
  for (const Parameter* p : params_) n += static_cast<size_t>(p->value.size());
  return n;
}

// Per-step encodings shared by all variants.
struct QAModel::StepInputs {
  Var question = nullptr;
  std::vector<Var> sentences;              // Ds each
  std::vector<std::array<Var, 3>> cues;    // (tool, panel, dialog), Da each
  std::vector<char> keep;                  // !pad per step
  int center = 0;
};

QAModel::StepInputs QAModel::prepare(Tape& tape, const ContextWindow& window,
                                     const RunOptions& opts) {
  const int expected = 2 * cfg_.window + 1;
  if (static_cast<int>(window.steps.size()) != expected) {
    throw runtime_error("window has " + std::to_string(window.steps.size()) + " steps, model expects " +
                        std::to_string(expected));
  }
  if (opts.training && opts.dropout > 0.0 && opts.rng == nullptr) {
    throw runtime_error("training with dropout requires an RNG");
  }
  Rng dummy(0);
  Rng& rng = opts.rng ? *opts.rng : dummy;

  auto encode_tokens = [&](const std::vector<std::string>& tokens) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) ids.push_back(vocab_.lookup(t));
    Var s = cnn_.encode(tape, words_, ids);
    return tape.dropout(s, opts.dropout, rng, opts.training);
  };

  StepInputs in;
  in.center = cfg_.window;
  in.question = encode_tokens(window.question_tokens);
  in.sentences.reserve(window.steps.size());
  in.cues.reserve(window.steps.size());
  in.keep.reserve(window.steps.size());
  for (const WindowStep& step : window.steps) {
    in.sentences.push_back(encode_tokens(step.tokens));
    auto cue_index = [&](const std::optional<std::string>& id) {
      if (!id) return -1;
      int idx = pool_index(*id);
      if (idx < 0) throw runtime_error("cue id '" + *id + "' is not in the answer pool");
      return idx;
    };
    std::vector<Var> encoded =
        encode_cues(tape, answers_, none_, cue_index(step.cue.tool), cue_index(step.cue.panel),
                    cue_index(step.cue.dialog));
    in.cues.push_back({encoded[0], encoded[1], encoded[2]});
    in.keep.push_back(step.pad ? 0 : 1);
  }
  return in;
}

Var QAModel::temporal_alpha(Tape& tape, Var query, const std::vector<Var>& states,
                            const std::vector<char>& keep, const RunOptions& opts) {
  if (opts.overrides && opts.overrides->temporal_alpha) {
    const auto& fixed = *opts.overrides->temporal_alpha;
    if (fixed.size() != states.size()) throw runtime_error("alpha override length mismatch");
    Mat alpha(states.size(), 1);
    for (size_t i = 0; i < fixed.size(); ++i) alpha(static_cast<Eigen::Index>(i), 0) = fixed[i];
    return tape.constant(std::move(alpha));
  }
  std::vector<Var> logits;
  logits.reserve(states.size());
  for (Var h : states) logits.push_back(temporal_mlp_->score(tape, query, h));
  return tape.masked_softmax(tape.vcat(logits), keep);
}

Var QAModel::spatial_combine(Tape& tape, Var query, const std::array<Var, 3>& cues,
                             std::array<double, 3>* beta_out) {
  std::vector<Var> logits;
  for (Var v : cues) logits.push_back(spatial_mlp_->score(tape, query, v));
  Var beta = tape.masked_softmax(tape.vcat(logits), {1, 1, 1});
  if (beta_out) {
    for (int r = 0; r < 3; ++r) (*beta_out)[r] = beta->value(r, 0);
  }
  return tape.convex_combine({cues[0], cues[1], cues[2]}, beta);
}

Var QAModel::fuse_base(Tape& tape, StepInputs& in, const RunOptions& opts, AttentionTrace&) {
  Rng dummy(0);
  Rng& rng = opts.rng ? *opts.rng : dummy;
  std::vector<Var> xs;
  xs.reserve(in.sentences.size());
  for (size_t j = 0; j < in.sentences.size(); ++j) {
    xs.push_back(tape.vcat({in.sentences[j], in.cues[j][0], in.cues[j][1], in.cues[j][2]}));
  }
  std::vector<Var> states = gru_->run(tape, xs);
  for (Var& h : states) h = tape.dropout(h, opts.dropout, rng, opts.training);
  return tape.vcat({states[in.center], in.question});
}

Var QAModel::fuse_temporal(Tape& tape, StepInputs& in, const RunOptions& opts,
                           AttentionTrace& trace) {
  Rng dummy(0);
  Rng& rng = opts.rng ? *opts.rng : dummy;
  std::vector<Var> xs;
  xs.reserve(in.sentences.size());
  for (size_t j = 0; j < in.sentences.size(); ++j) {
    xs.push_back(tape.vcat({in.sentences[j], in.cues[j][0], in.cues[j][1], in.cues[j][2]}));
  }
  std::vector<Var> states = gru_->run(tape, xs);
  for (Var& h : states) h = tape.dropout(h, opts.dropout, rng, opts.training);
  Var alpha = temporal_alpha(tape, in.question, states, in.keep, opts);
  trace.has_temporal = true;
  trace.temporal.assign(alpha->value.data(), alpha->value.data() + alpha->value.rows());
  Var ctx = tape.convex_combine(states, alpha);
  return tape.vcat({ctx, in.question});
}

Var QAModel::fuse_spatial(Tape& tape, StepInputs& in, const RunOptions& opts,
                          AttentionTrace& trace) {
  Rng dummy(0);
  Rng& rng = opts.rng ? *opts.rng : dummy;
  trace.has_spatial = true;
  std::vector<Var> xs;
  xs.reserve(in.sentences.size());
  for (size_t j = 0; j < in.sentences.size(); ++j) {
    std::array<double, 3> beta{};
    Var vbar = spatial_combine(tape, in.question, in.cues[j], &beta);
    trace.spatial.push_back(beta);
    xs.push_back(tape.vcat({in.sentences[j], vbar}));
  }
  std::vector<Var> states = gru_->run(tape, xs);
  for (Var& h : states) h = tape.dropout(h, opts.dropout, rng, opts.training);
  return tape.vcat({states[in.center], in.question});
}

Var QAModel::fuse_dual(Tape& tape, StepInputs& in, const RunOptions& opts, AttentionTrace& trace) {
  Rng dummy(0);
  Rng& rng = opts.rng ? *opts.rng : dummy;
  // Temporal attention over a transcript-only GRU...
  std::vector<Var> tstates = gru_->run(tape, in.sentences);
  for (Var& h : tstates) h = tape.dropout(h, opts.dropout, rng, opts.training);
  Var alpha = temporal_alpha(tape, in.question, tstates, in.keep, opts);
  trace.has_temporal = true;
  trace.temporal.assign(alpha->value.data(), alpha->value.data() + alpha->value.rows());
  Var tau = tape.convex_combine(tstates, alpha);

  // ...whose summary drives the spatial attention over the cue streams.
  trace.has_spatial = true;
  std::vector<Var> xs;
  xs.reserve(in.sentences.size());
  for (size_t j = 0; j < in.sentences.size(); ++j) {
    std::array<double, 3> beta{};
    Var vbar = spatial_combine(tape, tau, in.cues[j], &beta);
    trace.spatial.push_back(beta);
    xs.push_back(tape.vcat({in.sentences[j], vbar}));
  }
  std::vector<Var> states = gru2_->run(tape, xs);
  for (Var& h : states) h = tape.dropout(h, opts.dropout, rng, opts.training);
  return tape.vcat({states[in.center], in.question});
}

QAModel::Result QAModel::run(Tape& tape, const ContextWindow& window, const RunOptions& opts) {
  StepInputs in = prepare(tape, window, opts);
  Result result;
  Var fused = nullptr;
  switch (cfg_.variant) {
    case Variant::base: fused = fuse_base(tape, in, opts, result.trace); break;
    case Variant::temporal: fused = fuse_temporal(tape, in, opts, result.trace); break;
    case Variant::spatial: fused = fuse_spatial(tape, in, opts, result.trace); break;
    case Variant::dual: fused = fuse_dual(tape, in, opts, result.trace); break;
  }
  Rng dummy(0);
  Rng& rng = opts.rng ? *opts.rng : dummy;
  fused = tape.dropout(fused, opts.dropout, rng, opts.training);
  Var f = tape.affine(proj_w_, fused, proj_b_);
  result.scores = answers_.score_all(tape, f);
  result.score_values = result.scores->value.col(0);
  if (opts.gold >= 0) {
    if (opts.gold >= static_cast<int>(pool_ids_.size())) {
      throw runtime_error("gold index out of pool range");
    }
    result.loss = tape.nll_loss(result.scores, opts.gold);
  }
  return result;
}

void QAModel::save(const std::string& path) const {
  json header;
  header["config"] = cfg_.to_json();
  header["vocab"] = vocab_.tokens();
  header["pool"] = pool_ids_;
  header["vocab_hash"] = hash_hex(vocab_.fingerprint());
  header["pool_hash"] = hash_hex(pool_hash());
  json plist = json::array();
  for (const Parameter* p : params_) {
    plist.push_back({{"name", p->name},
                     {"rows", p->value.rows()},
                     {"cols", p->value.cols()},
                     {"trainable", p->trainable}});
  }
  header["params"] = plist;
  std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 4);
  uint32_t version = kCheckpointVersion;
  uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const Parameter* p : params_) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(double) * p->value.size()));
  }
  if (!out) throw runtime_error("short write on checkpoint: " + path);
}

std::unique_ptr<QAModel> QAModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open checkpoint: " + path);
  char magic[4];
  uint32_t version = 0;
  uint64_t header_len = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw validation_error(path + ": not a model checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw validation_error(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw validation_error(path + ": truncated checkpoint header");

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw validation_error(path + ": corrupt checkpoint header: " + std::string(e.what()));
  }
  ModelConfig cfg = ModelConfig::from_json(header.at("config"));
  Vocabulary vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  std::vector<std::string> pool = header.at("pool").get<std::vector<std::string>>();
  if (hash_hex(vocab.fingerprint()) != header.at("vocab_hash").get<std::string>()) {
    throw validation_error(path + ": vocabulary hash mismatch");
  }
  if (hash_hex(hash_ids(pool)) != header.at("pool_hash").get<std::string>()) {
    throw validation_error(path + ": answer pool hash mismatch");
  }

  // Parameter values come from the file; construct with plain init and
  // restore the recorded init mode afterwards.
  const AnswerInit recorded_init = cfg.answer_init;
  cfg.answer_init = AnswerInit::random;
  auto model = std::make_unique<QAModel>(cfg, std::move(vocab), std::move(pool), /*seed=*/0);
  model->cfg_.answer_init = recorded_init;
  const json& plist = header.at("params");
  if (plist.size() != model->params_.size()) {
    throw validation_error(path + ": checkpoint parameter list does not match model layout");
  }
  for (size_t i = 0; i < model->params_.size(); ++i) {
    Parameter* p = model->params_[i];
    const json& meta = plist[i];
    if (meta.at("name").get<std::string>() != p->name ||
        meta.at("rows").get<Eigen::Index>() != p->value.rows() ||
        meta.at("cols").get<Eigen::Index>() != p->value.cols()) {
      throw validation_error(path + ": parameter mismatch at '" + p->name + "'");
    }
    p->trainable = meta.at("trainable").get<bool>();
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(sizeof(double) * p->value.size()));
    if (!in) throw validation_error(path + ": truncated checkpoint tensor '" + p->name + "'");
  }
  return model;
}

int rank_of(const Eigen::VectorXd& scores, int gold) {
  if (gold < 0 || gold >= scores.size()) throw runtime_error("rank_of: gold index out of range");
  const double g = scores[gold];
  int above = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores[i] > g) ++above;
  }
  return 1 + above;
}

double nll_loss_value(const Eigen::VectorXd& scores, int gold) {
  if (gold < 0 || gold >= scores.size()) throw runtime_error("loss: gold index out of range");
  const double m = scores.maxCoeff();
  return std::log((scores.array() - m).exp().sum()) + m - scores[gold];
}

}  // namespace tutorqa::nn
