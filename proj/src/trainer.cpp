#include "tutorqa/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "tutorqa/error.hpp"

namespace tutorqa {

using nn::Parameter;
using nn::QAModel;
using nn::Tape;

void TrainConfig::validate() const {
  if (batch_size <= 0) throw validation_error("batch_size must be positive");
  if (max_epochs < 0) throw validation_error("max_epochs must be >= 0");
  if (lr <= 0 || beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1 || eps <= 0) {
    throw validation_error("invalid Adam hyper-parameters");
  }
  if (dropout < 0 || dropout >= 1) throw validation_error("dropout must be in [0, 1)");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"batch_size", batch_size}, {"max_epochs", max_epochs}, {"lr", lr},
          {"beta1", beta1},           {"beta2", beta2},           {"eps", eps},
          {"dropout", dropout},       {"seed", seed},             {"selection_metric", "r1"}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
  if (j.contains("max_epochs")) cfg.max_epochs = j.at("max_epochs").get<int>();
  if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
  if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
  if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
  if (j.contains("dropout")) cfg.dropout = j.at("dropout").get<double>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
  cfg.validate();
  return cfg;
}

AdamOptimizer::AdamOptimizer(std::vector<Parameter*> params, double lr, double beta1, double beta2,
                             double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Parameter* p : params_) {
    m_.push_back(nn::Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(nn::Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void AdamOptimizer::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter* p = params_[i];
    if (!p->trainable) continue;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p->grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
    p->value.array() -=
        lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

nlohmann::json TrainHistory::to_json(bool include_wall) const {
  nlohmann::json out;
  out["selected_epoch"] = selected_epoch;
  out["epochs"] = nlohmann::json::array();
  for (const EpochRecord& e : epochs) {
    nlohmann::json je{{"epoch", e.epoch}, {"train_loss", e.train_loss}};
    if (e.dev.count() > 0) je["dev"] = e.dev.to_json();
    if (include_wall) je["wall_ms"] = e.wall_ms;
    out["epochs"].push_back(std::move(je));
  }
  return out;
}

namespace {

std::string param_norms_diagnostic(QAModel& model) {
  std::ostringstream os;
  for (Parameter* p : model.parameters()) {
    os << " " << p->name << "|value|=" << p->value.norm() << " |grad|=" << p->grad.norm();
  }
  return os.str();
}

std::vector<nn::Mat> snapshot(QAModel& model) {
  std::vector<nn::Mat> out;
  out.reserve(model.parameters().size());
  for (Parameter* p : model.parameters()) out.push_back(p->value);
  return out;
}

void restore(QAModel& model, const std::vector<nn::Mat>& snap) {
  auto& params = model.parameters();
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

}  // namespace

TrainHistory train(QAModel& model, const ExampleSet& train_set, const ExampleSet& dev_set,
                   const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw validation_error("training set is empty");

  AdamOptimizer adam(model.parameters(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
  TrainHistory history;

  std::vector<nn::Mat> best_params;
  double best_dev_r1 = -1.0;

  std::vector<int> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto started = std::chrono::steady_clock::now();
    Rng shuffle_rng(Rng::mix(cfg.seed, 0x5481, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    Rng dropout_rng(Rng::mix(cfg.seed, 0xd0, static_cast<uint64_t>(epoch)));

    double loss_sum = 0.0;
    size_t batch_id = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_id) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      model.zero_grads();
      for (size_t k = start; k < end; ++k) {
        const TrainExample& ex = train_set[order[k]];
        Tape tape;
        QAModel::RunOptions opts;
        opts.training = true;
        opts.dropout = cfg.dropout;
        opts.rng = &dropout_rng;
        opts.gold = ex.gold;
        QAModel::Result res = model.run(tape, ex.window, opts);
        const double loss = res.loss->value(0, 0);
        if (!std::isfinite(loss)) {
          throw runtime_error("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_id) + ", triple '" + ex.triple_id + "';" +
                              param_norms_diagnostic(model));
        }
        loss_sum += loss;
        tape.backward(res.loss, inv);
      }
      model.apply_grad_constraints();
      adam.step();
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    if (!dev_set.empty()) {
      rec.dev = evaluate_examples(model, dev_set);
      if (rec.dev.r1 > best_dev_r1) {
        best_dev_r1 = rec.dev.r1;
        best_params = snapshot(model);
        history.selected_epoch = epoch;
      }
    } else {
      history.selected_epoch = epoch;  // last epoch when no dev set
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            started)
                      .count();
    history.epochs.push_back(std::move(rec));
  }

  if (!best_params.empty()) restore(model, best_params);
  return history;
}

GradCheckResult gradient_check(QAModel& model, const ExampleSet& batch, double epsilon,
                               long sample_coords, uint64_t seed) {
  if (batch.empty()) throw validation_error("gradient check needs at least one example");
  if (sample_coords == 0) {
    return {0.0, 0, "zero-coordinate subsample requested; nothing checked"};
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  auto mean_loss = [&]() {
    double total = 0.0;
    for (const TrainExample& ex : batch) {
      Tape tape;
      QAModel::RunOptions opts;
      opts.gold = ex.gold;
      total += model.run(tape, ex.window, opts).loss->value(0, 0);
    }
    return total * inv;
  };

  model.zero_grads();
  for (const TrainExample& ex : batch) {
    Tape tape;
    QAModel::RunOptions opts;
    opts.gold = ex.gold;
    QAModel::Result res = model.run(tape, ex.window, opts);
    tape.backward(res.loss, inv);
  }
  std::vector<nn::Mat> analytic;
  analytic.reserve(model.parameters().size());
  for (Parameter* p : model.parameters()) analytic.push_back(p->grad);

  // Enumerate (parameter, coordinate) pairs to probe.
  std::vector<std::pair<size_t, Eigen::Index>> coords;
  size_t total_coords = 0;
  for (Parameter* p : model.parameters()) total_coords += static_cast<size_t>(p->value.size());
  if (sample_coords < 0 || static_cast<size_t>(sample_coords) >= total_coords) {
    for (size_t pi = 0; pi < model.parameters().size(); ++pi) {
      for (Eigen::Index i = 0; i < model.parameters()[pi]->value.size(); ++i) {
        coords.push_back({pi, i});
      }
    }
  } else {
    const size_t want = std::min<size_t>(total_coords, std::max<long>(sample_coords, 200));
    Rng rng(Rng::mix(seed, 0x6c0d));
    for (size_t k = 0; k < want; ++k) {
      size_t flat = rng.next_u64() % total_coords;
      for (size_t pi = 0; pi < model.parameters().size(); ++pi) {
        const size_t n = static_cast<size_t>(model.parameters()[pi]->value.size());
        if (flat < n) {
          coords.push_back({pi, static_cast<Eigen::Index>(flat)});
          break;
        }
        flat -= n;
      }
    }
  }

  GradCheckResult result;
  result.coords_checked = coords.size();
  for (const auto& [pi, idx] : coords) {
    Parameter* p = model.parameters()[pi];
    double* slot = p->value.data() + idx;
    const double saved = *slot;
    auto central = [&](double h) {
      *slot = saved + h;
      const double up = mean_loss();
      *slot = saved - h;
      const double down = mean_loss();
      *slot = saved;
      return (up - down) / (2.0 * h);
    };
    auto rel_err = [&](double a, double n) {
      return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
    };
    const double a = analytic[pi].data()[idx];
    double rel = rel_err(a, central(epsilon));
    // The loss is piecewise smooth (rectifiers, max pooling): a step that
    // crosses an activation boundary invalidates the central difference.
    // Re-probing at a smaller step separates those artifacts from genuine
    // gradient bugs, which stay wrong at every step size.
    if (rel > 1e-6) rel = std::min(rel, rel_err(a, central(epsilon / 16.0)));
    if (rel > result.max_rel_error) result.max_rel_error = rel;
  }
  return result;
}

}  // namespace tutorqa
