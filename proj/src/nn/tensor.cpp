#include "tutorqa/nn/tensor.hpp"

#include <cmath>
#include <limits>

#include "tutorqa/error.hpp"

namespace tutorqa::nn {

Tape::Var Tape::make(Mat value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr});
  Node& n = nodes_.back();
  n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return &n;
}

Tape::Var Tape::constant(Mat v) { return make(std::move(v)); }

Tape::Var Tape::linear(Parameter& W, Var x) {
  if (W.value.cols() != x->value.rows()) {
    throw runtime_error("linear: '" + W.name + "' is " + std::to_string(W.rows()) + "x" +
                        std::to_string(W.cols()) + " but input has " +
                        std::to_string(x->value.rows()) + " rows");
  }
  Var out = make(W.value * x->value);
  out->back = [&W, x](Node& n) {
    if (W.trainable) W.grad.noalias() += n.grad * x->value.transpose();
    x->grad.noalias() += W.value.transpose() * n.grad;
  };
  return out;
}

Tape::Var Tape::add_bias(Var x, Parameter& b) {
  Var out = make(x->value.colwise() + Eigen::VectorXd(b.value.col(0)));
  out->back = [x, &b](Node& n) {
    x->grad += n.grad;
    if (b.trainable) b.grad.col(0) += n.grad.rowwise().sum();
  };
  return out;
}

Tape::Var Tape::affine(Parameter& W, Var x, Parameter& b) { return add_bias(linear(W, x), b); }

Tape::Var Tape::add(Var a, Var b) {
  Var out = make(a->value + b->value);
  out->back = [a, b](Node& n) {
    a->grad += n.grad;
    b->grad += n.grad;
  };
  return out;
}

Tape::Var Tape::cmul(Var a, Var b) {
  Var out = make(a->value.cwiseProduct(b->value));
  out->back = [a, b](Node& n) {
    a->grad += n.grad.cwiseProduct(b->value);
    b->grad += n.grad.cwiseProduct(a->value);
  };
  return out;
}

Tape::Var Tape::one_minus(Var a) {
  Var out = make(Mat::Ones(a->value.rows(), a->value.cols()) - a->value);
  out->back = [a](Node& n) { a->grad -= n.grad; };
  return out;
}

Tape::Var Tape::relu(Var a) {
  Var out = make(a->value.cwiseMax(0.0));
  out->back = [a](Node& n) {
    a->grad += n.grad.cwiseProduct(
        (a->value.array() > 0.0).cast<double>().matrix());
  };
  return out;
}

Tape::Var Tape::tanh(Var a) {
  Var out = make(a->value.array().tanh().matrix());
  out->back = [a, out](Node& n) {
    a->grad += n.grad.cwiseProduct(
        (1.0 - out->value.array().square()).matrix());
  };
  return out;
}

Tape::Var Tape::sigmoid(Var a) {
  Var out = make((1.0 / (1.0 + (-a->value.array()).exp())).matrix());
  out->back = [a, out](Node& n) {
    a->grad += n.grad.cwiseProduct(
        (out->value.array() * (1.0 - out->value.array())).matrix());
  };
  return out;
}

Tape::Var Tape::vcat(const std::vector<Var>& xs) {
  if (xs.empty()) throw runtime_error("vcat: no inputs");
  const auto cols = xs[0]->value.cols();
  Eigen::Index rows = 0;
  for (Var x : xs) {
    if (x->value.cols() != cols) throw runtime_error("vcat: column count mismatch");
    rows += x->value.rows();
  }
  Mat v(rows, cols);
  Eigen::Index at = 0;
  for (Var x : xs) {
    v.middleRows(at, x->value.rows()) = x->value;
    at += x->value.rows();
  }
  Var out = make(std::move(v));
  std::vector<Var> parents = xs;
  out->back = [parents](Node& n) {
    Eigen::Index at = 0;
    for (Var x : parents) {
      x->grad += n.grad.middleRows(at, x->value.rows());
      at += x->value.rows();
    }
  };
  return out;
}

Tape::Var Tape::max_over_cols(Var a) {
  const auto rows = a->value.rows();
  Mat v(rows, 1);
  std::vector<int> argmax(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index best = 0;
    a->value.row(r).maxCoeff(&best);
    argmax[r] = static_cast<int>(best);
    v(r, 0) = a->value(r, best);
  }
  Var out = make(std::move(v));
  out->back = [a, argmax](Node& n) {
    for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
      a->grad(r, argmax[r]) += n.grad(r, 0);
    }
  };
  return out;
}

Tape::Var Tape::conv1d(Parameter& W, Parameter& b, Var E, int width) {
  const int d = static_cast<int>(E->value.rows());
  const int len = static_cast<int>(E->value.cols());
  if (W.value.cols() != static_cast<Eigen::Index>(width) * d) {
    throw runtime_error("conv1d: kernel '" + W.name + "' does not match width*dim");
  }
  if (len < width) throw runtime_error("conv1d: input shorter than kernel width");
  const int windows = len - width + 1;
  const int maps = W.rows();

  Mat v(maps, windows);
  for (int i = 0; i < windows; ++i) {
    Eigen::Map<const Eigen::VectorXd> win(E->value.data() + static_cast<size_t>(i) * d,
                                          static_cast<Eigen::Index>(width) * d);
    v.col(i) = W.value * win + b.value.col(0);
  }
  Var out = make(std::move(v));
  out->back = [&W, &b, E, width, d](Node& n) {
    const int windows = static_cast<int>(n.grad.cols());
    for (int i = 0; i < windows; ++i) {
      Eigen::Map<const Eigen::VectorXd> win(E->value.data() + static_cast<size_t>(i) * d,
                                            static_cast<Eigen::Index>(width) * d);
      Eigen::Map<Eigen::VectorXd> win_grad(E->grad.data() + static_cast<size_t>(i) * d,
                                           static_cast<Eigen::Index>(width) * d);
      if (W.trainable) W.grad.noalias() += n.grad.col(i) * win.transpose();
      if (b.trainable) b.grad.col(0) += n.grad.col(i);
      win_grad.noalias() += W.value.transpose() * n.grad.col(i);
    }
  };
  return out;
}

Tape::Var Tape::masked_softmax(Var logits, const std::vector<char>& keep) {
  if (logits->value.cols() != 1) throw runtime_error("masked_softmax expects a column vector");
  const auto rows = logits->value.rows();
  if (static_cast<Eigen::Index>(keep.size()) != rows) {
    throw runtime_error("masked_softmax: mask length mismatch");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (keep[r] && logits->value(r, 0) > max_logit) max_logit = logits->value(r, 0);
  }
  if (!std::isfinite(max_logit)) throw runtime_error("masked_softmax: empty mask");

  Mat v = Mat::Zero(rows, 1);
  double z = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!keep[r]) continue;
    v(r, 0) = std::exp(logits->value(r, 0) - max_logit);
    z += v(r, 0);
  }
  v /= z;
  Var out = make(std::move(v));
  out->back = [logits, keep, out](Node& n) {
    double dot = 0.0;
    for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
      if (keep[r]) dot += n.grad(r, 0) * out->value(r, 0);
    }
    for (Eigen::Index r = 0; r < n.grad.rows(); ++r) {
      if (keep[r]) logits->grad(r, 0) += out->value(r, 0) * (n.grad(r, 0) - dot);
    }
  };
  return out;
}

Tape::Var Tape::convex_combine(const std::vector<Var>& xs, Var alpha) {
  if (xs.empty()) throw runtime_error("convex_combine: no inputs");
  if (alpha->value.cols() != 1 ||
      alpha->value.rows() != static_cast<Eigen::Index>(xs.size())) {
    throw runtime_error("convex_combine: weight shape mismatch");
  }
  Mat v = Mat::Zero(xs[0]->value.rows(), xs[0]->value.cols());
  for (size_t i = 0; i < xs.size(); ++i) v += alpha->value(static_cast<Eigen::Index>(i), 0) * xs[i]->value;
  Var out = make(std::move(v));
  std::vector<Var> parents = xs;
  out->back = [parents, alpha](Node& n) {
    for (size_t i = 0; i < parents.size(); ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      parents[i]->grad += alpha->value(idx, 0) * n.grad;
      alpha->grad(idx, 0) += parents[i]->value.cwiseProduct(n.grad).sum();
    }
  };
  return out;
}

Tape::Var Tape::sum(Var a) {
  Var out = make(Mat::Constant(1, 1, a->value.sum()));
  out->back = [a](Node& n) { a->grad.array() += n.grad(0, 0); };
  return out;
}

Tape::Var Tape::embed_cols(Parameter& table, const std::vector<int>& ids) {
  Mat v(table.rows(), static_cast<Eigen::Index>(ids.size()));
  for (size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] < 0 || ids[j] >= table.cols()) {
      throw runtime_error("embed_cols: index " + std::to_string(ids[j]) + " out of range for '" +
                          table.name + "'");
    }
    v.col(static_cast<Eigen::Index>(j)) = table.value.col(ids[j]);
  }
  Var out = make(std::move(v));
  out->back = [&table, ids](Node& n) {
    if (!table.trainable) return;
    for (size_t j = 0; j < ids.size(); ++j) {
      table.grad.col(ids[j]) += n.grad.col(static_cast<Eigen::Index>(j));
    }
  };
  return out;
}

Tape::Var Tape::score_all(Parameter& table, Var f) {
  if (f->value.cols() != 1 || f->value.rows() != table.value.rows()) {
    throw runtime_error("score_all: feature dimension does not match table '" + table.name + "'");
  }
  Var out = make(table.value.transpose() * f->value);
  out->back = [&table, f](Node& n) {
    f->grad.noalias() += table.value * n.grad;
    if (table.trainable) table.grad.noalias() += f->value * n.grad.transpose();
  };
  return out;
}

Tape::Var Tape::nll_loss(Var scores, int gold) {
  if (scores->value.cols() != 1) throw runtime_error("nll_loss expects a column vector");
  const auto n_scores = scores->value.rows();
  if (gold < 0 || gold >= n_scores) throw runtime_error("nll_loss: gold index out of range");

  const double max_score = scores->value.col(0).maxCoeff();
  double z = (scores->value.col(0).array() - max_score).exp().sum();
  double loss = std::log(z) + max_score - scores->value(gold, 0);
  Var out = make(Mat::Constant(1, 1, loss));
  out->back = [scores, gold, max_score, z](Node& n) {
    const double g = n.grad(0, 0);
    scores->grad.col(0) +=
        g * ((scores->value.col(0).array() - max_score).exp() / z).matrix();
    scores->grad(gold, 0) -= g;
  };
  return out;
}

Tape::Var Tape::dropout(Var x, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return x;
  if (rate >= 1.0) throw runtime_error("dropout rate must be < 1");
  const double keep_scale = 1.0 / (1.0 - rate);
  Mat mask(x->value.rows(), x->value.cols());
  for (Eigen::Index c = 0; c < mask.cols(); ++c) {
    for (Eigen::Index r = 0; r < mask.rows(); ++r) {
      mask(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
    }
  }
  Var out = make(x->value.cwiseProduct(mask));
  out->back = [x, mask](Node& n) { x->grad += n.grad.cwiseProduct(mask); };
  return out;
}

void Tape::backward(Var loss, double seed_grad) {
  if (loss->value.rows() != 1 || loss->value.cols() != 1) {
    throw runtime_error("backward expects a scalar loss node");
  }
  loss->grad(0, 0) += seed_grad;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->back && it->grad.cwiseAbs().sum() != 0.0) it->back(*it);
  }
}

}  // namespace tutorqa::nn
