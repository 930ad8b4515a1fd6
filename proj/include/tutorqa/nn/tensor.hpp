#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "tutorqa/rng.hpp"

namespace tutorqa::nn {

using Mat = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  int rows() const { return static_cast<int>(value.rows()); }
  int cols() const { return static_cast<int>(value.cols()); }
  double grad_norm() const { return grad.norm(); }
};

// Reverse-mode tape over Eigen matrices. Values are computed eagerly as the
// graph is built; backward() walks the nodes in reverse creation order.
// Parameters are consumed by fused ops (linear, conv1d, embedding lookups,
// scoring) so large weight matrices are never copied onto the tape.
class Tape {
 public:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Node&)> back;  // distributes node.grad to parents
  };

  using Var = Node*;

  Var constant(Mat v);

  // W * x (+ b broadcast over columns).
  Var linear(Parameter& W, Var x);
  Var affine(Parameter& W, Var x, Parameter& b);
  Var add_bias(Var x, Parameter& b);

  Var add(Var a, Var b);
  Var cmul(Var a, Var b);   // elementwise product
  Var one_minus(Var a);     // 1 - a
  Var relu(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);

  // Stack column blocks vertically; all inputs must have equal column count.
  Var vcat(const std::vector<Var>& xs);

  // Row-wise max over columns -> column vector. Ties resolve to the first
  // maximal column.
  Var max_over_cols(Var a);

  // Valid 1-d convolution over the columns of E (d x L) with kernel width
  // `width`: output column i is W * vec(E[:, i..i+width-1]) + b.
  Var conv1d(Parameter& W, Parameter& b, Var E, int width);

  // Softmax over a column vector with an inclusion mask; excluded rows
  // output exactly 0. At least one row must be kept.
  Var masked_softmax(Var logits, const std::vector<char>& keep);

  // sum_i alpha[i] * xs[i]; alpha is a column vector of length xs.size().
  Var convex_combine(const std::vector<Var>& xs, Var alpha);

  // Sum of all entries -> 1x1.
  Var sum(Var a);

  // Gather columns of an embedding table.
  Var embed_cols(Parameter& table, const std::vector<int>& ids);

  // table^T * f for a column vector f: one score per table column.
  Var score_all(Parameter& table, Var f);

  // Negative log likelihood of `gold` under softmax(scores); 1x1 output.
  Var nll_loss(Var scores, int gold);

  // Inverted dropout; identity when !training or rate == 0.
  Var dropout(Var x, double rate, Rng& rng, bool training);

  // Seeds d(output)/d(output) = seed_grad and back-propagates. The output
  // must be 1x1 (a loss).
  void backward(Var loss, double seed_grad = 1.0);

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  Var make(Mat value);
  std::deque<Node> nodes_;
};

using Var = Tape::Var;

}  // namespace tutorqa::nn
