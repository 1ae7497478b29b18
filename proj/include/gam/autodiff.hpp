#pragma once

// Reverse-mode differentiation over the handful of matrix primitives the GAM
// layer and the demo classifier are built from. Values are dense matrices;
// "per edge" data is laid out one edge per row.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gam/core.hpp"

namespace gam::ad {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

enum class Op {
  kLeaf,
  kAffine,
  kRelu,
  kSigmoid,
  kMul,
  kScaleRows,
  kConcatCols,
  kMaxPoolRows,
  kMean,
  kSum,
  kAdd,
  kAddScalar,
  kMulScalar,
  kDivScalar,
  kSoftmaxCrossEntropy,
};

class Gradients {
 public:
  /// Gradient with respect to v; a zero matrix if v did not influence the loss.
  const Matrix& operator[](Var v) const { return grads_.at(v.id); }
  /// Number of records the reverse sweep visited.
  std::size_t visited() const noexcept { return visited_; }

 private:
  friend class Tape;
  std::vector<Matrix> grads_;
  std::size_t visited_ = 0;
};

class Tape {
 public:
  /// Leaf holding a value. Gradients are accumulated for every leaf.
  Var leaf(Matrix value);
  Var scalar(double value) { return leaf(Matrix(1, 1, value)); }

  /// x (R x I) times w^T (w is O x I) plus b (1 x O).
  Var affine(Var x, Var w, Var b);
  /// max(0, x) with subgradient 0 at 0.
  Var relu(Var x);
  Var sigmoid(Var x);
  /// Elementwise product of equal shapes.
  Var mul(Var a, Var b);
  /// Multiplies row r of x (R x C) by s[r] where s is R x 1 or the R values
  /// of an R' x C' matrix with R'*C' == R.
  Var scale_rows(Var x, Var s);
  Var concat_cols(Var a, Var b);
  /// Channelwise max over consecutive groups of rows; gradient goes to the
  /// lowest-index argmax.
  Var max_pool_rows(Var x, std::size_t group);
  Var mean(Var x);
  Var sum(Var x);
  Var add(Var a, Var b);
  Var add_scalar(Var x, double c);
  Var mul_scalar(Var x, double c);
  Var div_scalar(Var x, double c);
  /// Mean softmax cross-entropy over rows of logits against class labels.
  Var softmax_cross_entropy(Var logits, std::vector<std::size_t> labels);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse sweep from a 1 x 1 loss. Throws NonScalarLoss otherwise.
  Gradients backward(Var loss, double seed = 1.0) const;

 private:
  struct Node {
    Op op = Op::kLeaf;
    Matrix value;
    std::vector<std::size_t> inputs;
    double scalar = 0.0;
    std::size_t group = 0;
    std::vector<std::size_t> index;  // max-pool argmax or class labels
  };

  Var push(Node node);
  const Node& node(Var v) const { return nodes_.at(v.id); }

  std::vector<Node> nodes_;
};

/// Named parameter matrices, in a fixed order.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Matrix> values;
};

/// Builds a scalar loss on `tape` from leaves bound to the parameters.
using Objective = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct ParamError {
  std::string name;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
};

struct GradReport {
  std::vector<ParamError> params;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::size_t n_scalars = 0;
};

/// Relative errors use |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline constexpr double kRelErrorFloor = 1e-6;

/// Compares backward() against central differences (f(t+h) - f(t-h)) / 2h
/// for every scalar parameter.
GradReport finite_difference_check(const Objective& objective, const ParamSet& params, double h);

}  // namespace gam::ad
