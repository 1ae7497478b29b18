#include "gam/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "gam/kernels.hpp"

namespace gam::ad {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Errc::kShapeMismatch, std::string(op) + ": operand shapes differ");
  }
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

Var Tape::leaf(Matrix value) { return push(Node{Op::kLeaf, std::move(value), {}, 0.0, 0, {}}); }

Var Tape::affine(Var x, Var w, Var b) {
  const Matrix& xv = value(x);
  const Matrix& wv = value(w);
  const Matrix& bv = value(b);
  if (wv.cols() != xv.cols() || bv.rows() != 1 || bv.cols() != wv.rows()) {
    throw Error(Errc::kShapeMismatch, "affine: weight/bias shapes do not match input");
  }
  return push(Node{Op::kAffine, kernels::affine(xv, wv, bv), {x.id, w.id, b.id}, 0.0, 0, {}});
}

Var Tape::relu(Var x) { return push(Node{Op::kRelu, kernels::relu(value(x)), {x.id}, 0.0, 0, {}}); }

Var Tape::sigmoid(Var x) {
  Matrix y = value(x);
  for (double& v : y.values()) v = kernels::sigmoid(v);
  return push(Node{Op::kSigmoid, std::move(y), {x.id}, 0.0, 0, {}});
}

Var Tape::mul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  require_same_shape(av, bv, "mul");
  Matrix y(av.rows(), av.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = av.data()[i] * bv.data()[i];
  return push(Node{Op::kMul, std::move(y), {a.id, b.id}, 0.0, 0, {}});
}

Var Tape::scale_rows(Var x, Var s) {
  const Matrix& xv = value(x);
  const Matrix& sv = value(s);
  if (sv.size() != xv.rows()) throw Error(Errc::kShapeMismatch, "scale_rows: need one scale per row");
  Matrix y(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const double w = sv.data()[r];
    for (std::size_t c = 0; c < xv.cols(); ++c) y(r, c) = xv(r, c) * w;
  }
  return push(Node{Op::kScaleRows, std::move(y), {x.id, s.id}, 0.0, 0, {}});
}

Var Tape::concat_cols(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.rows() != bv.rows()) throw Error(Errc::kShapeMismatch, "concat_cols: row counts differ");
  Matrix y(av.rows(), av.cols() + bv.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), y.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), y.row(r).begin() + static_cast<std::ptrdiff_t>(av.cols()));
  }
  return push(Node{Op::kConcatCols, std::move(y), {a.id, b.id}, 0.0, 0, {}});
}

Var Tape::max_pool_rows(Var x, std::size_t group) {
  const Matrix& xv = value(x);
  if (group == 0 || xv.rows() % group != 0) {
    throw Error(Errc::kShapeMismatch, "max_pool_rows: rows not divisible by group");
  }
  const std::size_t out_rows = xv.rows() / group;
  std::vector<std::size_t> arg(out_rows * xv.cols());
  for (std::size_t g = 0; g < out_rows; ++g) {
    for (std::size_t c = 0; c < xv.cols(); ++c) {
      std::size_t best = g * group;
      for (std::size_t j = 1; j < group; ++j) {
        if (xv(g * group + j, c) > xv(best, c)) best = g * group + j;
      }
      arg[g * xv.cols() + c] = best;
    }
  }
  return push(Node{Op::kMaxPoolRows, kernels::max_pool_rows(xv, group), {x.id}, 0.0, group, std::move(arg)});
}

Var Tape::mean(Var x) {
  const Matrix& xv = value(x);
  if (xv.empty()) throw Error(Errc::kShapeMismatch, "mean of empty matrix");
  double acc = 0.0;
  for (double v : xv.values()) acc += v;
  return push(Node{Op::kMean, Matrix(1, 1, acc / static_cast<double>(xv.size())), {x.id}, 0.0, 0, {}});
}

Var Tape::sum(Var x) {
  double acc = 0.0;
  for (double v : value(x).values()) acc += v;
  return push(Node{Op::kSum, Matrix(1, 1, acc), {x.id}, 0.0, 0, {}});
}

Var Tape::add(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  require_same_shape(av, bv, "add");
  Matrix y(av.rows(), av.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = av.data()[i] + bv.data()[i];
  return push(Node{Op::kAdd, std::move(y), {a.id, b.id}, 0.0, 0, {}});
}

Var Tape::add_scalar(Var x, double c) {
  Matrix y = value(x);
  for (double& v : y.values()) v = v + c;
  return push(Node{Op::kAddScalar, std::move(y), {x.id}, c, 0, {}});
}

Var Tape::mul_scalar(Var x, double c) {
  Matrix y = value(x);
  for (double& v : y.values()) v = v * c;
  return push(Node{Op::kMulScalar, std::move(y), {x.id}, c, 0, {}});
}

Var Tape::div_scalar(Var x, double c) {
  Matrix y = value(x);
  for (double& v : y.values()) v = v / c;
  return push(Node{Op::kDivScalar, std::move(y), {x.id}, c, 0, {}});
}

Var Tape::softmax_cross_entropy(Var logits, std::vector<std::size_t> labels) {
  const Matrix& z = value(logits);
  if (labels.size() != z.rows() || z.rows() == 0) {
    throw Error(Errc::kShapeMismatch, "softmax_cross_entropy: one label per row required");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) {
    if (labels[r] >= z.cols()) throw Error(Errc::kInvalidInput, "class label out of range");
    const auto row = z.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (double v : row) denom += std::exp(v - peak);
    total += peak + std::log(denom) - row[labels[r]];
  }
  return push(Node{Op::kSoftmaxCrossEntropy, Matrix(1, 1, total / static_cast<double>(z.rows())), {logits.id},
                   0.0, 0, std::move(labels)});
}

Gradients Tape::backward(Var loss, double seed) const {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw Error(Errc::kNonScalarLoss, "backward needs a 1x1 loss, got " + std::to_string(lv.rows()) + "x" +
                                          std::to_string(lv.cols()));
  }
  Gradients out;
  out.grads_.reserve(nodes_.size());
  for (const Node& n : nodes_) out.grads_.emplace_back(n.value.rows(), n.value.cols());
  out.grads_[loss.id](0, 0) = seed;

  auto& g = out.grads_;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    ++out.visited_;
    const Node& n = nodes_[id];
    const Matrix& gy = g[id];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAffine: {
        const Matrix& x = nodes_[n.inputs[0]].value;
        const Matrix& w = nodes_[n.inputs[1]].value;
        Matrix& gx = g[n.inputs[0]];
        Matrix& gw = g[n.inputs[1]];
        Matrix& gb = g[n.inputs[2]];
        for (std::size_t r = 0; r < x.rows(); ++r) {
          for (std::size_t o = 0; o < w.rows(); ++o) {
            const double go = gy(r, o);
            if (go == 0.0) continue;
            gb(0, o) += go;
            for (std::size_t i = 0; i < x.cols(); ++i) {
              gx(r, i) += go * w(o, i);
              gw(o, i) += go * x(r, i);
            }
          }
        }
        break;
      }
      case Op::kRelu: {
        const Matrix& x = nodes_[n.inputs[0]].value;
        Matrix& gx = g[n.inputs[0]];
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (x.data()[i] > 0.0) gx.data()[i] += gy.data()[i];
        }
        break;
      }
      case Op::kSigmoid: {
        const Matrix& x = nodes_[n.inputs[0]].value;
        Matrix& gx = g[n.inputs[0]];
        for (std::size_t i = 0; i < x.size(); ++i) {
          if (std::fabs(x.data()[i]) > kernels::kSigmoidClamp) continue;
          const double y = n.value.data()[i];
          gx.data()[i] += gy.data()[i] * y * (1.0 - y);
        }
        break;
      }
      case Op::kMul: {
        const Matrix& a = nodes_[n.inputs[0]].value;
        const Matrix& b = nodes_[n.inputs[1]].value;
        Matrix& ga = g[n.inputs[0]];
        Matrix& gb = g[n.inputs[1]];
        for (std::size_t i = 0; i < a.size(); ++i) {
          ga.data()[i] += gy.data()[i] * b.data()[i];
          gb.data()[i] += gy.data()[i] * a.data()[i];
        }
        break;
      }
      case Op::kScaleRows: {
        const Matrix& x = nodes_[n.inputs[0]].value;
        const Matrix& s = nodes_[n.inputs[1]].value;
        Matrix& gx = g[n.inputs[0]];
        Matrix& gs = g[n.inputs[1]];
        for (std::size_t r = 0; r < x.rows(); ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < x.cols(); ++c) {
            gx(r, c) += gy(r, c) * s.data()[r];
            acc += gy(r, c) * x(r, c);
          }
          gs.data()[r] += acc;
        }
        break;
      }
      case Op::kConcatCols: {
        Matrix& ga = g[n.inputs[0]];
        Matrix& gb = g[n.inputs[1]];
        const std::size_t split = ga.cols();
        for (std::size_t r = 0; r < gy.rows(); ++r) {
          for (std::size_t c = 0; c < split; ++c) ga(r, c) += gy(r, c);
          for (std::size_t c = 0; c < gb.cols(); ++c) gb(r, c) += gy(r, split + c);
        }
        break;
      }
      case Op::kMaxPoolRows: {
        Matrix& gx = g[n.inputs[0]];
        const std::size_t cols = gx.cols();
        for (std::size_t r = 0; r < gy.rows(); ++r) {
          for (std::size_t c = 0; c < cols; ++c) gx(n.index[r * cols + c], c) += gy(r, c);
        }
        break;
      }
      case Op::kMean: {
        Matrix& gx = g[n.inputs[0]];
        const double share = gy(0, 0) / static_cast<double>(gx.size());
        for (double& v : gx.values()) v += share;
        break;
      }
      case Op::kSum: {
        Matrix& gx = g[n.inputs[0]];
        for (double& v : gx.values()) v += gy(0, 0);
        break;
      }
      case Op::kAdd: {
        Matrix& ga = g[n.inputs[0]];
        Matrix& gb = g[n.inputs[1]];
        for (std::size_t i = 0; i < gy.size(); ++i) {
          ga.data()[i] += gy.data()[i];
          gb.data()[i] += gy.data()[i];
        }
        break;
      }
      case Op::kAddScalar: {
        Matrix& gx = g[n.inputs[0]];
        for (std::size_t i = 0; i < gy.size(); ++i) gx.data()[i] += gy.data()[i];
        break;
      }
      case Op::kMulScalar: {
        Matrix& gx = g[n.inputs[0]];
        for (std::size_t i = 0; i < gy.size(); ++i) gx.data()[i] += gy.data()[i] * n.scalar;
        break;
      }
      case Op::kDivScalar: {
        Matrix& gx = g[n.inputs[0]];
        for (std::size_t i = 0; i < gy.size(); ++i) gx.data()[i] += gy.data()[i] / n.scalar;
        break;
      }
      case Op::kSoftmaxCrossEntropy: {
        const Matrix& z = nodes_[n.inputs[0]].value;
        Matrix& gz = g[n.inputs[0]];
        const double share = gy(0, 0) / static_cast<double>(z.rows());
        for (std::size_t r = 0; r < z.rows(); ++r) {
          const auto row = z.row(r);
          const double peak = *std::max_element(row.begin(), row.end());
          double denom = 0.0;
          for (double v : row) denom += std::exp(v - peak);
          for (std::size_t c = 0; c < z.cols(); ++c) {
            const double p = std::exp(row[c] - peak) / denom;
            gz(r, c) += share * (p - (c == n.index[r] ? 1.0 : 0.0));
          }
        }
        break;
      }
    }
  }
  return out;
}

GradReport finite_difference_check(const Objective& objective, const ParamSet& params, double h) {
  if (!(h > 0.0)) throw Error(Errc::kInvalidInput, "finite difference step must be > 0");
  if (params.names.size() != params.values.size()) {
    throw Error(Errc::kShapeMismatch, "parameter names and values differ in length");
  }
  const auto evaluate = [&](const std::vector<Matrix>& values, Gradients* grads, std::vector<Var>* leaves) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(values.size());
    for (const Matrix& m : values) vars.push_back(tape.leaf(m));
    const Var loss = objective(tape, vars);
    if (grads) *grads = tape.backward(loss);
    if (leaves) *leaves = vars;
    return tape.value(loss)(0, 0);
  };

  Gradients analytic;
  std::vector<Var> leaves;
  evaluate(params.values, &analytic, &leaves);

  GradReport report;
  std::vector<Matrix> work = params.values;
  for (std::size_t p = 0; p < work.size(); ++p) {
    ParamError err{params.names[p], 0.0, 0.0};
    const Matrix& grad = analytic[leaves[p]];
    for (std::size_t i = 0; i < work[p].size(); ++i) {
      const double saved = work[p].data()[i];
      work[p].data()[i] = saved + h;
      const double up = evaluate(work, nullptr, nullptr);
      work[p].data()[i] = saved - h;
      const double down = evaluate(work, nullptr, nullptr);
      work[p].data()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grad.data()[i];
      const double abs_err = std::fabs(a - numeric);
      const double rel_err = abs_err / std::max({std::fabs(a), std::fabs(numeric), kRelErrorFloor});
      err.max_abs_error = std::max(err.max_abs_error, abs_err);
      err.max_rel_error = std::max(err.max_rel_error, rel_err);
      ++report.n_scalars;
    }
    report.max_abs_error = std::max(report.max_abs_error, err.max_abs_error);
    report.max_rel_error = std::max(report.max_rel_error, err.max_rel_error);
    report.params.push_back(std::move(err));
  }
  return report;
}

}  // namespace gam::ad
