#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "textaug/errors.hpp"

namespace textaug {

using Mat = Eigen::MatrixXd;

/// Named parameter tensors. std::map keeps iteration order deterministic,
/// which the optimizer and checkpoints rely on.
using ParamMap = std::map<std::string, Mat>;

/// Handle to a node on a Tape.
struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

/// Reverse-mode tape over dense double matrices. One tape per forward pass;
/// leaves copy their values in, gradients are read back out after
/// backward(). Small and explicit rather than clever — every model in this
/// library shares the same dozen ops and the same finite-difference harness.
class Tape {
 public:
  Var leaf(const Mat& value) {
    nodes_.push_back({value, Mat::Zero(value.rows(), value.cols()), nullptr});
    return {static_cast<int>(nodes_.size() - 1)};
  }

  const Mat& value(Var v) const { return nodes_[check(v)].value; }
  const Mat& grad(Var v) const { return nodes_[check(v)].grad; }

  /// C = A * B
  Var matmul(Var a, Var b) {
    Var c = push(value(a) * value(b));
    nodes_[c.idx].backward = [this, a, b, c] {
      const Mat& g = nodes_[c.idx].grad;
      nodes_[a.idx].grad.noalias() += g * nodes_[b.idx].value.transpose();
      nodes_[b.idx].grad.noalias() += nodes_[a.idx].value.transpose() * g;
    };
    return c;
  }

  /// C = A * B^T
  Var matmul_nt(Var a, Var b) {
    Var c = push(value(a) * value(b).transpose());
    nodes_[c.idx].backward = [this, a, b, c] {
      const Mat& g = nodes_[c.idx].grad;
      nodes_[a.idx].grad.noalias() += g * nodes_[b.idx].value;
      nodes_[b.idx].grad.noalias() += g.transpose() * nodes_[a.idx].value;
    };
    return c;
  }

  Var add(Var a, Var b) {
    Var c = push(value(a) + value(b));
    nodes_[c.idx].backward = [this, a, b, c] {
      nodes_[a.idx].grad += nodes_[c.idx].grad;
      nodes_[b.idx].grad += nodes_[c.idx].grad;
    };
    return c;
  }

  /// C = A + 1*row (row broadcast over A's rows; row is 1 x cols)
  Var add_rowvec(Var a, Var row) {
    Mat v = value(a);
    v.rowwise() += value(row).row(0);
    Var c = push(std::move(v));
    nodes_[c.idx].backward = [this, a, row, c] {
      const Mat& g = nodes_[c.idx].grad;
      nodes_[a.idx].grad += g;
      nodes_[row.idx].grad += g.colwise().sum();
    };
    return c;
  }

  /// C = A + constant (no gradient into the constant)
  Var add_const(Var a, const Mat& k) {
    Var c = push(value(a) + k);
    nodes_[c.idx].backward = [this, a, c] {
      nodes_[a.idx].grad += nodes_[c.idx].grad;
    };
    return c;
  }

  Var scale(Var a, double s) {
    Var c = push(value(a) * s);
    nodes_[c.idx].backward = [this, a, c, s] {
      nodes_[a.idx].grad += nodes_[c.idx].grad * s;
    };
    return c;
  }

  /// Elementwise product with a constant mask (dropout).
  Var mul_const(Var a, const Mat& mask) {
    Var c = push(value(a).cwiseProduct(mask));
    Mat m = mask;
    nodes_[c.idx].backward = [this, a, c, m] {
      nodes_[a.idx].grad += nodes_[c.idx].grad.cwiseProduct(m);
    };
    return c;
  }

  Var hadamard(Var a, Var b) {
    Var c = push(value(a).cwiseProduct(value(b)));
    nodes_[c.idx].backward = [this, a, b, c] {
      const Mat& g = nodes_[c.idx].grad;
      nodes_[a.idx].grad += g.cwiseProduct(nodes_[b.idx].value);
      nodes_[b.idx].grad += g.cwiseProduct(nodes_[a.idx].value);
    };
    return c;
  }

  Var relu(Var a) {
    Var c = push(value(a).cwiseMax(0.0));
    nodes_[c.idx].backward = [this, a, c] {
      const Mat& x = nodes_[a.idx].value;
      nodes_[a.idx].grad +=
          nodes_[c.idx].grad.cwiseProduct((x.array() > 0.0).cast<double>().matrix());
    };
    return c;
  }

  Var sigmoid(Var a) {
    Mat y = (1.0 / (1.0 + (-value(a).array()).exp())).matrix();
    Var c = push(std::move(y));
    nodes_[c.idx].backward = [this, a, c] {
      const Mat& y = nodes_[c.idx].value;
      nodes_[a.idx].grad += nodes_[c.idx].grad.cwiseProduct(
          y.cwiseProduct((1.0 - y.array()).matrix()));
    };
    return c;
  }

  Var tanh(Var a) {
    Var c = push(value(a).array().tanh().matrix());
    nodes_[c.idx].backward = [this, a, c] {
      const Mat& y = nodes_[c.idx].value;
      nodes_[a.idx].grad += nodes_[c.idx].grad.cwiseProduct(
          (1.0 - y.array().square()).matrix());
    };
    return c;
  }

  /// Row-wise softmax with an optional additive mask applied to the logits
  /// first (use -inf entries to forbid positions).
  Var softmax_rows(Var a, const Mat* additive_mask = nullptr) {
    Mat x = value(a);
    if (additive_mask) x += *additive_mask;
    Mat y(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double m = x.row(r).maxCoeff();
      Eigen::ArrayXd e = (x.row(r).array() - m).exp();
      y.row(r) = (e / e.sum()).matrix();
    }
    Var c = push(std::move(y));
    nodes_[c.idx].backward = [this, a, c] {
      const Mat& y = nodes_[c.idx].value;
      const Mat& g = nodes_[c.idx].grad;
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const double dot = g.row(r).dot(y.row(r));
        nodes_[a.idx].grad.row(r) +=
            y.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
      }
    };
    return c;
  }

  /// Row-wise layer normalization with learned gain/bias (each 1 x cols).
  Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5) {
    const Mat& x = value(a);
    const Eigen::Index n = x.cols();
    Mat xhat(x.rows(), n);
    Eigen::VectorXd inv_std(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double mean = x.row(r).mean();
      const double var = (x.row(r).array() - mean).square().sum() / double(n);
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std(r) = is;
      xhat.row(r) = ((x.row(r).array() - mean) * is).matrix();
    }
    Mat y = xhat;
    y.array().rowwise() *= value(gain).row(0).array();
    y.rowwise() += value(bias).row(0);
    Var c = push(std::move(y));
    nodes_[c.idx].backward = [this, a, gain, bias, c, xhat, inv_std] {
      const Mat& g = nodes_[c.idx].grad;
      const Eigen::RowVectorXd gn = nodes_[gain.idx].value.row(0);
      const Eigen::Index n = g.cols();
      for (Eigen::Index r = 0; r < g.rows(); ++r) {
        // dxhat = dy .* gain; dx via the standard layernorm backward
        Eigen::RowVectorXd dxhat = g.row(r).cwiseProduct(gn);
        const double s1 = dxhat.sum();
        const double s2 = dxhat.dot(xhat.row(r));
        nodes_[a.idx].grad.row(r) +=
            (inv_std(r) / double(n)) *
            (double(n) * dxhat.array() - s1 - xhat.row(r).array() * s2).matrix();
      }
      nodes_[gain.idx].grad += g.cwiseProduct(xhat).colwise().sum();
      nodes_[bias.idx].grad += g.colwise().sum();
    };
    return c;
  }

  /// Gathers rows of an embedding matrix: out.row(i) = table.row(ids[i]).
  Var gather_rows(Var table, const std::vector<int>& ids) {
    const Mat& t = value(table);
    Mat y(static_cast<Eigen::Index>(ids.size()), t.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= t.rows())
        throw InputError("gather_rows: id out of range");
      y.row(static_cast<Eigen::Index>(i)) = t.row(ids[i]);
    }
    Var c = push(std::move(y));
    std::vector<int> id_copy = ids;
    nodes_[c.idx].backward = [this, table, c, id_copy] {
      const Mat& g = nodes_[c.idx].grad;
      for (std::size_t i = 0; i < id_copy.size(); ++i)
        nodes_[table.idx].grad.row(id_copy[i]) += g.row(static_cast<Eigen::Index>(i));
    };
    return c;
  }

  /// Adds a 1 x cols row vector onto a single row of A.
  Var add_to_row(Var a, Var row, int row_idx) {
    Mat v = value(a);
    v.row(row_idx) += value(row).row(0);
    Var c = push(std::move(v));
    nodes_[c.idx].backward = [this, a, row, c, row_idx] {
      const Mat& g = nodes_[c.idx].grad;
      nodes_[a.idx].grad += g;
      nodes_[row.idx].grad += g.row(row_idx);
    };
    return c;
  }

  Var concat_cols(const std::vector<Var>& parts) {
    Eigen::Index rows = value(parts.at(0)).rows(), cols = 0;
    for (Var p : parts) cols += value(p).cols();
    Mat y(rows, cols);
    Eigen::Index off = 0;
    for (Var p : parts) {
      y.middleCols(off, value(p).cols()) = value(p);
      off += value(p).cols();
    }
    Var c = push(std::move(y));
    std::vector<Var> ps = parts;
    nodes_[c.idx].backward = [this, ps, c] {
      const Mat& g = nodes_[c.idx].grad;
      Eigen::Index off = 0;
      for (Var p : ps) {
        const Eigen::Index w = nodes_[p.idx].value.cols();
        nodes_[p.idx].grad += g.middleCols(off, w);
        off += w;
      }
    };
    return c;
  }

  Var concat_rows(const std::vector<Var>& parts) {
    Eigen::Index cols = value(parts.at(0)).cols(), rows = 0;
    for (Var p : parts) rows += value(p).rows();
    Mat y(rows, cols);
    Eigen::Index off = 0;
    for (Var p : parts) {
      y.middleRows(off, value(p).rows()) = value(p);
      off += value(p).rows();
    }
    Var c = push(std::move(y));
    std::vector<Var> ps = parts;
    nodes_[c.idx].backward = [this, ps, c] {
      const Mat& g = nodes_[c.idx].grad;
      Eigen::Index off = 0;
      for (Var p : ps) {
        const Eigen::Index h = nodes_[p.idx].value.rows();
        nodes_[p.idx].grad += g.middleRows(off, h);
        off += h;
      }
    };
    return c;
  }

  Var slice_cols(Var a, int start, int n) {
    Var c = push(value(a).middleCols(start, n));
    nodes_[c.idx].backward = [this, a, c, start, n] {
      nodes_[a.idx].grad.middleCols(start, n) += nodes_[c.idx].grad;
    };
    return c;
  }

  Var slice_rows(Var a, int start, int n) {
    Var c = push(value(a).middleRows(start, n));
    nodes_[c.idx].backward = [this, a, c, start, n] {
      nodes_[a.idx].grad.middleRows(start, n) += nodes_[c.idx].grad;
    };
    return c;
  }

  /// Column-wise max over rows -> 1 x cols (max-over-time pooling).
  /// Ties route the gradient to the first maximal row.
  Var colwise_max(Var a) {
    const Mat& x = value(a);
    Mat y(1, x.cols());
    std::vector<Eigen::Index> argmax(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::Index best = 0;
      for (Eigen::Index r = 1; r < x.rows(); ++r)
        if (x(r, c) > x(best, c)) best = r;
      argmax[static_cast<std::size_t>(c)] = best;
      y(0, c) = x(best, c);
    }
    Var c = push(std::move(y));
    nodes_[c.idx].backward = [this, a, c, argmax] {
      const Mat& g = nodes_[c.idx].grad;
      for (Eigen::Index col = 0; col < g.cols(); ++col)
        nodes_[a.idx].grad(argmax[static_cast<std::size_t>(col)], col) += g(0, col);
    };
    return c;
  }

  /// Mean over rows of (logsumexp(row) - row[target]) — the standard
  /// token-level cross entropy. Returns a 1x1 scalar node.
  Var cross_entropy_mean(Var logits, const std::vector<int>& targets) {
    const Mat& x = value(logits);
    if (static_cast<std::size_t>(x.rows()) != targets.size())
      throw InputError("cross_entropy_mean: row/target count mismatch");
    const double n = static_cast<double>(targets.size());
    Mat softmax(x.rows(), x.cols());
    double loss = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const int t = targets[static_cast<std::size_t>(r)];
      if (t < 0 || t >= x.cols()) throw InputError("cross_entropy_mean: target out of range");
      const double m = x.row(r).maxCoeff();
      Eigen::ArrayXd e = (x.row(r).array() - m).exp();
      const double z = e.sum();
      softmax.row(r) = (e / z).matrix();
      loss += std::log(z) + m - x(r, t);
    }
    Mat out(1, 1);
    out(0, 0) = loss / n;
    Var c = push(std::move(out));
    std::vector<int> tg = targets;
    nodes_[c.idx].backward = [this, logits, c, softmax, tg, n] {
      const double g = nodes_[c.idx].grad(0, 0);
      Mat d = softmax;
      for (Eigen::Index r = 0; r < d.rows(); ++r)
        d(r, tg[static_cast<std::size_t>(r)]) -= 1.0;
      nodes_[logits.idx].grad += d * (g / n);
    };
    return c;
  }

  /// Frobenius inner product with a constant -> 1x1 scalar.
  Var dot_const(Var a, const Mat& k) {
    Mat out(1, 1);
    out(0, 0) = value(a).cwiseProduct(k).sum();
    Var c = push(std::move(out));
    Mat kc = k;
    nodes_[c.idx].backward = [this, a, c, kc] {
      nodes_[a.idx].grad += nodes_[c.idx].grad(0, 0) * kc;
    };
    return c;
  }

  /// Mean of 1x1 scalar nodes (batch loss aggregation).
  Var mean_scalars(const std::vector<Var>& scalars) {
    if (scalars.empty()) throw InputError("mean_scalars: empty");
    double sum = 0.0;
    for (Var s : scalars) sum += value(s)(0, 0);
    Mat out(1, 1);
    const double n = static_cast<double>(scalars.size());
    out(0, 0) = sum / n;
    Var c = push(std::move(out));
    std::vector<Var> ss = scalars;
    nodes_[c.idx].backward = [this, ss, c, n] {
      const double g = nodes_[c.idx].grad(0, 0) / n;
      for (Var s : ss) nodes_[s.idx].grad(0, 0) += g;
    };
    return c;
  }

  /// Seeds d(out)/d(out) = 1 and sweeps the tape in reverse.
  void backward(Var out) {
    Node& last = nodes_[check(out)];
    if (last.value.rows() != 1 || last.value.cols() != 1)
      throw InputError("backward: output must be a 1x1 scalar");
    last.grad(0, 0) = 1.0;
    for (int i = out.idx; i >= 0; --i)
      if (nodes_[static_cast<std::size_t>(i)].backward)
        nodes_[static_cast<std::size_t>(i)].backward();
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void()> backward;
  };

  Var push(Mat v) {
    nodes_.push_back({std::move(v), Mat(), nullptr});
    Node& n = nodes_.back();
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return {static_cast<int>(nodes_.size() - 1)};
  }

  int check(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.idx) >= nodes_.size())
      throw InputError("invalid tape variable");
    return v.idx;
  }

  std::vector<Node> nodes_;
};

/// Leaves for a whole ParamMap at once; returns name -> Var.
inline std::map<std::string, Var> leaf_all(Tape& tape, const ParamMap& params) {
  std::map<std::string, Var> vars;
  for (const auto& [name, mat] : params) vars[name] = tape.leaf(mat);
  return vars;
}

/// Collects gradients for every parameter leaf after backward().
inline ParamMap collect_grads(const Tape& tape, const std::map<std::string, Var>& vars) {
  ParamMap grads;
  for (const auto& [name, var] : vars) grads[name] = tape.grad(var);
  return grads;
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace textaug
