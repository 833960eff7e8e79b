// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgmn::ad {

using Matrix = Eigen::MatrixXd;
using Sparse = Eigen::SparseMatrix<double>;

struct TapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Handle into a Tape. Valid only for the tape that produced it.
struct Var {
  int id = -1;
};

/// Eagerly-evaluated reverse-mode tape over dense matrices. Values are
/// computed on construction of each node; backward() sweeps the nodes in
/// reverse order. Scalars are 1x1 matrices.
class Tape {
  enum class Op {
    Leaf, MatMul, Spmm, Add, Scale, AddRowVec, Hadamard, RowScale, ColScale,
    ExpandCols, ContractCols, Relu, Exp, Softplus, ZohPhi, ConcatCols,
    SliceCols, SoftmaxRows, MaskedCrossEntropy, SumSquares,
  };

  struct Node {
    Op op = Op::Leaf;
    int a = -1, b = -1;
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    // op-specific payload
    const Sparse* sp = nullptr;
    double scalar = 0.0;
    int k = 0;  // repeat factor / slice start
    int k2 = 0; // slice count
    const std::vector<int>* labels = nullptr;
    const std::vector<std::int64_t>* mask = nullptr;
  };

 public:
  Var leaf(Matrix v, bool requires_grad = true) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(v);
    n.requires_grad = requires_grad;
    return push(std::move(n));
  }

  Var constant(Matrix v) { return leaf(std::move(v), false); }

  Var matmul(Var x, Var y) {
    Node n = binary(Op::MatMul, x, y);
    if (val(x).cols() != val(y).rows())
      throw TapeError("matmul: inner dimensions disagree (" +
                      shape(x) + " * " + shape(y) + ")");
    n.value = val(x) * val(y);
    return push(std::move(n));
  }

  /// P * X for a sparse operator P that is constant w.r.t. the tape.
  /// P must outlive the tape.
  Var spmm(const Sparse& p, Var x) {
    Node n = unary(Op::Spmm, x);
    if (p.cols() != val(x).rows())
      throw TapeError("spmm: dimension mismatch");
    n.sp = &p;
    n.value = p * val(x);
    return push(std::move(n));
  }

  Var add(Var x, Var y) {
    Node n = binary(Op::Add, x, y);
    require_same_shape(x, y, "add");
    n.value = val(x) + val(y);
    return push(std::move(n));
  }

  Var scale(Var x, double c) {
    Node n = unary(Op::Scale, x);
    n.scalar = c;
    n.value = val(x) * c;
    return push(std::move(n));
  }

  /// X + 1 * r, broadcasting a 1 x K row vector over every row of X.
  Var add_rowvec(Var x, Var r) {
    Node n = binary(Op::AddRowVec, x, r);
    if (val(r).rows() != 1 || val(r).cols() != val(x).cols())
      throw TapeError("add_rowvec: need 1 x cols(X) vector");
    n.value = val(x).rowwise() + val(r).row(0);
    return push(std::move(n));
  }

  Var hadamard(Var x, Var y) {
    Node n = binary(Op::Hadamard, x, y);
    require_same_shape(x, y, "hadamard");
    n.value = val(x).cwiseProduct(val(y));
    return push(std::move(n));
  }

  /// Scale row i of X by c[i], c a column vector (rows(X) x 1).
  Var row_scale(Var x, Var c) {
    Node n = binary(Op::RowScale, x, c);
    if (val(c).cols() != 1 || val(c).rows() != val(x).rows())
      throw TapeError("row_scale: need rows(X) x 1 vector");
    n.value = val(c).col(0).asDiagonal() * val(x);
    return push(std::move(n));
  }

  /// Scale column j of X by r[j], r a row vector (1 x cols(X)).
  Var col_scale(Var x, Var r) {
    Node n = binary(Op::ColScale, x, r);
    if (val(r).rows() != 1 || val(r).cols() != val(x).cols())
      throw TapeError("col_scale: need 1 x cols(X) vector");
    n.value = val(x) * val(r).row(0).asDiagonal();
    return push(std::move(n));
  }

  /// Repeat each column k times contiguously: out[:, j*k + t] = X[:, j].
  Var expand_cols(Var x, int k) {
    Node n = unary(Op::ExpandCols, x);
    n.k = k;
    n.value.resize(val(x).rows(), val(x).cols() * k);
    for (Eigen::Index j = 0; j < val(x).cols(); ++j)
      for (int t = 0; t < k; ++t) n.value.col(j * k + t) = val(x).col(j);
    return push(std::move(n));
  }

  /// Inverse aggregation of expand_cols: out[:, j] = sum_t X[:, j*k + t].
  Var contract_cols(Var x, int k) {
    Node n = unary(Op::ContractCols, x);
    if (val(x).cols() % k != 0)
      throw TapeError("contract_cols: column count not divisible");
    n.k = k;
    n.value = Matrix::Zero(val(x).rows(), val(x).cols() / k);
    for (Eigen::Index j = 0; j < n.value.cols(); ++j)
      for (int t = 0; t < k; ++t) n.value.col(j) += val(x).col(j * k + t);
    return push(std::move(n));
  }

  Var relu(Var x) {
    Node n = unary(Op::Relu, x);
    n.value = val(x).cwiseMax(0.0);
    return push(std::move(n));
  }

  Var exp(Var x) {
    Node n = unary(Op::Exp, x);
    n.value = val(x).array().exp();
    return push(std::move(n));
  }

  Var softplus(Var x) {
    Node n = unary(Op::Softplus, x);
    n.value = val(x).unaryExpr([](double z) {
      return z > 30.0 ? z : std::log1p(std::exp(z));
    });
    return push(std::move(n));
  }

  /// Elementwise phi(z) = (e^z - 1)/z with phi(0) = 1; the factor turning
  /// Delta*B into the zero-order-hold discretized input matrix.
  Var zoh_phi(Var x) {
    Node n = unary(Op::ZohPhi, x);
    n.value = val(x).unaryExpr([](double z) { return phi(z); });
    return push(std::move(n));
  }

  Var concat_cols(Var x, Var y) {
    Node n = binary(Op::ConcatCols, x, y);
    if (val(x).rows() != val(y).rows())
      throw TapeError("concat_cols: row counts differ");
    n.value.resize(val(x).rows(), val(x).cols() + val(y).cols());
    n.value << val(x), val(y);
    return push(std::move(n));
  }

  Var slice_cols(Var x, int start, int count) {
    Node n = unary(Op::SliceCols, x);
    if (start < 0 || start + count > val(x).cols())
      throw TapeError("slice_cols: range out of bounds");
    n.k = start;
    n.k2 = count;
    n.value = val(x).middleCols(start, count);
    return push(std::move(n));
  }

  Var softmax_rows(Var x) {
    Node n = unary(Op::SoftmaxRows, x);
    n.value = val(x);
    for (Eigen::Index i = 0; i < n.value.rows(); ++i) {
      auto row = n.value.row(i);
      row = (row.array() - row.maxCoeff()).exp();
      row /= row.sum();
    }
    return push(std::move(n));
  }

  /// Softmax cross-entropy over masked rows of a logit matrix, summed
  /// (not averaged). labels and mask must outlive the tape.
  Var masked_cross_entropy(Var logits, const std::vector<int>& labels,
                           const std::vector<std::int64_t>& mask) {
    if (mask.empty()) throw TapeError("cross entropy needs a nonempty mask");
    Node n = unary(Op::MaskedCrossEntropy, logits);
    n.labels = &labels;
    n.mask = &mask;
    double total = 0.0;
    const Matrix& z = val(logits);
    for (auto v : mask) {
      if (v < 0 || v >= z.rows())
        throw TapeError("cross entropy: masked row out of range");
      const auto row = z.row(v);
      const double m = row.maxCoeff();
      const double lse = m + std::log((row.array() - m).exp().sum());
      total += lse - row[static_cast<Eigen::Index>(labels[static_cast<size_t>(v)])];
    }
    n.value = Matrix::Constant(1, 1, total);
    return push(std::move(n));
  }

  Var sum_squares(Var x) {
    Node n = unary(Op::SumSquares, x);
    n.value = Matrix::Constant(1, 1, val(x).squaredNorm());
    return push(std::move(n));
  }

  const Matrix& value(Var v) const { return val(v); }
  const Matrix& gradient(Var v) const { return nodes_.at(check(v)).grad; }

  /// Reverse sweep from a scalar output. Gradients accumulate into every
  /// node reachable from `out` whose requires_grad is set.
  void backward(Var out) {
    auto& root = nodes_.at(check(out));
    if (root.value.size() != 1)
      throw TapeError("backward expects a scalar (1x1) output");
    for (auto& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    root.grad(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
      propagate(i);
  }

 private:
  static double phi(double z) {
    if (std::abs(z) < 1e-8) return 1.0 + z / 2.0 + z * z / 6.0;
    return std::expm1(z) / z;
  }
  static double phi_deriv(double z) {
    if (std::abs(z) < 1e-5) return 0.5 + z / 3.0 + z * z / 8.0;
    return (std::exp(z) * (z - 1.0) + 1.0) / (z * z);
  }

  size_t check(Var v) const {
    if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size())
      throw TapeError("variable does not belong to this tape");
    return static_cast<size_t>(v.id);
  }
  const Matrix& val(Var v) const { return nodes_.at(check(v)).value; }
  std::string shape(Var v) const {
    return std::to_string(val(v).rows()) + "x" + std::to_string(val(v).cols());
  }
  void require_same_shape(Var x, Var y, const char* what) const {
    if (val(x).rows() != val(y).rows() || val(x).cols() != val(y).cols())
      throw TapeError(std::string(what) + ": shape mismatch " + shape(x) +
                      " vs " + shape(y));
  }

  Node unary(Op op, Var x) {
    Node n;
    n.op = op;
    n.a = static_cast<int>(check(x));
    n.requires_grad = nodes_[static_cast<size_t>(n.a)].requires_grad;
    return n;
  }
  Node binary(Op op, Var x, Var y) {
    Node n;
    n.op = op;
    n.a = static_cast<int>(check(x));
    n.b = static_cast<int>(check(y));
    n.requires_grad = nodes_[static_cast<size_t>(n.a)].requires_grad ||
                      nodes_[static_cast<size_t>(n.b)].requires_grad;
    return n;
  }

  Var push(Node n) {
    if (!n.value.allFinite())
      throw TapeError("non-finite value produced by tape op");
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  void propagate(int i) {
    Node& n = nodes_[static_cast<size_t>(i)];
    if (!n.requires_grad || n.op == Op::Leaf) return;
    const Matrix& g = n.grad;
    Node* A = n.a >= 0 ? &nodes_[static_cast<size_t>(n.a)] : nullptr;
    Node* B = n.b >= 0 ? &nodes_[static_cast<size_t>(n.b)] : nullptr;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        if (A->requires_grad) A->grad.noalias() += g * B->value.transpose();
        if (B->requires_grad) B->grad.noalias() += A->value.transpose() * g;
        break;
      case Op::Spmm:
        if (A->requires_grad) A->grad.noalias() += n.sp->transpose() * g;
        break;
      case Op::Add:
        if (A->requires_grad) A->grad += g;
        if (B->requires_grad) B->grad += g;
        break;
      case Op::Scale:
        if (A->requires_grad) A->grad += g * n.scalar;
        break;
      case Op::AddRowVec:
        if (A->requires_grad) A->grad += g;
        if (B->requires_grad) B->grad.row(0) += g.colwise().sum();
        break;
      case Op::Hadamard:
        if (A->requires_grad) A->grad += g.cwiseProduct(B->value);
        if (B->requires_grad) B->grad += g.cwiseProduct(A->value);
        break;
      case Op::RowScale:
        if (A->requires_grad)
          A->grad += B->value.col(0).asDiagonal() * g;
        if (B->requires_grad)
          B->grad.col(0) += g.cwiseProduct(A->value).rowwise().sum();
        break;
      case Op::ColScale:
        if (A->requires_grad)
          A->grad += g * B->value.row(0).asDiagonal();
        if (B->requires_grad)
          B->grad.row(0) += g.cwiseProduct(A->value).colwise().sum();
        break;
      case Op::ExpandCols:
        if (A->requires_grad)
          for (Eigen::Index j = 0; j < A->value.cols(); ++j)
            for (int t = 0; t < n.k; ++t)
              A->grad.col(j) += g.col(j * n.k + t);
        break;
      case Op::ContractCols:
        if (A->requires_grad)
          for (Eigen::Index j = 0; j < n.value.cols(); ++j)
            for (int t = 0; t < n.k; ++t)
              A->grad.col(j * n.k + t) += g.col(j);
        break;
      case Op::Relu:
        if (A->requires_grad)
          A->grad += g.cwiseProduct(
              (A->value.array() > 0.0).cast<double>().matrix());
        break;
      case Op::Exp:
        if (A->requires_grad) A->grad += g.cwiseProduct(n.value);
        break;
      case Op::Softplus:
        if (A->requires_grad)
          A->grad += g.cwiseProduct(A->value.unaryExpr(
              [](double z) { return 1.0 / (1.0 + std::exp(-z)); }));
        break;
      case Op::ZohPhi:
        if (A->requires_grad)
          A->grad += g.cwiseProduct(
              A->value.unaryExpr([](double z) { return phi_deriv(z); }));
        break;
      case Op::ConcatCols:
        if (A->requires_grad) A->grad += g.leftCols(A->value.cols());
        if (B->requires_grad) B->grad += g.rightCols(B->value.cols());
        break;
      case Op::SliceCols:
        if (A->requires_grad) A->grad.middleCols(n.k, n.k2) += g;
        break;
      case Op::SoftmaxRows:
        if (A->requires_grad)
          for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
            const auto s = n.value.row(r);
            const double dot = g.row(r).dot(s);
            A->grad.row(r) +=
                s.cwiseProduct(g.row(r) - Eigen::RowVectorXd::Constant(
                                              s.cols(), dot));
          }
        break;
      case Op::MaskedCrossEntropy:
        if (A->requires_grad) {
          const double gs = g(0, 0);
          for (auto v : *n.mask) {
            const auto row = A->value.row(v);
            const double m = row.maxCoeff();
            Eigen::RowVectorXd p = (row.array() - m).exp();
            p /= p.sum();
            p[static_cast<Eigen::Index>(
                (*n.labels)[static_cast<size_t>(v)])] -= 1.0;
            A->grad.row(v) += gs * p;
          }
        }
        break;
      case Op::SumSquares:
        if (A->requires_grad) A->grad += 2.0 * g(0, 0) * A->value;
        break;
    }
  }

  std::vector<Node> nodes_;
};

}  // namespace hgmn::ad
