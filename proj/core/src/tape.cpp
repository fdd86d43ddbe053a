#include "msvf/tape.hpp"

#include <cmath>

namespace msvf::ad {

namespace {

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(Errc::ShapeMismatch, std::string(op) + ": operand shapes differ");
  }
}

}  // namespace

// clear() rewinds used_ without destroying nodes; matrix storage is then
// reused by assignment on the next pass, which keeps steady-state training
// iterations nearly allocation-free (the recorded graph has a fixed shape).
Tape::Node& Tape::next_node(Op op, std::int32_t a, std::int32_t b) {
  if (used_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[used_++];
  n.op = op;
  n.a = a;
  n.b = b;
  n.i0 = n.i1 = n.i2 = n.i3 = 0;
  return n;
}

Var Tape::current() const { return Var{static_cast<std::int32_t>(used_) - 1}; }

Var Tape::input(const Eigen::MatrixXd& v) {
  next_node(Op::kInput, -1, -1).value = v;
  return current();
}

Var Tape::constant(const Eigen::MatrixXd& v) {
  next_node(Op::kConst, -1, -1).value = v;
  return current();
}

Var Tape::scalar(double v) {
  Node& n = next_node(Op::kConst, -1, -1);
  n.value.resize(1, 1);
  n.value(0, 0) = v;
  return current();
}

Var Tape::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  Node& n = next_node(Op::kAdd, a.i, b.i);
  n.value = value(a) + value(b);
  return current();
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(value(a), value(b), "sub");
  Node& n = next_node(Op::kSub, a.i, b.i);
  n.value = value(a) - value(b);
  return current();
}

Var Tape::neg(Var a) {
  Node& n = next_node(Op::kNeg, a.i, -1);
  n.value = -value(a);
  return current();
}

Var Tape::scale(Var a, double c) {
  Node& n = next_node(Op::kScale, a.i, -1);
  n.value = c * value(a);
  n.aux.resize(1, 1);
  n.aux(0, 0) = c;
  return current();
}

Var Tape::mul(Var a, Var b) {
  check_same_shape(value(a), value(b), "mul");
  Node& n = next_node(Op::kMul, a.i, b.i);
  n.value = value(a).cwiseProduct(value(b));
  return current();
}

Var Tape::div(Var a, Var b) {
  check_same_shape(value(a), value(b), "div");
  Node& n = next_node(Op::kDiv, a.i, b.i);
  n.value = value(a).cwiseQuotient(value(b));
  return current();
}

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) fail(Errc::ShapeMismatch, "matmul: inner dimensions");
  Node& n = next_node(Op::kMatMul, a.i, b.i);
  n.value = value(a) * value(b);
  return current();
}

Var Tape::transpose(Var a) {
  Node& n = next_node(Op::kTranspose, a.i, -1);
  n.value = value(a).transpose();
  return current();
}

Var Tape::tanh(Var a) {
  Node& n = next_node(Op::kTanh, a.i, -1);
  n.value = value(a).array().tanh();
  return current();
}

Var Tape::sin(Var a) {
  Node& n = next_node(Op::kSin, a.i, -1);
  n.value = value(a).array().sin();
  return current();
}

Var Tape::cos(Var a) {
  Node& n = next_node(Op::kCos, a.i, -1);
  n.value = value(a).array().cos();
  return current();
}

Var Tape::acos_clamped(Var a) {
  Node& n = next_node(Op::kAcos, a.i, -1);
  n.aux = value(a).array().min(1.0 - 1e-12).max(-1.0 + 1e-12);
  n.value = n.aux.array().acos();
  return current();
}

Var Tape::abs(Var a) {
  Node& n = next_node(Op::kAbs, a.i, -1);
  n.value = value(a).array().abs();
  return current();
}

Var Tape::sign(Var a) {
  Node& n = next_node(Op::kSign, a.i, -1);
  n.value = value(a).array().sign();
  return current();
}

Var Tape::sqrt_guarded(Var a) {
  Node& n = next_node(Op::kSqrtGuard, a.i, -1);
  n.value = value(a).array().max(0.0).sqrt();
  return current();
}

Var Tape::clamp01(Var a) {
  Node& n = next_node(Op::kClamp01, a.i, -1);
  n.value = value(a).array().min(1.0).max(0.0);
  return current();
}

Var Tape::diag_scale(Var a, Var d) {
  if (value(d).cols() != 1 || value(d).rows() != value(a).rows()) {
    fail(Errc::ShapeMismatch, "diag_scale: d must be a column matching A's rows");
  }
  Node& n = next_node(Op::kDiagScale, a.i, d.i);
  n.value = value(a).array().colwise() * value(d).col(0).array();
  return current();
}

Var Tape::scale_var(Var s, Var a) {
  if (value(s).size() != 1) fail(Errc::ShapeMismatch, "scale_var: scale must be 1x1");
  Node& n = next_node(Op::kScaleVar, s.i, a.i);
  n.value = value(s)(0, 0) * value(a);
  return current();
}

Var Tape::dot(Var a, Var b) {
  check_same_shape(value(a), value(b), "dot");
  Node& n = next_node(Op::kDot, a.i, b.i);
  n.value.resize(1, 1);
  n.value(0, 0) = value(a).cwiseProduct(value(b)).sum();
  return current();
}

Var Tape::trace(Var a) {
  Node& n = next_node(Op::kTrace, a.i, -1);
  n.value.resize(1, 1);
  n.value(0, 0) = value(a).trace();
  return current();
}

Var Tape::solve(Var a, Var b) {
  const Eigen::MatrixXd& A = value(a);
  if (A.rows() != A.cols()) fail(Errc::ShapeMismatch, "solve: A must be square");
  if (A.rows() != value(b).rows()) fail(Errc::ShapeMismatch, "solve: rows of A and B differ");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (std::abs(lu.determinant()) < 1e-12) {
    fail(Errc::SingularJacobian, "matrix determinant below 1e-12 in linear solve");
  }
  Node& n = next_node(Op::kSolve, a.i, b.i);
  n.aux = lu.inverse();
  n.value = n.aux * value(b);
  return current();
}

Var Tape::block(Var a, int r0, int c0, int rows, int cols) {
  if (r0 + rows > value(a).rows() || c0 + cols > value(a).cols()) {
    fail(Errc::ShapeMismatch, "block out of range");
  }
  Node& n = next_node(Op::kBlock, a.i, -1);
  n.value = value(a).block(r0, c0, rows, cols);
  n.i0 = r0;
  n.i1 = c0;
  n.i2 = rows;
  n.i3 = cols;
  return current();
}

Var Tape::vstack(Var a, Var b) {
  if (value(a).cols() != value(b).cols()) fail(Errc::ShapeMismatch, "vstack: column counts");
  Node& n = next_node(Op::kVStack, a.i, b.i);
  n.value.resize(value(a).rows() + value(b).rows(), value(a).cols());
  n.value.topRows(value(a).rows()) = value(a);
  n.value.bottomRows(value(b).rows()) = value(b);
  n.i0 = static_cast<std::int32_t>(value(a).rows());
  return current();
}

Var Tape::skew3(Var w) {
  if (value(w).rows() != 3 || value(w).cols() != 1) fail(Errc::ShapeMismatch, "skew3: 3-vector");
  Node& n = next_node(Op::kSkew3, w.i, -1);
  const auto& v = value(w);  // fetched after next_node: it may reallocate nodes_
  n.value.resize(3, 3);
  n.value << 0, -v(2, 0), v(1, 0), v(2, 0), 0, -v(0, 0), -v(1, 0), v(0, 0), 0;
  return current();
}

Var Tape::vee_antisym3(Var a) {
  if (value(a).rows() != 3 || value(a).cols() != 3) fail(Errc::ShapeMismatch, "vee: 3x3");
  Node& n = next_node(Op::kVeeAntisym3, a.i, -1);
  const auto& A = value(a);
  n.value.resize(3, 1);
  n.value << A(2, 1) - A(1, 2), A(0, 2) - A(2, 0), A(1, 0) - A(0, 1);
  return current();
}

void Tape::accumulate(std::int32_t idx, const Eigen::MatrixXd& g) {
  if (idx < 0) return;
  if (nodes_[idx].op == Op::kConst) return;  // gradients never flow into data
  if (!has_adj_[idx]) {
    adj_[idx] = g;  // assignment reuses the buffer when the shape repeats
    has_adj_[idx] = 1;
  } else {
    adj_[idx] += g;
  }
}

void Tape::backward(Var root) {
  if (value(root).size() != 1) {
    fail(Errc::GraphNotScalar, "backward requires a scalar (1x1) root node");
  }
  backward_seeded(root, Eigen::MatrixXd::Constant(1, 1, 1.0));
}

void Tape::backward_seeded(Var root, const Eigen::MatrixXd& seed) {
  check_same_shape(value(root), seed, "backward_seeded");
  if (adj_.size() < used_) adj_.resize(used_);
  has_adj_.assign(used_, 0);
  adj_[root.i] = seed;
  has_adj_[root.i] = 1;
  sweep(root);
}

void Tape::sweep(Var root) {
  for (std::int32_t i = root.i; i >= 0; --i) {
    if (!has_adj_[i]) continue;
    const Node& n = nodes_[i];
    const Eigen::MatrixXd& g = adj_[i];
    switch (n.op) {
      case Op::kInput:
      case Op::kConst:
        break;
      case Op::kAdd:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::kSub:
        accumulate(n.a, g);
        accumulate(n.b, -g);
        break;
      case Op::kNeg:
        accumulate(n.a, -g);
        break;
      case Op::kScale:
        accumulate(n.a, n.aux(0, 0) * g);
        break;
      case Op::kMul:
        accumulate(n.a, g.cwiseProduct(nodes_[n.b].value));
        accumulate(n.b, g.cwiseProduct(nodes_[n.a].value));
        break;
      case Op::kDiv: {
        const Eigen::MatrixXd& bv = nodes_[n.b].value;
        accumulate(n.a, g.cwiseQuotient(bv));
        accumulate(n.b, -(g.cwiseProduct(n.value).cwiseQuotient(bv)));
        break;
      }
      case Op::kMatMul:
        accumulate(n.a, g * nodes_[n.b].value.transpose());
        accumulate(n.b, nodes_[n.a].value.transpose() * g);
        break;
      case Op::kTranspose:
        accumulate(n.a, g.transpose());
        break;
      case Op::kTanh:
        accumulate(n.a, g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
        break;
      case Op::kSin:
        accumulate(n.a, g.cwiseProduct(nodes_[n.a].value.array().cos().matrix()));
        break;
      case Op::kCos:
        accumulate(n.a, -g.cwiseProduct(nodes_[n.a].value.array().sin().matrix()));
        break;
      case Op::kAcos:
        accumulate(n.a,
                   g.cwiseProduct((-1.0 / (1.0 - n.aux.array().square()).sqrt()).matrix()));
        break;
      case Op::kAbs:
        accumulate(n.a, g.cwiseProduct(nodes_[n.a].value.array().sign().matrix()));
        break;
      case Op::kSign:
        break;  // derivative zero almost everywhere
      case Op::kSqrtGuard: {
        Eigen::ArrayXXd d = (n.value.array() > 1e-150).select(0.5 / n.value.array(), 0.0);
        accumulate(n.a, g.cwiseProduct(d.matrix()));
        break;
      }
      case Op::kClamp01: {
        const auto& x = nodes_[n.a].value.array();
        Eigen::ArrayXXd d = ((x > 0.0) && (x < 1.0)).cast<double>();
        accumulate(n.a, g.cwiseProduct(d.matrix()));
        break;
      }
      case Op::kDiagScale: {
        const Eigen::MatrixXd& A = nodes_[n.a].value;
        const Eigen::MatrixXd& d = nodes_[n.b].value;
        accumulate(n.a, (g.array().colwise() * d.col(0).array()).matrix());
        accumulate(n.b, g.cwiseProduct(A).rowwise().sum());
        break;
      }
      case Op::kScaleVar: {
        const double s = nodes_[n.a].value(0, 0);
        accumulate(n.a, Eigen::MatrixXd::Constant(1, 1, g.cwiseProduct(nodes_[n.b].value).sum()));
        accumulate(n.b, s * g);
        break;
      }
      case Op::kDot: {
        const double gs = g(0, 0);
        accumulate(n.a, gs * nodes_[n.b].value);
        accumulate(n.b, gs * nodes_[n.a].value);
        break;
      }
      case Op::kTrace:
        accumulate(n.a, g(0, 0) * Eigen::MatrixXd::Identity(nodes_[n.a].value.rows(),
                                                            nodes_[n.a].value.cols()));
        break;
      case Op::kSolve: {
        // Y = A^{-1} B: dB = A^{-T} G, dA = -dB Y^T (adjoint of the solve)
        const Eigen::MatrixXd dB = n.aux.transpose() * g;
        accumulate(n.b, dB);
        accumulate(n.a, -(dB * n.value.transpose()));
        break;
      }
      case Op::kBlock: {
        Eigen::MatrixXd ga = Eigen::MatrixXd::Zero(nodes_[n.a].value.rows(),
                                                   nodes_[n.a].value.cols());
        ga.block(n.i0, n.i1, n.i2, n.i3) = g;
        accumulate(n.a, ga);
        break;
      }
      case Op::kVStack:
        accumulate(n.a, g.topRows(n.i0));
        accumulate(n.b, g.bottomRows(g.rows() - n.i0));
        break;
      case Op::kSkew3: {
        Eigen::Vector3d gw(g(2, 1) - g(1, 2), g(0, 2) - g(2, 0), g(1, 0) - g(0, 1));
        accumulate(n.a, gw);
        break;
      }
      case Op::kVeeAntisym3: {
        Eigen::Matrix3d ga = Eigen::Matrix3d::Zero();
        ga(2, 1) += g(0, 0);
        ga(1, 2) -= g(0, 0);
        ga(0, 2) += g(1, 0);
        ga(2, 0) -= g(1, 0);
        ga(1, 0) += g(2, 0);
        ga(0, 1) -= g(2, 0);
        accumulate(n.a, ga);
        break;
      }
    }
  }
}

Eigen::MatrixXd Tape::grad(Var v) const {
  if (static_cast<std::size_t>(v.i) < has_adj_.size() && has_adj_[v.i]) return adj_[v.i];
  return Eigen::MatrixXd::Zero(value(v).rows(), value(v).cols());
}

Eigen::MatrixXd Tape::jacobian(Var output, Var input) {
  const Eigen::MatrixXd& y = value(output);
  const Eigen::MatrixXd& x = value(input);
  if (y.cols() != 1 || x.cols() != 1) fail(Errc::ShapeMismatch, "jacobian: vector nodes only");
  Eigen::MatrixXd J(y.rows(), x.rows());
  for (int r = 0; r < y.rows(); ++r) {
    Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(y.rows(), 1);
    seed(r, 0) = 1.0;
    backward_seeded(output, seed);
    J.row(r) = grad(input).col(0).transpose();
  }
  return J;
}

void Tape::clear() { used_ = 0; }

}  // namespace msvf::ad
