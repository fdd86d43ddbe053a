#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "msvf/errors.hpp"

namespace msvf::ad {

/// Handle to a node on a Tape.
struct Var {
  std::int32_t i = -1;
  bool valid() const { return i >= 0; }
};

/// Define-by-run reverse-mode tape over matrix-valued nodes.
///
/// Values are computed eagerly as ops are recorded, so data-dependent control
/// flow (Euler-step guards, Taylor branches) can inspect them. The node list
/// is in topological order by construction; backward() touches each node once
/// in reverse, giving a fixed summation order and bit-reproducible gradients.
class Tape {
 public:
  Var input(const Eigen::MatrixXd& v);     // tracked leaf (parameters)
  Var constant(const Eigen::MatrixXd& v);  // untracked leaf (data)
  Var scalar(double v);                    // 1x1 constant

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double c);       // c * A
  Var mul(Var a, Var b);            // elementwise
  Var div(Var a, Var b);            // elementwise
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var tanh(Var a);
  Var sin(Var a);
  Var cos(Var a);
  Var acos_clamped(Var a);          // input clamped to [-1+1e-12, 1-1e-12]
  Var abs(Var a);                   // subgradient 0 at 0
  Var sign(Var a);                  // derivative 0 almost everywhere
  Var sqrt_guarded(Var a);          // derivative 0 at 0 instead of infinity
  Var clamp01(Var a);               // subgradient 0 at the kinks
  Var diag_scale(Var a, Var d);     // row i of A scaled by d(i); d is a column
  Var scale_var(Var s, Var a);      // 1x1 s times A
  Var dot(Var a, Var b);            // 1x1 from same-shape matrices
  Var trace(Var a);
  Var solve(Var a, Var b);          // A^{-1} B; throws SingularJacobian when |det A| < 1e-12
  Var block(Var a, int r0, int c0, int rows, int cols);
  Var vstack(Var a, Var b);
  Var skew3(Var w);                 // 3-vector -> 3x3
  Var vee_antisym3(Var a);          // (A - A^T) -> 3-vector

  const Eigen::MatrixXd& value(Var v) const { return nodes_[v.i].value; }

  /// Reverse sweep from a scalar (1x1) root; throws GraphNotScalar otherwise.
  void backward(Var root);
  /// Reverse sweep from an arbitrary root with an explicit output adjoint.
  void backward_seeded(Var root, const Eigen::MatrixXd& seed);

  /// Adjoint of a node after backward(); zeros if the root does not depend on it.
  Eigen::MatrixXd grad(Var v) const;

  /// Jacobian of an m-vector node w.r.t. an n-vector input node (m backward sweeps).
  Eigen::MatrixXd jacobian(Var output, Var input);

  /// Rewinds the tape; node and adjoint storage is kept for reuse, so
  /// repeatedly recording a same-shaped graph allocates almost nothing.
  void clear();
  std::size_t size() const { return used_; }
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  enum class Op : std::uint8_t {
    kInput, kConst, kAdd, kSub, kNeg, kScale, kMul, kDiv, kMatMul, kTranspose,
    kTanh, kSin, kCos, kAcos, kAbs, kSign, kSqrtGuard, kClamp01, kDiagScale,
    kScaleVar, kDot, kTrace, kSolve, kBlock, kVStack, kSkew3, kVeeAntisym3,
  };

  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd aux;  // kSolve: cached inverse of A; kScale: the constant
    std::int32_t a = -1, b = -1;
    std::int32_t i0 = 0, i1 = 0, i2 = 0, i3 = 0;  // kBlock geometry
    Op op = Op::kConst;
  };

  Node& next_node(Op op, std::int32_t a, std::int32_t b);
  Var current() const;
  void accumulate(std::int32_t idx, const Eigen::MatrixXd& g);
  void sweep(Var root);

  std::vector<Node> nodes_;
  std::size_t used_ = 0;
  std::vector<Eigen::MatrixXd> adj_;
  std::vector<std::uint8_t> has_adj_;
};

}  // namespace msvf::ad
