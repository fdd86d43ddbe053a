#include "msvf/lie_tape.hpp"

#include <cmath>

namespace msvf::ad {

namespace {

constexpr double kSmallAngle = 1e-4;

Var vec_norm(Tape& t, Var v) { return t.sqrt_guarded(t.dot(v, v)); }

Var eye(Tape& t, int n) { return t.constant(Eigen::MatrixXd::Identity(n, n)); }

// sin(th)/th with a Taylor branch selected from the recorded value
Var sinc_tape(Tape& t, Var th) {
  if (t.value(th)(0, 0) < kSmallAngle) {
    Var th2 = t.mul(th, th);
    return t.sub(t.scalar(1.0), t.scale(th2, 1.0 / 6.0));
  }
  return t.div(t.sin(th), th);
}

// (1 - cos(th))/th^2
Var versine_tape(Tape& t, Var th) {
  if (t.value(th)(0, 0) < kSmallAngle) {
    Var th2 = t.mul(th, th);
    return t.sub(t.scalar(0.5), t.scale(th2, 1.0 / 24.0));
  }
  return t.div(t.sub(t.scalar(1.0), t.cos(th)), t.mul(th, th));
}

// (th - sin(th))/th^3
Var cubic_coeff_tape(Tape& t, Var th) {
  if (t.value(th)(0, 0) < kSmallAngle) {
    Var th2 = t.mul(th, th);
    return t.sub(t.scalar(1.0 / 6.0), t.scale(th2, 1.0 / 120.0));
  }
  return t.div(t.sub(th, t.sin(th)), t.mul(t.mul(th, th), th));
}

}  // namespace

Var so3_exp_tape(Tape& t, Var w) {
  Var th = vec_norm(t, w);
  Var W = t.skew3(w);
  Var W2 = t.matmul(W, W);
  Var R = t.add(eye(t, 3), t.add(t.scale_var(sinc_tape(t, th), W),
                                 t.scale_var(versine_tape(t, th), W2)));
  return R;
}

Var so3_log_tape(Tape& t, Var R) {
  Var v = t.vee_antisym3(R);  // 2 sin(th) * axis
  Var c = t.scale(t.sub(t.trace(R), t.scalar(1.0)), 0.5);
  Var th = t.acos_clamped(c);
  if (t.value(th)(0, 0) < kSmallAngle) {
    Var th2 = t.mul(th, th);
    return t.scale_var(t.add(t.scalar(0.5), t.scale(th2, 1.0 / 12.0)), v);
  }
  Var vn = vec_norm(t, v);  // 2 sin(th)
  return t.scale_var(t.div(th, vn), v);
}

Var se2_exp_tape(Tape& t, Var v) {
  Var th = t.block(v, 0, 0, 1, 1);
  Var rx = t.block(v, 1, 0, 1, 1);
  Var ry = t.block(v, 2, 0, 1, 1);
  Var ath = t.abs(th);
  Var a = sinc_tape(t, ath);                       // sin(th)/th (even)
  Var b = t.mul(versine_tape(t, ath), th);         // (1-cos(th))/th (odd)
  Var tx = t.sub(t.mul(a, rx), t.mul(b, ry));
  Var ty = t.add(t.mul(b, rx), t.mul(a, ry));
  return t.vstack(th, t.vstack(tx, ty));
}

Var se2_log_tape(Tape& t, Var c) {
  Var th = t.block(c, 0, 0, 1, 1);
  Var tx = t.block(c, 1, 0, 1, 1);
  Var ty = t.block(c, 2, 0, 1, 1);
  Var ath = t.abs(th);
  Var a = sinc_tape(t, ath);
  Var b = t.mul(versine_tape(t, ath), th);
  // invert V = [[a, -b], [b, a]]: 1/(a^2+b^2) [[a, b], [-b, a]]
  Var det = t.add(t.mul(a, a), t.mul(b, b));
  Var rx = t.div(t.add(t.mul(a, tx), t.mul(b, ty)), det);
  Var ry = t.div(t.sub(t.mul(a, ty), t.mul(b, tx)), det);
  return t.vstack(th, t.vstack(rx, ry));
}

std::pair<Var, Var> se3_exp_tape(Tape& t, Var v) {
  Var w = t.block(v, 0, 0, 3, 1);
  Var rho = t.block(v, 3, 0, 3, 1);
  Var th = vec_norm(t, w);
  Var W = t.skew3(w);
  Var W2 = t.matmul(W, W);
  Var R = t.add(eye(t, 3), t.add(t.scale_var(sinc_tape(t, th), W),
                                 t.scale_var(versine_tape(t, th), W2)));
  Var V = t.add(eye(t, 3), t.add(t.scale_var(versine_tape(t, th), W),
                                 t.scale_var(cubic_coeff_tape(t, th), W2)));
  return {R, t.matmul(V, rho)};
}

Var se3_log_tape(Tape& t, Var R, Var trans) {
  Var w = so3_log_tape(t, R);
  Var th = vec_norm(t, w);
  Var W = t.skew3(w);
  Var W2 = t.matmul(W, W);
  Var V = t.add(eye(t, 3), t.add(t.scale_var(versine_tape(t, th), W),
                                 t.scale_var(cubic_coeff_tape(t, th), W2)));
  Var rho = t.solve(V, trans);
  return t.vstack(w, rho);
}

Var s2_exp_at_tape(Tape& t, const GroupElement& base, Var v2) {
  auto [b1, b2] = s2_basis(base.point());
  Var e = t.add(t.scale_var(t.block(v2, 0, 0, 1, 1), t.constant(b1)),
                t.scale_var(t.block(v2, 1, 0, 1, 1), t.constant(b2)));
  Var r = vec_norm(t, e);
  Var p = t.add(t.scale_var(t.cos(r), t.constant(base.point())),
                t.scale_var(sinc_tape(t, r), e));
  return p;
}

Var s2_log_at_tape(Tape& t, const GroupElement& base, Var p3) {
  Var bp = t.constant(base.point());
  Var c = t.dot(bp, p3);
  Var th = t.acos_clamped(c);
  Var u = t.sub(p3, t.scale_var(c, bp));
  Var un = vec_norm(t, u);
  Var e = t.scale_var(t.div(th, un), u);
  auto [b1, b2] = s2_basis(base.point());
  return t.vstack(t.dot(t.constant(b1), e), t.dot(t.constant(b2), e));
}

}  // namespace msvf::ad
