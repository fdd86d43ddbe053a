#include <doctest.h>

#include <numbers>

#include "msvf/lie_tape.hpp"
#include "msvf/mlp.hpp"
#include "msvf/tape.hpp"
#include "test_oracles.hpp"

using namespace msvf;
using namespace msvf::ad;

namespace {

/// Relative agreement between a reverse-mode gradient and central differences.
void gradcheck(const std::function<Var(Tape&, Var)>& build, const Eigen::VectorXd& x,
               double tol = 1e-6) {
  Tape t;
  Var in = t.input(x);
  Var out = build(t, in);
  REQUIRE(t.value(out).size() == 1);
  t.backward(out);
  const Eigen::VectorXd g = t.grad(in);

  auto f = [&](const Eigen::VectorXd& xx) {
    Tape tt;
    Var i2 = tt.input(xx);
    return tt.value(build(tt, i2))(0, 0);
  };
  const Eigen::VectorXd fd = oracles::fd_gradient(f, x);
  const double scale = std::max(1.0, fd.norm());
  CHECK((g - fd).norm() / scale < tol);
}

Eigen::VectorXd randvec(int n, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> g(0, 1);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = s * g(rng);
  return v;
}

}  // namespace

TEST_CASE("primitive gradients match finite differences") {
  std::mt19937_64 rng(2);
  const Eigen::VectorXd x = randvec(5, rng);
  const Eigen::VectorXd y = randvec(5, rng);

  gradcheck([&](Tape& t, Var v) { return t.dot(t.add(v, t.constant(y)), v); }, x);
  gradcheck([&](Tape& t, Var v) { return t.dot(t.sub(v, t.constant(y)), v); }, x);
  gradcheck([&](Tape& t, Var v) { return t.dot(t.mul(v, t.constant(y)), v); }, x);
  gradcheck([&](Tape& t, Var v) {
    return t.dot(t.div(v, t.constant((y.array().abs() + 1.0).matrix())), v);
  }, x);
  gradcheck([&](Tape& t, Var v) { return t.dot(t.tanh(v), t.constant(y)); }, x);
  gradcheck([&](Tape& t, Var v) { return t.dot(t.sin(v), t.constant(y)); }, x);
  gradcheck([&](Tape& t, Var v) { return t.dot(t.cos(v), t.constant(y)); }, x);
  gradcheck([&](Tape& t, Var v) { return t.dot(t.abs(v), t.constant(y)); }, x, 1e-5);
  gradcheck([&](Tape& t, Var v) { return t.sqrt_guarded(t.dot(v, v)); }, x);
  gradcheck([&](Tape& t, Var v) { return t.trace(t.matmul(v, t.transpose(v))); }, x);
  gradcheck([&](Tape& t, Var v) { return t.neg(t.scale(t.dot(v, v), 0.7)); }, x);

  // diag_scale and scale_var
  gradcheck([&](Tape& t, Var v) {
    Var d = t.tanh(v);
    Var M = t.matmul(v, t.transpose(v));
    return t.trace(t.diag_scale(M, d));
  }, x);
  gradcheck([&](Tape& t, Var v) {
    Var s = t.dot(v, v);
    return t.trace(t.scale_var(s, t.matmul(v, t.transpose(v))));
  }, x);

  // clamp01 away from the kinks
  Eigen::VectorXd inside = (0.2 * x.array().tanh() + 0.5).matrix();
  gradcheck([&](Tape& t, Var v) { return t.dot(t.clamp01(v), t.constant(y)); }, inside);

  // solve: gradients through both the matrix and the right-hand side
  std::mt19937_64 rng2(3);
  Eigen::VectorXd a12 = randvec(12, rng2, 0.3);
  gradcheck([&](Tape& t, Var v) {
    Var r0 = t.transpose(t.block(v, 0, 0, 3, 1));
    Var r1 = t.transpose(t.block(v, 3, 0, 3, 1));
    Var r2 = t.transpose(t.block(v, 6, 0, 3, 1));
    Var M = t.add(t.constant(3.0 * Eigen::MatrixXd::Identity(3, 3)),
                  t.vstack(r0, t.vstack(r1, r2)));
    Var b = t.block(v, 9, 0, 3, 1);
    Var s = t.solve(M, b);
    return t.dot(s, s);
  }, a12, 1e-5);

  // skew3 / vee
  const Eigen::VectorXd w3 = randvec(3, rng);
  gradcheck([&](Tape& t, Var v) {
    Var W3 = t.skew3(v);
    return t.dot(t.vee_antisym3(W3), t.constant(Eigen::Vector3d(0.3, -0.2, 0.9)));
  }, w3);
}

TEST_CASE("solve raises SingularJacobian below the determinant floor") {
  Tape t;
  Var A = t.constant(Eigen::MatrixXd::Zero(2, 2));
  Var b = t.constant(Eigen::VectorXd::Ones(2));
  CHECK_THROWS_AS(t.solve(A, b), Error);
  try {
    t.solve(A, b);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SingularJacobian);
  }
}

TEST_CASE("gradient of theta^T theta is 2 theta; constants get zero gradient") {
  std::mt19937_64 rng(4);
  const Eigen::VectorXd th = randvec(20, rng);
  Tape t;
  Var v = t.input(th);
  Var unused = t.input(randvec(7, rng));
  Var loss = t.dot(v, v);
  t.backward(loss);
  CHECK((t.grad(v) - 2 * th).norm() < 1e-14);
  CHECK(t.grad(unused).norm() == 0.0);  // no dependence, zero vector
}

TEST_CASE("backward requires a scalar root") {
  Tape t;
  Var v = t.input(Eigen::VectorXd::Ones(3));
  CHECK_THROWS_AS(t.backward(v), Error);
  try {
    t.backward(v);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::GraphNotScalar);
  }
}

TEST_CASE("jacobian of identity and linear maps is exact") {
  std::mt19937_64 rng(6);
  Tape t;
  const Eigen::VectorXd x = randvec(4, rng);
  Var in = t.input(x);
  CHECK((t.jacobian(in, in) - Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);

  Eigen::MatrixXd W(3, 4);
  std::normal_distribution<double> g(0, 1);
  for (int i = 0; i < W.size(); ++i) W.data()[i] = g(rng);
  Var out = t.matmul(t.constant(W), in);
  CHECK((t.jacobian(out, in) - W).norm() == 0.0);
}

TEST_CASE("jacobian of a smooth net matches finite differences") {
  std::mt19937_64 rng(7);
  MlpSpec spec{3, 2, {12}};
  const MlpParams p = MlpParams::init(spec, rng);
  const Eigen::VectorXd x = randvec(3, rng);
  Tape t;
  const TapeMlp mlp = TapeMlp::make(t, p);
  Var in = t.input(x);
  Var out = mlp.forward(t, in);
  const Eigen::MatrixXd J = t.jacobian(out, in);
  const Eigen::MatrixXd Jfd =
      oracles::fd_jacobian([&](const Eigen::VectorXd& z) { return mlp_forward(p, z); }, x);
  CHECK((J - Jfd).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("mlp: zero params give zero output; single layer is affine") {
  MlpSpec spec{3, 2, {}};
  MlpParams p = MlpParams::zeros(spec);
  CHECK(mlp_forward(p, Eigen::Vector3d(1, -2, 3)).norm() == 0.0);
  CHECK(p.theta.size() == (3 + 1) * 2);

  std::mt19937_64 rng(8);
  p.theta = randvec(static_cast<int>(p.theta.size()), rng);
  const Eigen::VectorXd x = randvec(3, rng);
  const Eigen::MatrixXd W = p.weight(0);
  const Eigen::VectorXd b = p.bias(0);
  CHECK((mlp_forward(p, x) - (W * x + b)).norm() < 1e-15);

  CHECK_THROWS_AS(mlp_forward(p, Eigen::VectorXd::Ones(5)), Error);
}

TEST_CASE("mlp analytic input jacobian matches finite differences") {
  std::mt19937_64 rng(10);
  MlpSpec spec{2, 2, {16, 16}};
  const MlpParams p = MlpParams::init(spec, rng);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = randvec(2, rng);
    Eigen::VectorXd y;
    Eigen::MatrixXd J;
    mlp_forward_jacobian(p, x, &y, &J);
    CHECK((y - mlp_forward(p, x)).norm() == 0.0);
    const Eigen::MatrixXd Jfd =
        oracles::fd_jacobian([&](const Eigen::VectorXd& z) { return mlp_forward(p, z); }, x);
    CHECK((J - Jfd).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("mlp is Lipschitz with the spectral-norm product as the constant") {
  std::mt19937_64 rng(12);
  MlpSpec spec{2, 2, {16, 16}};
  const MlpParams p = MlpParams::init(spec, rng);
  // power-iteration bound per layer (tanh derivative is at most 1)
  double lip = 1.0;
  for (int l = 0; l < spec.n_layers(); ++l) {
    const Eigen::MatrixXd W = p.weight(l);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(W.cols()).normalized();
    for (int it = 0; it < 200; ++it) v = (W.transpose() * (W * v)).normalized();
    lip *= (W * v).norm();
  }
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd a = randvec(2, rng, 2.0);
    const Eigen::VectorXd b = randvec(2, rng, 2.0);
    const double lhs = (mlp_forward(p, a) - mlp_forward(p, b)).norm();
    CHECK(lhs <= lip * (a - b).norm() * (1 + 1e-9) + 1e-12);
  }
}

TEST_CASE("tape mlp agrees with the double path and its parameter gradient checks out") {
  std::mt19937_64 rng(14);
  MlpSpec spec{2, 2, {12, 12}};  // ~220 parameters
  const MlpParams p = MlpParams::init(spec, rng);
  CHECK(p.theta.size() == (2 + 1) * 12 + (12 + 1) * 12 + (12 + 1) * 2);
  const Eigen::VectorXd x = randvec(2, rng);

  Tape t;
  const TapeMlp mlp = TapeMlp::make(t, p);
  auto [y, J] = mlp.forward_jacobian(t, t.constant(x));
  CHECK((t.value(y) - mlp_forward(p, x)).norm() < 1e-14);
  Eigen::MatrixXd Jref;
  mlp_forward_jacobian(p, x, nullptr, &Jref);
  CHECK((t.value(J) - Jref).cwiseAbs().maxCoeff() < 1e-13);

  // gradient of a scalar built from both the value and the jacobian
  Var loss = t.add(t.dot(y, y), t.trace(t.matmul(J, t.transpose(J))));
  t.backward(loss);
  const Eigen::VectorXd g = mlp.collect_grad(t);

  auto scalar = [&](const Eigen::VectorXd& theta) {
    MlpParams q = p;
    q.theta = theta;
    Eigen::VectorXd yy;
    Eigen::MatrixXd JJ;
    mlp_forward_jacobian(q, x, &yy, &JJ);
    return yy.squaredNorm() + (JJ * JJ.transpose()).trace();
  };
  const Eigen::VectorXd fd = oracles::fd_gradient(scalar, p.theta);
  CHECK((g - fd).norm() / std::max(1.0, fd.norm()) < 1e-6);
}

TEST_CASE("gradients are bit-identical across repeated passes") {
  std::mt19937_64 rng(16);
  MlpSpec spec{3, 3, {16, 16}};
  const MlpParams p = MlpParams::init(spec, rng);
  const Eigen::VectorXd x = randvec(3, rng);

  auto run = [&]() {
    Tape t;
    const TapeMlp mlp = TapeMlp::make(t, p);
    auto [y, J] = mlp.forward_jacobian(t, t.constant(x));
    Var loss = t.add(t.dot(y, y), t.trace(J));
    t.backward(loss);
    return mlp.collect_grad(t);
  };
  const Eigen::VectorXd g1 = run(), g2 = run();
  CHECK((g1 - g2).norm() == 0.0);
}

TEST_CASE("taped exp/log maps match values and finite differences away from the cut locus") {
  // SO3 exp
  const Eigen::VectorXd w = Eigen::Vector3d(0.7, -0.4, 1.1);
  const Eigen::Matrix3d seedM = (Eigen::Matrix3d() << 0.3, -0.1, 0.7, 0.2, 0.9, -0.5,
                                 -0.6, 0.4, 0.1).finished();
  gradcheck([&](Tape& t, Var v) {
    Var R = so3_exp_tape(t, v);
    return t.dot(R, t.constant(seedM));
  }, w, 1e-5);
  {
    Tape t;
    Var v = t.input(w);
    Var R = so3_exp_tape(t, v);
    CHECK((t.value(R) - so3_exp(w)).cwiseAbs().maxCoeff() < 1e-12);
  }

  // SO3 log value, and exp-then-log differentiating like the identity
  const Eigen::Matrix3d R0 = so3_exp(Eigen::Vector3d(0.5, 0.2, -0.3));
  {
    Tape t;
    Var R = t.input(R0);
    Var l = so3_log_tape(t, R);
    CHECK((t.value(l).col(0) - so3_log(R0)).norm() < 1e-12);
  }
  gradcheck([&](Tape& t, Var v) {
    Var l = so3_log_tape(t, so3_exp_tape(t, v));
    return t.dot(l, t.constant(Eigen::Vector3d(0.2, 0.5, -1.0)));
  }, w, 1e-5);

  // SE2 exp/log
  const Eigen::VectorXd v2 = Eigen::Vector3d(0.9, 0.4, -1.2);
  gradcheck([&](Tape& t, Var v) {
    Var c = se2_exp_tape(t, v);
    return t.dot(c, t.constant(Eigen::Vector3d(1.0, -0.7, 0.3)));
  }, v2, 1e-5);
  gradcheck([&](Tape& t, Var v) {
    Var l = se2_log_tape(t, se2_exp_tape(t, v));
    return t.dot(l, t.constant(Eigen::Vector3d(0.5, 1.0, -0.25)));
  }, v2, 1e-5);
  {
    Tape t;
    Var c = se2_exp_tape(t, t.input(v2));
    const GroupElement g = exp_map(Manifold::se2(10), v2);
    CHECK((t.value(c).col(0) - g.coords()).norm() < 1e-12);
  }

  // SE3 exp/log
  Eigen::VectorXd v6(6);
  v6 << 0.3, -0.8, 0.5, 0.7, 0.1, -0.4;
  gradcheck([&](Tape& t, Var v) {
    auto [R, tr] = se3_exp_tape(t, v);
    return t.add(t.dot(R, t.constant(seedM)),
                 t.dot(tr, t.constant(Eigen::Vector3d(0.2, -0.9, 0.4))));
  }, v6, 1e-5);
  gradcheck([&](Tape& t, Var v) {
    auto [R, tr] = se3_exp_tape(t, v);
    Var l = se3_log_tape(t, R, tr);
    Eigen::VectorXd seed(6);
    seed << 0.1, 0.2, -0.3, 0.4, -0.5, 0.6;
    return t.dot(l, t.constant(seed));
  }, v6, 1e-5);

  // S2 exp/log around a generic base point
  const GroupElement base = GroupElement::s2(Eigen::Vector3d(0.3, -0.5, 0.8).normalized());
  const Eigen::VectorXd c2 = Eigen::Vector2d(0.8, -0.5);
  gradcheck([&](Tape& t, Var v) {
    Var p = s2_exp_at_tape(t, base, v);
    return t.dot(p, t.constant(Eigen::Vector3d(0.4, 0.1, -0.6)));
  }, c2, 1e-5);
  gradcheck([&](Tape& t, Var v) {
    Var l = s2_log_at_tape(t, base, s2_exp_at_tape(t, base, v));
    return t.dot(l, t.constant(Eigen::Vector2d(1.0, -0.3)));
  }, c2, 1e-5);
  {
    Tape t;
    Var p = s2_exp_at_tape(t, base, t.input(c2));
    CHECK((t.value(p).col(0) - exp_at(base, c2).point()).norm() < 1e-12);
    Var l = s2_log_at_tape(t, base, p);
    CHECK((t.value(l).col(0) - c2).norm() < 1e-9);
  }
}
