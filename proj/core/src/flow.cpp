#include "msvf/flow.hpp"

#include <cmath>
#include <numbers>

namespace msvf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxHalvings = 20;

void check_chart_input(const Chart& chart, const Eigen::VectorXd& x, const char* who) {
  if (x.size() != chart.manifold.dim()) fail(Errc::ShapeMismatch, "chart coordinate size");
  if (!chart.contains_closed(x)) {
    fail(Errc::OutsideChart, std::string(who) + ": coordinates outside the closed chart");
  }
}

}  // namespace

FlowModel FlowModel::make(const Manifold& m, ad::MlpParams psi, int steps) {
  if (psi.spec.input != m.dim() || psi.spec.output != m.dim()) {
    fail(Errc::ShapeMismatch, "flow field must map the algebra to itself");
  }
  if (steps < 1) fail(Errc::InvalidConfig, "flow steps must be >= 1");
  FlowModel f;
  f.manifold = m;
  f.psi = std::move(psi);
  f.steps = steps;
  return f;
}

double alpha(const Chart& chart, const Eigen::VectorXd& x) {
  check_chart_input(chart, x, "alpha");
  const int rd = chart.manifold.rot_dim();
  const double r = x.head(rd).norm();
  double a = std::clamp((kPi - r) / kPi, 0.0, 1.0);
  for (int i = 0; i < chart.manifold.pos_dim(); ++i) {
    a *= std::clamp(1.0 - std::abs(x(rd + i)) / chart.box(i), 0.0, 1.0);
  }
  return a;
}

Eigen::VectorXd alpha_grad(const Chart& chart, const Eigen::VectorXd& x) {
  check_chart_input(chart, x, "alpha_grad");
  const int rd = chart.manifold.rot_dim();
  const int pd = chart.manifold.pos_dim();
  const double r = x.head(rd).norm();
  const double a_ori = std::clamp((kPi - r) / kPi, 0.0, 1.0);

  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd c(pd);
  double a_pos = 1.0;
  for (int i = 0; i < pd; ++i) {
    c(i) = std::clamp(1.0 - std::abs(x(rd + i)) / chart.box(i), 0.0, 1.0);
    a_pos *= c(i);
  }

  if (r > 1e-12 && r < kPi) {
    g.head(rd) = (-a_pos / (kPi * r)) * x.head(rd);
  }
  for (int i = 0; i < pd; ++i) {
    const double raw = 1.0 - std::abs(x(rd + i)) / chart.box(i);
    if (raw <= 0.0 || raw >= 1.0) continue;  // clamped or at the center kink
    double others = 1.0;
    for (int j = 0; j < pd; ++j) {
      if (j != i) others *= c(j);
    }
    const double sgn = x(rd + i) > 0 ? 1.0 : (x(rd + i) < 0 ? -1.0 : 0.0);
    g(rd + i) = a_ori * others * (-sgn / chart.box(i));
  }
  return g;
}

FlowResult flow_run(const FlowModel& f, const Eigen::VectorXd& x, bool with_jacobian) {
  const Chart chart = Chart::of(f.manifold);
  if (!chart.contains_open(x)) {
    fail(Errc::OutsideChart, "flow input is not strictly inside the chart");
  }
  const int d = f.manifold.dim();
  const double dt = 1.0 / f.steps;

  FlowResult out;
  Eigen::VectorXd z = x;
  Eigen::MatrixXd J;
  if (with_jacobian) J = Eigen::MatrixXd::Identity(d, d);

  Eigen::VectorXd psi;
  Eigen::MatrixXd dpsi;
  for (int k = 0; k < f.steps; ++k) {
    if (with_jacobian) {
      ad::mlp_forward_jacobian(f.psi, z, &psi, &dpsi);
    } else {
      psi = ad::mlp_forward(f.psi, z);
    }
    const double a = alpha(chart, z);
    const Eigen::VectorXd h = a * psi;

    double step = dt;
    Eigen::VectorXd cand = z + step * h;
    for (int m = 0; m < kMaxHalvings && !chart.contains_open(cand); ++m) {
      step *= 0.5;
      cand = z + step * h;
    }
    if (!chart.contains_open(cand)) {
      step = 0.0;
      cand = z;
    }

    if (with_jacobian) {
      const Eigen::VectorXd ga = alpha_grad(chart, z);
      const Eigen::MatrixXd Jh = psi * ga.transpose() + a * dpsi;
      J = (Eigen::MatrixXd::Identity(d, d) + step * Jh) * J;
    }
    z = cand;
  }
  out.y = z;
  if (with_jacobian) out.jacobian = J;
  return out;
}

Eigen::VectorXd flow_forward(const FlowModel& f, const Eigen::VectorXd& x) {
  return flow_run(f, x, false).y;
}

Eigen::MatrixXd flow_jacobian(const FlowModel& f, const Eigen::VectorXd& x) {
  Eigen::MatrixXd J = flow_run(f, x, true).jacobian;
  if (std::abs(J.partialPivLu().determinant()) < 1e-12) {
    fail(Errc::SingularJacobian, "flow Jacobian determinant below 1e-12; increase steps");
  }
  return J;
}

Eigen::VectorXd flow_inverse(const FlowModel& f, const Eigen::VectorXd& y) {
  const Chart chart = Chart::of(f.manifold);
  if (!chart.contains_open(y)) {
    fail(Errc::OutsideChart, "flow_inverse target is not strictly inside the chart");
  }
  Eigen::VectorXd x = y;
  for (int it = 0; it < 50; ++it) {
    const FlowResult r = flow_run(f, x, true);
    const Eigen::VectorXd res = r.y - y;
    if (res.norm() < 1e-9) return x;
    Eigen::VectorXd dx = r.jacobian.partialPivLu().solve(res);
    Eigen::VectorXd cand = x - dx;
    for (int m = 0; m < 30 && !chart.contains_open(cand); ++m) {
      dx *= 0.5;
      cand = x - dx;
    }
    if (chart.contains_open(cand)) x = cand;
  }
  fail(Errc::NoConvergence, "flow_inverse: Newton did not reach 1e-9 in 50 iterations");
}

ad::Var alpha_tape(ad::Tape& t, const Chart& chart, ad::Var z) {
  const int rd = chart.manifold.rot_dim();
  const int pd = chart.manifold.pos_dim();
  ad::Var zr = t.block(z, 0, 0, rd, 1);
  ad::Var r = t.sqrt_guarded(t.dot(zr, zr));
  ad::Var a = t.clamp01(t.scale(t.sub(t.scalar(kPi), r), 1.0 / kPi));
  for (int i = 0; i < pd; ++i) {
    ad::Var pi_ = t.block(z, rd + i, 0, 1, 1);
    ad::Var ci = t.clamp01(t.sub(t.scalar(1.0), t.scale(t.abs(pi_), 1.0 / chart.box(i))));
    a = t.mul(a, ci);
  }
  return a;
}

namespace {

// gradient of alpha as a tape expression of z (gates decided from values,
// matching alpha_grad exactly)
ad::Var alpha_grad_tape(ad::Tape& t, const Chart& chart, ad::Var z) {
  const int rd = chart.manifold.rot_dim();
  const int pd = chart.manifold.pos_dim();
  const Eigen::VectorXd& zv = t.value(z);

  ad::Var zr = t.block(z, 0, 0, rd, 1);
  ad::Var r = t.sqrt_guarded(t.dot(zr, zr));
  const double rv = t.value(r)(0, 0);

  std::vector<ad::Var> c(pd);
  ad::Var a_pos = t.scalar(1.0);
  for (int i = 0; i < pd; ++i) {
    ad::Var pi_ = t.block(z, rd + i, 0, 1, 1);
    c[i] = t.clamp01(t.sub(t.scalar(1.0), t.scale(t.abs(pi_), 1.0 / chart.box(i))));
    a_pos = t.mul(a_pos, c[i]);
  }

  ad::Var g_rot = t.constant(Eigen::MatrixXd::Zero(rd, 1));
  if (rv > 1e-12 && rv < kPi) {
    ad::Var s = t.mul(t.div(t.scalar(-1.0 / kPi), r), a_pos);
    g_rot = t.scale_var(s, zr);
  }

  ad::Var a_ori = t.clamp01(t.scale(t.sub(t.scalar(kPi), r), 1.0 / kPi));
  ad::Var g = g_rot;
  for (int i = 0; i < pd; ++i) {
    const double raw = 1.0 - std::abs(zv(rd + i)) / chart.box(i);
    ad::Var gi = t.scalar(0.0);
    if (raw > 0.0 && raw < 1.0) {
      ad::Var others = t.scalar(1.0);
      for (int j = 0; j < pd; ++j) {
        if (j != i) others = t.mul(others, c[j]);
      }
      ad::Var pi_ = t.block(z, rd + i, 0, 1, 1);
      gi = t.mul(t.mul(a_ori, others), t.scale(t.sign(pi_), -1.0 / chart.box(i)));
    }
    g = t.vstack(g, gi);
  }
  return g;
}

}  // namespace

std::pair<ad::Var, ad::Var> flow_run_tape(ad::Tape& t, const ad::TapeMlp& mlp,
                                          const FlowModel& f, const Eigen::VectorXd& x,
                                          bool with_jacobian) {
  const Chart chart = Chart::of(f.manifold);
  if (!chart.contains_open(x)) {
    fail(Errc::OutsideChart, "flow input is not strictly inside the chart");
  }
  const int d = f.manifold.dim();
  const double dt = 1.0 / f.steps;

  ad::Var z = t.constant(x);
  ad::Var J{};
  if (with_jacobian) J = t.constant(Eigen::MatrixXd::Identity(d, d));

  for (int k = 0; k < f.steps; ++k) {
    ad::Var psi{}, dpsi{};
    if (with_jacobian) {
      auto [p, dp] = mlp.forward_jacobian(t, z);
      psi = p;
      dpsi = dp;
    } else {
      psi = mlp.forward(t, z);
    }
    ad::Var a = alpha_tape(t, chart, z);
    ad::Var h = t.scale_var(a, psi);

    const Eigen::VectorXd& zv = t.value(z);
    const Eigen::VectorXd& hv = t.value(h);
    double step = dt;
    Eigen::VectorXd cand = zv + step * hv;
    for (int m = 0; m < kMaxHalvings && !chart.contains_open(cand); ++m) {
      step *= 0.5;
      cand = zv + step * hv;
    }
    if (!chart.contains_open(cand)) step = 0.0;

    if (with_jacobian) {
      ad::Var ga = alpha_grad_tape(t, chart, z);
      ad::Var Jh = t.add(t.matmul(psi, t.transpose(ga)), t.scale_var(a, dpsi));
      J = t.add(J, t.scale(t.matmul(Jh, J), step));
    }
    z = t.add(z, t.scale(h, step));
  }
  return {z, J};
}

}  // namespace msvf
