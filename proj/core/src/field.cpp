#include "msvf/field.hpp"

#include <cmath>
#include <numbers>

namespace msvf {

namespace {
constexpr double kPi = std::numbers::pi;
}

MsvfModel MsvfModel::make(FlowModel flow, GroupElement target, double gain) {
  if (!(flow.manifold == target.manifold())) {
    fail(Errc::KindMismatch, "flow and target manifolds differ");
  }
  if (!(gain > 0)) fail(Errc::InvalidConfig, "latent gain must be > 0");
  MsvfModel m;
  m.manifold = flow.manifold;
  m.flow = std::move(flow);
  m.target = std::move(target);
  m.gain = gain;
  m.latent_sink_ = flow_forward(m.flow, Eigen::VectorXd::Zero(m.manifold.dim()));
  return m;
}

MsvfModel random_model(const Manifold& m, const GroupElement& target,
                       const std::vector<int>& hidden, int steps, std::mt19937_64& rng,
                       double gain, double output_scale) {
  ad::MlpSpec spec{m.dim(), m.dim(), hidden};
  ad::MlpParams psi = ad::MlpParams::init(spec, rng, output_scale);
  return MsvfModel::make(FlowModel::make(m, std::move(psi), steps), target, gain);
}

namespace {

/// Chart coordinates of x around the target, or nothing when x is on the cut
/// locus / outside the workspace box (the identity / zero-velocity branch).
std::optional<Eigen::VectorXd> chart_coords(const MsvfModel& m, const GroupElement& x) {
  Eigen::VectorXd xhat;
  try {
    xhat = log_at(m.target, x).coords;
  } catch (const Error& e) {
    if (e.code() == Errc::AtCutLocus) return std::nullopt;
    throw;
  }
  if (!m.chart().contains_open(xhat)) return std::nullopt;
  return xhat;
}

}  // namespace

GroupElement phi(const MsvfModel& m, const GroupElement& x) {
  const auto xhat = chart_coords(m, x);
  if (!xhat) return x;
  return exp_at(m.target, flow_forward(m.flow, *xhat));
}

Eigen::VectorXd latent_dynamics(const MsvfModel& m, const Eigen::VectorXd& y) {
  if (y.size() != m.manifold.dim()) fail(Errc::ShapeMismatch, "latent coordinate size");
  return -m.gain * (y - m.latent_sink());
}

FieldEval eval_field_full(const MsvfModel& m, const GroupElement& x) {
  FieldEval out;
  const auto xhat = chart_coords(m, x);
  if (!xhat) {
    out.body = Eigen::VectorXd::Zero(m.manifold.dim());
    out.on_cut_locus = true;
    out.potential = 0.5 * kPi * kPi;
    return out;
  }

  const FlowResult fr = flow_run(m.flow, *xhat, true);
  if (std::abs(fr.jacobian.partialPivLu().determinant()) < 1e-12) {
    fail(Errc::SingularJacobian, "flow Jacobian determinant below 1e-12 in eval_field");
  }
  const Eigen::VectorXd vhat = -m.gain * (fr.y - m.latent_sink());
  const Eigen::VectorXd v0 = fr.jacobian.partialPivLu().solve(vhat);

  if (m.manifold.kind == ManifoldKind::S2) {
    out.body = transport_matrix(m.target, x) * v0;
  } else {
    const GroupElement rel = compose(inverse(m.target), x);
    out.body = adjoint(inverse(rel)) * v0;
  }
  out.latent = fr.y;
  out.potential = 0.5 * (fr.y - m.latent_sink()).squaredNorm();
  return out;
}

TangentVector eval_field(const MsvfModel& m, const GroupElement& x) {
  return TangentVector::body(x, eval_field_full(m, x).body);
}

MsvfModel set_target(const MsvfModel& m, const GroupElement& new_target) {
  if (!(new_target.manifold() == m.manifold)) {
    fail(Errc::KindMismatch, "set_target: new target has a different manifold");
  }
  MsvfModel out = m;
  out.target = new_target;
  return out;
}

double potential(const MsvfModel& m, const GroupElement& x) {
  const auto xhat = chart_coords(m, x);
  if (!xhat) return 0.5 * kPi * kPi;
  return 0.5 * (flow_forward(m.flow, *xhat) - m.latent_sink()).squaredNorm();
}

}  // namespace msvf
