#pragma once

#include <Eigen/Dense>
#include <optional>

#include "msvf/manifold.hpp"
#include "msvf/mlp.hpp"

namespace msvf {

/// A diffeomorphism of the first cover: K forward-Euler steps of the
/// boundary-vanishing field h(z) = alpha(z) * psi(z), horizon fixed at 1.
struct FlowModel {
  Manifold manifold;
  ad::MlpParams psi;  // input dim == output dim == manifold.dim()
  int steps = 16;

  static FlowModel make(const Manifold& m, ad::MlpParams psi, int steps = 16);
  Chart chart() const { return Chart::of(manifold); }
};

/// Boundary-vanishing scaling in [0, 1]: (pi - |x|)/pi on rotational blocks,
/// product of clamp(1 - |p_i|/box_i, 0, 1) on translational blocks, and the
/// product of the two for SE kinds. Throws OutsideChart beyond 1e-9 slack.
double alpha(const Chart& chart, const Eigen::VectorXd& x);

/// Gradient of alpha; subgradient 0 at the measure-zero kinks.
Eigen::VectorXd alpha_grad(const Chart& chart, const Eigen::VectorXd& x);

/// Result of rolling the discrete flow forward from chart coordinates.
struct FlowResult {
  Eigen::VectorXd y;
  Eigen::MatrixXd jacobian;  // empty unless requested
};

/// K guarded Euler steps. Steps that would exit the open chart have their
/// substep halved (up to 20 times) so the output always stays inside; the
/// guard is inactive for moderate fields. When `with_jacobian`, also chains
/// the exact Jacobian of the discrete map: J <- (I + dt_k grad h(z_k)) J.
FlowResult flow_run(const FlowModel& f, const Eigen::VectorXd& x, bool with_jacobian);

Eigen::VectorXd flow_forward(const FlowModel& f, const Eigen::VectorXd& x);

/// Throws SingularJacobian when |det J| < 1e-12.
Eigen::MatrixXd flow_jacobian(const FlowModel& f, const Eigen::VectorXd& x);

/// Newton inversion of the exact discrete map to 1e-9 residual (50 iteration
/// cap, NoConvergence on failure). Roundtrip error is at solver tolerance,
/// not O(1/K).
Eigen::VectorXd flow_inverse(const FlowModel& f, const Eigen::VectorXd& y);

/// Tape-recorded flow for training: returns (y, J) as graph nodes so the loss
/// gradient flows through every Euler step, the scaling, and the Jacobian.
std::pair<ad::Var, ad::Var> flow_run_tape(ad::Tape& t, const ad::TapeMlp& mlp,
                                          const FlowModel& f, const Eigen::VectorXd& x,
                                          bool with_jacobian);

/// alpha recorded on a tape (shared by flow_run_tape and tests).
ad::Var alpha_tape(ad::Tape& t, const Chart& chart, ad::Var z);

}  // namespace msvf
