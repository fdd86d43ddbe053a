#pragma once

#include "msvf/flow.hpp"
#include "msvf/manifold.hpp"

namespace msvf {

/// The composed stable vector field: a piecewise chart diffeomorphism around
/// `target`, contracting latent dynamics, and the pullback J_f^{-1} followed
/// by a frame change to the body frame (adjoint for Lie groups, parallel
/// transport for S2).
///
/// The latent dynamics contract toward the image of the chart center,
/// y_H = f(0), which makes eval_field(target) exactly zero for any
/// parameters and keeps the sink pinned at `target` under retargeting.
struct MsvfModel {
  Manifold manifold;
  FlowModel flow;
  GroupElement target;
  double gain = 1.0;  // latent contraction rate

  static MsvfModel make(FlowModel flow, GroupElement target, double gain = 1.0);

  Chart chart() const { return Chart::of(manifold); }
  /// Latent sink coordinates y_H = flow_forward(0), cached at construction
  /// (treat models as immutable; rebuild via make() after changing the flow).
  const Eigen::VectorXd& latent_sink() const { return latent_sink_; }

 private:
  Eigen::VectorXd latent_sink_;
};

/// Convenience: a model with a freshly initialized flow field around `target`.
MsvfModel random_model(const Manifold& m, const GroupElement& target,
                       const std::vector<int>& hidden, int steps, std::mt19937_64& rng,
                       double gain = 1.0, double output_scale = 0.1);

/// The piecewise diffeomorphism: exp/flow/log around the target inside the
/// first cover, identity on the cut-locus remainder. Total on the manifold.
GroupElement phi(const MsvfModel& m, const GroupElement& x);

/// Latent velocity at latent chart coordinates: -gain * (y - y_H).
Eigen::VectorXd latent_dynamics(const MsvfModel& m, const Eigen::VectorXd& y);

/// One evaluation of the field, exposing the intermediate latent point so
/// rollouts get the Lyapunov potential for free.
struct FieldEval {
  Eigen::VectorXd body;    // body-frame velocity coordinates at x
  Eigen::VectorXd latent;  // y = f(xhat); empty on the cut-locus branch
  bool on_cut_locus = false;
  double potential = 0.0;  // 0.5 |y - y_H|^2, sup convention at the cut locus
};

FieldEval eval_field_full(const MsvfModel& m, const GroupElement& x);

/// ẋ in the body frame at x; zero on the cut locus / outside the workspace box.
TangentVector eval_field(const MsvfModel& m, const GroupElement& x);

/// Model with the sink rigidly moved to a new target.
MsvfModel set_target(const MsvfModel& m, const GroupElement& new_target);

/// Lyapunov potential 0.5 |f(xhat) - y_H|^2; 0.5 pi^2 at the cut locus.
double potential(const MsvfModel& m, const GroupElement& x);

}  // namespace msvf
