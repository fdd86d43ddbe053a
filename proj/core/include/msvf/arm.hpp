#pragma once

#include <vector>

#include "msvf/field.hpp"
#include "msvf/rollout.hpp"

namespace msvf {

/// A planar serial chain of revolute joints driven in velocity mode.
struct PlanarChain {
  std::vector<double> lengths;  // meters, one per link
  double limit_lo = -2.8;       // shared joint limits, radians
  double limit_hi = 2.8;
  GroupElement base;            // SE2 base pose

  static PlanarChain make(std::vector<double> lengths, double limit_lo, double limit_hi,
                          double workspace_bound);
  int n_joints() const { return static_cast<int>(lengths.size()); }
  double reach() const;
};

struct ControlConfig {
  double control_rate = 100.0;  // Hz
  double damping = 0.01;        // mu of the damped pseudoinverse
  double eps_goal = 0.05;
  int max_steps = 2000;
};

/// End-effector pose. Throws JointLimit when q violates the limits.
GroupElement fk(const PlanarChain& chain, const Eigen::VectorXd& q);

/// Body-frame geometric Jacobian (3 x n, rows in [theta, x, y] twist order).
Eigen::MatrixXd jacobian_fk(const PlanarChain& chain, const Eigen::VectorXd& q);

/// One velocity-control step: field twist at fk(q), damped pseudoinverse to
/// joint rates, clamped integration at the control rate.
Eigen::VectorXd osc_step(const PlanarChain& chain, const Eigen::VectorXd& q, const MsvfModel& m,
                         const ControlConfig& config);

enum class EpisodeOutcome { ReachedGoal, Timeout, JointLimitStall };
const char* outcome_name(EpisodeOutcome o);

struct Episode {
  std::vector<Eigen::VectorXd> joints;
  std::vector<GroupElement> poses;
  EpisodeOutcome outcome = EpisodeOutcome::Timeout;
};

Episode run_episode(const PlanarChain& chain, const Eigen::VectorXd& q0, const MsvfModel& m,
                    const ControlConfig& config);

/// Uniform random joint vector within limits.
Eigen::VectorXd random_joints(const PlanarChain& chain, std::mt19937_64& rng);

}  // namespace msvf
