#include "msvf/arm.hpp"

#include <cmath>
#include <numeric>

namespace msvf {

PlanarChain PlanarChain::make(std::vector<double> lengths, double limit_lo, double limit_hi,
                              double workspace_bound) {
  if (lengths.empty()) fail(Errc::InvalidConfig, "chain needs at least one link");
  for (double l : lengths) {
    if (!(l > 0)) fail(Errc::InvalidConfig, "link lengths must be positive");
  }
  if (!(limit_lo < limit_hi)) fail(Errc::InvalidConfig, "joint limits must satisfy lo < hi");
  PlanarChain c;
  c.lengths = std::move(lengths);
  c.limit_lo = limit_lo;
  c.limit_hi = limit_hi;
  c.base = GroupElement::se2(0.0, {0.0, 0.0}, workspace_bound);
  return c;
}

double PlanarChain::reach() const {
  return std::accumulate(lengths.begin(), lengths.end(), 0.0);
}

namespace {

void check_limits(const PlanarChain& chain, const Eigen::VectorXd& q) {
  if (q.size() != chain.n_joints()) fail(Errc::ShapeMismatch, "joint vector size");
  for (int i = 0; i < q.size(); ++i) {
    if (q(i) < chain.limit_lo - 1e-12 || q(i) > chain.limit_hi + 1e-12) {
      fail(Errc::JointLimit, "joint " + std::to_string(i) + " outside limits");
    }
  }
}

}  // namespace

GroupElement fk(const PlanarChain& chain, const Eigen::VectorXd& q) {
  check_limits(chain, q);
  GroupElement x = chain.base;
  const double bound = chain.base.manifold().workspace_bound;
  for (int i = 0; i < q.size(); ++i) {
    x = compose(x, GroupElement::se2(q(i), {0.0, 0.0}, bound));
    x = compose(x, GroupElement::se2(0.0, {chain.lengths[i], 0.0}, bound));
  }
  return x;
}

Eigen::MatrixXd jacobian_fk(const PlanarChain& chain, const Eigen::VectorXd& q) {
  check_limits(chain, q);
  const int n = chain.n_joints();
  const GroupElement ee = fk(chain, q);
  const Eigen::Matrix2d Ret = ee.rotation2().transpose();
  const Eigen::Vector2d p = ee.translation2();

  Eigen::MatrixXd J(3, n);
  GroupElement cur = chain.base;
  const double bound = chain.base.manifold().workspace_bound;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d pi = cur.translation2();  // joint i position
    const Eigen::Vector2d r = p - pi;
    // unit joint rate: angular 1, linear rot90(r), expressed in the body frame
    const Eigen::Vector2d lin = Ret * Eigen::Vector2d(-r(1), r(0));
    J(0, i) = 1.0;
    J(1, i) = lin(0);
    J(2, i) = lin(1);
    cur = compose(cur, GroupElement::se2(q(i), {0.0, 0.0}, bound));
    cur = compose(cur, GroupElement::se2(0.0, {chain.lengths[i], 0.0}, bound));
  }
  return J;
}

Eigen::VectorXd osc_step(const PlanarChain& chain, const Eigen::VectorXd& q, const MsvfModel& m,
                         const ControlConfig& config) {
  if (m.manifold.kind != ManifoldKind::SE2) fail(Errc::KindMismatch, "osc_step needs an SE2 field");
  const GroupElement x = fk(chain, q);
  const Eigen::VectorXd v = eval_field(m, x).coords;
  const Eigen::MatrixXd J = jacobian_fk(chain, q);
  const double mu2 = config.damping * config.damping;
  const Eigen::MatrixXd JJt =
      J * J.transpose() + mu2 * Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd qdot = J.transpose() * JJt.ldlt().solve(v);
  Eigen::VectorXd qn = q + qdot / config.control_rate;
  for (int i = 0; i < qn.size(); ++i) qn(i) = std::clamp(qn(i), chain.limit_lo, chain.limit_hi);
  return qn;
}

const char* outcome_name(EpisodeOutcome o) {
  switch (o) {
    case EpisodeOutcome::ReachedGoal: return "reached_goal";
    case EpisodeOutcome::Timeout: return "timeout";
    case EpisodeOutcome::JointLimitStall: return "joint_limit_stall";
  }
  return "?";
}

Episode run_episode(const PlanarChain& chain, const Eigen::VectorXd& q0, const MsvfModel& m,
                    const ControlConfig& config) {
  Episode ep;
  Eigen::VectorXd q = q0;
  ep.joints.push_back(q);
  ep.poses.push_back(fk(chain, q));
  int stalled = 0;
  for (int k = 0; k < config.max_steps; ++k) {
    if (geodesic_distance(ep.poses.back(), m.target) < config.eps_goal) {
      ep.outcome = EpisodeOutcome::ReachedGoal;
      return ep;
    }
    const Eigen::VectorXd qn = osc_step(chain, q, m, config);
    const double moved = (qn - q).norm() * config.control_rate;
    q = qn;
    ep.joints.push_back(q);
    ep.poses.push_back(fk(chain, q));
    stalled = moved < 1e-8 ? stalled + 1 : 0;
    if (stalled >= 10) {
      ep.outcome = EpisodeOutcome::JointLimitStall;
      return ep;
    }
  }
  if (geodesic_distance(ep.poses.back(), m.target) < config.eps_goal) {
    ep.outcome = EpisodeOutcome::ReachedGoal;
  }
  return ep;
}

Eigen::VectorXd random_joints(const PlanarChain& chain, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(chain.limit_lo, chain.limit_hi);
  Eigen::VectorXd q(chain.n_joints());
  for (int i = 0; i < q.size(); ++i) q(i) = u(rng);
  return q;
}

}  // namespace msvf
