#include <doctest.h>

#include <complex>
#include <numbers>

#include "msvf/arm.hpp"
#include "test_oracles.hpp"

using namespace msvf;
constexpr double kPi = std::numbers::pi;

namespace {

PlanarChain default_chain(double bound = 3.0) {
  return PlanarChain::make({0.35, 0.3, 0.25, 0.2, 0.15}, -2.8, 2.8, bound);
}

MsvfModel zero_se2_model(const GroupElement& target) {
  const Manifold m = target.manifold();
  ad::MlpSpec spec{3, 3, {8}};
  return MsvfModel::make(FlowModel::make(m, ad::MlpParams::zeros(spec), 16), target, 1.0);
}

ControlConfig default_control() {
  ControlConfig c;
  c.control_rate = 100.0;
  c.damping = 0.01;
  c.eps_goal = 0.05;
  c.max_steps = 2000;
  return c;
}

}  // namespace

TEST_CASE("fk: straight arm, single link, complex-sum oracle") {
  const PlanarChain chain = default_chain();
  const Eigen::VectorXd q0 = Eigen::VectorXd::Zero(5);
  const GroupElement straight = fk(chain, q0);
  CHECK(straight.angle() == doctest::Approx(0.0));
  CHECK(straight.translation2()(0) == doctest::Approx(chain.reach()).epsilon(1e-12));
  CHECK(straight.translation2()(1) == doctest::Approx(0.0));

  const PlanarChain one = PlanarChain::make({0.5}, -3.0, 3.0, 2.0);
  const GroupElement g = fk(one, Eigen::VectorXd::Constant(1, kPi / 2));
  CHECK(g.angle() == doctest::Approx(kPi / 2));
  CHECK(g.translation2()(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.translation2()(1) == doctest::Approx(0.5).epsilon(1e-12));

  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd q = random_joints(chain, rng);
    const GroupElement x = fk(chain, q);
    std::complex<double> p(0, 0);
    double phase = 0;
    for (int k = 0; k < 5; ++k) {
      phase += q(k);
      p += chain.lengths[k] * std::exp(std::complex<double>(0, phase));
    }
    CHECK(x.translation2()(0) == doctest::Approx(p.real()).epsilon(1e-10));
    CHECK(x.translation2()(1) == doctest::Approx(p.imag()).epsilon(1e-10));
    CHECK(x.angle() == doctest::Approx(wrap_angle(phase)).epsilon(1e-10));
  }
}

TEST_CASE("fk enforces joint limits") {
  const PlanarChain chain = default_chain();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(5);
  q(2) = 3.0;
  CHECK_THROWS_AS(fk(chain, q), Error);
  try {
    fk(chain, q);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::JointLimit);
  }
}

TEST_CASE("body jacobian matches finite differences through log_at") {
  const PlanarChain chain = default_chain();
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd q = 0.9 * random_joints(chain, rng);
    const GroupElement x0 = fk(chain, q);
    const Eigen::MatrixXd J = jacobian_fk(chain, q);
    const Eigen::MatrixXd Jfd = oracles::fd_jacobian(
        [&](const Eigen::VectorXd& qq) { return log_at(x0, fk(chain, qq)).coords; }, q, 1e-7);
    CHECK((J - Jfd).cwiseAbs().maxCoeff() < 1e-6);
  }

  // all-zero configuration: the angular row is all ones
  const Eigen::MatrixXd J0 = jacobian_fk(chain, Eigen::VectorXd::Zero(5));
  for (int i = 0; i < 5; ++i) CHECK(J0(0, i) == doctest::Approx(1.0));

  // appending a zero-length distal link adds a pure-rotation column
  PlanarChain longer = chain;
  longer.lengths.push_back(1e-12);
  const Eigen::MatrixXd J1 = jacobian_fk(longer, Eigen::VectorXd::Zero(6));
  CHECK(J1(0, 5) == doctest::Approx(1.0));
  CHECK(std::abs(J1(1, 5)) < 1e-9);
  CHECK(std::abs(J1(2, 5)) < 1e-9);
}

TEST_CASE("osc_step: zero rate at the target, exact tracking with zero damping") {
  const PlanarChain chain = default_chain();
  std::mt19937_64 rng(3);
  const Eigen::VectorXd q = (Eigen::VectorXd(5) << 0.4, 0.5, -0.3, 0.6, 0.2).finished();
  const GroupElement x = fk(chain, q);

  const MsvfModel at_x = zero_se2_model(x);
  ControlConfig cc = default_control();
  const Eigen::VectorXd qn = osc_step(chain, q, at_x, cc);
  CHECK((qn - q).norm() * cc.control_rate < 1e-9);

  // mu = 0 with a full-rank jacobian: J qdot reproduces the field twist
  const GroupElement goal = fk(chain, (Eigen::VectorXd(5) << 0.2, 0.3, 0.1, -0.2, 0.4).finished());
  const MsvfModel m = zero_se2_model(goal);
  cc.damping = 0.0;
  const Eigen::VectorXd qdot = (osc_step(chain, q, m, cc) - q) * cc.control_rate;
  const Eigen::VectorXd v = eval_field(m, x).coords;
  CHECK((jacobian_fk(chain, q) * qdot - v).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("damped rates stay bounded at a stretched-arm singularity") {
  const PlanarChain chain = default_chain();
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(5);  // fully stretched
  const GroupElement goal =
      GroupElement::se2(0.3, {0.4, 0.6}, chain.base.manifold().workspace_bound);
  const MsvfModel m = zero_se2_model(goal);
  ControlConfig cc = default_control();
  const Eigen::VectorXd qdot = (osc_step(chain, q, m, cc) - q) * cc.control_rate;
  const double vnorm = eval_field(m, fk(chain, q)).coords.norm();
  CHECK(qdot.norm() <= vnorm / (2 * cc.damping) + 1e-9);
}

TEST_CASE("run_episode: immediate goal, unreachable target, convergent closed loop") {
  const PlanarChain chain = default_chain();
  ControlConfig cc = default_control();
  const Eigen::VectorXd q0 = (Eigen::VectorXd(5) << 0.3, 0.4, -0.2, 0.3, 0.1).finished();
  const GroupElement here = fk(chain, q0);

  const Episode at_goal = run_episode(chain, q0, zero_se2_model(here), cc);
  CHECK(at_goal.outcome == EpisodeOutcome::ReachedGoal);
  CHECK(at_goal.joints.size() == 1);

  // target far outside the reachable annulus: never a crash
  const GroupElement far =
      GroupElement::se2(0.0, {2.9, 0.0}, chain.base.manifold().workspace_bound);
  const Episode hopeless = run_episode(chain, q0, zero_se2_model(far), cc);
  CHECK(hopeless.outcome != EpisodeOutcome::ReachedGoal);

  // closed loop from random reachable starts with the contraction field
  std::mt19937_64 rng(4);
  const GroupElement goal = fk(chain, (Eigen::VectorXd(5) << 0.5, 0.3, 0.2, -0.3, 0.2).finished());
  const MsvfModel m = zero_se2_model(goal);
  int reached = 0;
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd qs = 0.85 * random_joints(chain, rng);
    const Episode ep = run_episode(chain, qs, m, cc);
    if (ep.outcome == EpisodeOutcome::ReachedGoal) ++reached;
  }
  CHECK(reached == 10);
}

TEST_CASE("task-space potential is nonincreasing while limits stay inactive") {
  const PlanarChain chain = default_chain();
  ControlConfig cc = default_control();
  const GroupElement goal = fk(chain, (Eigen::VectorXd(5) << 0.4, 0.2, 0.3, -0.1, 0.3).finished());
  const MsvfModel m = zero_se2_model(goal);
  const Eigen::VectorXd q0 = (Eigen::VectorXd(5) << -0.5, 0.8, 0.4, 0.5, -0.6).finished();
  const Episode ep = run_episode(chain, q0, m, cc);
  REQUIRE(ep.outcome == EpisodeOutcome::ReachedGoal);
  double prev = potential(m, ep.poses.front());
  for (std::size_t k = 1; k < ep.poses.size(); ++k) {
    const double cur = potential(m, ep.poses[k]);
    CHECK(cur <= prev + 1e-6);
    prev = cur;
  }
}

TEST_CASE("osc_step requires an SE2 field") {
  const PlanarChain chain = default_chain();
  std::mt19937_64 rng(5);
  const GroupElement t = random_element(Manifold::so3(), rng);
  const MsvfModel so3 = random_model(Manifold::so3(), t, {8}, 8, rng);
  CHECK_THROWS_AS(osc_step(chain, Eigen::VectorXd::Zero(5), so3, default_control()), Error);
}

TEST_CASE("chain construction validates its parameters") {
  CHECK_THROWS_AS(PlanarChain::make({}, -1, 1, 2.0), Error);
  CHECK_THROWS_AS(PlanarChain::make({0.5, -0.1}, -1, 1, 2.0), Error);
  CHECK_THROWS_AS(PlanarChain::make({0.5}, 1, -1, 2.0), Error);
}
