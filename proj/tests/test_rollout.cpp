#include <doctest.h>

#include <numbers>
#include <sstream>

#include "msvf/rollout.hpp"
#include "msvf/train.hpp"
#include "test_oracles.hpp"

using namespace msvf;
constexpr double kPi = std::numbers::pi;

namespace {

MsvfModel zero_model(const Manifold& m, const GroupElement& target) {
  ad::MlpSpec spec{m.dim(), m.dim(), {8}};
  return MsvfModel::make(FlowModel::make(m, ad::MlpParams::zeros(spec), 16), target, 1.0);
}

MsvfModel seeded_model(const Manifold& m, std::uint64_t seed, double scale = 0.3) {
  std::mt19937_64 rng(seed);
  const GroupElement target = random_element(m, rng);
  return random_model(m, target, {16, 16}, 16, rng, 1.0, scale);
}

RolloutConfig default_rc(std::uint64_t seed = 0) {
  RolloutConfig rc;
  rc.dt = 0.01;
  rc.horizon = 2000;
  rc.eps_goal = 0.05;
  rc.n_starts = 50;
  rc.seed = seed;
  return rc;
}

std::vector<std::string> csv_lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

std::vector<double> csv_row(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

TEST_CASE("integrate: immediate success at the target") {
  const MsvfModel m = seeded_model(Manifold::so3(), 1);
  const Rollout roll = integrate(m, m.target, default_rc());
  CHECK(roll.poses.size() == 1);
  CHECK(roll.outcome == RolloutOutcome::ReachedGoal);
}

TEST_CASE("integrate: SO2 contraction follows the scalar recursion oracle") {
  const GroupElement target = GroupElement::so2(0.0);
  const MsvfModel m = zero_model(Manifold::so2(), target);
  RolloutConfig rc = default_rc();
  rc.eps_goal = 1e-4;
  const double th0 = 2.0;
  const Rollout roll = integrate(m, GroupElement::so2(th0), rc);

  double th = th0;  // theta_{k+1} = theta_k (1 - dt)
  for (std::size_t k = 0; k < roll.poses.size(); ++k) {
    CHECK(roll.poses[k].angle() == doctest::Approx(th).epsilon(1e-12));
    th *= (1.0 - rc.dt);
  }
  CHECK(roll.outcome == RolloutOutcome::ReachedGoal);
}

TEST_CASE("integrate: a start on the cut locus stalls and times out") {
  const MsvfModel m = seeded_model(Manifold::so2(), 2);
  const GroupElement anti = compose(m.target, GroupElement::so2(kPi));
  RolloutConfig rc = default_rc();
  rc.horizon = 100;
  const Rollout roll = integrate(m, anti, rc);
  CHECK(roll.outcome == RolloutOutcome::Timeout);
  for (const auto& v : roll.velocities) CHECK(v.norm() == 0.0);
  CHECK(roll.poses.back().approx_equal(anti, 1e-12));
}

TEST_CASE("integrate validates the discrete-stability precondition") {
  const MsvfModel m = seeded_model(Manifold::so2(), 3);
  RolloutConfig rc = default_rc();
  rc.dt = 0.6;  // dt * gain >= 0.5
  CHECK_THROWS_AS(integrate(m, m.target, rc), Error);
}

TEST_CASE("velocity_mse equals bc_loss over the dataset and respects weighting") {
  const MsvfModel gt = seeded_model(Manifold::s2(), 4);
  const TrajectoryDataset ds = synth_demos(gt, 5, 300, 0.02, 17);
  CHECK(velocity_mse(gt, ds) < 1e-12);

  const MsvfModel other = set_target(seeded_model(Manifold::s2(), 5), gt.target);
  const double mse = velocity_mse(other, ds);
  CHECK(mse > 0.0);

  // equals the length-weighted mean of per-trajectory MSEs
  double num = 0.0;
  std::size_t den = 0;
  for (const auto& traj : ds.trajectories) {
    std::vector<Sample> s;
    for (const auto& tp : traj) s.push_back({tp.pose, *tp.vel});
    num += bc_loss(other, s) * static_cast<double>(s.size());
    den += s.size();
  }
  CHECK(mse == doctest::Approx(num / den).epsilon(1e-9));
}

TEST_CASE("area metric: zero on self-rollouts, zero for a constant demo at the target") {
  const MsvfModel gt = seeded_model(Manifold::s2(), 6);
  const TrajectoryDataset ds = synth_demos(gt, 4, 250, 0.02, 18);
  const double self_area = area_metric(gt, ds, default_rc());
  double max_speed = 0.0;
  for (const auto& traj : ds.trajectories) {
    for (const auto& tp : traj) max_speed = std::max(max_speed, tp.vel->coords.norm());
  }
  CHECK(self_area >= 0.0);
  CHECK(self_area < ds.dt * max_speed);

  TrajectoryDataset still;
  still.manifold = gt.manifold;
  still.dt = 0.02;
  Trajectory t(4, TimedPose{gt.target, std::nullopt});
  still.trajectories.push_back(t);
  CHECK(area_metric(gt, still, default_rc()) == doctest::Approx(0.0).epsilon(1e-9));

  // differing curves give strictly positive area
  const MsvfModel other = set_target(seeded_model(Manifold::s2(), 7, 0.8), gt.target);
  CHECK(area_metric(other, ds, default_rc()) > 1e-4);
}

TEST_CASE("instability is 0% for untrained models and counts cut-locus stalls") {
  for (const auto& m : {Manifold::so2(), Manifold::s2(), Manifold::so3()}) {
    const MsvfModel w = seeded_model(m, 8, 0.1);
    RolloutConfig rc = default_rc(3);
    rc.n_starts = 50;
    const InstabilityReport rep = instability_report(w, rc);
    CHECK(rep.pct == 0.0);
    for (const auto& o : rep.outcomes) {
      CHECK(o.outcome == RolloutOutcome::ReachedGoal);
      CHECK(o.final_distance < rc.eps_goal);
    }
  }

  // a start pinned on the cut locus is a failure by the measure-zero caveat
  const MsvfModel w = seeded_model(Manifold::so2(), 9, 0.1);
  RolloutConfig rc = default_rc();
  rc.horizon = 50;
  const Rollout stall = integrate(w, compose(w.target, GroupElement::so2(kPi)), rc);
  CHECK(stall.outcome != RolloutOutcome::ReachedGoal);
}

TEST_CASE("instability reports are deterministic and worker-count independent") {
  const MsvfModel w = seeded_model(Manifold::s2(), 10, 0.2);
  RolloutConfig rc = default_rc(11);
  rc.n_starts = 24;
  const InstabilityReport r1 = instability_report(w, rc);
  rc.jobs = 4;
  const InstabilityReport r2 = instability_report(w, rc);
  REQUIRE(r1.outcomes.size() == r2.outcomes.size());
  for (std::size_t i = 0; i < r1.outcomes.size(); ++i) {
    CHECK(r1.outcomes[i].steps == r2.outcomes[i].steps);
    CHECK(r1.outcomes[i].final_distance == r2.outcomes[i].final_distance);
  }
}

TEST_CASE("Lyapunov potential is nonincreasing along every rollout") {
  std::mt19937_64 rng(12);
  for (const auto& m : {Manifold::so2(), Manifold::s2(), Manifold::so3(), Manifold::se2(1.5)}) {
    const MsvfModel w = seeded_model(m, 13, 0.4);
    for (int i = 0; i < 10; ++i) {
      const Rollout roll = integrate(w, sample_start(w, 1e-3, rng), default_rc());
      for (std::size_t k = 1; k < roll.potentials.size(); ++k) {
        CHECK(roll.potentials[k] <= roll.potentials[k - 1] + 1e-9);
      }
    }
  }
}

TEST_CASE("eval report JSON carries the metrics and outcome list") {
  const MsvfModel gt = seeded_model(Manifold::s2(), 14);
  const TrajectoryDataset ds = synth_demos(gt, 3, 200, 0.02, 19);
  RolloutConfig rc = default_rc(7);
  rc.n_starts = 10;
  const EvalReport rep = evaluate(gt, ds, rc);
  CHECK(rep.instability_pct == 0.0);
  CHECK(rep.velocity_mse < 1e-12);

  const std::string js = eval_report_json(rep, "a=b");
  CHECK(js.find("\"schema_version\"") != std::string::npos);
  CHECK(js.find("\"velocity_mse\"") != std::string::npos);
  CHECK(js.find("\"instability_pct\"") != std::string::npos);
  CHECK(js.find("\"outcomes\"") != std::string::npos);
  CHECK(js.find("\"config\"") != std::string::npos);
}

TEST_CASE("field grid export: SO2 values are exact, the target row vanishes") {
  const MsvfModel m = zero_model(Manifold::so2(), GroupElement::so2(0.0));
  std::ostringstream out;
  export_field_grid(m, GridSpec{{21}}, out, "cfg");
  const auto lines = csv_lines(out.str());
  CHECK(lines.front() == "theta,omega");
  CHECK(lines.size() == 22);
  bool saw_target = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = csv_row(lines[i]);
    if (std::abs(row[0]) > kPi - 1e-5) {
      CHECK(row[1] == 0.0);  // cut-locus rows take the zero branch
      continue;
    }
    CHECK(row[1] == doctest::Approx(-row[0]).epsilon(1e-9));
    if (std::abs(row[0]) < 1e-9) {
      saw_target = true;
      CHECK(std::abs(row[1]) < 1e-12);
    }
  }
  CHECK(saw_target);  // odd count puts a grid point on the target angle
}

TEST_CASE("field grid export is deterministic and rejects SE3") {
  const MsvfModel m = seeded_model(Manifold::s2(), 15);
  std::ostringstream a, b;
  export_field_grid(m, GridSpec{{6, 8}}, a);
  export_field_grid(m, GridSpec{{6, 8}}, b);
  CHECK(a.str() == b.str());
  CHECK(csv_lines(a.str()).size() == 1 + 6 * 8);

  const MsvfModel se3 = seeded_model(Manifold::se3(1.5), 16);
  std::ostringstream out;
  CHECK_THROWS_AS(export_field_grid(se3, GridSpec{{5}}, out), Error);
  try {
    export_field_grid(se3, GridSpec{{5}}, out);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnsupportedGridKind);
  }
}

TEST_CASE("antipodal S2 grid rows point out of the antipode") {
  const MsvfModel m = seeded_model(Manifold::s2(), 17, 0.4);
  std::ostringstream out;
  export_field_grid(m, GridSpec{{24, 24}}, out);
  const auto lines = csv_lines(out.str());
  int near_antipode = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto row = csv_row(lines[i]);
    const GroupElement x = GroupElement::s2(Eigen::Vector3d(row[0], row[1], row[2]).normalized());
    const double to_cut = cut_locus_distance(m.target, x);
    if (to_cut > 0.35 || to_cut < 1e-4) continue;
    ++near_antipode;
    const Eigen::Vector3d v(row[3], row[4], row[5]);
    // moving towards the target <=> negative radial rate away from it
    const Eigen::Vector3d away = -s2_embed(x, log_at(x, m.target).coords.head<2>()).normalized();
    CHECK(v.dot(away) < 0.0);
  }
  CHECK(near_antipode > 3);
}

TEST_CASE("trajectory CSV writer emits a header plus one row per pose") {
  const MsvfModel m = seeded_model(Manifold::s2(), 18, 0.2);
  std::mt19937_64 rng(19);
  const Rollout roll = integrate(m, sample_start(m, 1e-3, rng), default_rc());
  std::ostringstream out;
  write_trajectory_csv(roll, out, "cfg");
  const auto lines = csv_lines(out.str());
  CHECK(lines.size() == roll.poses.size() + 1);
  CHECK(lines.front().rfind("step,", 0) == 0);
}
