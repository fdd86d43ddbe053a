#include "msvf/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "msvf/train.hpp"

namespace msvf {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Deterministic parallel map over [0, n): results land in index order no
/// matter how many workers run.
template <typename F>
void parallel_for(int n, int jobs, F&& f) {
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w]() {
      for (int i = w; i < n; i += jobs) f(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace

void RolloutConfig::validate(const MsvfModel& m) const {
  if (!(dt > 0)) fail(Errc::InvalidConfig, "rollout dt must be > 0");
  if (!(dt * m.gain < 0.5)) {
    fail(Errc::InvalidConfig, "require dt * gain < 0.5 for a stable discrete rollout");
  }
  if (!(eps_goal > 0)) fail(Errc::InvalidConfig, "eps_goal must be > 0");
  if (horizon < 1) fail(Errc::InvalidConfig, "horizon must be >= 1");
}

const char* outcome_name(RolloutOutcome o) {
  return o == RolloutOutcome::ReachedGoal ? "reached_goal" : "timeout";
}

Rollout integrate(const MsvfModel& m, const GroupElement& x0, const RolloutConfig& config) {
  config.validate(m);
  Rollout roll;
  GroupElement x = x0;
  roll.poses.push_back(x);
  for (int k = 0; k < config.horizon; ++k) {
    if (!config.full_horizon && geodesic_distance(x, m.target) < config.eps_goal) {
      roll.outcome = RolloutOutcome::ReachedGoal;
      break;
    }
    FieldEval ev;
    try {
      ev = eval_field_full(m, x);
    } catch (const Error& e) {
      if (e.code() == Errc::SingularJacobian) {
        fail(Errc::SingularJacobian, std::string(e.what()) + " at step " + std::to_string(k));
      }
      throw;
    }
    roll.potentials.push_back(ev.potential);  // V(x_k), shared with the field evaluation
    if (m.manifold.kind == ManifoldKind::S2) {
      x = exp_at(x, config.dt * ev.body);
    } else {
      x = compose(x, exp_map(m.manifold, config.dt * ev.body));
    }
    roll.velocities.push_back(ev.body);
    roll.poses.push_back(x);
  }
  if (config.full_horizon && geodesic_distance(x, m.target) < config.eps_goal) {
    roll.outcome = RolloutOutcome::ReachedGoal;
  }
  roll.potentials.push_back(potential(m, x));  // final pose
  return roll;
}

GroupElement sample_start(const MsvfModel& m, double cut_margin, std::mt19937_64& rng) {
  switch (m.manifold.kind) {
    case ManifoldKind::SO2:
    case ManifoldKind::S2:
    case ManifoldKind::SO3: {
      for (int i = 0; i < 100000; ++i) {
        GroupElement x = random_element(m.manifold, rng);
        if (cut_locus_distance(m.target, x) > cut_margin) return x;
      }
      fail(Errc::NoConvergence, "could not sample a start away from the cut locus");
    }
    default:
      return sample_chart_start(m, cut_margin, rng);
  }
}

GroupElement sample_chart_start(const MsvfModel& m, double cut_margin, std::mt19937_64& rng,
                                double shrink) {
  const Chart chart = m.chart();
  const int rd = m.manifold.rot_dim();
  const int pd = m.manifold.pos_dim();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::VectorXd v(m.manifold.dim());
  Eigen::VectorXd dir(rd);
  do {
    for (int i = 0; i < rd; ++i) dir(i) = gauss(rng);
  } while (dir.norm() < 1e-9);
  dir.normalize();
  const double rmax = std::max(1e-6, shrink * (kPi - cut_margin));
  const double r = rmax * std::pow(unit(rng), 1.0 / rd);
  v.head(rd) = r * dir;
  for (int i = 0; i < pd; ++i) v(rd + i) = (2 * unit(rng) - 1) * shrink * chart.box(i);
  return exp_at(m.target, v);
}

double velocity_mse(const MsvfModel& m, const TrajectoryDataset& ds) {
  std::vector<Sample> all;
  for (const auto& traj : ds.trajectories) {
    for (const auto& tp : traj) {
      if (tp.vel) all.push_back(Sample{tp.pose, *tp.vel});
    }
  }
  if (all.empty()) fail(Errc::EmptyDataset, "dataset carries no velocities");
  return bc_loss(m, all);
}

double area_metric(const MsvfModel& m, const TrajectoryDataset& ds,
                   const RolloutConfig& config) {
  if (ds.trajectories.empty()) fail(Errc::EmptyDataset, "no demonstrations");
  RolloutConfig rc = config;
  rc.dt = ds.dt;
  rc.full_horizon = true;
  double total = 0.0;
  int count = 0;
  for (const auto& demo : ds.trajectories) {
    if (demo.size() < 3) fail(Errc::ShapeMismatch, "demonstration shorter than 3 poses");
    rc.horizon = static_cast<int>(demo.size()) - 1;
    const Rollout roll = integrate(m, demo.front().pose, rc);
    double acc = 0.0;
    for (std::size_t k = 0; k < demo.size(); ++k) {
      const std::size_t rk = std::min(k, roll.poses.size() - 1);
      acc += geodesic_distance(roll.poses[rk], demo[k].pose);
    }
    total += acc / static_cast<double>(demo.size());
    ++count;
  }
  return total / count;
}

InstabilityReport instability_report(const MsvfModel& m, const RolloutConfig& config) {
  config.validate(m);
  InstabilityReport rep;
  rep.outcomes.resize(config.n_starts);
  parallel_for(config.n_starts, config.jobs, [&](int i) {
    // per-start stream so the result is independent of the worker count
    std::mt19937_64 rng(config.seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    const GroupElement x0 = sample_start(m, config.cut_margin, rng);
    const Rollout roll = integrate(m, x0, config);
    StartOutcome& o = rep.outcomes[i];
    o.start_index = i;
    o.outcome = roll.outcome;
    o.steps = static_cast<int>(roll.poses.size()) - 1;
    o.final_distance = geodesic_distance(roll.poses.back(), m.target);
  });
  int failures = 0;
  for (const auto& o : rep.outcomes) {
    if (o.outcome != RolloutOutcome::ReachedGoal) ++failures;
  }
  rep.pct = 100.0 * failures / std::max(1, config.n_starts);
  return rep;
}

double instability_pct(const MsvfModel& m, const RolloutConfig& config) {
  return instability_report(m, config).pct;
}

EvalReport evaluate(const MsvfModel& m, const TrajectoryDataset& ds,
                    const RolloutConfig& config) {
  EvalReport r;
  r.velocity_mse = velocity_mse(m, ds);
  r.area = area_metric(m, ds, config);
  InstabilityReport inst = instability_report(m, config);
  r.instability_pct = inst.pct;
  r.outcomes = std::move(inst.outcomes);
  return r;
}

std::string eval_report_json(const EvalReport& r, const std::string& config_echo) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["velocity_mse"] = r.velocity_mse;
  j["area"] = r.area;
  j["instability_pct"] = r.instability_pct;
  nlohmann::json outs = nlohmann::json::array();
  for (const auto& o : r.outcomes) {
    outs.push_back({{"start_index", o.start_index},
                    {"outcome", outcome_name(o.outcome)},
                    {"steps", o.steps},
                    {"final_distance", o.final_distance}});
  }
  j["outcomes"] = std::move(outs);
  if (!config_echo.empty()) j["config"] = config_echo;
  return j.dump(2);
}

namespace {

void write_row(std::ostream& out, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < a.size(); ++i) out << (i ? "," : "") << fmt17(a(i));
  for (int i = 0; i < b.size(); ++i) out << "," << fmt17(b(i));
  out << "\n";
}

}  // namespace

void export_field_grid(const MsvfModel& m, const GridSpec& grid, std::ostream& out,
                       const std::string& config_echo) {
  if (!config_echo.empty()) out << "# config: " << config_echo << "\n";
  auto lin = [](double lo, double hi, int n, int i) {
    return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
  };
  switch (m.manifold.kind) {
    case ManifoldKind::SO2: {
      if (grid.counts.size() != 1) fail(Errc::InvalidConfig, "SO2 grid takes one count");
      const int n = grid.counts[0];
      out << "theta,omega\n";
      for (int i = 0; i < n; ++i) {
        const double th = lin(-kPi + 1e-9, kPi - 1e-9, n, i);
        const GroupElement x = GroupElement::so2(th);
        Eigen::VectorXd c(1);
        c << th;
        write_row(out, c, eval_field(m, x).coords);
      }
      return;
    }
    case ManifoldKind::S2: {
      if (grid.counts.size() != 2) fail(Errc::InvalidConfig, "S2 grid takes lat x lon counts");
      out << "x,y,z,vx,vy,vz\n";
      const int nlat = grid.counts[0], nlon = grid.counts[1];
      for (int i = 0; i < nlat; ++i) {
        const double lat = lin(-kPi / 2 + 1e-6, kPi / 2 - 1e-6, nlat, i);
        for (int j = 0; j < nlon; ++j) {
          const double lon = lin(-kPi, kPi, nlon, j);
          const Eigen::Vector3d p(std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
                                  std::sin(lat));
          const GroupElement x = GroupElement::s2(p);
          const Eigen::VectorXd v = s2_embed(x, eval_field(m, x).coords.head<2>());
          write_row(out, p, v);
        }
      }
      return;
    }
    case ManifoldKind::SE2: {
      if (grid.counts.size() != 3) {
        fail(Errc::InvalidConfig, "SE2 grid takes x, y and theta counts");
      }
      out << "x,y,theta,v_theta,v_x,v_y\n";
      const double b = m.manifold.workspace_bound;
      const Eigen::Vector2d t0 = m.target.translation2();
      for (int i = 0; i < grid.counts[0]; ++i) {
        for (int j = 0; j < grid.counts[1]; ++j) {
          for (int k = 0; k < grid.counts[2]; ++k) {
            const double px = t0(0) + lin(-0.95 * b, 0.95 * b, grid.counts[0], i);
            const double py = t0(1) + lin(-0.95 * b, 0.95 * b, grid.counts[1], j);
            const double th = lin(-kPi + 1e-6, kPi - 1e-6, grid.counts[2], k);
            const GroupElement x = GroupElement::se2(th, {px, py}, b);
            Eigen::VectorXd c(3);
            c << px, py, th;
            write_row(out, c, eval_field(m, x).coords);
          }
        }
      }
      return;
    }
    case ManifoldKind::SO3: {
      if (grid.counts.size() != 1) fail(Errc::InvalidConfig, "SO3 grid takes one per-axis count");
      out << "c1,c2,c3,v1,v2,v3\n";
      const int n = grid.counts[0];
      const double r = 0.95 * kPi;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          for (int k = 0; k < n; ++k) {
            Eigen::VectorXd v(3);
            v << lin(-r, r, n, i), lin(-r, r, n, j), lin(-r, r, n, k);
            if (v.norm() >= r) continue;
            const GroupElement x = exp_at(m.target, v);
            write_row(out, v, eval_field(m, x).coords);
          }
        }
      }
      return;
    }
    case ManifoldKind::SE3:
      fail(Errc::UnsupportedGridKind,
           "SE3 field grids are not supported; export a slice by fixing rotation or translation");
  }
}

void write_trajectory_csv(const Rollout& roll, std::ostream& out,
                          const std::string& config_echo) {
  if (!config_echo.empty()) out << "# config: " << config_echo << "\n";
  if (roll.poses.empty()) return;
  const int pc = static_cast<int>(roll.poses.front().coords().size());
  out << "step";
  for (int i = 0; i < pc; ++i) out << ",pose" << i;
  out << ",potential\n";
  for (std::size_t k = 0; k < roll.poses.size(); ++k) {
    out << k;
    const Eigen::VectorXd c = roll.poses[k].coords();
    for (int i = 0; i < c.size(); ++i) out << "," << fmt17(c(i));
    out << "," << fmt17(roll.potentials[k]) << "\n";
  }
}

}  // namespace msvf
