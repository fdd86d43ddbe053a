#include "msvf/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "msvf/rollout.hpp"

namespace msvf {

namespace {
constexpr double kPi = std::numbers::pi;
using nlohmann::json;
}  // namespace

std::size_t TrajectoryDataset::n_samples() const {
  std::size_t n = 0;
  for (const auto& traj : trajectories) {
    for (const auto& tp : traj) {
      if (tp.vel) ++n;
    }
  }
  return n;
}

double TrajectoryDataset::mean_squared_speed() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& traj : trajectories) {
    for (const auto& tp : traj) {
      if (tp.vel) {
        sum += tp.vel->coords.squaredNorm();
        ++n;
      }
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::vector<TangentVector> estimate_velocities(const std::vector<GroupElement>& poses,
                                               double dt) {
  if (poses.size() < 3) fail(Errc::ShapeMismatch, "velocity estimation needs >= 3 poses");
  if (!(dt > 0)) fail(Errc::InvalidConfig, "dt must be > 0");
  const auto n = poses.size();
  const bool sphere = poses.front().kind() == ManifoldKind::S2;

  auto relative_log = [&](std::size_t from, std::size_t to) -> Eigen::VectorXd {
    try {
      if (sphere) return log_at(poses[from], poses[to]).coords;
      return log_map(compose(inverse(poses[from]), poses[to]));
    } catch (const Error& e) {
      if (e.code() == Errc::AtCutLocus) {
        fail(Errc::ConsecutiveAntipodal,
             "poses " + std::to_string(from) + " and " + std::to_string(to) +
                 " are mutually antipodal");
      }
      throw;
    }
  };

  std::vector<TangentVector> out;
  out.reserve(n);
  out.push_back(TangentVector::body(poses[0], relative_log(0, 1) / dt));
  for (std::size_t ti = 1; ti + 1 < n; ++ti) {
    Eigen::VectorXd v;
    if (sphere) {
      v = (relative_log(ti, ti + 1) - relative_log(ti, ti - 1)) / (2 * dt);
    } else {
      v = relative_log(ti - 1, ti + 1) / (2 * dt);
    }
    out.push_back(TangentVector::body(poses[ti], v));
  }
  out.push_back(TangentVector::body(poses[n - 1], relative_log(n - 2, n - 1) / dt));
  return out;
}

std::vector<GroupElement> lasa_to_s2(const std::vector<Eigen::Vector2d>& curve,
                                     const GroupElement& base, double scale) {
  if (base.kind() != ManifoldKind::S2) fail(Errc::KindMismatch, "lasa_to_s2 base must be on S2");
  if (curve.empty()) fail(Errc::EmptyDataset, "empty planar curve");
  const Eigen::Vector2d end = curve.back();
  double max_norm = 0.0;
  for (const auto& p : curve) max_norm = std::max(max_norm, (scale * (p - end)).norm());
  if (max_norm >= kPi - 0.1) {
    fail(Errc::CurveTooLarge, "scaled curve leaves the first cover (margin 0.1 rad)");
  }
  std::vector<GroupElement> out;
  out.reserve(curve.size());
  for (const auto& p : curve) {
    out.push_back(exp_at(base, scale * (p - end)));
  }
  return out;
}

TrajectoryDataset synth_demos(const MsvfModel& gt, int n_traj, int horizon, double dt,
                              std::uint64_t seed, const StartSampler& start_sampler) {
  if (n_traj <= 0) fail(Errc::InvalidConfig, "n_traj must be positive");
  if (!(dt * gt.gain < 0.5)) fail(Errc::InvalidConfig, "require dt * gain < 0.5");

  RolloutConfig rc;
  rc.dt = dt;
  rc.horizon = horizon;
  rc.eps_goal = 1e-3;

  std::mt19937_64 rng(seed);
  StartSampler sampler = start_sampler;
  if (!sampler) {
    sampler = [&gt](std::mt19937_64& r) { return sample_chart_start(gt, 0.3, r); };
  }

  TrajectoryDataset ds;
  ds.manifold = gt.manifold;
  ds.dt = dt;
  ds.source = "synthetic rollouts";
  for (int i = 0; i < n_traj; ++i) {
    GroupElement x0 = sampler(rng);
    for (int guard = 0; guard < 256 && geodesic_distance(x0, gt.target) < 10 * rc.eps_goal;
         ++guard) {
      x0 = sampler(rng);
    }
    const Rollout roll = integrate(gt, x0, rc);
    Trajectory traj;
    traj.reserve(roll.poses.size());
    for (std::size_t k = 0; k < roll.poses.size(); ++k) {
      TimedPose tp;
      tp.pose = roll.poses[k];
      if (k < roll.velocities.size()) {
        tp.vel = TangentVector::body(roll.poses[k], roll.velocities[k]);
      } else {
        tp.vel = eval_field(gt, roll.poses[k]);
      }
      traj.push_back(std::move(tp));
    }
    if (traj.size() < 3) continue;  // converged immediately; not a usable demo
    ds.trajectories.push_back(std::move(traj));
  }
  if (ds.trajectories.empty()) fail(Errc::EmptyDataset, "no usable synthetic demonstrations");
  return ds;
}

// --- JSON I/O ---------------------------------------------------------------------

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd json_to_vec(const json& a, const char* what) {
  if (!a.is_array()) fail(Errc::SchemaError, std::string(what) + " must be an array");
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) fail(Errc::SchemaError, std::string(what) + " has a non-number");
    v(i) = a[i].get<double>();
  }
  return v;
}

}  // namespace

void save_dataset(const std::string& path, const TrajectoryDataset& ds,
                  const std::string& config_echo) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = kind_name(ds.manifold.kind);
  j["dt"] = ds.dt;
  if (ds.manifold.pos_dim() > 0) j["workspace_bound"] = ds.manifold.workspace_bound;
  j["source"] = ds.source;
  if (!config_echo.empty()) j["config"] = config_echo;
  json trajs = json::array();
  for (const auto& traj : ds.trajectories) {
    json jt = json::array();
    for (const auto& tp : traj) {
      json rec;
      rec["pose"] = vec_to_json(tp.pose.coords());
      if (tp.vel) rec["vel"] = vec_to_json(tp.vel->coords);
      jt.push_back(std::move(rec));
    }
    trajs.push_back(std::move(jt));
  }
  j["trajectories"] = std::move(trajs);
  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

TrajectoryDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open dataset file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Errc::SchemaError, std::string("dataset JSON parse error: ") + e.what());
  }
  if (!j.contains("kind")) fail(Errc::SchemaError, "dataset missing 'kind'");
  if (!j.contains("dt") || !j["dt"].is_number()) fail(Errc::SchemaError, "dataset missing 'dt'");
  const ManifoldKind kind = kind_from_name(j["kind"].get<std::string>());
  double bound = 0.0;
  if (kind == ManifoldKind::SE2 || kind == ManifoldKind::SE3) {
    if (!j.contains("workspace_bound")) {
      fail(Errc::SchemaError, "SE dataset missing 'workspace_bound'");
    }
    bound = j["workspace_bound"].get<double>();
  }
  TrajectoryDataset ds;
  ds.manifold = Manifold::make(kind, bound);
  ds.dt = j["dt"].get<double>();
  if (!(ds.dt > 0)) fail(Errc::SchemaError, "dt must be positive");
  ds.source = j.value("source", std::string{});

  if (!j.contains("trajectories") || !j["trajectories"].is_array()) {
    fail(Errc::SchemaError, "dataset missing 'trajectories' array");
  }
  const int dim = ds.manifold.dim();
  for (const auto& jt : j["trajectories"]) {
    if (!jt.is_array()) fail(Errc::SchemaError, "trajectory must be an array of records");
    if (jt.size() < 3) fail(Errc::SchemaError, "trajectory shorter than 3 poses");
    Trajectory traj;
    for (const auto& rec : jt) {
      if (!rec.contains("pose")) fail(Errc::SchemaError, "record missing 'pose'");
      TimedPose tp;
      tp.pose = GroupElement::from_coords(ds.manifold, json_to_vec(rec["pose"], "pose"));
      if (rec.contains("vel")) {
        const Eigen::VectorXd v = json_to_vec(rec["vel"], "vel");
        if (v.size() != dim) fail(Errc::SchemaError, "velocity dimension mismatch");
        if (!v.allFinite()) fail(Errc::SchemaError, "non-finite velocity");
        tp.vel = TangentVector::body(tp.pose, v);
      }
      traj.push_back(std::move(tp));
    }
    if (jt.size() != traj.size()) fail(Errc::SchemaError, "trajectory record mismatch");
    ds.trajectories.push_back(std::move(traj));
  }

  // Optional per-trajectory timestamps must be even to 1%; resampling is out of scope.
  if (j.contains("timestamps")) {
    const auto& ts = j["timestamps"];
    if (!ts.is_array() || ts.size() != ds.trajectories.size()) {
      fail(Errc::SchemaError, "'timestamps' must hold one array per trajectory");
    }
    for (const auto& row : ts) {
      const Eigen::VectorXd t = json_to_vec(row, "timestamps");
      for (int i = 1; i < t.size(); ++i) {
        const double step = t(i) - t(i - 1);
        if (std::abs(step - ds.dt) > 0.01 * ds.dt) {
          fail(Errc::SchemaError, "uneven timestamps (beyond 1% of dt); resample first");
        }
      }
    }
  }
  return ds;
}

// --- bundled planar shapes -----------------------------------------------------------

const std::vector<std::string>& shape_names() {
  static const std::vector<std::string> names{"spiral", "scurve", "hook", "zigzag"};
  return names;
}

std::vector<Eigen::Vector2d> shape_curve(const std::string& name, int n_points, int variant) {
  if (n_points < 3) fail(Errc::InvalidConfig, "shape needs >= 3 points");
  // smooth per-demo variation that vanishes at the endpoint
  const double amp = 1.0 + 0.06 * std::sin(1.7 * variant);
  const double ph = 0.08 * std::cos(2.3 * variant);

  auto point = [&](double t) -> Eigen::Vector2d {
    if (name == "spiral") {
      const double th = 2.6 * kPi * t + ph;
      return amp * t * Eigen::Vector2d(std::cos(th), std::sin(th));
    }
    if (name == "scurve") {
      return {amp * t, 0.35 * amp * t * std::sin(2 * kPi * t + ph)};
    }
    if (name == "hook") {
      const double th = 1.4 * t + ph;
      return amp * t * Eigen::Vector2d(std::cos(th), std::sin(th));
    }
    if (name == "zigzag") {
      return {amp * t, 0.2 * amp * t * std::sin(5 * kPi * t + ph)};
    }
    fail(Errc::InvalidConfig, "unknown shape '" + name + "'");
  };

  std::vector<Eigen::Vector2d> out;
  out.reserve(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double s = static_cast<double>(i) / (n_points - 1);
    const double t = std::pow(1.0 - s, 1.7);  // ease out: demos decelerate into the endpoint
    out.push_back(point(t));
  }
  return out;
}

std::vector<Eigen::Vector2d> load_planar_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open curve file '" + path + "'");
  std::vector<Eigen::Vector2d> out;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& ch : line) {
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    }
    std::istringstream ss(line);
    double x, y;
    if (ss >> x >> y) out.emplace_back(x, y);
  }
  if (out.size() < 3) fail(Errc::SchemaError, "curve file has fewer than 3 points");
  return out;
}

TrajectoryDataset make_s2_shape_dataset(const std::string& shape, int n_demos,
                                        const GroupElement& base, double scale, double dt,
                                        int n_points) {
  if (n_demos <= 0) fail(Errc::InvalidConfig, "n_demos must be positive");
  TrajectoryDataset ds;
  ds.manifold = Manifold::s2();
  ds.dt = dt;
  ds.source = "shape corpus: " + shape;
  for (int i = 0; i < n_demos; ++i) {
    const auto curve = shape_curve(shape, n_points, i);
    const auto poses = lasa_to_s2(curve, base, scale);
    const auto vels = estimate_velocities(poses, dt);
    Trajectory traj;
    traj.reserve(poses.size());
    for (std::size_t k = 0; k < poses.size(); ++k) {
      traj.push_back(TimedPose{poses[k], vels[k]});
    }
    ds.trajectories.push_back(std::move(traj));
  }
  return ds;
}

TargetEstimate extract_target(const TrajectoryDataset& ds) {
  std::vector<GroupElement> terminals;
  for (const auto& traj : ds.trajectories) {
    if (!traj.empty()) terminals.push_back(traj.back().pose);
  }
  if (terminals.empty()) fail(Errc::EmptyDataset, "no trajectories to extract a target from");

  GroupElement mean = terminals.front();
  const int dim = ds.manifold.dim();
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(dim);
    for (const auto& x : terminals) avg += log_at(mean, x).coords;
    avg /= static_cast<double>(terminals.size());
    if (avg.norm() < 1e-14) break;
    mean = exp_at(mean, avg);
  }
  TargetEstimate est;
  est.mean = mean;
  for (const auto& x : terminals) {
    est.max_distance = std::max(est.max_distance, geodesic_distance(mean, x));
  }
  est.concentrated = est.max_distance <= 0.2;
  return est;
}

}  // namespace msvf
