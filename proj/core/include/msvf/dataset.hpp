#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msvf/field.hpp"
#include "msvf/manifold.hpp"

namespace msvf {

struct TimedPose {
  GroupElement pose;
  std::optional<TangentVector> vel;  // body frame at `pose`
};

using Trajectory = std::vector<TimedPose>;

/// Demonstration trajectories with a shared manifold and timestep.
struct TrajectoryDataset {
  Manifold manifold;
  double dt = 0.01;
  std::vector<Trajectory> trajectories;
  std::string source;

  std::size_t n_samples() const;
  /// Mean squared velocity norm over all samples that carry a velocity.
  double mean_squared_speed() const;
};

/// Central differences in the group: v_t = log(x_{t-1}^-1 x_{t+1}) / (2 dt),
/// body frame at x_t; one-sided at the ends. For S2 the symmetric Riemannian
/// difference (log_at(x_t, x_{t+1}) - log_at(x_t, x_{t-1})) / (2 dt).
/// Throws ConsecutiveAntipodal when adjacent poses sit on each other's cut locus.
std::vector<TangentVector> estimate_velocities(const std::vector<GroupElement>& poses, double dt);

/// Center a planar curve on its endpoint, scale it, and map it through the
/// sphere exponential at `base`. Throws CurveTooLarge when the scaled curve
/// would leave the first cover (margin 0.1 rad).
std::vector<GroupElement> lasa_to_s2(const std::vector<Eigen::Vector2d>& curve,
                                     const GroupElement& base, double scale);

using StartSampler = std::function<GroupElement(std::mt19937_64&)>;

/// Rollout-generated demonstrations from a ground-truth model, recording the
/// exact field velocities (no finite differencing). Deterministic given seed.
TrajectoryDataset synth_demos(const MsvfModel& ground_truth, int n_traj, int horizon, double dt,
                              std::uint64_t seed, const StartSampler& start_sampler = {});

TrajectoryDataset load_dataset(const std::string& path);
void save_dataset(const std::string& path, const TrajectoryDataset& ds,
                  const std::string& config_echo = {});

// --- bundled planar shape corpus ----------------------------------------------

/// Parametric planar shapes ending at the origin: "spiral", "scurve", "hook",
/// "zigzag". `variant` perturbs the shape smoothly to mimic repeated
/// demonstrations of the same motion.
std::vector<Eigen::Vector2d> shape_curve(const std::string& name, int n_points,
                                         int variant = 0);
const std::vector<std::string>& shape_names();

/// Plain numeric two-column text file (whitespace or comma separated).
std::vector<Eigen::Vector2d> load_planar_curve(const std::string& path);

/// Shape demonstrations projected to the sphere around `base`, velocities by
/// central differences.
TrajectoryDataset make_s2_shape_dataset(const std::string& shape, int n_demos,
                                        const GroupElement& base, double scale, double dt,
                                        int n_points = 200);

// --- training target extraction -------------------------------------------------

struct TargetEstimate {
  GroupElement mean;
  double max_distance = 0.0;  // max geodesic distance from the mean to a terminal pose
  bool concentrated = true;   // false when max_distance > 0.2 rad-equivalent
};

/// Karcher mean of the terminal demonstration poses (iterated log-average,
/// 100 iterations, unit step).
TargetEstimate extract_target(const TrajectoryDataset& ds);

}  // namespace msvf
