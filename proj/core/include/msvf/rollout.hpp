#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "msvf/dataset.hpp"
#include "msvf/field.hpp"

namespace msvf {

struct RolloutConfig {
  double dt = 0.01;
  int horizon = 2000;       // max steps
  double eps_goal = 0.05;   // geodesic success radius
  int n_starts = 100;
  std::uint64_t seed = 0;
  double cut_margin = 1e-3;  // starts keep this distance from the cut locus
  bool full_horizon = false; // disable early stopping (Lyapunov sweeps)
  int jobs = 1;

  void validate(const MsvfModel& m) const;
};

enum class RolloutOutcome { ReachedGoal, Timeout };
const char* outcome_name(RolloutOutcome o);

struct Rollout {
  std::vector<GroupElement> poses;
  std::vector<Eigen::VectorXd> velocities;  // body coords, one per step taken
  std::vector<double> potentials;           // Lyapunov value per pose
  RolloutOutcome outcome = RolloutOutcome::Timeout;
};

/// Left-trivialized Euler rollout x_{k+1} = x_k exp(dt v(x_k)) (Riemannian
/// exponential on S2), stopping inside eps_goal unless full_horizon.
Rollout integrate(const MsvfModel& m, const GroupElement& x0, const RolloutConfig& config);

/// Random start for rollout studies: Haar element for compact kinds, chart
/// sample around the target for SE kinds; rejects starts closer than
/// `cut_margin` to the cut locus of the target.
GroupElement sample_start(const MsvfModel& m, double cut_margin, std::mt19937_64& rng);

/// Chart-coordinate sampler (rotation ball scaled by `shrink`, workspace box
/// likewise), used for synthetic-demo starts.
GroupElement sample_chart_start(const MsvfModel& m, double cut_margin, std::mt19937_64& rng,
                                double shrink = 0.92);

/// bc_loss over every sample in the dataset.
double velocity_mse(const MsvfModel& m, const TrajectoryDataset& ds);

/// Time-aligned geodesic discrepancy: roll out from each demonstration's
/// start at the demonstration's dt for its duration and average the pointwise
/// geodesic distance (shorter sequence clamped by index).
double area_metric(const MsvfModel& m, const TrajectoryDataset& ds, const RolloutConfig& config);

struct StartOutcome {
  int start_index = 0;
  RolloutOutcome outcome = RolloutOutcome::Timeout;
  int steps = 0;
  double final_distance = 0.0;
};

struct InstabilityReport {
  double pct = 0.0;
  std::vector<StartOutcome> outcomes;
};

/// Fraction (in percent) of random-start rollouts that fail to reach the
/// target within the horizon. Deterministic given the seed, independent of
/// the worker count.
InstabilityReport instability_report(const MsvfModel& m, const RolloutConfig& config);
double instability_pct(const MsvfModel& m, const RolloutConfig& config);

struct EvalReport {
  double velocity_mse = 0.0;
  double area = 0.0;
  double instability_pct = 0.0;
  std::vector<StartOutcome> outcomes;
};

EvalReport evaluate(const MsvfModel& m, const TrajectoryDataset& ds, const RolloutConfig& config);
std::string eval_report_json(const EvalReport& r, const std::string& config_echo = {});

/// Grid export for field plots. Counts are per-axis: SO2 [n]; S2 [lat, lon];
/// SE2 [nx, ny, ntheta]; SO3 [n] per chart axis. SE3 is not supported (slice
/// it by fixing rotation or translation first).
struct GridSpec {
  std::vector<int> counts;
};

/// CSV with a header row; one row per grid point: point coords then body
/// velocity coords. Deterministic row order.
void export_field_grid(const MsvfModel& m, const GridSpec& grid, std::ostream& out,
                       const std::string& config_echo = {});

void write_trajectory_csv(const Rollout& roll, std::ostream& out,
                          const std::string& config_echo = {});

}  // namespace msvf
