#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msvf/dataset.hpp"
#include "msvf/field.hpp"

namespace msvf {

enum class OptimizerKind { SGD, Adam };

struct TrainConfig {
  int iterations = 5000;
  int batch_size = 128;
  double learning_rate = 1e-3;  // the optimizer step size
  OptimizerKind optimizer = OptimizerKind::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int loss_log_every = 100;
  int checkpoint_every = 0;  // 0 disables mid-run checkpoints
  std::string log_path;      // line-delimited JSON records when set
};

struct TrainReport {
  std::vector<int> log_iterations;
  std::vector<double> loss_curve;
  std::vector<double> grad_norm_curve;
  double final_loss = 0.0;
  double best_loss = 0.0;
  int best_iteration = 0;
  double wall_seconds = 0.0;
};

using Sample = std::pair<GroupElement, TangentVector>;

/// Mean squared body-frame velocity error over the batch. Velocities must be
/// tagged Body at their own pose (FrameMismatch otherwise).
double bc_loss(const MsvfModel& m, std::span<const Sample> batch);

using CheckpointHook = std::function<void(int iteration, const MsvfModel&)>;

/// Behavioral cloning: uniform batches with replacement, reverse-mode
/// gradient of the mean loss through the full field pipeline, SGD or Adam
/// descent on the flow parameters. Returns the best-loss parameters seen.
std::pair<MsvfModel, TrainReport> bc_train(const TrajectoryDataset& ds, const TrainConfig& config,
                                           const MsvfModel& init,
                                           const CheckpointHook& on_checkpoint = {});

/// Loss gradient at the current parameters over an explicit batch (exposed
/// for gradient checking).
Eigen::VectorXd bc_loss_grad(const MsvfModel& m, std::span<const Sample> batch,
                             double* loss_out = nullptr);

}  // namespace msvf
