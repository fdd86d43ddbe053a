#include "msvf/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "msvf/flow.hpp"

namespace msvf {

namespace {

/// Per-sample constants of the loss: everything that does not depend on the
/// flow parameters is precomputed once.
struct Prepared {
  Eigen::VectorXd xhat;   // chart coordinates around the target
  Eigen::MatrixXd frame;  // adjoint / transport matrix from origin frame to body frame
  Eigen::VectorXd vel;    // demonstrated body velocity
  bool on_cut = false;
};

Prepared prepare_sample(const MsvfModel& m, const GroupElement& pose,
                        const TangentVector& vel) {
  if (!(vel.manifold == m.manifold) || !(pose.manifold() == m.manifold)) {
    fail(Errc::KindMismatch, "sample manifold differs from the model");
  }
  if (vel.frame != FrameTag::Body || !vel.at.approx_equal(pose, 1e-9)) {
    fail(Errc::FrameMismatch, "demonstration velocity is not in the body frame at its pose");
  }
  Prepared p;
  p.vel = vel.coords;
  try {
    const Eigen::VectorXd xhat = log_at(m.target, pose).coords;
    if (!m.chart().contains_open(xhat)) {
      p.on_cut = true;
      return p;
    }
    p.xhat = xhat;
  } catch (const Error& e) {
    if (e.code() == Errc::AtCutLocus) {
      p.on_cut = true;
      return p;
    }
    throw;
  }
  if (m.manifold.kind == ManifoldKind::S2) {
    p.frame = transport_matrix(m.target, pose);
  } else {
    p.frame = adjoint(inverse(compose(inverse(m.target), pose)));
  }
  return p;
}

/// Records the loss for one batch on the tape and returns the loss node.
ad::Var record_batch_loss(ad::Tape& tape, const ad::TapeMlp& mlp, const MsvfModel& m,
                          std::span<const Prepared> batch) {
  const int d = m.manifold.dim();
  // latent sink y_H = f(0), shared by every sample in the batch
  auto [yh, jh_unused] = flow_run_tape(tape, mlp, m.flow, Eigen::VectorXd::Zero(d), false);
  (void)jh_unused;
  ad::Var acc = tape.scalar(0.0);
  for (const Prepared& s : batch) {
    if (s.on_cut) {
      // zero-velocity branch: the residual is constant, no gradient flows
      acc = tape.add(acc, tape.scalar(s.vel.squaredNorm()));
      continue;
    }
    auto [y, J] = flow_run_tape(tape, mlp, m.flow, s.xhat, true);
    ad::Var vhat = tape.scale(tape.sub(y, yh), -m.gain);
    ad::Var v0 = tape.solve(J, vhat);
    ad::Var body = tape.matmul(tape.constant(s.frame), v0);
    ad::Var r = tape.sub(body, tape.constant(s.vel));
    acc = tape.add(acc, tape.dot(r, r));
  }
  return tape.scale(acc, 1.0 / static_cast<double>(batch.size()));
}

std::vector<Prepared> prepare_all(const MsvfModel& m, std::span<const Sample> samples) {
  std::vector<Prepared> out;
  out.reserve(samples.size());
  for (const auto& [pose, vel] : samples) out.push_back(prepare_sample(m, pose, vel));
  return out;
}

}  // namespace

double bc_loss(const MsvfModel& m, std::span<const Sample> batch) {
  if (batch.empty()) fail(Errc::EmptyDataset, "empty batch");
  const Eigen::VectorXd yh = m.latent_sink();
  double acc = 0.0;
  for (const auto& [pose, vel] : batch) {
    const Prepared p = prepare_sample(m, pose, vel);
    if (p.on_cut) {
      acc += p.vel.squaredNorm();
      continue;
    }
    const FlowResult fr = flow_run(m.flow, p.xhat, true);
    const Eigen::VectorXd vhat = -m.gain * (fr.y - yh);
    const Eigen::VectorXd body = p.frame * fr.jacobian.partialPivLu().solve(vhat);
    acc += (body - p.vel).squaredNorm();
  }
  return acc / static_cast<double>(batch.size());
}

Eigen::VectorXd bc_loss_grad(const MsvfModel& m, std::span<const Sample> batch,
                             double* loss_out) {
  if (batch.empty()) fail(Errc::EmptyDataset, "empty batch");
  const std::vector<Prepared> prep = prepare_all(m, batch);
  ad::Tape tape;
  const ad::TapeMlp mlp = ad::TapeMlp::make(tape, m.flow.psi);
  ad::Var loss = record_batch_loss(tape, mlp, m, prep);
  if (loss_out) *loss_out = tape.value(loss)(0, 0);
  tape.backward(loss);
  return mlp.collect_grad(tape);
}

std::pair<MsvfModel, TrainReport> bc_train(const TrajectoryDataset& ds, const TrainConfig& config,
                                           const MsvfModel& init,
                                           const CheckpointHook& on_checkpoint) {
  if (!(ds.manifold == init.manifold)) {
    fail(Errc::KindMismatch, "dataset manifold differs from the model");
  }
  std::vector<Sample> samples;
  for (const auto& traj : ds.trajectories) {
    for (const auto& tp : traj) {
      if (tp.vel) samples.push_back(Sample{tp.pose, *tp.vel});
    }
  }
  if (samples.empty()) fail(Errc::EmptyDataset, "dataset carries no velocity samples");
  if (config.batch_size < 1 || static_cast<std::size_t>(config.batch_size) > samples.size()) {
    fail(Errc::InvalidConfig, "batch size must be in [1, n_samples]");
  }
  if (!(config.learning_rate > 0)) fail(Errc::InvalidConfig, "learning rate must be > 0");
  if (config.iterations < 1) fail(Errc::InvalidConfig, "iterations must be >= 1");

  const std::vector<Prepared> prep = prepare_all(init, samples);

  const auto t_start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);

  Eigen::VectorXd theta = init.flow.psi.theta;
  Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd adam_v = Eigen::VectorXd::Zero(theta.size());

  TrainReport report;
  double best_loss = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta = theta;
  int best_iter = 0;

  std::ofstream log;
  if (!config.log_path.empty()) {
    log.open(config.log_path);
    if (!log) fail(Errc::IoError, "cannot open train log '" + config.log_path + "'");
  }

  MsvfModel work = init;
  std::vector<Prepared> batch(config.batch_size);
  ad::Tape tape;
  double last_loss = 0.0;

  for (int iter = 0; iter < config.iterations; ++iter) {
    for (int b = 0; b < config.batch_size; ++b) batch[b] = prep[pick(rng)];

    work.flow.psi.theta = theta;
    tape.clear();
    const ad::TapeMlp mlp = ad::TapeMlp::make(tape, work.flow.psi);
    ad::Var loss = record_batch_loss(tape, mlp, work, batch);
    last_loss = tape.value(loss)(0, 0);
    if (!std::isfinite(last_loss)) {
      fail(Errc::NonFiniteLoss, "loss became non-finite at iteration " + std::to_string(iter));
    }
    tape.backward(loss);
    const Eigen::VectorXd g = mlp.collect_grad(tape);

    if (last_loss < best_loss) {
      best_loss = last_loss;
      best_theta = theta;
      best_iter = iter;
    }

    const bool log_now = config.loss_log_every > 0 && (iter % config.loss_log_every == 0 ||
                                                       iter == config.iterations - 1);
    if (log_now) {
      report.log_iterations.push_back(iter);
      report.loss_curve.push_back(last_loss);
      report.grad_norm_curve.push_back(g.norm());
      if (log) {
        nlohmann::json line = {
            {"iteration", iter}, {"loss", last_loss}, {"grad_norm", g.norm()}};
        log << line.dump() << "\n";
      }
    }

    if (config.optimizer == OptimizerKind::SGD) {
      theta -= config.learning_rate * g;
    } else {
      adam_m = config.adam_beta1 * adam_m + (1 - config.adam_beta1) * g;
      adam_v = config.adam_beta2 * adam_v + (1 - config.adam_beta2) * g.cwiseProduct(g);
      const double bc1 = 1 - std::pow(config.adam_beta1, iter + 1);
      const double bc2 = 1 - std::pow(config.adam_beta2, iter + 1);
      theta -= (config.learning_rate * (adam_m / bc1).array() /
                ((adam_v / bc2).array().sqrt() + config.adam_eps))
                   .matrix();
    }

    if (on_checkpoint && config.checkpoint_every > 0 && (iter + 1) % config.checkpoint_every == 0) {
      work.flow.psi.theta = theta;
      on_checkpoint(iter + 1, MsvfModel::make(work.flow, work.target, work.gain));
    }
  }

  report.final_loss = last_loss;
  report.best_loss = best_loss;
  report.best_iteration = best_iter;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  MsvfModel trained = init;
  trained.flow.psi.theta = best_theta;
  return {MsvfModel::make(trained.flow, trained.target, trained.gain), report};
}

}  // namespace msvf
