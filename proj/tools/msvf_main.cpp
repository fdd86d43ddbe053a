#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "msvf/checkpoint.hpp"
#include "msvf/runconfig.hpp"

namespace {

using namespace msvf;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::NonFiniteLoss:
    case Errc::SingularJacobian:
    case Errc::NoConvergence:
      return 2;
    default:
      return 1;
  }
}

/// Config file from --config, else $MSVF_CONFIG, else built-in defaults;
/// then --set overrides on top.
RunConfig merged_config(const std::string& config_path,
                        const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!config_path.empty()) {
    cfg = RunConfig::from_file(config_path);
  } else if (const char* env = std::getenv("MSVF_CONFIG"); env && *env) {
    cfg = RunConfig::from_file(env);
  } else {
    cfg = RunConfig::defaults();
  }
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(Errc::InvalidConfig, "--set expects key=value");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::uint64_t resolve_seed(bool seed_given, std::uint64_t seed) {
  if (seed_given) return seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << s << "\n";
  return s;
}

GridSpec parse_grid(const std::string& spec) {
  GridSpec g;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    try {
      g.counts.push_back(std::stoi(item));
    } catch (const std::exception&) {
      fail(Errc::InvalidConfig, "bad grid spec '" + spec + "' (use N or NxM or NxMxK)");
    }
    if (g.counts.back() < 1) fail(Errc::InvalidConfig, "grid counts must be >= 1");
  }
  return g;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Args {
  std::string config_path, data_path, out_path, ckpt_path, synth_ckpt;
  std::string kind = "S2", shape = "spiral", grid = "21";
  std::vector<std::string> overrides;
  std::vector<double> q0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int n = 7, points = 200;
  double scale = 1.0;
};

int cmd_train(const Args& a) {
  RunConfig cfg = merged_config(a.config_path, a.overrides);
  cfg.set("train.seed", std::to_string(resolve_seed(a.seed_given, a.seed)));

  const TrajectoryDataset ds = load_dataset(a.data_path);
  const TargetEstimate target = extract_target(ds);
  if (!target.concentrated) {
    std::cerr << "warning: terminal poses spread up to " << target.max_distance
              << " rad-equivalent from their mean\n";
  }

  std::mt19937_64 rng(cfg.train_config().seed);
  MsvfModel init =
      random_model(ds.manifold, target.mean, cfg.hidden(), cfg.flow_steps(), rng, cfg.gain());

  TrainConfig tc = cfg.train_config();
  tc.log_path = a.out_path + ".log";
  CheckpointHook hook;
  if (tc.checkpoint_every > 0) {
    hook = [&](int iter, const MsvfModel& m) {
      save_checkpoint(a.out_path + "." + std::to_string(iter), m, cfg.echo());
    };
  }
  auto [model, report] = bc_train(ds, tc, init, hook);
  save_checkpoint(a.out_path, model, cfg.echo());
  std::cerr << "final loss " << report.final_loss << " (best " << report.best_loss
            << " at iteration " << report.best_iteration << ")\n";
  return 0;
}

int cmd_eval(const Args& a) {
  RunConfig cfg = merged_config(a.config_path, a.overrides);
  cfg.set("train.seed", std::to_string(resolve_seed(a.seed_given, a.seed)));
  const MsvfModel model = load_checkpoint(a.ckpt_path);
  const TrajectoryDataset ds = load_dataset(a.data_path);
  if (!(ds.manifold == model.manifold)) {
    fail(Errc::KindMismatch, "checkpoint and dataset manifolds differ");
  }
  const EvalReport report = evaluate(model, ds, cfg.rollout_config());
  std::cout << eval_report_json(report, cfg.echo()) << "\n";
  return 0;
}

int cmd_gen_data(const Args& a) {
  RunConfig cfg = merged_config(a.config_path, a.overrides);
  const std::uint64_t seed = resolve_seed(a.seed_given, a.seed);
  if (a.n <= 0) fail(Errc::InvalidConfig, "--n must be positive");

  TrajectoryDataset ds;
  if (!a.synth_ckpt.empty()) {
    const MsvfModel gt = load_checkpoint(a.synth_ckpt);
    const RolloutConfig rc = cfg.rollout_config();
    ds = synth_demos(gt, a.n, rc.horizon, rc.dt, seed);
  } else {
    if (kind_from_name(a.kind) != ManifoldKind::S2) {
      fail(Errc::InvalidConfig, "shape demonstrations are planar curves projected to S2");
    }
    const GroupElement base = GroupElement::identity(Manifold::s2());
    const double dt = cfg.rollout_config().dt;
    if (!a.shape.empty() && a.shape[0] == '@') {
      const auto curve = load_planar_curve(a.shape.substr(1));
      const auto poses = lasa_to_s2(curve, base, a.scale);
      const auto vels = estimate_velocities(poses, dt);
      Trajectory traj;
      for (std::size_t k = 0; k < poses.size(); ++k) traj.push_back({poses[k], vels[k]});
      ds.manifold = Manifold::s2();
      ds.dt = dt;
      ds.source = "planar curve file " + a.shape.substr(1);
      for (int i = 0; i < a.n; ++i) ds.trajectories.push_back(traj);
    } else {
      ds = make_s2_shape_dataset(a.shape, a.n, base, a.scale, dt, a.points);
    }
  }
  save_dataset(a.out_path, ds, cfg.echo());
  return 0;
}

int cmd_export_field(const Args& a) {
  RunConfig cfg = merged_config(a.config_path, a.overrides);
  const MsvfModel model = load_checkpoint(a.ckpt_path);
  std::ofstream out(a.out_path);
  if (!out) fail(Errc::IoError, "cannot open '" + a.out_path + "' for writing");
  export_field_grid(model, parse_grid(a.grid), out, cfg.echo());
  return 0;
}

int cmd_demo_arm(const Args& a) {
  RunConfig cfg = merged_config(a.config_path, a.overrides);
  const MsvfModel model = load_checkpoint(a.ckpt_path);
  const PlanarChain chain = cfg.chain();
  const ControlConfig control = cfg.control_config();

  Eigen::VectorXd q0(chain.n_joints());
  if (!a.q0.empty()) {
    if (static_cast<int>(a.q0.size()) != chain.n_joints()) {
      fail(Errc::InvalidConfig, "--q0 needs one value per joint");
    }
    for (int i = 0; i < q0.size(); ++i) q0(i) = a.q0[i];
  } else {
    std::mt19937_64 rng(resolve_seed(a.seed_given, a.seed));
    q0 = random_joints(chain, rng);
  }

  const Episode ep = run_episode(chain, q0, model, control);
  std::ofstream out(a.out_path);
  if (!out) fail(Errc::IoError, "cannot open '" + a.out_path + "' for writing");
  out << "# config: " << cfg.echo() << "\n";
  out << "step";
  for (int i = 0; i < chain.n_joints(); ++i) out << ",q" << i;
  out << ",theta,x,y\n";
  for (std::size_t k = 0; k < ep.joints.size(); ++k) {
    out << k;
    for (int i = 0; i < chain.n_joints(); ++i) out << "," << fmt17(ep.joints[k](i));
    const Eigen::VectorXd c = ep.poses[k].coords();
    for (int i = 0; i < 3; ++i) out << "," << fmt17(c(i));
    out << "\n";
  }
  std::cerr << "episode outcome: " << outcome_name(ep.outcome) << " after "
            << ep.joints.size() - 1 << " steps\n";
  return ep.outcome == EpisodeOutcome::ReachedGoal ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learns and runs globally stable vector fields on Lie groups and the sphere"};
  app.require_subcommand(1);
  Args a;

  // eval shorthands, folded into --set overrides after parsing
  std::string starts_s, dt_s, horizon_s, eps_s, jobs_s;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", a.config_path, "run configuration file (INI-style)");
    cmd->add_option("--set", a.overrides,
                    "override a config key, e.g. --set train.iterations=100");
    cmd->add_option("--seed", a.seed, "root seed for all randomness");
  };

  CLI::App* train = app.add_subcommand("train", "behavioral cloning from a dataset");
  train->add_option("--data", a.data_path, "dataset JSON path")->required();
  train->add_option("--out", a.out_path, "checkpoint output path")->required();
  add_common(train);

  CLI::App* eval = app.add_subcommand("eval", "metrics for a checkpoint on a dataset");
  eval->add_option("--ckpt", a.ckpt_path, "checkpoint path")->required();
  eval->add_option("--data", a.data_path, "dataset JSON path")->required();
  eval->add_option("--starts", starts_s, "rollout starts (rollout.n_starts)");
  eval->add_option("--dt", dt_s, "rollout timestep (rollout.dt)");
  eval->add_option("--horizon", horizon_s, "rollout horizon (rollout.horizon)");
  eval->add_option("--eps", eps_s, "success radius (rollout.eps_goal)");
  eval->add_option("--jobs", jobs_s, "worker cap (rollout.jobs)");
  add_common(eval);

  CLI::App* gen = app.add_subcommand("gen-data", "generate demonstration datasets");
  gen->add_option("--kind", a.kind, "manifold kind for shape data (S2)")->capture_default_str();
  gen->add_option("--shape", a.shape, "spiral|scurve|hook|zigzag or @file with x y columns")
      ->capture_default_str();
  gen->add_option("--synth-ckpt", a.synth_ckpt, "roll demonstrations out of this checkpoint");
  gen->add_option("--n", a.n, "number of demonstrations")->capture_default_str();
  gen->add_option("--points", a.points, "poses per shape demonstration")->capture_default_str();
  gen->add_option("--scale", a.scale, "planar-to-sphere scale")->capture_default_str();
  gen->add_option("--out", a.out_path, "dataset output path")->required();
  add_common(gen);

  CLI::App* exf = app.add_subcommand("export-field", "CSV field grid for plots");
  exf->add_option("--ckpt", a.ckpt_path, "checkpoint path")->required();
  exf->add_option("--grid", a.grid, "per-axis counts, e.g. 41 or 24x48 or 11x11x9")
      ->capture_default_str();
  exf->add_option("--out", a.out_path, "CSV output path")->required();
  add_common(exf);

  CLI::App* arm = app.add_subcommand("demo-arm", "closed-loop planar arm episode");
  arm->add_option("--ckpt", a.ckpt_path, "SE2 checkpoint path")->required();
  arm->add_option("--out", a.out_path, "episode CSV output path")->required();
  arm->add_option("--q0", a.q0, "initial joint angles (defaults to a random start)");
  add_common(arm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  a.seed_given = sub->count("--seed") > 0;
  if (!starts_s.empty()) a.overrides.push_back("rollout.n_starts=" + starts_s);
  if (!dt_s.empty()) a.overrides.push_back("rollout.dt=" + dt_s);
  if (!horizon_s.empty()) a.overrides.push_back("rollout.horizon=" + horizon_s);
  if (!eps_s.empty()) a.overrides.push_back("rollout.eps_goal=" + eps_s);
  if (!jobs_s.empty()) a.overrides.push_back("rollout.jobs=" + jobs_s);

  try {
    if (sub == train) return cmd_train(a);
    if (sub == eval) return cmd_eval(a);
    if (sub == gen) return cmd_gen_data(a);
    if (sub == exf) return cmd_export_field(a);
    if (sub == arm) return cmd_demo_arm(a);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
