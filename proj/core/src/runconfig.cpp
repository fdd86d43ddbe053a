#include "msvf/runconfig.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace msvf {

namespace {

const std::map<std::string, std::string>& default_table() {
  static const std::map<std::string, std::string> table = {
      {"model.kind", "S2"},
      {"model.workspace_bound", "2.0"},
      {"model.hidden", "64,64"},
      {"model.steps", "16"},
      {"model.gain", "1.0"},
      {"train.iterations", "5000"},
      {"train.batch_size", "128"},
      {"train.learning_rate", "1e-3"},
      {"train.optimizer", "adam"},
      {"train.seed", "0"},
      {"train.loss_log_every", "100"},
      {"train.checkpoint_every", "0"},
      {"rollout.dt", "0.01"},
      {"rollout.horizon", "2000"},
      {"rollout.eps_goal", "0.05"},
      {"rollout.n_starts", "100"},
      {"rollout.cut_margin", "1e-3"},
      {"rollout.jobs", "1"},
      {"arm.links", "0.35,0.3,0.25,0.2,0.15"},
      {"arm.limit_lo", "-2.8"},
      {"arm.limit_hi", "2.8"},
      {"arm.control_rate", "100"},
      {"arm.damping", "0.01"},
      {"arm.max_steps", "2000"},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.values_ = default_table();
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open config file '" + path + "'");
  RunConfig c = defaults();
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(Errc::InvalidConfig,
           path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const std::string dotted = section.empty() ? key : section + "." + key;
    if (!c.known(dotted)) {
      fail(Errc::InvalidConfig,
           path + ":" + std::to_string(lineno) + ": unknown key '" + dotted + "'");
    }
    c.values_[dotted] = value;
  }
  return c;
}

bool RunConfig::known(const std::string& k) const { return default_table().count(k) > 0; }

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!known(key)) fail(Errc::InvalidConfig, "unknown config key '" + key + "'");
  values_[key] = value;
}

std::string RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(Errc::InvalidConfig, "unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(Errc::InvalidConfig, "config key '" + key + "' is not a number: '" + v + "'");
  }
}

int RunConfig::get_int(const std::string& key) const {
  const double d = get_double(key);
  const int i = static_cast<int>(d);
  if (d != i) fail(Errc::InvalidConfig, "config key '" + key + "' is not an integer");
  return i;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string v = get(key);
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    fail(Errc::InvalidConfig, "config key '" + key + "' is not an unsigned integer");
  }
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      fail(Errc::InvalidConfig, "config key '" + key + "' has a non-number entry");
    }
  }
  return out;
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (double d : get_double_list(key)) {
    const int i = static_cast<int>(d);
    if (d != i) fail(Errc::InvalidConfig, "config key '" + key + "' has a non-integer entry");
    out.push_back(i);
  }
  return out;
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (!out.empty()) out += " ";
    out += k + "=" + v;
  }
  return out;
}

Manifold RunConfig::manifold() const {
  const ManifoldKind kind = kind_from_name(get("model.kind"));
  if (kind == ManifoldKind::SE2 || kind == ManifoldKind::SE3) {
    return Manifold::make(kind, get_double("model.workspace_bound"));
  }
  return Manifold::make(kind);
}

std::vector<int> RunConfig::hidden() const { return get_int_list("model.hidden"); }
int RunConfig::flow_steps() const { return get_int("model.steps"); }
double RunConfig::gain() const { return get_double("model.gain"); }

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.iterations = get_int("train.iterations");
  t.batch_size = get_int("train.batch_size");
  t.learning_rate = get_double("train.learning_rate");
  const std::string opt = get("train.optimizer");
  if (opt == "adam") {
    t.optimizer = OptimizerKind::Adam;
  } else if (opt == "sgd") {
    t.optimizer = OptimizerKind::SGD;
  } else {
    fail(Errc::InvalidConfig, "train.optimizer must be 'adam' or 'sgd'");
  }
  t.seed = get_u64("train.seed");
  t.loss_log_every = get_int("train.loss_log_every");
  t.checkpoint_every = get_int("train.checkpoint_every");
  return t;
}

RolloutConfig RunConfig::rollout_config() const {
  RolloutConfig r;
  r.dt = get_double("rollout.dt");
  r.horizon = get_int("rollout.horizon");
  r.eps_goal = get_double("rollout.eps_goal");
  r.n_starts = get_int("rollout.n_starts");
  r.cut_margin = get_double("rollout.cut_margin");
  r.jobs = get_int("rollout.jobs");
  r.seed = get_u64("train.seed");
  return r;
}

PlanarChain RunConfig::chain() const {
  return PlanarChain::make(get_double_list("arm.links"), get_double("arm.limit_lo"),
                           get_double("arm.limit_hi"), get_double("model.workspace_bound"));
}

ControlConfig RunConfig::control_config() const {
  ControlConfig c;
  c.control_rate = get_double("arm.control_rate");
  c.damping = get_double("arm.damping");
  c.eps_goal = get_double("rollout.eps_goal");
  c.max_steps = get_int("arm.max_steps");
  return c;
}

}  // namespace msvf
