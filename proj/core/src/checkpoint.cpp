#include "msvf/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace msvf {

using nlohmann::json;

void save_checkpoint(const std::string& path, const MsvfModel& m,
                     const std::string& config_echo) {
  json j;
  j["schema_version"] = 1;
  j["kind"] = kind_name(m.manifold.kind);
  if (m.manifold.pos_dim() > 0) j["workspace_bound"] = m.manifold.workspace_bound;
  j["hidden"] = m.flow.psi.spec.hidden;
  j["euler_steps"] = m.flow.steps;
  j["gain"] = m.gain;
  json target = json::array();
  const Eigen::VectorXd tc = m.target.coords();
  for (int i = 0; i < tc.size(); ++i) target.push_back(tc(i));
  j["target"] = std::move(target);
  json params = json::array();
  for (int i = 0; i < m.flow.psi.theta.size(); ++i) params.push_back(m.flow.psi.theta(i));
  j["params"] = std::move(params);
  if (!config_echo.empty()) j["config"] = config_echo;

  std::ofstream out(path);
  if (!out) fail(Errc::IoError, "cannot open checkpoint '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

MsvfModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open checkpoint file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(Errc::SchemaError, std::string("checkpoint JSON parse error: ") + e.what());
  }
  for (const char* key : {"kind", "hidden", "euler_steps", "gain", "target", "params"}) {
    if (!j.contains(key)) fail(Errc::SchemaError, std::string("checkpoint missing '") + key + "'");
  }
  const ManifoldKind kind = kind_from_name(j["kind"].get<std::string>());
  double bound = 0.0;
  if (kind == ManifoldKind::SE2 || kind == ManifoldKind::SE3) {
    if (!j.contains("workspace_bound")) {
      fail(Errc::SchemaError, "SE checkpoint missing 'workspace_bound'");
    }
    bound = j["workspace_bound"].get<double>();
  }
  const Manifold m = Manifold::make(kind, bound);

  ad::MlpSpec spec;
  spec.input = spec.output = m.dim();
  spec.hidden = j["hidden"].get<std::vector<int>>();
  ad::MlpParams psi = ad::MlpParams::zeros(spec);
  const auto& params = j["params"];
  if (!params.is_array() || static_cast<int>(params.size()) != spec.n_params()) {
    fail(Errc::SchemaError, "checkpoint parameter count does not match the architecture");
  }
  for (int i = 0; i < psi.theta.size(); ++i) psi.theta(i) = params[i].get<double>();
  if (!psi.theta.allFinite()) fail(Errc::SchemaError, "non-finite checkpoint parameters");

  const auto& tj = j["target"];
  Eigen::VectorXd tc(tj.size());
  for (std::size_t i = 0; i < tj.size(); ++i) tc(i) = tj[i].get<double>();
  const GroupElement target = GroupElement::from_coords(m, tc);

  FlowModel flow = FlowModel::make(m, std::move(psi), j["euler_steps"].get<int>());
  return MsvfModel::make(std::move(flow), target, j["gain"].get<double>());
}

}  // namespace msvf
