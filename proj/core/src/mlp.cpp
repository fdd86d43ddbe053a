#include "msvf/mlp.hpp"

#include <cmath>

namespace msvf::ad {

int MlpSpec::layer_in(int l) const {
  if (l == 0) return input;
  return hidden[l - 1];
}

int MlpSpec::layer_out(int l) const {
  if (l == n_layers() - 1) return output;
  return hidden[l];
}

int MlpSpec::n_params() const {
  int n = 0;
  for (int l = 0; l < n_layers(); ++l) n += (layer_in(l) + 1) * layer_out(l);
  return n;
}

namespace {

int layer_offset(const MlpSpec& s, int l) {
  int off = 0;
  for (int k = 0; k < l; ++k) off += (s.layer_in(k) + 1) * s.layer_out(k);
  return off;
}

}  // namespace

Eigen::Map<const Eigen::MatrixXd> MlpParams::weight(int l) const {
  const int off = layer_offset(spec, l);
  return {theta.data() + off, spec.layer_out(l), spec.layer_in(l)};
}

Eigen::Map<const Eigen::VectorXd> MlpParams::bias(int l) const {
  const int off = layer_offset(spec, l) + spec.layer_in(l) * spec.layer_out(l);
  return {theta.data() + off, spec.layer_out(l)};
}

MlpParams MlpParams::init(const MlpSpec& spec, std::mt19937_64& rng, double output_scale) {
  MlpParams p;
  p.spec = spec;
  p.theta = Eigen::VectorXd::Zero(spec.n_params());
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int off = 0;
  for (int l = 0; l < spec.n_layers(); ++l) {
    const int in = spec.layer_in(l), out = spec.layer_out(l);
    const double lim = std::sqrt(6.0 / (in + out));
    const double s = (l == spec.n_layers() - 1) ? output_scale : 1.0;
    for (int k = 0; k < in * out; ++k) p.theta(off + k) = s * lim * u(rng);
    off += (in + 1) * out;  // biases stay zero
  }
  return p;
}

MlpParams MlpParams::zeros(const MlpSpec& spec) {
  MlpParams p;
  p.spec = spec;
  p.theta = Eigen::VectorXd::Zero(spec.n_params());
  return p;
}

Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& x) {
  if (x.size() != p.spec.input) fail(Errc::ShapeMismatch, "mlp_forward: input size");
  Eigen::VectorXd z = x;
  for (int l = 0; l < p.spec.n_layers(); ++l) {
    Eigen::VectorXd a = p.weight(l) * z + p.bias(l);
    if (l < p.spec.n_layers() - 1) {
      z = a.array().tanh();
    } else {
      z = a;
    }
  }
  return z;
}

void mlp_forward_jacobian(const MlpParams& p, const Eigen::VectorXd& x, Eigen::VectorXd* y,
                          Eigen::MatrixXd* jac) {
  if (x.size() != p.spec.input) fail(Errc::ShapeMismatch, "mlp_forward_jacobian: input size");
  Eigen::VectorXd z = x;
  Eigen::MatrixXd J;  // running d z / d x
  for (int l = 0; l < p.spec.n_layers(); ++l) {
    Eigen::MatrixXd Jl = (l == 0) ? Eigen::MatrixXd(p.weight(0)) : p.weight(l) * J;
    Eigen::VectorXd a = p.weight(l) * z + p.bias(l);
    if (l < p.spec.n_layers() - 1) {
      z = a.array().tanh();
      const Eigen::ArrayXd d = 1.0 - z.array().square();
      J = Jl.array().colwise() * d;
    } else {
      z = a;
      J = Jl;
    }
  }
  if (y) *y = z;
  if (jac) *jac = J;
}

TapeMlp TapeMlp::make(Tape& t, const MlpParams& p) {
  TapeMlp m;
  m.spec = &p.spec;
  for (int l = 0; l < p.spec.n_layers(); ++l) {
    m.weights.push_back(t.input(p.weight(l)));
    m.biases.push_back(t.input(p.bias(l)));
  }
  return m;
}

Var TapeMlp::forward(Tape& t, Var x) const {
  Var z = x;
  for (int l = 0; l < spec->n_layers(); ++l) {
    Var a = t.add(t.matmul(weights[l], z), biases[l]);
    z = (l < spec->n_layers() - 1) ? t.tanh(a) : a;
  }
  return z;
}

std::pair<Var, Var> TapeMlp::forward_jacobian(Tape& t, Var x) const {
  Var z = x;
  Var J{};
  for (int l = 0; l < spec->n_layers(); ++l) {
    Var Jl = (l == 0) ? weights[0] : t.matmul(weights[l], J);
    Var a = t.add(t.matmul(weights[l], z), biases[l]);
    if (l < spec->n_layers() - 1) {
      z = t.tanh(a);
      Var ones = t.constant(Eigen::MatrixXd::Ones(spec->layer_out(l), 1));
      Var d = t.sub(ones, t.mul(z, z));
      J = t.diag_scale(Jl, d);
    } else {
      z = a;
      J = Jl;
    }
  }
  return {z, J};
}

Eigen::VectorXd TapeMlp::collect_grad(const Tape& t) const {
  Eigen::VectorXd g(spec->n_params());
  int off = 0;
  for (int l = 0; l < spec->n_layers(); ++l) {
    const int in = spec->layer_in(l), out = spec->layer_out(l);
    const Eigen::MatrixXd gw = t.grad(weights[l]);
    const Eigen::MatrixXd gb = t.grad(biases[l]);
    Eigen::Map<Eigen::MatrixXd>(g.data() + off, out, in) = gw;
    g.segment(off + in * out, out) = gb.col(0);
    off += (in + 1) * out;
  }
  return g;
}

}  // namespace msvf::ad
