#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "msvf/tape.hpp"

namespace msvf::ad {

/// Layer shape metadata for a fully connected tanh network with linear output.
struct MlpSpec {
  int input = 0;
  int output = 0;
  std::vector<int> hidden;

  int n_layers() const { return static_cast<int>(hidden.size()) + 1; }
  int layer_in(int l) const;
  int layer_out(int l) const;
  /// Total parameter count: sum over layers of (in + 1) * out.
  int n_params() const;
};

/// Flat parameter vector plus its layer shapes. Per-layer weights are stored
/// column-major, followed by the bias, layer by layer.
struct MlpParams {
  MlpSpec spec;
  Eigen::VectorXd theta;

  /// Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases, output layer
  /// scaled by `output_scale` so a fresh flow starts near the identity.
  static MlpParams init(const MlpSpec& spec, std::mt19937_64& rng, double output_scale = 0.1);
  static MlpParams zeros(const MlpSpec& spec);

  Eigen::Map<const Eigen::MatrixXd> weight(int l) const;
  Eigen::Map<const Eigen::VectorXd> bias(int l) const;
};

/// y = W_L(...tanh(W_0 x + b_0)...) + b_L
Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& x);

/// Forward pass plus the exact input Jacobian (output x input), sharing
/// activations between the two.
void mlp_forward_jacobian(const MlpParams& p, const Eigen::VectorXd& x, Eigen::VectorXd* y,
                          Eigen::MatrixXd* jac);

/// The same network recorded on a tape: parameters enter as tracked inputs,
/// so grad_params can be read off after a backward pass.
struct TapeMlp {
  const MlpSpec* spec = nullptr;
  std::vector<Var> weights;
  std::vector<Var> biases;

  static TapeMlp make(Tape& t, const MlpParams& p);

  Var forward(Tape& t, Var x) const;
  /// (output, d output / d input) with shared activations.
  std::pair<Var, Var> forward_jacobian(Tape& t, Var x) const;

  /// Flatten the parameter adjoints after Tape::backward into theta layout.
  Eigen::VectorXd collect_grad(const Tape& t) const;
};

}  // namespace msvf::ad
