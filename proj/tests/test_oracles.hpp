#pragma once

// Independent oracles for the test suites. Everything here recomputes
// expected values through a route different from the library implementation.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>

#include "msvf/flow.hpp"
#include "msvf/manifold.hpp"

namespace oracles {

/// Matrix exponential by the plain power series (30 terms).
inline Eigen::MatrixXd expm_series(const Eigen::MatrixXd& A, int terms = 30) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  Eigen::MatrixXd term = out;
  for (int k = 1; k <= terms; ++k) {
    term = term * A / static_cast<double>(k);
    out += term;
  }
  return out;
}

/// Rotation log via eigen-axis extraction: the +1 eigenvector gives the axis,
/// the trace gives the angle, the skew part fixes the sign.
inline Eigen::Vector3d so3_log_eigenaxis(const Eigen::Matrix3d& R) {
  Eigen::EigenSolver<Eigen::Matrix3d> es(R);
  int best = 0;
  double best_err = 1e9;
  for (int i = 0; i < 3; ++i) {
    const double err = std::abs(es.eigenvalues()(i).real() - 1.0) +
                       std::abs(es.eigenvalues()(i).imag());
    if (err < best_err) {
      best_err = err;
      best = i;
    }
  }
  Eigen::Vector3d axis = es.eigenvectors().col(best).real().normalized();
  const double angle = std::acos(std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0));
  const Eigen::Vector3d skew(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (axis.dot(skew) < 0) axis = -axis;
  return angle * axis;
}

/// Haar rotation with a prescribed rotation angle (random axis).
inline Eigen::Matrix3d rotation_with_angle(double angle, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0, 1);
  Eigen::Vector3d axis;
  do {
    axis = Eigen::Vector3d(g(rng), g(rng), g(rng));
  } while (axis.norm() < 1e-9);
  axis.normalize();
  return expm_series(msvf::so3_hat(angle * axis));
}

/// Central finite-difference Jacobian of a vector map.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-6) {
  const Eigen::VectorXd y0 = f(x);
  Eigen::MatrixXd J(y0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return J;
}

/// Central finite-difference gradient of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (int j = 0; j < x.size(); ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    g(j) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

/// High-order reference for the continuous flow and its Jacobian ODE:
/// dz/dt = h(z), dJ/dt = grad h(z) J, integrated by classic RK4 with many
/// fixed steps (error ~ (1/n)^4, far below the discrete-map error).
struct OdeRef {
  Eigen::VectorXd z;
  Eigen::MatrixXd J;
};

inline OdeRef flow_ode_rk4(const msvf::FlowModel& f, const Eigen::VectorXd& x0, int n_steps) {
  const msvf::Chart chart = msvf::Chart::of(f.manifold);
  const int d = f.manifold.dim();
  auto rhs = [&](const Eigen::VectorXd& z, const Eigen::MatrixXd& J, Eigen::VectorXd* dz,
                 Eigen::MatrixXd* dJ) {
    Eigen::VectorXd psi;
    Eigen::MatrixXd dpsi;
    msvf::ad::mlp_forward_jacobian(f.psi, z, &psi, &dpsi);
    const double a = msvf::alpha(chart, z);
    const Eigen::VectorXd ga = msvf::alpha_grad(chart, z);
    *dz = a * psi;
    *dJ = (psi * ga.transpose() + a * dpsi) * J;
  };
  Eigen::VectorXd z = x0;
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(d, d);
  const double h = 1.0 / n_steps;
  Eigen::VectorXd k1z(d), k2z(d), k3z(d), k4z(d);
  Eigen::MatrixXd k1J(d, d), k2J(d, d), k3J(d, d), k4J(d, d);
  for (int s = 0; s < n_steps; ++s) {
    rhs(z, J, &k1z, &k1J);
    rhs(z + 0.5 * h * k1z, J + 0.5 * h * k1J, &k2z, &k2J);
    rhs(z + 0.5 * h * k2z, J + 0.5 * h * k2J, &k3z, &k3J);
    rhs(z + h * k3z, J + h * k3J, &k4z, &k4J);
    z += (h / 6.0) * (k1z + 2 * k2z + 2 * k3z + k4z);
    J += (h / 6.0) * (k1J + 2 * k2J + 2 * k3J + k4J);
  }
  return {z, J};
}

/// Least-squares slope of log(err) against log(K).
inline double loglog_slope(const std::vector<double>& ks, const std::vector<double>& errs) {
  const int n = static_cast<int>(ks.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(ks[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracles
