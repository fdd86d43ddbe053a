#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "msvf/errors.hpp"

namespace msvf {

enum class ManifoldKind : std::uint8_t { SO2, S2, SO3, SE2, SE3 };

const char* kind_name(ManifoldKind k);
ManifoldKind kind_from_name(const std::string& name);  // throws KindUnknown

/// A supported manifold. SE(2)/SE(3) carry a workspace half-width that bounds
/// the translational block of the first cover; it is meaningless for the
/// purely rotational kinds and for the sphere.
struct Manifold {
  ManifoldKind kind = ManifoldKind::SO2;
  double workspace_bound = 0.0;  // > 0 iff kind is SE2/SE3

  static Manifold so2() { return {ManifoldKind::SO2, 0.0}; }
  static Manifold s2() { return {ManifoldKind::S2, 0.0}; }
  static Manifold so3() { return {ManifoldKind::SO3, 0.0}; }
  static Manifold se2(double bound);
  static Manifold se3(double bound);
  static Manifold make(ManifoldKind kind, double bound = 0.0);

  /// Tangent/algebra dimension: SO2 1, S2 2, SO3 3, SE2 3, SE3 6.
  int dim() const;
  /// Leading rotational coordinates of the algebra layout (S2 counts as all-rotational).
  int rot_dim() const;
  /// Trailing translational coordinates (SE2: 2, SE3: 3, else 0).
  int pos_dim() const;
  bool is_group() const { return kind != ManifoldKind::S2; }

  bool operator==(const Manifold& o) const {
    return kind == o.kind && workspace_bound == o.workspace_bound;
  }
};

/// The first cover of the tangent space at the chart origin: the open ball of
/// radius pi in the rotational coordinates, crossed with the open workspace
/// box in the translational coordinates.
struct Chart {
  Manifold manifold;
  double rot_radius = 3.14159265358979323846;
  Eigen::VectorXd box;  // per-translation-dimension half-widths, empty for non-SE

  static Chart of(const Manifold& m);

  bool contains_open(const Eigen::VectorXd& v) const;
  /// True within `slack` of the closed chart (used for input validation).
  bool contains_closed(const Eigen::VectorXd& v, double slack = 1e-9) const;
};

/// A point on one of the supported manifolds in canonical coordinates.
///
/// Storage by kind: SO2/SE2 keep the angle (wrapped to (-pi, pi]) plus, for
/// SE2, the 2-vector translation; SO3/SE3 keep a rotation matrix plus, for
/// SE3, the 3-vector translation; S2 keeps the unit 3-vector. Rotation blocks
/// are re-orthonormalized on construction from raw coordinates.
class GroupElement {
 public:
  GroupElement() = default;

  static GroupElement identity(const Manifold& m);
  static GroupElement so2(double angle);
  static GroupElement s2(const Eigen::Vector3d& unit_point);
  static GroupElement so3(const Eigen::Matrix3d& rotation);
  static GroupElement se2(double angle, const Eigen::Vector2d& translation, double bound);
  static GroupElement se3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation,
                          double bound);

  /// Build from the flat canonical coordinate layout used by dataset and
  /// checkpoint files (SO2: angle; S2: 3; SO3: 9 row-major; SE2: angle + 2;
  /// SE3: 9 row-major + 3). Validates invariants, throws SchemaError.
  static GroupElement from_coords(const Manifold& m, const Eigen::VectorXd& coords);
  Eigen::VectorXd coords() const;

  const Manifold& manifold() const { return manifold_; }
  ManifoldKind kind() const { return manifold_.kind; }

  double angle() const;                   // SO2/SE2
  const Eigen::Matrix3d& rotation() const;  // SO3/SE3
  Eigen::Matrix2d rotation2() const;      // SE2
  Eigen::Vector2d translation2() const;   // SE2
  const Eigen::Vector3d& translation() const;  // SE3
  const Eigen::Vector3d& point() const;   // S2 unit vector

  bool approx_equal(const GroupElement& other, double tol = 1e-9) const;

 private:
  Manifold manifold_{ManifoldKind::SO2, 0.0};
  double angle_ = 0.0;
  Eigen::Matrix3d rot_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d vec_ = Eigen::Vector3d::Zero();  // SE translation or S2 point
};

enum class FrameTag : std::uint8_t {
  AtOrigin,  // chart coordinates of the tangent space at `at`
  Body,      // left-trivialized body frame at `at`
};

/// A velocity in algebra/tangent coordinates, tagged with the frame it is
/// expressed in. S2 coordinates are 2-vectors in the deterministic
/// orthonormal basis of the frame point (see s2_basis).
struct TangentVector {
  Manifold manifold;
  Eigen::VectorXd coords;
  FrameTag frame = FrameTag::Body;
  GroupElement at;

  static TangentVector body(const GroupElement& at, const Eigen::VectorXd& coords);
};

// --- chart-origin maps -------------------------------------------------------

/// Exponential at the origin element (identity; north pole for S2).
/// For S2, `v` may be the 2-vector chart coordinates or an embedded tangent
/// 3-vector orthogonal to the pole.
GroupElement exp_map(const Manifold& m, const Eigen::VectorXd& v);

/// Logarithm at the origin element. Throws AtCutLocus when the rotation angle
/// is within 1e-6 rad of pi.
Eigen::VectorXd log_map(const GroupElement& x);

// --- base-point maps ---------------------------------------------------------

/// log of inverse(base)*x in the body frame of `base`; Riemannian logarithm
/// for S2, expressed in the orthonormal basis at `base`.
TangentVector log_at(const GroupElement& base, const GroupElement& x);

/// Inverse of log_at: for Lie groups base*exp(v); for S2 the Riemannian
/// exponential at `base` of the 2-vector `v` in the basis at `base`.
GroupElement exp_at(const GroupElement& base, const Eigen::VectorXd& v);

// --- group structure ---------------------------------------------------------

GroupElement compose(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& a);

/// Frame-change matrix of algebra coordinates induced by g (dim x dim).
/// Layouts are rotation-first: SE2 [theta, x, y], SE3 [w, v].
/// Not defined for S2 (use parallel_transport).
Eigen::MatrixXd adjoint(const GroupElement& g);

/// Parallel transport of tangent coordinates along the geodesic `from`->`to`
/// on the sphere, expressed basis-to-basis as a 2x2 matrix.
Eigen::Matrix2d transport_matrix(const GroupElement& from, const GroupElement& to);
Eigen::VectorXd parallel_transport(const GroupElement& from, const GroupElement& to,
                                   const Eigen::VectorXd& v);

// --- metrics & sampling ------------------------------------------------------

/// Rotation angle of a^-1 b for rotations; arc length for S2; for SE groups
/// sqrt(angle^2 + w * |dt|^2) with the documented default weight w = 1 rad^2/m^2.
double geodesic_distance(const GroupElement& a, const GroupElement& b,
                         double translation_weight = 1.0);

/// Haar-uniform on compact rotational parts, uniform in the workspace box for
/// translations. Deterministic for a given generator state.
GroupElement random_element(const Manifold& m, std::mt19937_64& rng);

/// Distance from x to the cut locus of `base` (pi minus the rotational angle
/// of the relative element).
double cut_locus_distance(const GroupElement& base, const GroupElement& x);

// --- sphere helpers ----------------------------------------------------------

/// Deterministic orthonormal tangent basis at a sphere point: Gram-Schmidt of
/// a reference axis against the point, reference switched from e_z to e_x when
/// |<p, e_z>| > 0.99. Returns (b1, b2) with (p, b1, b2) right-handed.
std::pair<Eigen::Vector3d, Eigen::Vector3d> s2_basis(const Eigen::Vector3d& p);

Eigen::Vector3d s2_embed(const GroupElement& at, const Eigen::Vector2d& coords);
Eigen::Vector2d s2_project(const GroupElement& at, const Eigen::Vector3d& embedded);

// --- low-level rotation kernels (shared with tests and the tape layer) -------

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R);  // throws AtCutLocus near pi
Eigen::Matrix3d so3_hat(const Eigen::Vector3d& w);
double wrap_angle(double a);  // to (-pi, pi]

/// translation coupling blocks of the SE exponentials
Eigen::Matrix2d se2_v_matrix(double theta);
Eigen::Matrix3d se3_v_matrix(const Eigen::Vector3d& w);

}  // namespace msvf
