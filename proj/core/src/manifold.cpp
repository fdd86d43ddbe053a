#include "msvf/manifold.hpp"

#include <cmath>
#include <numbers>

namespace msvf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCutTol = 1e-6;        // rad to the cut locus below which log fails
constexpr double kSmallAngle = 1e-4;    // switch to Taylor branches below this

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& R) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
  S(2, 2) = (U * V.transpose()).determinant() > 0 ? 1.0 : -1.0;
  return U * S * V.transpose();
}

void check_same_kind(const GroupElement& a, const GroupElement& b, const char* op) {
  if (!(a.manifold() == b.manifold())) {
    fail(Errc::KindMismatch, std::string(op) + " requires elements of the same manifold");
  }
}

}  // namespace

const char* kind_name(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::SO2: return "SO2";
    case ManifoldKind::S2: return "S2";
    case ManifoldKind::SO3: return "SO3";
    case ManifoldKind::SE2: return "SE2";
    case ManifoldKind::SE3: return "SE3";
  }
  return "?";
}

ManifoldKind kind_from_name(const std::string& name) {
  if (name == "SO2") return ManifoldKind::SO2;
  if (name == "S2") return ManifoldKind::S2;
  if (name == "SO3") return ManifoldKind::SO3;
  if (name == "SE2") return ManifoldKind::SE2;
  if (name == "SE3") return ManifoldKind::SE3;
  fail(Errc::KindUnknown, "unknown manifold kind '" + name + "'");
}

Manifold Manifold::se2(double bound) {
  if (!(bound > 0)) fail(Errc::InvalidConfig, "SE2 workspace_bound must be > 0");
  return {ManifoldKind::SE2, bound};
}

Manifold Manifold::se3(double bound) {
  if (!(bound > 0)) fail(Errc::InvalidConfig, "SE3 workspace_bound must be > 0");
  return {ManifoldKind::SE3, bound};
}

Manifold Manifold::make(ManifoldKind kind, double bound) {
  switch (kind) {
    case ManifoldKind::SE2: return se2(bound);
    case ManifoldKind::SE3: return se3(bound);
    default:
      if (bound != 0.0) fail(Errc::InvalidConfig, "workspace_bound only applies to SE2/SE3");
      return {kind, 0.0};
  }
}

int Manifold::dim() const {
  switch (kind) {
    case ManifoldKind::SO2: return 1;
    case ManifoldKind::S2: return 2;
    case ManifoldKind::SO3: return 3;
    case ManifoldKind::SE2: return 3;
    case ManifoldKind::SE3: return 6;
  }
  return 0;
}

int Manifold::rot_dim() const {
  switch (kind) {
    case ManifoldKind::SO2: return 1;
    case ManifoldKind::S2: return 2;
    case ManifoldKind::SO3: return 3;
    case ManifoldKind::SE2: return 1;
    case ManifoldKind::SE3: return 3;
  }
  return 0;
}

int Manifold::pos_dim() const { return dim() - rot_dim(); }

Chart Chart::of(const Manifold& m) {
  Chart c;
  c.manifold = m;
  c.rot_radius = kPi;
  if (m.pos_dim() > 0) c.box = Eigen::VectorXd::Constant(m.pos_dim(), m.workspace_bound);
  return c;
}

bool Chart::contains_open(const Eigen::VectorXd& v) const {
  const int r = manifold.rot_dim();
  if (v.size() != manifold.dim()) fail(Errc::ShapeMismatch, "chart coordinate dimension");
  if (v.head(r).norm() >= rot_radius) return false;
  for (int i = 0; i < manifold.pos_dim(); ++i) {
    if (std::abs(v(r + i)) >= box(i)) return false;
  }
  return true;
}

bool Chart::contains_closed(const Eigen::VectorXd& v, double slack) const {
  const int r = manifold.rot_dim();
  if (v.size() != manifold.dim()) fail(Errc::ShapeMismatch, "chart coordinate dimension");
  if (v.head(r).norm() > rot_radius + slack) return false;
  for (int i = 0; i < manifold.pos_dim(); ++i) {
    if (std::abs(v(r + i)) > box(i) + slack) return false;
  }
  return true;
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2 * kPi);
  if (r <= -kPi) r = kPi;  // remainder lands in [-pi, pi]; canonicalize -pi to +pi
  return r;
}

// --- GroupElement -------------------------------------------------------------

GroupElement GroupElement::identity(const Manifold& m) {
  GroupElement g;
  g.manifold_ = m;
  if (m.kind == ManifoldKind::S2) g.vec_ = Eigen::Vector3d(0, 0, 1);
  return g;
}

GroupElement GroupElement::so2(double angle) {
  GroupElement g;
  g.manifold_ = Manifold::so2();
  g.angle_ = wrap_angle(angle);
  return g;
}

GroupElement GroupElement::s2(const Eigen::Vector3d& p) {
  GroupElement g;
  g.manifold_ = Manifold::s2();
  const double n = p.norm();
  if (!(std::abs(n - 1.0) < 1e-6)) fail(Errc::SchemaError, "S2 point is not unit norm");
  g.vec_ = p / n;
  return g;
}

GroupElement GroupElement::so3(const Eigen::Matrix3d& R) {
  GroupElement g;
  g.manifold_ = Manifold::so3();
  if (R.determinant() <= 0) fail(Errc::SchemaError, "rotation block has non-positive determinant");
  const double dev = (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (dev > 1e-6) fail(Errc::SchemaError, "rotation block is not orthonormal");
  // leave already-orthonormal inputs untouched so file roundtrips stay byte-stable
  g.rot_ = dev < 1e-12 ? R : orthonormalize(R);
  return g;
}

GroupElement GroupElement::se2(double angle, const Eigen::Vector2d& t, double bound) {
  GroupElement g;
  g.manifold_ = Manifold::se2(bound);
  g.angle_ = wrap_angle(angle);
  g.vec_.head<2>() = t;
  return g;
}

GroupElement GroupElement::se3(const Eigen::Matrix3d& R, const Eigen::Vector3d& t, double bound) {
  GroupElement g = GroupElement::so3(R);
  g.manifold_ = Manifold::se3(bound);
  g.vec_ = t;
  return g;
}

GroupElement GroupElement::from_coords(const Manifold& m, const Eigen::VectorXd& c) {
  auto need = [&](int n) {
    if (c.size() != n) {
      fail(Errc::SchemaError, std::string("pose for ") + kind_name(m.kind) + " needs " +
                                  std::to_string(n) + " coordinates, got " +
                                  std::to_string(c.size()));
    }
  };
  if (!c.allFinite()) fail(Errc::SchemaError, "non-finite pose coordinates");
  switch (m.kind) {
    case ManifoldKind::SO2:
      need(1);
      return so2(c(0));
    case ManifoldKind::S2:
      need(3);
      return s2(c);
    case ManifoldKind::SO3: {
      need(9);
      Eigen::Matrix3d R;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) R(i, j) = c(3 * i + j);
      return so3(R);
    }
    case ManifoldKind::SE2:
      need(3);
      return se2(c(0), Eigen::Vector2d(c(1), c(2)), m.workspace_bound);
    case ManifoldKind::SE3: {
      need(12);
      Eigen::Matrix3d R;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) R(i, j) = c(3 * i + j);
      return se3(R, c.tail<3>(), m.workspace_bound);
    }
  }
  fail(Errc::KindUnknown, "bad manifold kind");
}

Eigen::VectorXd GroupElement::coords() const {
  switch (kind()) {
    case ManifoldKind::SO2: {
      Eigen::VectorXd c(1);
      c(0) = angle_;
      return c;
    }
    case ManifoldKind::S2: return vec_;
    case ManifoldKind::SO3: {
      Eigen::VectorXd c(9);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c(3 * i + j) = rot_(i, j);
      return c;
    }
    case ManifoldKind::SE2: {
      Eigen::VectorXd c(3);
      c << angle_, vec_(0), vec_(1);
      return c;
    }
    case ManifoldKind::SE3: {
      Eigen::VectorXd c(12);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c(3 * i + j) = rot_(i, j);
      c.tail<3>() = vec_;
      return c;
    }
  }
  return {};
}

double GroupElement::angle() const { return angle_; }
const Eigen::Matrix3d& GroupElement::rotation() const { return rot_; }

Eigen::Matrix2d GroupElement::rotation2() const {
  Eigen::Matrix2d R;
  const double c = std::cos(angle_), s = std::sin(angle_);
  R << c, -s, s, c;
  return R;
}

Eigen::Vector2d GroupElement::translation2() const { return vec_.head<2>(); }
const Eigen::Vector3d& GroupElement::translation() const { return vec_; }
const Eigen::Vector3d& GroupElement::point() const { return vec_; }

bool GroupElement::approx_equal(const GroupElement& o, double tol) const {
  if (!(manifold_ == o.manifold_)) return false;
  switch (kind()) {
    case ManifoldKind::SO2: return std::abs(wrap_angle(angle_ - o.angle_)) <= tol;
    case ManifoldKind::S2: return (vec_ - o.vec_).norm() <= tol;
    case ManifoldKind::SO3: return (rot_ - o.rot_).cwiseAbs().maxCoeff() <= tol;
    case ManifoldKind::SE2:
      return std::abs(wrap_angle(angle_ - o.angle_)) <= tol &&
             (vec_.head<2>() - o.vec_.head<2>()).norm() <= tol;
    case ManifoldKind::SE3:
      return (rot_ - o.rot_).cwiseAbs().maxCoeff() <= tol && (vec_ - o.vec_).norm() <= tol;
  }
  return false;
}

TangentVector TangentVector::body(const GroupElement& at, const Eigen::VectorXd& coords) {
  if (coords.size() != at.manifold().dim()) fail(Errc::ShapeMismatch, "tangent coordinate size");
  return TangentVector{at.manifold(), coords, FrameTag::Body, at};
}

// --- rotation kernels ----------------------------------------------------------

Eigen::Matrix3d so3_hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d W;
  W << 0, -w(2), w(1), w(2), 0, -w(0), -w(1), w(0), 0;
  return W;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double th = w.norm();
  double a, b;  // sin(th)/th and (1-cos(th))/th^2
  if (th < kSmallAngle) {
    const double th2 = th * th;
    a = 1.0 - th2 / 6.0;
    b = 0.5 - th2 / 24.0;
  } else {
    a = std::sin(th) / th;
    b = (1.0 - std::cos(th)) / (th * th);
  }
  const Eigen::Matrix3d W = so3_hat(w);
  return Eigen::Matrix3d::Identity() + a * W + b * W * W;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
  Eigen::Vector3d v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double s = 0.5 * v.norm();                            // |sin(theta)|
  const double c = 0.5 * (R.trace() - 1.0);                   // cos(theta)
  const double th = std::atan2(s, c);
  if (th > kPi - kCutTol) fail(Errc::AtCutLocus, "rotation angle within 1e-6 of pi");
  if (th < kSmallAngle) {
    // theta/(2 sin(theta)) ~ 1/2 + theta^2/12
    return (0.5 + th * th / 12.0) * v;
  }
  return (th / (2.0 * std::sin(th))) * v;
}

Eigen::Matrix2d se2_v_matrix(double theta) {
  double a, b;  // sin/theta and (1-cos)/theta
  if (std::abs(theta) < kSmallAngle) {
    a = 1.0 - theta * theta / 6.0;
    b = theta / 2.0 - theta * theta * theta / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta;
  }
  Eigen::Matrix2d V;
  V << a, -b, b, a;
  return V;
}

Eigen::Matrix3d se3_v_matrix(const Eigen::Vector3d& w) {
  const double th = w.norm();
  double b, c;  // (1-cos)/th^2 and (th - sin)/th^3
  if (th < kSmallAngle) {
    const double th2 = th * th;
    b = 0.5 - th2 / 24.0;
    c = 1.0 / 6.0 - th2 / 120.0;
  } else {
    b = (1.0 - std::cos(th)) / (th * th);
    c = (th - std::sin(th)) / (th * th * th);
  }
  const Eigen::Matrix3d W = so3_hat(w);
  return Eigen::Matrix3d::Identity() + b * W + c * W * W;
}

// --- sphere helpers -------------------------------------------------------------

std::pair<Eigen::Vector3d, Eigen::Vector3d> s2_basis(const Eigen::Vector3d& p) {
  Eigen::Vector3d ref(0, 0, 1);
  if (std::abs(p.dot(ref)) > 0.99) ref = Eigen::Vector3d(1, 0, 0);
  Eigen::Vector3d b1 = (ref - ref.dot(p) * p).normalized();
  Eigen::Vector3d b2 = p.cross(b1);
  return {b1, b2};
}

Eigen::Vector3d s2_embed(const GroupElement& at, const Eigen::Vector2d& c) {
  auto [b1, b2] = s2_basis(at.point());
  return c(0) * b1 + c(1) * b2;
}

Eigen::Vector2d s2_project(const GroupElement& at, const Eigen::Vector3d& e) {
  if (std::abs(e.dot(at.point())) > 1e-10 * std::max(1.0, e.norm())) {
    fail(Errc::ShapeMismatch, "embedded tangent is not orthogonal to the base point");
  }
  auto [b1, b2] = s2_basis(at.point());
  return {e.dot(b1), e.dot(b2)};
}

namespace {

GroupElement s2_exp_embedded(const GroupElement& base, const Eigen::Vector3d& e) {
  const double r = e.norm();
  double sinc;
  if (r < kSmallAngle) {
    sinc = 1.0 - r * r / 6.0;
  } else {
    sinc = std::sin(r) / r;
  }
  Eigen::Vector3d p = std::cos(r) * base.point() + sinc * e;
  return GroupElement::s2(p.normalized());
}

Eigen::Vector3d s2_log_embedded(const GroupElement& base, const GroupElement& x) {
  const double c = std::clamp(base.point().dot(x.point()), -1.0, 1.0);
  Eigen::Vector3d u = x.point() - c * base.point();
  const double un = u.norm();            // sin(theta), accurate for small angles
  const double th = std::atan2(un, c);   // well conditioned at both ends
  if (th > kPi - kCutTol) fail(Errc::AtCutLocus, "sphere point antipodal to base");
  if (un < 1e-300) return Eigen::Vector3d::Zero();
  return (th / un) * u;
}

}  // namespace

// --- chart-origin maps -----------------------------------------------------------

GroupElement exp_map(const Manifold& m, const Eigen::VectorXd& v) {
  if (!v.allFinite()) fail(Errc::NonFiniteInput, "exp_map coordinates are not finite");
  switch (m.kind) {
    case ManifoldKind::SO2:
      if (v.size() != 1) fail(Errc::ShapeMismatch, "SO2 algebra is 1-dimensional");
      return GroupElement::so2(v(0));
    case ManifoldKind::S2: {
      const GroupElement pole = GroupElement::identity(m);
      if (v.size() == 2) return s2_exp_embedded(pole, s2_embed(pole, v.head<2>()));
      if (v.size() == 3) return s2_exp_embedded(pole, v.head<3>());
      fail(Errc::ShapeMismatch, "S2 tangent must have 2 (chart) or 3 (embedded) coordinates");
    }
    case ManifoldKind::SO3:
      if (v.size() != 3) fail(Errc::ShapeMismatch, "SO3 algebra is 3-dimensional");
      return GroupElement::so3(so3_exp(v.head<3>()));
    case ManifoldKind::SE2: {
      if (v.size() != 3) fail(Errc::ShapeMismatch, "SE2 algebra is 3-dimensional");
      const Eigen::Vector2d t = se2_v_matrix(v(0)) * v.tail<2>();
      return GroupElement::se2(v(0), t, m.workspace_bound);
    }
    case ManifoldKind::SE3: {
      if (v.size() != 6) fail(Errc::ShapeMismatch, "SE3 algebra is 6-dimensional");
      const Eigen::Vector3d w = v.head<3>();
      return GroupElement::se3(so3_exp(w), se3_v_matrix(w) * v.tail<3>(), m.workspace_bound);
    }
  }
  fail(Errc::KindUnknown, "bad manifold kind");
}

Eigen::VectorXd log_map(const GroupElement& x) {
  switch (x.kind()) {
    case ManifoldKind::SO2: {
      if (std::abs(x.angle()) > kPi - kCutTol) {
        fail(Errc::AtCutLocus, "SO2 angle within 1e-6 of pi");
      }
      Eigen::VectorXd v(1);
      v(0) = x.angle();
      return v;
    }
    case ManifoldKind::S2: {
      const GroupElement pole = GroupElement::identity(x.manifold());
      return s2_project(pole, s2_log_embedded(pole, x));
    }
    case ManifoldKind::SO3: return so3_log(x.rotation());
    case ManifoldKind::SE2: {
      if (std::abs(x.angle()) > kPi - kCutTol) {
        fail(Errc::AtCutLocus, "SE2 rotation angle within 1e-6 of pi");
      }
      Eigen::VectorXd v(3);
      v(0) = x.angle();
      v.tail<2>() = se2_v_matrix(x.angle()).lu().solve(x.translation2());
      return v;
    }
    case ManifoldKind::SE3: {
      const Eigen::Vector3d w = so3_log(x.rotation());
      Eigen::VectorXd v(6);
      v.head<3>() = w;
      v.tail<3>() = se3_v_matrix(w).lu().solve(x.translation());
      return v;
    }
  }
  fail(Errc::KindUnknown, "bad manifold kind");
}

// --- base-point maps ---------------------------------------------------------------

TangentVector log_at(const GroupElement& base, const GroupElement& x) {
  check_same_kind(base, x, "log_at");
  if (base.kind() == ManifoldKind::S2) {
    const Eigen::Vector3d e = s2_log_embedded(base, x);
    TangentVector t = TangentVector::body(base, s2_project(base, e));
    return t;
  }
  return TangentVector::body(base, log_map(compose(inverse(base), x)));
}

GroupElement exp_at(const GroupElement& base, const Eigen::VectorXd& v) {
  if (!v.allFinite()) fail(Errc::NonFiniteInput, "exp_at coordinates are not finite");
  if (base.kind() == ManifoldKind::S2) {
    if (v.size() != 2) fail(Errc::ShapeMismatch, "S2 chart coordinates are 2-dimensional");
    return s2_exp_embedded(base, s2_embed(base, v.head<2>()));
  }
  return compose(base, exp_map(base.manifold(), v));
}

// --- group structure ----------------------------------------------------------------

GroupElement compose(const GroupElement& a, const GroupElement& b) {
  check_same_kind(a, b, "compose");
  switch (a.kind()) {
    case ManifoldKind::SO2: return GroupElement::so2(a.angle() + b.angle());
    case ManifoldKind::S2: fail(Errc::NotAGroup, "S2 has no group composition");
    case ManifoldKind::SO3: return GroupElement::so3(a.rotation() * b.rotation());
    case ManifoldKind::SE2:
      return GroupElement::se2(a.angle() + b.angle(),
                               a.rotation2() * b.translation2() + a.translation2(),
                               a.manifold().workspace_bound);
    case ManifoldKind::SE3:
      return GroupElement::se3(a.rotation() * b.rotation(),
                               a.rotation() * b.translation() + a.translation(),
                               a.manifold().workspace_bound);
  }
  fail(Errc::KindUnknown, "bad manifold kind");
}

GroupElement inverse(const GroupElement& a) {
  switch (a.kind()) {
    case ManifoldKind::SO2: return GroupElement::so2(-a.angle());
    case ManifoldKind::S2: fail(Errc::NotAGroup, "S2 has no group inverse");
    case ManifoldKind::SO3: return GroupElement::so3(a.rotation().transpose());
    case ManifoldKind::SE2: {
      const Eigen::Matrix2d Rt = a.rotation2().transpose();
      return GroupElement::se2(-a.angle(), -(Rt * a.translation2()),
                               a.manifold().workspace_bound);
    }
    case ManifoldKind::SE3:
      return GroupElement::se3(a.rotation().transpose(),
                               -(a.rotation().transpose() * a.translation()),
                               a.manifold().workspace_bound);
  }
  fail(Errc::KindUnknown, "bad manifold kind");
}

Eigen::MatrixXd adjoint(const GroupElement& g) {
  switch (g.kind()) {
    case ManifoldKind::SO2: return Eigen::MatrixXd::Identity(1, 1);
    case ManifoldKind::S2: fail(Errc::NotAGroup, "S2 has no adjoint; use parallel_transport");
    case ManifoldKind::SO3: return g.rotation();
    case ManifoldKind::SE2: {
      // layout [theta, x, y]: Ad maps (theta, rho) -> (theta, R rho + theta * (t_y, -t_x))
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3, 3);
      A(0, 0) = 1.0;
      A.block<2, 2>(1, 1) = g.rotation2();
      const Eigen::Vector2d t = g.translation2();
      A(1, 0) = t(1);
      A(2, 0) = -t(0);
      return A;
    }
    case ManifoldKind::SE3: {
      // layout [w, v]: Ad maps (w, v) -> (R w, [t]x R w + R v)
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(6, 6);
      A.block<3, 3>(0, 0) = g.rotation();
      A.block<3, 3>(3, 3) = g.rotation();
      A.block<3, 3>(3, 0) = so3_hat(g.translation()) * g.rotation();
      return A;
    }
  }
  fail(Errc::KindUnknown, "bad manifold kind");
}

Eigen::Matrix2d transport_matrix(const GroupElement& from, const GroupElement& to) {
  if (from.kind() != ManifoldKind::S2 || to.kind() != ManifoldKind::S2) {
    fail(Errc::KindMismatch, "transport_matrix is defined on S2");
  }
  const double c = std::clamp(from.point().dot(to.point()), -1.0, 1.0);
  auto [fb1, fb2] = s2_basis(from.point());
  auto [tb1, tb2] = s2_basis(to.point());
  Eigen::Matrix2d M;
  if (c > 1.0 - 1e-14) {
    // same point: the bases may still differ near the reference switch
    M << tb1.dot(fb1), tb1.dot(fb2), tb2.dot(fb1), tb2.dot(fb2);
    return M;
  }
  if (c < -1.0 + 1e-12) fail(Errc::AtCutLocus, "parallel transport between antipodal points");
  const Eigen::Vector3d e_from = (to.point() - c * from.point()).normalized();
  const Eigen::Vector3d e_to = -(from.point() - c * to.point()).normalized();
  const Eigen::Vector3d n = from.point().cross(e_from);  // constant binormal of the geodesic
  // columns: images of the basis at `from`, expressed embedded at `to`
  auto transport_one = [&](const Eigen::Vector3d& v) {
    return v.dot(e_from) * e_to + v.dot(n) * n;
  };
  const Eigen::Vector3d i1 = transport_one(fb1);
  const Eigen::Vector3d i2 = transport_one(fb2);
  M << tb1.dot(i1), tb1.dot(i2), tb2.dot(i1), tb2.dot(i2);
  return M;
}

Eigen::VectorXd parallel_transport(const GroupElement& from, const GroupElement& to,
                                   const Eigen::VectorXd& v) {
  if (v.size() != 2) fail(Errc::ShapeMismatch, "S2 tangent coordinates are 2-dimensional");
  return transport_matrix(from, to) * v;
}

// --- metrics & sampling ----------------------------------------------------------------

double geodesic_distance(const GroupElement& a, const GroupElement& b, double w) {
  check_same_kind(a, b, "geodesic_distance");
  switch (a.kind()) {
    case ManifoldKind::SO2: return std::abs(wrap_angle(b.angle() - a.angle()));
    case ManifoldKind::S2:
      return 2.0 * std::atan2((a.point() - b.point()).norm(), (a.point() + b.point()).norm());
    case ManifoldKind::SO3: {
      const Eigen::Matrix3d R = a.rotation().transpose() * b.rotation();
      Eigen::Vector3d v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
      return std::atan2(0.5 * v.norm(), 0.5 * (R.trace() - 1.0));
    }
    case ManifoldKind::SE2: {
      const double ang = std::abs(wrap_angle(b.angle() - a.angle()));
      const double dt = (b.translation2() - a.translation2()).norm();
      return std::sqrt(ang * ang + w * dt * dt);
    }
    case ManifoldKind::SE3: {
      const Eigen::Matrix3d R = a.rotation().transpose() * b.rotation();
      Eigen::Vector3d v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
      const double ang = std::atan2(0.5 * v.norm(), 0.5 * (R.trace() - 1.0));
      const double dt = (b.translation() - a.translation()).norm();
      return std::sqrt(ang * ang + w * dt * dt);
    }
  }
  fail(Errc::KindUnknown, "bad manifold kind");
}

GroupElement random_element(const Manifold& m, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto haar_so3 = [&]() {
    // uniform quaternion -> rotation matrix
    Eigen::Vector4d q;
    for (int i = 0; i < 4; ++i) q(i) = gauss(rng);
    q.normalize();
    const double w = q(0), x = q(1), y = q(2), z = q(3);
    Eigen::Matrix3d R;
    R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return R;
  };
  switch (m.kind) {
    case ManifoldKind::SO2: return GroupElement::so2(-kPi + 2 * kPi * unit(rng));
    case ManifoldKind::S2: {
      Eigen::Vector3d p;
      do {
        for (int i = 0; i < 3; ++i) p(i) = gauss(rng);
      } while (p.norm() < 1e-6);
      return GroupElement::s2(p.normalized());
    }
    case ManifoldKind::SO3: return GroupElement::so3(haar_so3());
    case ManifoldKind::SE2: {
      const double a = -kPi + 2 * kPi * unit(rng);
      Eigen::Vector2d t;
      for (int i = 0; i < 2; ++i) t(i) = (2 * unit(rng) - 1) * m.workspace_bound;
      return GroupElement::se2(a, t, m.workspace_bound);
    }
    case ManifoldKind::SE3: {
      const Eigen::Matrix3d R = haar_so3();
      Eigen::Vector3d t;
      for (int i = 0; i < 3; ++i) t(i) = (2 * unit(rng) - 1) * m.workspace_bound;
      return GroupElement::se3(R, t, m.workspace_bound);
    }
  }
  fail(Errc::KindUnknown, "bad manifold kind");
}

double cut_locus_distance(const GroupElement& base, const GroupElement& x) {
  check_same_kind(base, x, "cut_locus_distance");
  switch (base.kind()) {
    case ManifoldKind::SO2:
    case ManifoldKind::S2:
    case ManifoldKind::SO3:
      return kPi - geodesic_distance(base, x);
    case ManifoldKind::SE2:
      return kPi - std::abs(wrap_angle(x.angle() - base.angle()));
    case ManifoldKind::SE3: {
      const Eigen::Matrix3d R = base.rotation().transpose() * x.rotation();
      Eigen::Vector3d v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
      return kPi - std::atan2(0.5 * v.norm(), 0.5 * (R.trace() - 1.0));
    }
  }
  fail(Errc::KindUnknown, "bad manifold kind");
}

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::AtCutLocus: return "AtCutLocus";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::NotAGroup: return "NotAGroup";
    case Errc::OutsideChart: return "OutsideChart";
    case Errc::SingularJacobian: return "SingularJacobian";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::GraphNotScalar: return "GraphNotScalar";
    case Errc::FrameMismatch: return "FrameMismatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::SchemaError: return "SchemaError";
    case Errc::KindUnknown: return "KindUnknown";
    case Errc::CurveTooLarge: return "CurveTooLarge";
    case Errc::ConsecutiveAntipodal: return "ConsecutiveAntipodal";
    case Errc::JointLimit: return "JointLimit";
    case Errc::UnsupportedGridKind: return "UnsupportedGridKind";
    case Errc::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace msvf
