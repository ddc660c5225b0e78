#include "patchsim/se3.hpp"

#include <cmath>

namespace patchsim {

namespace {

Matrix3d skew(const Vector3d& v) {
  Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

}  // namespace

bool RigidState::all_finite() const {
  return position.allFinite() && orientation.allFinite() &&
         linear_velocity.allFinite() && angular_velocity.allFinite();
}

void InertialProperties::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw std::invalid_argument("InertialProperties: mass must be positive");
  }
  if ((body_inertia - body_inertia.transpose()).lpNorm<Eigen::Infinity>() >
      1e-12 * body_inertia.lpNorm<Eigen::Infinity>()) {
    throw std::invalid_argument("InertialProperties: inertia not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(body_inertia);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument(
        "InertialProperties: inertia not positive definite");
  }
}

Matrix3d rotation(const Vector4d& quat) {
  const double w = quat[0];
  const Vector3d u = quat.tail<3>();
  const double n2 = quat.squaredNorm();
  if (!(n2 > 0.0)) {
    throw InvalidStateError("rotation: zero quaternion");
  }
  Matrix3d a = (w * w - u.squaredNorm()) * Matrix3d::Identity() +
               2.0 * (u * u.transpose()) + 2.0 * w * skew(u);
  return a / n2;
}

std::array<Matrix3d, 4> rotation_derivatives(const Vector4d& quat) {
  const double w = quat[0];
  const Vector3d u = quat.tail<3>();
  const double n2 = quat.squaredNorm();
  if (!(n2 > 0.0)) {
    throw InvalidStateError("rotation_derivatives: zero quaternion");
  }
  const Matrix3d r = rotation(quat);

  std::array<Matrix3d, 4> d;
  // dA/dw = 2w I + 2 [u]x
  d[0] = 2.0 * w * Matrix3d::Identity() + 2.0 * skew(u);
  for (int j = 0; j < 3; ++j) {
    Vector3d e = Vector3d::Zero();
    e[j] = 1.0;
    // dA/du_j = -2 u_j I + 2 (e u^T + u e^T) + 2w [e]x
    d[j + 1] = -2.0 * u[j] * Matrix3d::Identity() +
               2.0 * (e * u.transpose() + u * e.transpose()) +
               2.0 * w * skew(e);
  }
  // Quotient rule: dR/dq_i = (dA/dq_i - 2 q_i R) / |q|^2.
  for (int i = 0; i < 4; ++i) {
    d[i] = (d[i] - 2.0 * quat[i] * r) / n2;
  }
  return d;
}

Matrix3d inertia_world(const Vector4d& quat, const Matrix3d& body_inertia) {
  const Matrix3d r = rotation(quat);
  return r * body_inertia * r.transpose();
}

Matrix43d quaternion_rate_map(const Vector4d& quat) {
  const double w = quat[0];
  const Vector3d u = quat.tail<3>();
  Matrix43d m;
  m.row(0) = -0.5 * u.transpose();
  m.bottomRows<3>() = 0.5 * (w * Matrix3d::Identity() - skew(u));
  return m;
}

Matrix76d kinematic_map(const RigidState& state) {
  if (std::abs(state.orientation.norm() - 1.0) > 1e-9) {
    throw InvalidStateError("kinematic_map: quaternion not unit");
  }
  Matrix76d g = Matrix76d::Zero();
  g.topLeftCorner<3, 3>().setIdentity();
  g.bottomRightCorner<4, 3>() = quaternion_rate_map(state.orientation);
  return g;
}

Matrix6d mass_matrix(const Vector4d& quat, const InertialProperties& props) {
  Matrix6d m = Matrix6d::Zero();
  m.topLeftCorner<3, 3>() = props.mass * Matrix3d::Identity();
  m.bottomRightCorner<3, 3>() = inertia_world(quat, props.body_inertia);
  return m;
}

Matrix6d mass_matrix(const RigidState& state, const InertialProperties& props) {
  return mass_matrix(state.orientation, props);
}

Vector6d velocity_product_impulse(const RigidState& state,
                                  const InertialProperties& props, double h) {
  const Vector3d omega = state.angular_velocity;
  const Matrix3d inertia = inertia_world(state.orientation, props.body_inertia);
  Vector6d p = Vector6d::Zero();
  p.tail<3>() = -h * omega.cross(inertia * omega);
  return p;
}

RigidState integrate_configuration(const RigidState& state, const Vector6d& nu,
                                   double h) {
  const Matrix76d g = kinematic_map(state);
  const Vector7d q = state.configuration() + h * g * nu;
  RigidState next;
  next.position = q.head<3>();
  next.orientation = normalized_quaternion(q.tail<4>());
  next.linear_velocity = nu.head<3>();
  next.angular_velocity = nu.tail<3>();
  return next;
}

Vector4d normalized_quaternion(const Vector4d& quat) {
  const double n = quat.norm();
  if (!(n > 0.0)) {
    throw InvalidStateError("normalized_quaternion: zero quaternion");
  }
  return quat / n;
}

}  // namespace patchsim
