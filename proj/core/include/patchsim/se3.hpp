#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>

namespace patchsim {

using Vector3d = Eigen::Vector3d;
using Vector4d = Eigen::Vector4d;
using Vector6d = Eigen::Matrix<double, 6, 1>;
using Vector7d = Eigen::Matrix<double, 7, 1>;
using Matrix3d = Eigen::Matrix3d;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix76d = Eigen::Matrix<double, 7, 6>;
using Matrix43d = Eigen::Matrix<double, 4, 3>;

/// Thrown when an operation receives a state that violates its preconditions
/// (e.g. a quaternion far from unit norm).
class InvalidStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Position and orientation only; the orientation quaternion is stored
/// scalar-first (w, x, y, z) and is NOT required to be normalized here.
/// Intermediate solver iterates live in this type.
struct Pose {
  Vector3d position = Vector3d::Zero();
  Vector4d orientation = Vector4d(1, 0, 0, 0);
};

/// Configuration and generalized velocity of the moving body.
/// Angular velocity is expressed in the world (spatial) frame.
struct RigidState {
  Vector3d position = Vector3d::Zero();
  Vector4d orientation = Vector4d(1, 0, 0, 0);  // unit, scalar-first
  Vector3d linear_velocity = Vector3d::Zero();
  Vector3d angular_velocity = Vector3d::Zero();

  Pose pose() const { return {position, orientation}; }
  Vector6d generalized_velocity() const {
    Vector6d nu;
    nu << linear_velocity, angular_velocity;
    return nu;
  }
  /// 7-vector (position, quaternion) matching the kinematic-map layout.
  Vector7d configuration() const {
    Vector7d q;
    q << position, orientation;
    return q;
  }
  bool all_finite() const;
};

/// Mass and body-frame inertia about the center of mass.
struct InertialProperties {
  double mass = 1.0;
  Matrix3d body_inertia = Matrix3d::Identity();

  /// Throws std::invalid_argument unless mass > 0 and the inertia matrix is
  /// symmetric positive definite.
  void validate() const;
};

/// Rotation matrix of a scalar-first quaternion. The formula divides by
/// |q|^2, so the result is exactly orthogonal for any nonzero q and is
/// invariant under scaling of q. That invariance is what keeps geometric
/// quantities unchanged when a solved quaternion is renormalized afterwards.
Matrix3d rotation(const Vector4d& quat);

/// d(rotation)/dq_i for i = w,x,y,z, including the |q|^-2 quotient term.
std::array<Matrix3d, 4> rotation_derivatives(const Vector4d& quat);

/// World-frame inertia R I_body R^T.
Matrix3d inertia_world(const Vector4d& quat, const Matrix3d& body_inertia);

/// Quaternion block of the kinematic map: qdot = Q(q) * omega with omega in
/// the world frame, qdot = 1/2 (0, omega) (x) q.
Matrix43d quaternion_rate_map(const Vector4d& quat);

/// G(q) with qdot = G(q) nu; position rows are identity, quaternion rows are
/// quaternion_rate_map. Throws InvalidStateError if the quaternion norm
/// deviates from 1 by more than 1e-9.
Matrix76d kinematic_map(const RigidState& state);

/// Block-diagonal [m I, R I_cm R^T]; symmetric positive definite.
Matrix6d mass_matrix(const RigidState& state, const InertialProperties& props);
Matrix6d mass_matrix(const Vector4d& quat, const InertialProperties& props);

/// Gyroscopic impulse h * [0; -omega x (I_world omega)], evaluated at the
/// given state (beginning of step).
Vector6d velocity_product_impulse(const RigidState& state,
                                  const InertialProperties& props, double h);

/// Euler-update the configuration through the kinematic map and renormalize
/// the quaternion. Velocities are copied from nu.
RigidState integrate_configuration(const RigidState& state, const Vector6d& nu,
                                   double h);

Vector4d normalized_quaternion(const Vector4d& quat);

}  // namespace patchsim
