#pragma once

#include <Eigen/Dense>
#include <vector>

#include "patchsim/geometry.hpp"
#include "patchsim/mncp.hpp"
#include "patchsim/se3.hpp"

namespace patchsim {

/// Friction-ellipsoid parameters: mu scales the ellipsoid with the normal
/// impulse, e_t/e_o are dimensionless tangential semi-axes, e_r (meters) is
/// the drilling-moment semi-axis.
struct FrictionParams {
  double mu = 0.0;
  double e_t = 1.0;
  double e_o = 1.0;
  double e_r = 0.1;

  void validate() const;
};

/// Contact-side unknowns of one time step. Impulses are h times the
/// corresponding forces/moments; l_hull holds one multiplier per hull facet
/// where the entry for the active facet k doubles as the closest-point
/// scale between the two equivalent contact points.
struct ContactVariables {
  Vector3d a1 = Vector3d::Zero();  // ECP on the hull, world frame
  Vector3d a2 = Vector3d::Zero();  // ECP on the plane, world frame
  double p_n = 0.0;                // normal impulse (N s)
  double p_t = 0.0;                // tangential impulse along t
  double p_o = 0.0;                // tangential impulse along o
  double p_r = 0.0;                // drilling moment impulse (N m s)
  double sigma = 0.0;              // slip magnitude (weighted, >= 0)
  Eigen::VectorXd l_hull;          // facet multipliers, >= 0
  double l_plane = 0.0;            // plane multiplier, >= 0

  /// mu^2 p_n^2 - p_t^2/e_t^2 - p_o^2/e_o^2 - p_r^2/e_r^2; >= 0 inside the
  /// impulse friction ellipsoid.
  double cone_slack(const FrictionParams& params) const;
};

/// Everything unknown at the end of a step: 6 velocities, 7 configuration
/// parameters, 3+3 ECPs, 4 impulses, sigma, m hull multipliers and the
/// plane multiplier -- 25+m scalars.
struct StepUnknowns {
  RigidState state_next;
  ContactVariables contact;
};

/// Contact wrench basis at the ECP: W_n = [n; r x n] and companions, with
/// r from the center of mass to a1, all in the world frame.
struct WrenchBasis {
  Vector6d w_n, w_t, w_o, w_r;
};

WrenchBasis wrench_basis(const ContactFrame& frame, const Vector3d& a1,
                         const Vector3d& center_of_mass);

/// Closest-point/contact rows and complementarity function values.
struct EcpResidual {
  Vector3d closeness;   // a1 - a2 + l_k grad C(a1)
  Vector3d alignment;   // grad C(a1) + l_plane grad g(a2)
  Eigen::VectorXd hull_pair_values;  // -f_i(a1), paired with l_hull[i]
  double plane_pair_value;           // -g(a2), paired with l_plane
  double penetration_pair_value;     // g(a1), paired with p_n
};

/// grad C(a1) = grad f_k(a1) + sum_{i != k} l_i grad f_i(a1), evaluated at
/// the end-of-step configuration. Throws std::invalid_argument unless
/// 0 <= active_facet < facet count and l_hull has one entry per facet.
EcpResidual ecp_residual(const StepUnknowns& unknowns,
                         const ConvexPolytope& poly, const SupportPlane& plane,
                         int active_facet);

/// Friction-ellipsoid rows: e^2 mu p_n W^T nu + p sigma per direction, plus
/// the cone-slack value paired with sigma.
struct FrictionResidual {
  Vector3d equations;
  double cone_pair_value;
};

FrictionResidual friction_residual(const StepUnknowns& unknowns,
                                   const FrictionParams& params,
                                   const WrenchBasis& basis);

/// Discretized momentum balance (6 rows, unscaled impulse units) and
/// kinematic map rows (7). The kinematic map is evaluated at the
/// beginning-of-step configuration, so those rows are linear.
struct DynamicsResidual {
  Vector6d newton_euler;
  Vector7d kinematic;
};

DynamicsResidual dynamics_residual(const StepUnknowns& unknowns,
                                   const RigidState& state_prev,
                                   const InertialProperties& props,
                                   const Vector6d& applied_impulse,
                                   const Vector6d& vp_impulse, double h,
                                   const ContactFrame& frame);

/// Frozen data of one time step's MNCP. Unknown layout:
///   [0..5]   generalized velocity (v, omega)
///   [6..8]   position
///   [9..12]  quaternion (w,x,y,z)
///   [13..15] a1
///   [16..18] a2
///   [19..22] p_n, p_t, p_o, p_r
///   [23]     sigma
///   [24..23+m] hull multipliers
///   [24+m]   plane multiplier
/// Row layout: 6 momentum, 7 kinematic, 3 closeness, 3 alignment,
/// 3 friction, then the m+2+1 complementarity function rows.
class StepProblem {
 public:
  StepProblem(const ConvexPolytope& poly, SupportPlane plane,
              ContactFrame frame, FrictionParams friction,
              InertialProperties props, RigidState state_prev,
              Vector6d applied_impulse, double h, int active_facet,
              double momentum_row_scale);

  int facet_count() const { return poly_->facet_count(); }
  int dimension() const { return 25 + facet_count(); }
  int active_facet() const { return active_facet_; }
  const RigidState& state_prev() const { return state_prev_; }
  const ConvexPolytope& polytope() const { return *poly_; }
  const SupportPlane& plane() const { return plane_; }
  const ContactFrame& frame() const { return frame_; }
  const FrictionParams& friction() const { return friction_; }
  double step_size() const { return h_; }

  Eigen::VectorXd pack(const StepUnknowns& u) const;
  StepUnknowns unpack(const Eigen::VectorXd& z) const;

  /// Residual F(z); complementarity rows carry the function side of each
  /// pair (see pairs()).
  Eigen::VectorXd residual(const Eigen::VectorXd& z) const;
  void eval(const Eigen::VectorXd& z, Eigen::VectorXd& f,
            Eigen::MatrixXd* jac) const;

  std::vector<PairIndex> pairs() const;

  /// Bundle as a generic MNCP for the semismooth solver.
  MncpProblem mncp_problem() const;

  // Variable/row index helpers.
  int velocity_index() const { return 0; }
  int position_index() const { return 6; }
  int quaternion_index() const { return 9; }
  int a1_index() const { return 13; }
  int a2_index() const { return 16; }
  int impulse_index() const { return 19; }  // p_n, then p_t, p_o, p_r
  int sigma_index() const { return 23; }
  int hull_multiplier_index() const { return 24; }
  int plane_multiplier_index() const { return 24 + facet_count(); }
  int momentum_row() const { return 0; }
  int kinematic_row() const { return 6; }
  int closeness_row() const { return 13; }
  int alignment_row() const { return 16; }
  int friction_row() const { return 19; }
  int hull_pair_row() const { return 22; }
  int plane_pair_row() const { return 22 + facet_count(); }
  int penetration_pair_row() const { return 23 + facet_count(); }
  int cone_pair_row() const { return 24 + facet_count(); }

 private:
  const ConvexPolytope* poly_;
  SupportPlane plane_;
  ContactFrame frame_;
  FrictionParams friction_;
  InertialProperties props_;
  RigidState state_prev_;
  Vector6d applied_impulse_;
  Vector6d vp_impulse_;
  Matrix76d kinematic_map_prev_;
  double h_;
  int active_facet_;
  double row_scale_;
};

/// m * |g| * h, the weight impulse over one step; falls back to m * h when
/// gravity is zero so the momentum rows keep a positive scale.
double characteristic_impulse(double mass, double gravity, double h);

}  // namespace patchsim
