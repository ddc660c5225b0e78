#pragma once

#include <vector>

#include "patchsim/geometry.hpp"
#include "patchsim/se3.hpp"

// Closed-form and brute-force references used by tests and acceptance runs.
// This module must stay independent of the contact model and the solver so
// reference bugs cannot correlate with solver bugs.

namespace patchsim {
namespace oracles {

/// Pure translational sliding on a flat patch: v_{k+1} = max(0, v_k - h mu g),
/// frozen at zero once reached. Returns n_steps + 1 values starting at v0.
std::vector<double> sliding_block_velocity(double v0, double mu, double g,
                                           double h, int n_steps);

/// Pure spin about the patch normal through the CM:
/// w_{k+1} = max(0, w_k - h mu e_r m g / Izz). Returns n_steps + 1 values.
std::vector<double> spinning_patch_rate(double w0, double mu, double e_r,
                                        double m, double g, double izz,
                                        double h, int n_steps);

/// Exact closest pair between the hull at the given pose and the support
/// halfspace, via vertex enumeration. With ties (within tie_eps of the
/// minimum) the returned point is the centroid of the tied set, itself a
/// valid minimizer of the degenerate face.
struct ClosestPoint {
  Vector3d a1;                // on the hull, world frame
  Vector3d a2;                // its projection on the plane
  double gap;                 // plane gap at a1 (= separation distance)
  std::vector<int> tie_set;   // hull vertex indices attaining the minimum
};

ClosestPoint closest_point_bruteforce(const ConvexPolytope& poly,
                                      const Pose& pose,
                                      const SupportPlane& plane,
                                      double tie_eps = 1e-9);

/// Grid search over the friction-ellipsoid boundary maximizing the
/// dissipation -(v_t p_t + v_o p_o + v_r p_r). Samples grid_n^2 spherical
/// angles; returns (p_t, p_o, p_r). When all velocities vanish every
/// boundary point ties at zero and the interior point 0 is reported.
Vector3d dissipation_grid_max(double v_t, double v_o, double v_r, double mu,
                              double p_n, double e_t, double e_o, double e_r,
                              int grid_n);

}  // namespace oracles
}  // namespace patchsim
