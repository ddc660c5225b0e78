#pragma once

#include <vector>

#include "patchsim/se3.hpp"

namespace patchsim {

/// Thrown by convex_hull on coplanar/collinear input.
class DegenerateGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One face of the hull as a linear inequality in the body frame:
/// f(x) = normal . x - offset <= 0 inside, with outward unit normal.
struct Facet {
  Vector3d normal;
  double offset;

  double value(const Vector3d& body_point) const {
    return normal.dot(body_point) - offset;
  }
};

/// Convex hull of the body's vertex set, held in the body frame as an
/// intersection of facet halfspaces plus the list of extreme points.
/// Built once before simulation; immutable afterwards.
struct ConvexPolytope {
  std::vector<Facet> facets;
  std::vector<Vector3d> vertices;  // hull (extreme) vertices only

  int facet_count() const { return static_cast<int>(facets.size()); }
  int vertex_count() const { return static_cast<int>(vertices.size()); }

  /// max_i f_i(body_point); <= 0 iff the point is inside the hull.
  double max_facet_value(const Vector3d& body_point) const;
};

/// Fixed supporting halfspace. The stored normal points from the support
/// material into free space; the surface is { x : normal . x = offset }.
/// The gap g(x) = normal . x - offset is positive strictly above the plane,
/// zero on it, negative inside the support.
struct SupportPlane {
  Vector3d normal = Vector3d(0, 0, 1);
  double offset = 0.0;

  double gap(const Vector3d& world_point) const {
    return normal.dot(world_point) - offset;
  }
  /// Gradient of the gap; constant.
  const Vector3d& gap_gradient() const { return normal; }
  /// Orthogonal projection of a world point onto the plane surface.
  Vector3d project(const Vector3d& world_point) const {
    return world_point - gap(world_point) * normal;
  }
  void validate() const;
};

/// Orthonormal contact frame (n, t, o) with n the plane's free-space normal
/// and a tangent basis fixed in the world frame. For an n within 1e-12 of
/// +z this is exactly t=(1,0,0), o=(0,1,0).
struct ContactFrame {
  Vector3d n, t, o;

  static ContactFrame from_plane(const SupportPlane& plane);
};

/// Quickhull over, at minimum, 4 affinely independent points; coplanar hull
/// triangles are merged into polygonal facets (1e-9 tolerance on normal
/// angle and offset) so a box yields 6 facets rather than 12 triangles.
/// Facets and vertices are sorted canonically for reproducibility.
/// Throws DegenerateGeometryError on flat or collinear input.
ConvexPolytope convex_hull(const std::vector<Vector3d>& points);

/// World-frame evaluation of facet i at point x: value, gradient in x, and
/// gradient in the 7 configuration parameters (position, quaternion).
struct WorldFacetEval {
  double value;
  Vector3d grad_x;
  Vector7d grad_q;
};

WorldFacetEval world_facet(const ConvexPolytope& poly, int facet_index,
                           const Pose& pose, const Vector3d& x_world);

/// Argmin over hull vertices of the plane gap at the given pose. Exact
/// separation oracle for a polytope against a halfspace. Returns the first
/// index among ties.
struct MinGapVertex {
  int vertex_index;
  double gap;
};

MinGapVertex min_gap_vertex(const ConvexPolytope& poly, const Pose& pose,
                            const SupportPlane& plane);

/// All hull vertex indices whose gap is within tie_eps of the minimum.
std::vector<int> min_gap_vertex_ties(const ConvexPolytope& poly,
                                     const Pose& pose,
                                     const SupportPlane& plane,
                                     double tie_eps);

}  // namespace patchsim
