#include "patchsim/oracles.hpp"

#include <cmath>
#include <numbers>

namespace patchsim {
namespace oracles {

std::vector<double> sliding_block_velocity(double v0, double mu, double g,
                                           double h, int n_steps) {
  std::vector<double> seq;
  seq.reserve(static_cast<size_t>(n_steps) + 1);
  double v = v0;
  seq.push_back(v);
  for (int k = 0; k < n_steps; ++k) {
    v = std::max(0.0, v - h * mu * g);
    seq.push_back(v);
  }
  return seq;
}

std::vector<double> spinning_patch_rate(double w0, double mu, double e_r,
                                        double m, double g, double izz,
                                        double h, int n_steps) {
  std::vector<double> seq;
  seq.reserve(static_cast<size_t>(n_steps) + 1);
  double w = w0;
  seq.push_back(w);
  const double decrement = h * mu * e_r * m * g / izz;
  for (int k = 0; k < n_steps; ++k) {
    w = std::max(0.0, w - decrement);
    seq.push_back(w);
  }
  return seq;
}

ClosestPoint closest_point_bruteforce(const ConvexPolytope& poly,
                                      const Pose& pose,
                                      const SupportPlane& plane,
                                      double tie_eps) {
  const Matrix3d rot = rotation(pose.orientation);
  double min_gap = std::numeric_limits<double>::infinity();
  std::vector<double> gaps(poly.vertices.size());
  for (size_t i = 0; i < poly.vertices.size(); ++i) {
    gaps[i] = plane.gap(rot * poly.vertices[i] + pose.position);
    min_gap = std::min(min_gap, gaps[i]);
  }
  ClosestPoint out;
  Vector3d centroid = Vector3d::Zero();
  for (size_t i = 0; i < poly.vertices.size(); ++i) {
    if (gaps[i] <= min_gap + tie_eps) {
      out.tie_set.push_back(static_cast<int>(i));
      centroid += rot * poly.vertices[i] + pose.position;
    }
  }
  out.a1 = centroid / static_cast<double>(out.tie_set.size());
  out.a2 = plane.project(out.a1);
  out.gap = plane.gap(out.a1);
  return out;
}

Vector3d dissipation_grid_max(double v_t, double v_o, double v_r, double mu,
                              double p_n, double e_t, double e_o, double e_r,
                              int grid_n) {
  if (v_t == 0.0 && v_o == 0.0 && v_r == 0.0) {
    return Vector3d::Zero();
  }
  const double scale = mu * p_n;
  Vector3d best = Vector3d::Zero();
  double best_dissipation = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid_n; ++i) {
    const double theta = std::numbers::pi * i / grid_n;
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int j = 0; j < grid_n; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / grid_n;
      const Vector3d p(scale * e_t * st * std::cos(phi),
                       scale * e_o * st * std::sin(phi), scale * e_r * ct);
      const double dissipation = -(v_t * p[0] + v_o * p[1] + v_r * p[2]);
      if (dissipation > best_dissipation) {
        best_dissipation = dissipation;
        best = p;
      }
    }
  }
  return best;
}

}  // namespace oracles
}  // namespace patchsim
