#include "patchsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace patchsim {

namespace {

struct HullTriangle {
  int a, b, c;
  Vector3d normal;   // outward unit
  double offset;     // normal . x = offset on the plane
  std::vector<int> outside;
  bool alive = true;

  double distance(const Vector3d& p) const { return normal.dot(p) - offset; }
};

// Plane through three points, oriented away from the given interior point.
bool triangle_plane(const Vector3d& pa, const Vector3d& pb, const Vector3d& pc,
                    const Vector3d& interior, Vector3d& normal,
                    double& offset) {
  Vector3d n = (pb - pa).cross(pc - pa);
  const double len = n.norm();
  if (len <= 0.0) return false;
  n /= len;
  double d = n.dot(pa);
  if (n.dot(interior) - d > 0.0) {
    n = -n;
    d = -d;
  }
  normal = n;
  offset = d;
  return true;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); }
  void merge(int i, int j) { parent[find(i)] = find(j); }
};

bool lex_less(const Vector3d& a, const Vector3d& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

}  // namespace

double ConvexPolytope::max_facet_value(const Vector3d& body_point) const {
  double m = -std::numeric_limits<double>::infinity();
  for (const Facet& f : facets) m = std::max(m, f.value(body_point));
  return m;
}

void SupportPlane::validate() const {
  if (std::abs(normal.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("SupportPlane: normal must be unit length");
  }
  if (!std::isfinite(offset)) {
    throw std::invalid_argument("SupportPlane: offset must be finite");
  }
}

ContactFrame ContactFrame::from_plane(const SupportPlane& plane) {
  const Vector3d n = plane.normal;
  const Vector3d h =
      std::abs(n.x()) < 0.9 ? Vector3d(1, 0, 0) : Vector3d(0, 1, 0);
  Vector3d t = h - h.dot(n) * n;
  t.normalize();
  const Vector3d o = n.cross(t);
  return {n, t, o};
}

ConvexPolytope convex_hull(const std::vector<Vector3d>& input_points) {
  // Drop exact-ish duplicates; they contribute nothing and break simplex
  // selection.
  std::vector<Vector3d> pts;
  pts.reserve(input_points.size());
  for (const Vector3d& p : input_points) {
    if (!p.allFinite()) {
      throw DegenerateGeometryError("convex_hull: non-finite input point");
    }
    bool dup = false;
    for (const Vector3d& q : pts) {
      if ((p - q).lpNorm<Eigen::Infinity>() <= 1e-12) {
        dup = true;
        break;
      }
    }
    if (!dup) pts.push_back(p);
  }
  const int n = static_cast<int>(pts.size());
  if (n < 4) {
    throw DegenerateGeometryError(
        "convex_hull: need at least 4 distinct points");
  }

  double scale = 0.0;
  for (const Vector3d& p : pts) scale = std::max(scale, p.lpNorm<Eigen::Infinity>());
  scale = std::max(scale, 1e-3);
  const double eps_out = 1e-10 * scale;
  const double eps_degenerate = 1e-9 * scale;

  // Initial simplex: farthest axis-extreme pair, then farthest from the
  // line, then farthest from the plane.
  int i0 = 0, i1 = 0;
  {
    double best = -1.0;
    std::vector<int> extremes;
    for (int axis = 0; axis < 3; ++axis) {
      int lo = 0, hi = 0;
      for (int i = 1; i < n; ++i) {
        if (pts[i][axis] < pts[lo][axis]) lo = i;
        if (pts[i][axis] > pts[hi][axis]) hi = i;
      }
      extremes.push_back(lo);
      extremes.push_back(hi);
    }
    for (int a : extremes)
      for (int b : extremes) {
        const double d = (pts[a] - pts[b]).norm();
        if (d > best) {
          best = d;
          i0 = a;
          i1 = b;
        }
      }
    if (best <= eps_degenerate) {
      throw DegenerateGeometryError("convex_hull: all points coincide");
    }
  }
  int i2 = -1;
  {
    const Vector3d dir = (pts[i1] - pts[i0]).normalized();
    double best = eps_degenerate;
    for (int i = 0; i < n; ++i) {
      const Vector3d r = pts[i] - pts[i0];
      const double d = (r - r.dot(dir) * dir).norm();
      if (d > best) {
        best = d;
        i2 = i;
      }
    }
    if (i2 < 0) {
      throw DegenerateGeometryError("convex_hull: input points are collinear");
    }
  }
  int i3 = -1;
  {
    const Vector3d plane_n =
        (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
    double best = eps_degenerate;
    for (int i = 0; i < n; ++i) {
      const double d = std::abs(plane_n.dot(pts[i] - pts[i0]));
      if (d > best) {
        best = d;
        i3 = i;
      }
    }
    if (i3 < 0) {
      throw DegenerateGeometryError("convex_hull: input points are coplanar");
    }
  }

  const Vector3d interior =
      0.25 * (pts[i0] + pts[i1] + pts[i2] + pts[i3]);

  std::vector<HullTriangle> tris;
  auto add_triangle = [&](int a, int b, int c) -> int {
    HullTriangle t;
    t.a = a;
    t.b = b;
    t.c = c;
    if (!triangle_plane(pts[a], pts[b], pts[c], interior, t.normal, t.offset)) {
      throw DegenerateGeometryError("convex_hull: degenerate hull triangle");
    }
    tris.push_back(std::move(t));
    return static_cast<int>(tris.size()) - 1;
  };
  add_triangle(i0, i1, i2);
  add_triangle(i0, i1, i3);
  add_triangle(i0, i2, i3);
  add_triangle(i1, i2, i3);

  for (int i = 0; i < n; ++i) {
    if (i == i0 || i == i1 || i == i2 || i == i3) continue;
    for (HullTriangle& t : tris) {
      if (t.distance(pts[i]) > eps_out) {
        t.outside.push_back(i);
        break;
      }
    }
  }

  // Quickhull expansion. Visible set found by scanning all live triangles;
  // the horizon consists of directed edges whose reverse is not on a
  // visible triangle.
  std::vector<int> pending;
  for (int i = 0; i < static_cast<int>(tris.size()); ++i) {
    if (!tris[i].outside.empty()) pending.push_back(i);
  }
  while (!pending.empty()) {
    const int fi = pending.back();
    pending.pop_back();
    if (!tris[fi].alive || tris[fi].outside.empty()) continue;

    int far_idx = -1;
    double far_dist = -1.0;
    for (int pi : tris[fi].outside) {
      const double d = tris[fi].distance(pts[pi]);
      if (d > far_dist) {
        far_dist = d;
        far_idx = pi;
      }
    }
    const Vector3d& apex = pts[far_idx];

    std::vector<int> visible;
    for (int i = 0; i < static_cast<int>(tris.size()); ++i) {
      if (tris[i].alive && tris[i].distance(apex) > eps_out) {
        visible.push_back(i);
      }
    }

    std::vector<std::pair<int, int>> edges;
    for (int vi : visible) {
      const HullTriangle& t = tris[vi];
      edges.emplace_back(t.a, t.b);
      edges.emplace_back(t.b, t.c);
      edges.emplace_back(t.c, t.a);
    }
    auto is_visible_edge = [&edges](int a, int b) {
      return std::find(edges.begin(), edges.end(), std::make_pair(a, b)) !=
             edges.end();
    };

    std::vector<int> orphaned;
    for (int vi : visible) {
      tris[vi].alive = false;
      for (int pi : tris[vi].outside) {
        if (pi != far_idx) orphaned.push_back(pi);
      }
      tris[vi].outside.clear();
    }

    std::vector<int> created;
    for (const auto& [a, b] : edges) {
      if (is_visible_edge(b, a)) continue;  // interior to the visible patch
      created.push_back(add_triangle(a, b, far_idx));
    }

    for (int pi : orphaned) {
      for (int ci : created) {
        if (tris[ci].distance(pts[pi]) > eps_out) {
          tris[ci].outside.push_back(pi);
          break;
        }
      }
    }
    for (int ci : created) {
      if (!tris[ci].outside.empty()) pending.push_back(ci);
    }
  }

  std::vector<int> live;
  for (int i = 0; i < static_cast<int>(tris.size()); ++i) {
    if (tris[i].alive) live.push_back(i);
  }

  // Merge coplanar triangles into polygonal facets.
  UnionFind groups(static_cast<int>(live.size()));
  for (size_t i = 0; i < live.size(); ++i) {
    for (size_t j = i + 1; j < live.size(); ++j) {
      const HullTriangle& ti = tris[live[i]];
      const HullTriangle& tj = tris[live[j]];
      if ((ti.normal - tj.normal).norm() <= 1e-9 &&
          std::abs(ti.offset - tj.offset) <= 1e-9) {
        groups.merge(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }

  // Hull vertices = union of live triangle corners, sorted canonically.
  std::vector<int> vertex_ids;
  for (int li : live) {
    vertex_ids.push_back(tris[li].a);
    vertex_ids.push_back(tris[li].b);
    vertex_ids.push_back(tris[li].c);
  }
  std::sort(vertex_ids.begin(), vertex_ids.end());
  vertex_ids.erase(std::unique(vertex_ids.begin(), vertex_ids.end()),
                   vertex_ids.end());

  ConvexPolytope poly;
  for (int vi : vertex_ids) poly.vertices.push_back(pts[vi]);
  std::sort(poly.vertices.begin(), poly.vertices.end(), lex_less);

  std::vector<int> roots;
  for (size_t i = 0; i < live.size(); ++i) {
    const int r = groups.find(static_cast<int>(i));
    if (std::find(roots.begin(), roots.end(), r) == roots.end()) {
      roots.push_back(r);
    }
  }
  for (int r : roots) {
    Vector3d weighted = Vector3d::Zero();
    for (size_t i = 0; i < live.size(); ++i) {
      if (groups.find(static_cast<int>(i)) != r) continue;
      const HullTriangle& t = tris[live[i]];
      const double area_x2 =
          (pts[t.b] - pts[t.a]).cross(pts[t.c] - pts[t.a]).norm();
      weighted += area_x2 * t.normal;
    }
    Facet f;
    f.normal = weighted.normalized();
    // Supporting offset over the hull vertices so every vertex satisfies
    // the inequality exactly.
    f.offset = -std::numeric_limits<double>::infinity();
    for (const Vector3d& v : poly.vertices) {
      f.offset = std::max(f.offset, f.normal.dot(v));
    }
    poly.facets.push_back(f);
  }
  std::sort(poly.facets.begin(), poly.facets.end(),
            [](const Facet& a, const Facet& b) {
              if (a.normal.x() != b.normal.x()) return a.normal.x() < b.normal.x();
              if (a.normal.y() != b.normal.y()) return a.normal.y() < b.normal.y();
              if (a.normal.z() != b.normal.z()) return a.normal.z() < b.normal.z();
              return a.offset < b.offset;
            });

  // Consistency checks; failures here mean the input was near-degenerate.
  for (const Vector3d& p : pts) {
    if (poly.max_facet_value(p) > 1e-10 * std::max(1.0, scale)) {
      throw DegenerateGeometryError(
          "convex_hull: input point escapes the facet intersection");
    }
  }
  for (const Facet& f : poly.facets) {
    int incident = 0;
    for (const Vector3d& v : poly.vertices) {
      if (std::abs(f.value(v)) <= 1e-10) ++incident;
    }
    if (incident < 3) {
      throw DegenerateGeometryError(
          "convex_hull: facet with fewer than 3 incident vertices");
    }
  }
  return poly;
}

WorldFacetEval world_facet(const ConvexPolytope& poly, int facet_index,
                           const Pose& pose, const Vector3d& x_world) {
  const Facet& f = poly.facets.at(static_cast<size_t>(facet_index));
  const Matrix3d r = rotation(pose.orientation);
  const Vector3d rel = x_world - pose.position;
  const Vector3d world_normal = r * f.normal;

  WorldFacetEval out;
  out.value = world_normal.dot(rel) - f.offset;
  out.grad_x = world_normal;
  out.grad_q.head<3>() = -world_normal;
  const auto dr = rotation_derivatives(pose.orientation);
  for (int j = 0; j < 4; ++j) {
    out.grad_q[3 + j] = (dr[j] * f.normal).dot(rel);
  }
  return out;
}

MinGapVertex min_gap_vertex(const ConvexPolytope& poly, const Pose& pose,
                            const SupportPlane& plane) {
  const Matrix3d r = rotation(pose.orientation);
  MinGapVertex best{-1, std::numeric_limits<double>::infinity()};
  for (int i = 0; i < poly.vertex_count(); ++i) {
    const double g = plane.gap(r * poly.vertices[i] + pose.position);
    if (g < best.gap) {
      best = {i, g};
    }
  }
  return best;
}

std::vector<int> min_gap_vertex_ties(const ConvexPolytope& poly,
                                     const Pose& pose,
                                     const SupportPlane& plane,
                                     double tie_eps) {
  const MinGapVertex best = min_gap_vertex(poly, pose, plane);
  const Matrix3d r = rotation(pose.orientation);
  std::vector<int> ties;
  for (int i = 0; i < poly.vertex_count(); ++i) {
    const double g = plane.gap(r * poly.vertices[i] + pose.position);
    if (g <= best.gap + tie_eps) ties.push_back(i);
  }
  return ties;
}

}  // namespace patchsim
