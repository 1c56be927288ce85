#pragma once

// Blocked-region construction for cuboid buildings.
//
// For an observer (BS or UE antenna) below the roof of a building, the set of
// points whose line of sight to the observer passes through the building is,
// above roof level, the convex cone spanned by the observer and the building's
// silhouette. It is stored as an intersection of halfspaces a.x - b <= 0, one
// per silhouette edge: the roof edges of the visible flank faces and the two
// outermost vertical edges.

#include <uavrelay/core.hpp>

#include <Eigen/Dense>

#include <array>
#include <limits>
#include <optional>
#include <vector>

namespace uavrelay::geometry {

/// Index used in BlockedRegion::observer for the base station.
inline constexpr int kBaseStation = -1;

enum class Face { PosX, NegX, PosY, NegY };

inline const char* to_string(Face f) {
  switch (f) {
    case Face::PosX: return "+x";
    case Face::NegX: return "-x";
    case Face::PosY: return "+y";
    case Face::NegY: return "-y";
  }
  return "?";
}

/// a.x - b <= 0 describes the inside; `normal` has unit length and points outward.
struct Halfspace {
  Point normal = Point::Zero();
  double offset = 0.0;

  double eval(const Point& x) const { return normal.dot(x) - offset; }
};

struct BlockedRegion {
  std::vector<Halfspace> halfspaces;
  int observer = kBaseStation;  // kBaseStation or a UE index
  int building = -1;

  /// An empty halfspace list encodes the empty set (observer above the roof).
  bool empty() const { return halfspaces.empty(); }
  int size() const { return static_cast<int>(halfspaces.size()); }

  /// Largest constraint value; <= 0 means inside the closed region.
  double depth(const Point& x) const {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& h : halfspaces) v = std::max(v, h.eval(x));
    return v;
  }
  /// Conservative membership: points within `eps` of the boundary count as inside.
  bool contains(const Point& x, double eps) const { return !empty() && depth(x) <= eps; }
};

namespace detail {

struct FaceInfo {
  Face face;
  Point normal;
  Point centroid;
  std::array<Eigen::Vector2d, 2> corners;
};

inline std::array<FaceInfo, 4> flank_faces(const Building& b) {
  const double zc = 0.5 * b.height;
  const Eigen::Vector2d c00(b.x_min(), b.y_min()), c10(b.x_max(), b.y_min());
  const Eigen::Vector2d c01(b.x_min(), b.y_max()), c11(b.x_max(), b.y_max());
  return {{
      {Face::PosX, Point(1, 0, 0), Point(b.x_max(), b.center_y, zc), {c10, c11}},
      {Face::NegX, Point(-1, 0, 0), Point(b.x_min(), b.center_y, zc), {c00, c01}},
      {Face::PosY, Point(0, 1, 0), Point(b.center_x, b.y_max(), zc), {c01, c11}},
      {Face::NegY, Point(0, -1, 0), Point(b.center_x, b.y_min(), zc), {c00, c10}},
  }};
}

/// Plane through the observer and the edge (p, q), oriented so `inside` is on the negative side.
inline Halfspace plane_through(const Point& observer, const Point& p, const Point& q, const Point& inside) {
  Point n = (p - observer).cross(q - observer);
  const double len = n.norm();
  const double scale = std::max({(p - observer).norm(), (q - observer).norm(), 1.0});
  if (len <= 1e-12 * scale * scale) throw ConstructionError("observer collinear with a building edge");
  n /= len;
  if (n.dot(inside - observer) > 0.0) n = -n;
  return {n, n.dot(observer)};
}

}  // namespace detail

/// Flank faces of `b` visible from `observer`: a face is visible iff its outward
/// normal has a negative inner product with the vector from the observer to the
/// face centroid.
inline std::vector<Face> visible_faces(const Building& b, const Point& observer) {
  validate(b);
  if (observer.z() < 0.0) throw DegenerateObserverError("observer below ground");
  if (b.footprint_contains(observer.x(), observer.y()))
    throw DegenerateObserverError("observer inside or on the wall of a building footprint");
  std::vector<Face> out;
  for (const auto& f : detail::flank_faces(b))
    if (f.normal.dot(f.centroid - observer) < 0.0) out.push_back(f.face);
  return out;
}

/// Region of points hidden from `observer` by building `b`; empty when the
/// observer is at or above the roof.
inline BlockedRegion blocked_region(const Building& b, const Point& observer, int building_id = -1,
                                    int observer_id = kBaseStation) {
  BlockedRegion region;
  region.observer = observer_id;
  region.building = building_id;
  validate(b);
  if (observer.z() >= b.height) return region;

  const auto faces = visible_faces(b, observer);
  const auto all = detail::flank_faces(b);
  const Point inside = b.center();

  std::vector<Eigen::Vector2d> corners;
  for (Face f : faces) {
    const auto& info = all[static_cast<int>(f)];
    const Point p(info.corners[0].x(), info.corners[0].y(), b.height);
    const Point q(info.corners[1].x(), info.corners[1].y(), b.height);
    region.halfspaces.push_back(detail::plane_through(observer, p, q, inside));
    corners.push_back(info.corners[0]);
    corners.push_back(info.corners[1]);
  }
  // A corner shared by two visible faces is interior to the silhouette.
  for (const auto& c : corners) {
    if (std::count(corners.begin(), corners.end(), c) != 1) continue;
    region.halfspaces.push_back(
        detail::plane_through(observer, Point(c.x(), c.y(), 0.0), Point(c.x(), c.y(), b.height), inside));
  }
  return region;
}

/// Blocked regions of every (observer, building) pair of a scenario; empty regions are skipped.
inline std::vector<BlockedRegion> build_regions(const Scenario& s) {
  std::vector<BlockedRegion> out;
  auto add = [&](const Point& obs, int obs_id) {
    for (int m = 0; m < static_cast<int>(s.buildings.size()); ++m) {
      auto r = blocked_region(s.buildings[m], obs, m, obs_id);
      if (!r.empty()) out.push_back(std::move(r));
    }
  };
  add(s.bs, kBaseStation);
  for (int k = 0; k < s.num_users(); ++k) add(s.ues[k], k);
  return out;
}

inline bool is_blocked(const Point& x, const std::vector<BlockedRegion>& regions, double eps) {
  for (const auto& r : regions)
    if (r.contains(x, eps)) return true;
  return false;
}

/// True iff the closed cuboid intersects the open segment (p, q).
inline bool segment_hits(const Point& p, const Point& q, const Building& b) {
  const Point lo(b.x_min(), b.y_min(), 0.0), hi(b.x_max(), b.y_max(), b.height);
  const Point d = q - p;
  double t0 = 0.0, t1 = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (p[a] < lo[a] || p[a] > hi[a]) return false;
      continue;
    }
    double ta = (lo[a] - p[a]) / d[a], tb = (hi[a] - p[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return t1 > 0.0 && t0 < 1.0;
}

/// Line of sight between two points: no building intersects the segment.
inline bool line_of_sight(const Point& p, const Point& q, const std::vector<Building>& buildings) {
  for (const auto& b : buildings)
    if (segment_hits(p, q, b)) return false;
  return true;
}

/// Vertices of `region` intersected with the deployment box. An empty result
/// means the clipped region is empty.
inline std::vector<Point> clipped_vertices(const BlockedRegion& region, const AreaBounds& bounds) {
  std::vector<Halfspace> planes = region.halfspaces;
  planes.push_back({Point(1, 0, 0), bounds.x_extent});
  planes.push_back({Point(-1, 0, 0), 0.0});
  planes.push_back({Point(0, 1, 0), bounds.y_extent});
  planes.push_back({Point(0, -1, 0), 0.0});
  planes.push_back({Point(0, 0, 1), bounds.h_max});
  planes.push_back({Point(0, 0, -1), -bounds.h_min});

  const double tol = 1e-9 * std::max({bounds.x_extent, bounds.y_extent, bounds.h_max});
  std::vector<Point> verts;
  const int n = static_cast<int>(planes.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Eigen::Matrix3d A;
        A.row(0) = planes[i].normal.transpose();
        A.row(1) = planes[j].normal.transpose();
        A.row(2) = planes[k].normal.transpose();
        if (std::abs(A.determinant()) < 1e-10) continue;
        const Point v = A.partialPivLu().solve(Point(planes[i].offset, planes[j].offset, planes[k].offset));
        bool ok = true;
        for (const auto& h : planes)
          if (h.eval(v) > tol) {
            ok = false;
            break;
          }
        if (ok) verts.push_back(v);
      }
  return verts;
}

/// Drops every region contained (within the deployment box) in another retained
/// region. Containment is certified on the vertices of the clipped region.
inline std::vector<BlockedRegion> prune_redundant(const std::vector<BlockedRegion>& regions,
                                                  const AreaBounds& bounds) {
  const double eps = bounds.geo_epsilon();
  const int n = static_cast<int>(regions.size());
  std::vector<std::vector<Point>> verts(n);
  for (int i = 0; i < n; ++i) verts[i] = clipped_vertices(regions[i], bounds);

  std::vector<bool> removed(n, false);
  for (int j = 0; j < n; ++j) {
    if (verts[j].empty()) {
      removed[j] = true;
      continue;
    }
    for (int k = 0; k < n && !removed[j]; ++k) {
      if (k == j || removed[k] || regions[k].empty()) continue;
      bool inside = true;
      for (const auto& v : verts[j])
        if (!regions[k].contains(v, eps)) {
          inside = false;
          break;
        }
      if (inside) removed[j] = true;
    }
  }
  std::vector<BlockedRegion> out;
  for (int i = 0; i < n; ++i)
    if (!removed[i]) out.push_back(regions[i]);
  return out;
}

/// Big-M constant: five times the largest value of b - a.x over the deployment box.
inline double big_m(const std::vector<BlockedRegion>& regions, const AreaBounds& bounds) {
  const Point lo = bounds.lower(), hi = bounds.upper();
  double worst = 0.0;
  for (const auto& r : regions)
    for (const auto& h : r.halfspaces) {
      double min_ax = 0.0;
      for (int d = 0; d < 3; ++d) min_ax += std::min(h.normal[d] * lo[d], h.normal[d] * hi[d]);
      worst = std::max(worst, h.offset - min_ax);
    }
  return 5.0 * worst;
}

}  // namespace uavrelay::geometry
