#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace spatialref {

namespace {

constexpr double kEps = 1e-12;

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

// z-component of the 2D cross product (b - a) x (p - a).
double cross2(const Vec2& a, const Vec2& b, const Vec2& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

}  // namespace

void CameraIntrinsics::validate(const std::string& where) const {
  auto bad = [&](const std::string& field, const std::string& why) {
    throw ValidationError(where + "." + field + " " + why);
  };
  if (!std::isfinite(fx) || fx == 0.0) bad("fx", "must be finite and nonzero");
  if (!std::isfinite(fy) || fy == 0.0) bad("fy", "must be finite and nonzero");
  if (width < 1) bad("width", "must be >= 1");
  if (height < 1) bad("height", "must be >= 1");
  if (!std::isfinite(cx) || cx < 0 || cx >= width)
    bad("cx", "must lie within [0, width)");
  if (!std::isfinite(cy) || cy < 0 || cy >= height)
    bad("cy", "must lie within [0, height)");
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

void RigidTransform::validate(const std::string& where) const {
  Mat3 should_be_identity = rotation.transpose() * rotation;
  if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(rotation.determinant() - 1.0) > 1e-6) {
    throw ValidationError(where + ".rotation must be orthonormal with det +1");
  }
  if (!translation.allFinite())
    throw ValidationError(where + ".translation must be finite");
}

Vec3 backproject(const PixelPoint& px, double depth,
                 const CameraIntrinsics& k) {
  k.validate();
  if (px.u < 0 || px.u >= k.width || px.v < 0 || px.v >= k.height) {
    throw ValidationError("pixel (" + fmt_num(px.u) + ", " + fmt_num(px.v) +
                          ") outside image bounds " + std::to_string(k.width) +
                          "x" + std::to_string(k.height));
  }
  if (!std::isfinite(depth) || depth <= 0)
    throw ValidationError("depth must be positive, got " + fmt_num(depth));
  return {(px.u - k.cx) / k.fx * depth, (px.v - k.cy) / k.fy * depth, depth};
}

PixelPoint project(const Vec3& p, const CameraIntrinsics& k) {
  k.validate();
  if (!(p.z() > 0))
    throw ValidationError("point behind camera (z = " + fmt_num(p.z()) + ")");
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

Mat3 rotation_aligning_gravity(const Vec3& gravity_dir) {
  double n = gravity_dir.norm();
  if (n < kEps) throw ValidationError("gravity direction must be nonzero");
  Vec3 g = gravity_dir / n;
  const Vec3 down(0, -1, 0);
  double c = g.dot(down);
  if (c > 1.0 - 1e-14) return Mat3::Identity();
  if (c < -1.0 + 1e-14) {
    // 180 degrees about any axis orthogonal to `down`.
    return Eigen::AngleAxisd(M_PI, Vec3(1, 0, 0)).toRotationMatrix();
  }
  Vec3 axis = g.cross(down).normalized();
  return Eigen::AngleAxisd(std::acos(c), axis).toRotationMatrix();
}

double box_iou_2d(const Box2& a, const Box2& b) {
  if (!a.valid() || a.area() <= 0 || !b.valid() || b.area() <= 0)
    throw ValidationError("degenerate box in IoU");
  double ix = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  double iy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  double inter = std::max(0.0, ix) * std::max(0.0, iy);
  return inter / (a.area() + b.area() - inter);
}

// ---------------------------------------------------------------------------

Polygon convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a.x() == b.x() && a.y() == b.y();
                        }),
            pts.end());
  size_t n = pts.size();
  if (n < 3) return pts;
  Polygon hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {  // lower chain
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= kEps) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper chain
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i]) <= kEps) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

double polygon_area(const Polygon& poly) {
  if (poly.size() < 3) return 0.0;
  double s = 0;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    s += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(s) * 0.5;
}

Vec2 polygon_centroid(const Polygon& poly) {
  if (poly.empty()) throw ValidationError("centroid of empty polygon");
  double a2 = 0;
  Vec2 acc = Vec2::Zero();
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    double w = p.x() * q.y() - q.x() * p.y();
    a2 += w;
    acc += (p + q) * w;
  }
  if (std::abs(a2) < kEps) {  // degenerate: fall back to the vertex mean
    Vec2 m = Vec2::Zero();
    for (const Vec2& p : poly) m += p;
    return m / double(poly.size());
  }
  return acc / (3.0 * a2);
}

bool point_in_convex(const Polygon& poly, const Vec2& p, double pad) {
  if (poly.size() < 3) return false;
  for (size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    double len = (b - a).norm();
    if (len < kEps) continue;
    if (cross2(a, b, p) / len < -pad) return false;
  }
  return true;
}

Polygon clip_halfplane(const Polygon& poly, const Vec2& n, double c) {
  Polygon out;
  size_t count = poly.size();
  for (size_t i = 0; i < count; ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % count];
    double dc = n.dot(cur) - c;
    double dn = n.dot(nxt) - c;
    if (dc <= 0) out.push_back(cur);
    if ((dc < 0 && dn > 0) || (dc > 0 && dn < 0)) {
      double t = dc / (dc - dn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out.size() >= 3 ? out : Polygon{};
}

Polygon convex_intersect(const Polygon& subject, const Polygon& clip) {
  if (subject.size() < 3 || clip.size() < 3) return {};
  Polygon out = subject;
  for (size_t i = 0; i < clip.size() && !out.empty(); ++i) {
    const Vec2& a = clip[i];
    const Vec2& b = clip[(i + 1) % clip.size()];
    // Inside of a CCW edge (a->b) is the left side: cross2 >= 0, i.e.
    // dot(normal, p) <= dot(normal, a) with normal = (dy, -dx).
    Vec2 n(b.y() - a.y(), -(b.x() - a.x()));
    out = clip_halfplane(out, n, n.dot(a));
  }
  return out;
}

Polygon scale_about_centroid(const Polygon& poly, double factor) {
  if (poly.empty()) return poly;
  Vec2 c = polygon_centroid(poly);
  Polygon out;
  out.reserve(poly.size());
  for (const Vec2& p : poly) out.push_back(c + factor * (p - c));
  return out;
}

double polygon_diameter(const Polygon& poly) {
  double best = 0;
  for (size_t i = 0; i < poly.size(); ++i)
    for (size_t j = i + 1; j < poly.size(); ++j)
      best = std::max(best, (poly[i] - poly[j]).norm());
  return best;
}

Box2 polygon_bounds(const Polygon& poly) {
  if (poly.empty()) throw ValidationError("bounds of empty polygon");
  Box2 b{poly[0].x(), poly[0].y(), poly[0].x(), poly[0].y()};
  for (const Vec2& p : poly) {
    b.x0 = std::min(b.x0, p.x());
    b.x1 = std::max(b.x1, p.x());
    b.y0 = std::min(b.y0, p.y());
    b.y1 = std::max(b.y1, p.y());
  }
  return b;
}

// ---------------------------------------------------------------------------

std::vector<Vec3> OrientedBox3::corners() const {
  std::vector<Vec3> out;
  out.reserve(8);
  for (int sx : {-1, 1})
    for (int sy : {-1, 1})
      for (int sz : {-1, 1})
        out.push_back(center + rotation * Vec3(sx * half_extents.x(),
                                               sy * half_extents.y(),
                                               sz * half_extents.z()));
  return out;
}

double OrientedBox3::half_extent_along(const Vec3& d) const {
  double r = 0;
  for (int i = 0; i < 3; ++i)
    r += half_extents[i] * std::abs(d.dot(rotation.col(i)));
  return r;
}

double OrientedBox3::top() const {
  return center.y() + half_extent_along(Vec3(0, 1, 0));
}

double OrientedBox3::bottom() const {
  return center.y() - half_extent_along(Vec3(0, 1, 0));
}

bool OrientedBox3::contains(const Vec3& p, double pad) const {
  Vec3 local = rotation.transpose() * (p - center);
  for (int i = 0; i < 3; ++i)
    if (std::abs(local[i]) > half_extents[i] + pad) return false;
  return true;
}

void OrientedBox3::validate(const std::string& where) const {
  if (!(half_extents.minCoeff() > 0) || !half_extents.allFinite())
    throw ValidationError(where + ".half_extents must be positive");
  RigidTransform rt;
  rt.rotation = rotation;
  rt.validate(where);
  if (!center.allFinite())
    throw ValidationError(where + ".center must be finite");
}

Polygon footprint(const OrientedBox3& box) {
  std::vector<Vec2> pts;
  pts.reserve(8);
  for (const Vec3& c : box.corners()) pts.push_back({c.x(), c.z()});
  return convex_hull(std::move(pts));
}

double footprint_diagonal(const OrientedBox3& box) {
  return polygon_diameter(footprint(box));
}

double footprint_overlap_ratio(const OrientedBox3& subject,
                               const Polygon& support) {
  Polygon sub = footprint(subject);
  double a = polygon_area(sub);
  if (a <= 0) throw ValidationError("subject footprint has zero area");
  return polygon_area(convex_intersect(sub, support)) / a;
}

bool obb_intersects(const OrientedBox3& a, const OrientedBox3& b) {
  // Separating-axis test over the 15 candidate axes.
  Vec3 d = b.center - a.center;
  std::vector<Vec3> axes;
  axes.reserve(15);
  for (int i = 0; i < 3; ++i) axes.push_back(a.rotation.col(i));
  for (int i = 0; i < 3; ++i) axes.push_back(b.rotation.col(i));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Vec3 c = a.rotation.col(i).cross(b.rotation.col(j));
      if (c.norm() > 1e-9) axes.push_back(c.normalized());
    }
  for (const Vec3& axis : axes) {
    double gap = std::abs(d.dot(axis)) - a.half_extent_along(axis) -
                 b.half_extent_along(axis);
    if (gap > 0) return false;
  }
  return true;
}

namespace {

struct Segment {
  Vec3 a, b;
};

std::vector<Segment> box_edges(const OrientedBox3& box) {
  std::vector<Segment> edges;
  edges.reserve(12);
  const Vec3& h = box.half_extents;
  for (int axis = 0; axis < 3; ++axis) {
    int u = (axis + 1) % 3, v = (axis + 2) % 3;
    for (int su : {-1, 1})
      for (int sv : {-1, 1}) {
        Vec3 local_a, local_b;
        local_a[axis] = -h[axis];
        local_b[axis] = h[axis];
        local_a[u] = local_b[u] = su * h[u];
        local_a[v] = local_b[v] = sv * h[v];
        edges.push_back({box.center + box.rotation * local_a,
                         box.center + box.rotation * local_b});
      }
  }
  return edges;
}

double segment_segment_distance(const Segment& s1, const Segment& s2) {
  // Closest points between segments (Ericson, Real-Time Collision Detection).
  Vec3 d1 = s1.b - s1.a, d2 = s2.b - s2.a, r = s1.a - s2.a;
  double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s, t;
  if (a <= kEps && e <= kEps) return r.norm();
  if (a <= kEps) {
    s = 0;
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    double c = d1.dot(r);
    if (e <= kEps) {
      t = 0;
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      double b = d1.dot(d2);
      double denom = a * e - b * b;
      s = denom > kEps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((s1.a + s * d1) - (s2.a + t * d2)).norm();
}

double point_to_box_faces(const Vec3& p, const OrientedBox3& box) {
  // Distance from p to the nearest point of the box surface (clamped local
  // coordinates give the closest point on the solid box; for outside points
  // that is on the surface).
  Vec3 local = box.rotation.transpose() * (p - box.center);
  Vec3 clamped = local.cwiseMax(-box.half_extents).cwiseMin(box.half_extents);
  return (local - clamped).norm();
}

}  // namespace

double obb_distance(const OrientedBox3& a, const OrientedBox3& b) {
  if (obb_intersects(a, b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& c : a.corners()) best = std::min(best, point_to_box_faces(c, b));
  for (const Vec3& c : b.corners()) best = std::min(best, point_to_box_faces(c, a));
  auto ea = box_edges(a), eb = box_edges(b);
  for (const Segment& s1 : ea)
    for (const Segment& s2 : eb)
      best = std::min(best, segment_segment_distance(s1, s2));
  return best;
}

// ---------------------------------------------------------------------------

std::vector<Vec3> point_cloud_from_mask(const DepthMap& depth,
                                        const Mask& mask,
                                        const CameraIntrinsics& k) {
  k.validate();
  if (depth.width != k.width || depth.height != k.height)
    throw ValidationError("depth dimensions do not match intrinsics");
  if (mask.width != depth.width || mask.height != depth.height)
    throw ValidationError("mask dimensions do not match depth");
  std::vector<Vec3> cloud;
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x)
      if (mask.at(x, y) && depth.valid_at(x, y))
        cloud.push_back(backproject({double(x), double(y)}, depth.at(x, y), k));
  return cloud;
}

int OccupancyMap::index_of(double x, double z) const {
  int ix = int(std::floor((x - origin_x) / cell_size));
  int iz = int(std::floor((z - origin_z) / cell_size));
  if (ix < 0 || ix >= nx || iz < 0 || iz >= nz) return -1;
  return iz * nx + ix;
}

CellState OccupancyMap::state_at(double x, double z) const {
  int i = index_of(x, z);
  return i < 0 ? CellState::OutsidePlatform : cells[i];
}

OccupancyMap build_occupancy_map(const Polygon& platform,
                                 const std::vector<FootprintRef>& occupiers,
                                 double cell_size) {
  if (cell_size <= 0) throw ValidationError("cell_size must be positive");
  if (platform.size() < 3 || polygon_area(platform) <= 0)
    throw ValidationError("platform footprint must have positive area");
  Box2 bounds = polygon_bounds(platform);
  double w = bounds.x1 - bounds.x0, h = bounds.y1 - bounds.y0;
  if (cell_size > w || cell_size > h)
    throw ValidationError("cell_size exceeds the platform extent");

  OccupancyMap map;
  map.origin_x = bounds.x0;
  map.origin_z = bounds.y0;
  map.cell_size = cell_size;
  map.nx = int(std::ceil(w / cell_size));
  map.nz = int(std::ceil(h / cell_size));
  map.cells.assign(size_t(map.nx) * map.nz, CellState::OutsidePlatform);
  map.occupants.assign(map.cells.size(), {});

  for (int iz = 0; iz < map.nz; ++iz) {
    for (int ix = 0; ix < map.nx; ++ix) {
      Vec2 c = map.cell_center(ix, iz);
      if (!point_in_convex(platform, c)) continue;
      size_t idx = size_t(iz) * map.nx + ix;
      map.cells[idx] = CellState::Free;
      for (const FootprintRef& occ : occupiers) {
        if (point_in_convex(occ.shape, c)) {
          map.cells[idx] = CellState::Occupied;
          map.occupants[idx].push_back(occ.id);
        }
      }
      std::sort(map.occupants[idx].begin(), map.occupants[idx].end());
    }
  }
  return map;
}

}  // namespace spatialref
