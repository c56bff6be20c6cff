#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spatialref {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Camera frame: +X right, +Y down, +Z forward.
// Gravity-aligned frame: +Y up, object footprints live on the XZ plane.

struct CameraIntrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  // Throws ValidationError naming the offending field, prefixed by `where`.
  void validate(const std::string& where = "intrinsics") const;
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;
  // (a.compose(b)) maps p to a(b(p)).
  RigidTransform compose(const RigidTransform& other) const;
  void validate(const std::string& where) const;  // rotation orthonormality
};

struct PixelPoint {
  double u = 0, v = 0;
};

// (u,v) in pixels + metric depth -> camera-frame 3D point.
Vec3 backproject(const PixelPoint& px, double depth,
                 const CameraIntrinsics& k);

// Camera-frame point (z > 0) -> pixel coordinates.
PixelPoint project(const Vec3& p, const CameraIntrinsics& k);

// Rotation taking direction g to (0,-1,0); used to build gravity alignments.
Mat3 rotation_aligning_gravity(const Vec3& gravity_dir);

// Axis-aligned 2D box [x0,y0,x1,y1] with x0<=x1, y0<=y1.
struct Box2 {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double area() const { return (x1 - x0) * (y1 - y0); }
  bool valid() const { return x0 <= x1 && y0 <= y1; }
  double cx() const { return 0.5 * (x0 + x1); }
  double cy() const { return 0.5 * (y0 + y1); }
};

// Intersection-over-union of two boxes; degenerate boxes rejected.
double box_iou_2d(const Box2& a, const Box2& b);

// ---------------------------------------------------------------------------
// Convex polygons on the gravity-aligned ground plane, vertices (x, z), CCW.

using Polygon = std::vector<Vec2>;

Polygon convex_hull(std::vector<Vec2> points);
double polygon_area(const Polygon& poly);
Vec2 polygon_centroid(const Polygon& poly);
// True if p is inside or on the boundary (within `pad` of it; pad may be
// negative to require interior clearance).
bool point_in_convex(const Polygon& poly, const Vec2& p, double pad = 0.0);
// Intersection of two convex polygons (Sutherland-Hodgman); may be empty.
Polygon convex_intersect(const Polygon& subject, const Polygon& clip);
// Clips to the half-plane {p : dot(p, n) <= c}.
Polygon clip_halfplane(const Polygon& poly, const Vec2& n, double c);
// Uniform scale about the area centroid.
Polygon scale_about_centroid(const Polygon& poly, double factor);
// Largest vertex-to-vertex distance (footprint "diagonal").
double polygon_diameter(const Polygon& poly);
Box2 polygon_bounds(const Polygon& poly);

// ---------------------------------------------------------------------------

// Box with arbitrary rotation; columns of `rotation` are the local axes.
struct OrientedBox3 {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  std::vector<Vec3> corners() const;  // 8 corners
  double volume() const {
    return 8.0 * half_extents.x() * half_extents.y() * half_extents.z();
  }
  // Half the extent of the box along unit direction d.
  double half_extent_along(const Vec3& d) const;
  double top() const;     // max Y over corners
  double bottom() const;  // min Y over corners
  bool contains(const Vec3& p, double pad = 0.0) const;
  void validate(const std::string& where) const;
};

// Convex hull of the corners projected to the XZ plane.
Polygon footprint(const OrientedBox3& box);
double footprint_diagonal(const OrientedBox3& box);

// area(footprint(subject) ∩ support) / area(footprint(subject)).
double footprint_overlap_ratio(const OrientedBox3& subject,
                               const Polygon& support);

bool obb_intersects(const OrientedBox3& a, const OrientedBox3& b);
// Minimum surface-to-surface gap; 0 when the boxes touch or interpenetrate.
double obb_distance(const OrientedBox3& a, const OrientedBox3& b);

// ---------------------------------------------------------------------------

// Metric depth in meters; values <= 0 or non-finite are invalid.
struct DepthMap {
  int width = 0, height = 0;
  std::vector<float> meters;  // row-major

  float at(int x, int y) const { return meters[size_t(y) * width + x]; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  bool valid_at(int x, int y) const {
    float d = at(x, y);
    return std::isfinite(d) && d > 0.0f;
  }
};

// Bilevel image; nonzero = foreground.
struct Mask {
  int width = 0, height = 0;
  std::vector<uint8_t> on;  // row-major

  bool at(int x, int y) const { return on[size_t(y) * width + x] != 0; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
};

// Camera-frame points for every masked pixel with valid depth, row-major.
std::vector<Vec3> point_cloud_from_mask(const DepthMap& depth,
                                        const Mask& mask,
                                        const CameraIntrinsics& k);

// ---------------------------------------------------------------------------
// Top-down occupancy over a platform footprint. A cell takes the state of its
// center point: outside the platform polygon, free, or occupied by the listed
// object footprints.

enum class CellState : uint8_t { OutsidePlatform = 0, Free = 1, Occupied = 2 };

struct OccupancyMap {
  double origin_x = 0, origin_z = 0;  // minimum corner of cell (0,0)
  double cell_size = 0;
  int nx = 0, nz = 0;
  std::vector<CellState> cells;  // nz * nx, index iz * nx + ix
  // Occupant ids per occupied cell, sorted; indexed like `cells`.
  std::vector<std::vector<std::string>> occupants;

  int index_of(double x, double z) const;  // -1 when off-grid
  CellState state_at(double x, double z) const;
  Vec2 cell_center(int ix, int iz) const {
    return {origin_x + (ix + 0.5) * cell_size, origin_z + (iz + 0.5) * cell_size};
  }
};

struct FootprintRef {
  std::string id;
  Polygon shape;
};

OccupancyMap build_occupancy_map(const Polygon& platform,
                                 const std::vector<FootprintRef>& occupiers,
                                 double cell_size);

}  // namespace spatialref
