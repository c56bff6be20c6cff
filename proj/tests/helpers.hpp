#pragma once

// Scene builders shared by the unit tests. Objects are placed directly in
// the gravity-aligned frame and the camera sits behind the scene looking
// level along +Z, so the viewer axes are exact: forward (0,0,1), up (0,1,0),
// right (-1,0,0).

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "core/geometry.hpp"
#include "core/scene.hpp"

namespace spatialref::testing {

inline CameraIntrinsics test_intrinsics(int w = 640, int h = 480) {
  CameraIntrinsics k;
  k.fx = k.fy = 0.9 * w;
  k.cx = w / 2.0;
  k.cy = h / 2.0;
  k.width = w;
  k.height = h;
  return k;
}

inline Mat3 yaw_rotation(double deg) {
  return Eigen::AngleAxisd(deg * M_PI / 180.0, Vec3(0, 1, 0)).toRotationMatrix();
}

// Camera at (0, eye_y, eye_z) in the gravity frame, optical axis along +Z.
// Camera axes in gravity coordinates: right (-1,0,0), down (0,-1,0),
// forward (0,0,1).
inline SceneFrame level_scene(double eye_y = 0.9, double eye_z = -2.5) {
  SceneFrame scene;
  scene.frame_id = "test-frame";
  scene.intrinsics = test_intrinsics();
  scene.extrinsics.rotation.col(0) = Vec3(-1, 0, 0);
  scene.extrinsics.rotation.col(1) = Vec3(0, -1, 0);
  scene.extrinsics.rotation.col(2) = Vec3(0, 0, 1);
  scene.extrinsics.translation = Vec3(0, eye_y, eye_z);
  scene.depth_ref = "none.depth";
  return scene;
}

inline void fill_depth(SceneFrame& scene, float meters = 2.0f) {
  scene.depth.width = scene.intrinsics.width;
  scene.depth.height = scene.intrinsics.height;
  scene.depth.meters.assign(size_t(scene.depth.width) * scene.depth.height,
                            meters);
}

// Adds a box with the given gravity-frame pose. box2d is the clamped hull of
// the projected corners. `orientation_gravity`, when given, is stored on the
// object converted to the camera frame.
inline ObjectInstance& add_box(
    SceneFrame& scene, const std::string& id, const std::string& category,
    const Vec3& center, const Vec3& half_extents, double yaw_deg = 0.0,
    const std::string& color = "",
    std::optional<Vec3> orientation_gravity = std::nullopt) {
  ObjectInstance obj;
  obj.id = id;
  obj.category = category;
  if (!color.empty()) {
    obj.color = color;
    obj.caption = "the " + color + " " + category;
  }
  obj.obb.center = center;
  obj.obb.half_extents = half_extents;
  obj.obb.rotation = yaw_rotation(yaw_deg);

  RigidTransform cam = scene.camera_from_gravity();
  double u0 = 1e30, v0 = 1e30, u1 = -1e30, v1 = -1e30;
  for (const Vec3& c : obj.obb.corners()) {
    Vec3 p = cam.apply(c);
    if (p.z() <= 0.05) continue;
    PixelPoint px = project(p, scene.intrinsics);
    u0 = std::min(u0, px.u);
    v0 = std::min(v0, px.v);
    u1 = std::max(u1, px.u);
    v1 = std::max(v1, px.v);
  }
  const CameraIntrinsics& k = scene.intrinsics;
  if (u0 > u1) {  // nothing projected; park the box at the image center
    u0 = k.cx - 1;
    u1 = k.cx + 1;
    v0 = k.cy - 1;
    v1 = k.cy + 1;
  }
  obj.box2d = {std::clamp(u0, 0.0, k.width - 1.0),
               std::clamp(v0, 0.0, k.height - 1.0),
               std::clamp(u1, 0.0, k.width - 1.0),
               std::clamp(v1, 0.0, k.height - 1.0)};
  if (orientation_gravity) {
    obj.orientation = cam.rotation * orientation_gravity->normalized();
  }
  scene.objects.push_back(obj);
  return scene.objects.back();
}

// Unique-per-test scratch directory under the system temp root.
inline std::string temp_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("spatialref-test-" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace spatialref::testing
