#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/geometry.hpp"

namespace spatialref {

struct ObjectInstance {
  std::string id;
  std::string category;
  std::optional<std::string> color;
  std::optional<std::string> caption;
  Box2 box2d;  // pixels
  std::optional<std::string> mask_ref;
  OrientedBox3 obb;  // gravity-aligned frame
  std::optional<Vec3> orientation;  // unit vector, camera frame

  // Canonical 2D anchor for the object: the box2d center.
  PixelPoint representative_point2d() const { return {box2d.cx(), box2d.cy()}; }
};

// Horizontal axes of the viewer in the gravity-aligned frame. `forward`
// points away from the camera, `right` matches the camera's own right after
// projection onto the ground plane; up is +Y.
struct ViewerFrame {
  Vec3 camera_center = Vec3::Zero();
  Vec3 forward = Vec3(0, 0, 1);
  Vec3 right = Vec3(-1, 0, 0);
};

struct SceneFrame {
  std::string frame_id;
  CameraIntrinsics intrinsics;
  RigidTransform extrinsics;        // camera -> world
  RigidTransform gravity_rotation;  // world -> gravity-aligned
  std::string depth_ref;            // as written in the file
  std::string depth_path;           // resolved against the scene directory
  std::vector<ObjectInstance> objects;
  DepthMap depth;

  RigidTransform gravity_from_camera() const {
    return gravity_rotation.compose(extrinsics);
  }
  RigidTransform camera_from_gravity() const {
    return gravity_from_camera().inverse();
  }
  ViewerFrame viewer() const;

  const ObjectInstance* find(const std::string& id) const;
  // Throws ValidationError when the id is unknown.
  const ObjectInstance& get(const std::string& id) const;
  // Object orientation vector expressed in the gravity-aligned frame.
  Vec3 orientation_in_gravity(const ObjectInstance& obj) const;
};

// Parses and validates a scene; error messages name the offending field
// (e.g. "intrinsics.fx"). `base_dir` resolves depth/mask references.
SceneFrame parse_scene(const nlohmann::json& j, const std::string& base_dir);

// parse_scene + depth file load; depth dimensions must match intrinsics.
SceneFrame load_scene(const std::string& path);

nlohmann::json scene_to_json(const SceneFrame& scene);

}  // namespace spatialref
