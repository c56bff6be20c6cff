#include "core/scene.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include "core/errors.hpp"
#include "core/image_io.hpp"

namespace spatialref {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ValidationError("missing field: " + path + "." + key);
  return j.at(key);
}

double require_num(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number())
    throw ValidationError(path + "." + key + " must be a number");
  return v.get<double>();
}

std::string require_str(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_string())
    throw ValidationError(path + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> require_array(const json& j, const char* key,
                                  size_t count, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_array() || v.size() != count)
    throw ValidationError(path + "." + key + " must be an array of " +
                          std::to_string(count) + " numbers");
  std::vector<double> out;
  out.reserve(count);
  for (const json& e : v) {
    if (!e.is_number())
      throw ValidationError(path + "." + key + " must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

RigidTransform parse_transform(const json& j, const std::string& path) {
  RigidTransform t;
  std::vector<double> r = require_array(j, "rotation", 9, path);
  std::vector<double> tr = require_array(j, "translation", 3, path);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) t.rotation(row, col) = r[row * 3 + col];
  t.translation = Vec3(tr[0], tr[1], tr[2]);
  t.validate(path);
  return t;
}

json transform_to_json(const RigidTransform& t) {
  json j;
  std::vector<double> r(9);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) r[row * 3 + col] = t.rotation(row, col);
  j["rotation"] = r;
  j["translation"] = {t.translation.x(), t.translation.y(), t.translation.z()};
  return j;
}

ObjectInstance parse_object(const json& j, const std::string& path) {
  ObjectInstance obj;
  obj.id = require_str(j, "id", path);
  if (obj.id.empty()) throw ValidationError(path + ".id must be non-empty");
  obj.category = require_str(j, "category", path);
  if (obj.category.empty())
    throw ValidationError(path + ".category must be non-empty");
  if (j.contains("color") && !j.at("color").is_null())
    obj.color = require_str(j, "color", path);
  if (j.contains("caption") && !j.at("caption").is_null())
    obj.caption = require_str(j, "caption", path);
  if (j.contains("mask_ref") && !j.at("mask_ref").is_null())
    obj.mask_ref = require_str(j, "mask_ref", path);

  std::vector<double> b = require_array(j, "box2d", 4, path);
  obj.box2d = {b[0], b[1], b[2], b[3]};
  if (!obj.box2d.valid())
    throw ValidationError(path + ".box2d corners must be ordered");

  const json& ob = require(j, "obb", path);
  std::vector<double> c = require_array(ob, "center", 3, path + ".obb");
  std::vector<double> h = require_array(ob, "half_extents", 3, path + ".obb");
  std::vector<double> r = require_array(ob, "rotation", 9, path + ".obb");
  obj.obb.center = Vec3(c[0], c[1], c[2]);
  obj.obb.half_extents = Vec3(h[0], h[1], h[2]);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col)
      obj.obb.rotation(row, col) = r[row * 3 + col];
  obj.obb.validate(path + ".obb");

  if (j.contains("orientation") && !j.at("orientation").is_null()) {
    std::vector<double> o = require_array(j, "orientation", 3, path);
    Vec3 v(o[0], o[1], o[2]);
    if (std::abs(v.norm() - 1.0) > 1e-3)
      throw ValidationError(path + ".orientation must be a unit vector");
    obj.orientation = v.normalized();
  }
  return obj;
}

json object_to_json(const ObjectInstance& o) {
  json j;
  j["id"] = o.id;
  j["category"] = o.category;
  if (o.color) j["color"] = *o.color;
  if (o.caption) j["caption"] = *o.caption;
  j["box2d"] = {o.box2d.x0, o.box2d.y0, o.box2d.x1, o.box2d.y1};
  if (o.mask_ref) j["mask_ref"] = *o.mask_ref;
  json ob;
  ob["center"] = {o.obb.center.x(), o.obb.center.y(), o.obb.center.z()};
  ob["half_extents"] = {o.obb.half_extents.x(), o.obb.half_extents.y(),
                        o.obb.half_extents.z()};
  std::vector<double> r(9);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) r[row * 3 + col] = o.obb.rotation(row, col);
  ob["rotation"] = r;
  j["obb"] = ob;
  if (o.orientation)
    j["orientation"] = {o.orientation->x(), o.orientation->y(),
                        o.orientation->z()};
  return j;
}

Vec3 project_to_ground(const Vec3& v) { return {v.x(), 0.0, v.z()}; }

}  // namespace

ViewerFrame SceneFrame::viewer() const {
  RigidTransform gfc = gravity_from_camera();
  ViewerFrame vf;
  vf.camera_center = gfc.translation;
  Vec3 fwd = project_to_ground(gfc.rotation * Vec3(0, 0, 1));
  if (fwd.norm() < 1e-9) {
    // Camera looks straight down; image-up projected onto the ground gives
    // the natural away-from-viewer direction.
    fwd = project_to_ground(gfc.rotation * Vec3(0, -1, 0));
  }
  if (fwd.norm() < 1e-9)
    throw ValidationError("degenerate camera pose: no horizontal forward axis");
  vf.forward = fwd.normalized();
  Vec3 right = project_to_ground(gfc.rotation * Vec3(1, 0, 0));
  if (right.norm() < 1e-9) right = vf.forward.cross(Vec3(0, 1, 0));
  vf.right = right.normalized();
  return vf;
}

const ObjectInstance* SceneFrame::find(const std::string& id) const {
  for (const ObjectInstance& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

const ObjectInstance& SceneFrame::get(const std::string& id) const {
  const ObjectInstance* o = find(id);
  if (!o) throw ValidationError("unknown object id: " + id);
  return *o;
}

Vec3 SceneFrame::orientation_in_gravity(const ObjectInstance& obj) const {
  if (!obj.orientation)
    throw ValidationError("object '" + obj.id +
                          "' has no orientation annotation");
  return (gravity_from_camera().rotation * *obj.orientation).normalized();
}

SceneFrame parse_scene(const nlohmann::json& j, const std::string& base_dir) {
  SceneFrame s;
  s.frame_id = require_str(j, "frame_id", "scene");
  const json& k = require(j, "intrinsics", "scene");
  s.intrinsics.fx = require_num(k, "fx", "intrinsics");
  s.intrinsics.fy = require_num(k, "fy", "intrinsics");
  s.intrinsics.cx = require_num(k, "cx", "intrinsics");
  s.intrinsics.cy = require_num(k, "cy", "intrinsics");
  s.intrinsics.width = int(require_num(k, "width", "intrinsics"));
  s.intrinsics.height = int(require_num(k, "height", "intrinsics"));
  s.intrinsics.validate("intrinsics");

  s.extrinsics = parse_transform(require(j, "extrinsics", "scene"), "extrinsics");
  s.gravity_rotation =
      parse_transform(require(j, "gravity_rotation", "scene"), "gravity_rotation");
  s.depth_ref = require_str(j, "depth_ref", "scene");
  std::filesystem::path dp(s.depth_ref);
  s.depth_path = dp.is_absolute() ? s.depth_ref
                                  : (std::filesystem::path(base_dir) / dp).string();

  const json& objs = require(j, "objects", "scene");
  if (!objs.is_array()) throw ValidationError("scene.objects must be an array");
  std::set<std::string> seen;
  for (size_t i = 0; i < objs.size(); ++i) {
    ObjectInstance obj =
        parse_object(objs[i], "objects[" + std::to_string(i) + "]");
    if (!seen.insert(obj.id).second)
      throw ValidationError("duplicate object id: " + obj.id);
    s.objects.push_back(std::move(obj));
  }
  return s;
}

SceneFrame load_scene(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("invalid JSON in " + path + ": " + e.what());
  }
  std::string dir = std::filesystem::path(path).parent_path().string();
  SceneFrame s = parse_scene(j, dir.empty() ? "." : dir);
  if (!std::filesystem::exists(s.depth_path))
    throw ValidationError("missing depth file: " + s.depth_path);
  s.depth = read_depth(s.depth_path);
  if (s.depth.width != s.intrinsics.width ||
      s.depth.height != s.intrinsics.height)
    throw ValidationError("depth dimensions (" + std::to_string(s.depth.width) +
                          "x" + std::to_string(s.depth.height) +
                          ") do not match intrinsics in " + path);
  return s;
}

nlohmann::json scene_to_json(const SceneFrame& scene) {
  json j;
  j["frame_id"] = scene.frame_id;
  json k;
  k["fx"] = scene.intrinsics.fx;
  k["fy"] = scene.intrinsics.fy;
  k["cx"] = scene.intrinsics.cx;
  k["cy"] = scene.intrinsics.cy;
  k["width"] = scene.intrinsics.width;
  k["height"] = scene.intrinsics.height;
  j["intrinsics"] = k;
  j["extrinsics"] = transform_to_json(scene.extrinsics);
  j["gravity_rotation"] = transform_to_json(scene.gravity_rotation);
  j["depth_ref"] = scene.depth_ref;
  json objs = json::array();
  for (const ObjectInstance& o : scene.objects) objs.push_back(object_to_json(o));
  j["objects"] = objs;
  return j;
}

}  // namespace spatialref
