#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iterator>
#include <map>

#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/rng.hpp"

namespace spatialref {

namespace {

struct CategorySpec {
  const char* name;
  double min_w, max_w;  // full horizontal extent range, m
  double min_h, max_h;  // full height range, m
};

const CategorySpec kSeenCategories[] = {
    {"cup", 0.06, 0.10, 0.08, 0.12},
    {"box", 0.10, 0.24, 0.08, 0.22},
    {"book", 0.12, 0.22, 0.03, 0.06},
    {"bottle", 0.06, 0.09, 0.20, 0.30},
    {"can", 0.06, 0.08, 0.10, 0.14},
};

const CategorySpec kUnseenCategories[] = {
    {"vase", 0.08, 0.14, 0.18, 0.30},
    {"jar", 0.08, 0.12, 0.10, 0.16},
    {"teapot", 0.12, 0.18, 0.10, 0.16},
};

const char* kColors[] = {"red", "green", "blue", "yellow", "white", "black"};

Mat3 random_rotation(CounterRng& rng) {
  Eigen::AngleAxisd yaw(rng.uniform(0, 2 * M_PI), Vec3::UnitY());
  Eigen::AngleAxisd pitch(rng.uniform(-M_PI / 3, M_PI / 3), Vec3::UnitX());
  Eigen::AngleAxisd roll(rng.uniform(-M_PI / 3, M_PI / 3), Vec3::UnitZ());
  return (yaw * pitch * roll).toRotationMatrix();
}

// Camera->gravity rotation for a camera at `eye` looking at `target` with
// zero roll. Columns are the camera axes (right, down, forward) in the
// gravity frame.
Mat3 look_at(const Vec3& eye, const Vec3& target) {
  Vec3 f = (target - eye).normalized();
  Vec3 d0 = Vec3(0, -1, 0) - Vec3(0, -1, 0).dot(f) * f;
  if (d0.norm() < 1e-9)
    throw InternalError("camera looking straight along gravity");
  Vec3 d = d0.normalized();
  Vec3 r = d.cross(f);
  Mat3 m;
  m.col(0) = r;
  m.col(1) = d;
  m.col(2) = f;
  return m;
}

bool project_box(const SceneFrame& scene, const Mat3& cam_from_grav_r,
                 const Vec3& cam_center, const OrientedBox3& obb, Box2* out) {
  double u0 = 1e30, v0 = 1e30, u1 = -1e30, v1 = -1e30;
  for (const Vec3& corner : obb.corners()) {
    Vec3 pc = cam_from_grav_r * (corner - cam_center);
    if (pc.z() <= 0.05) return false;
    PixelPoint px = project(pc, scene.intrinsics);
    u0 = std::min(u0, px.u);
    v0 = std::min(v0, px.v);
    u1 = std::max(u1, px.u);
    v1 = std::max(v1, px.v);
  }
  // Objects must land fully inside the image so their 2D boxes are honest.
  if (u0 < 0 || v0 < 0 || u1 > scene.intrinsics.width - 1 ||
      v1 > scene.intrinsics.height - 1)
    return false;
  *out = {u0, v0, u1, v1};
  return true;
}

// Nearest positive ray-box hit, slab method in the box's local frame.
bool ray_box(const Vec3& origin, const Vec3& dir, const OrientedBox3& box,
             double* t_hit) {
  Vec3 q = box.rotation.transpose() * (origin - box.center);
  Vec3 dq = box.rotation.transpose() * dir;
  double t0 = 0.0, t1 = 1e30;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(dq[k]) < 1e-12) {
      if (std::abs(q[k]) > box.half_extents[k]) return false;
      continue;
    }
    double a = (-box.half_extents[k] - q[k]) / dq[k];
    double b = (box.half_extents[k] - q[k]) / dq[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return false;
  }
  if (t0 <= 1e-9) return false;
  *t_hit = t0;
  return true;
}

void render_depth(SceneFrame* scene, const std::vector<OrientedBox3>& boxes) {
  const CameraIntrinsics& k = scene->intrinsics;
  Mat3 r_gc = scene->gravity_from_camera().rotation;
  Vec3 eye = scene->gravity_from_camera().translation;
  scene->depth.width = k.width;
  scene->depth.height = k.height;
  scene->depth.meters.assign(size_t(k.width) * k.height, 0.0f);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      Vec3 d_cam((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      Vec3 dir = r_gc * d_cam;
      double best = 1e30;
      for (const OrientedBox3& box : boxes) {
        double t;
        if (ray_box(eye, dir, box, &t)) best = std::min(best, t);
      }
      if (best < 1e30)
        scene->depth.meters[size_t(y) * k.width + x] = float(best);
    }
  }
}

}  // namespace

SceneFrame synth_scene(const std::string& frame_id, uint64_t seed,
                       const SynthOptions& opts) {
  if (opts.min_objects < 1 || opts.max_objects < opts.min_objects)
    throw ValidationError("synth object count range is empty");
  CounterRng rng(derive_seed(seed, frame_id + "/synth"));

  SceneFrame scene;
  scene.frame_id = frame_id;
  scene.intrinsics.width = opts.width;
  scene.intrinsics.height = opts.height;
  scene.intrinsics.fx = 0.9 * opts.width;
  scene.intrinsics.fy = 0.9 * opts.width;
  scene.intrinsics.cx = 0.5 * opts.width;
  scene.intrinsics.cy = 0.5 * opts.height;
  scene.depth_ref = frame_id + ".depth";

  // Table platform centered at the gravity-frame origin.
  ObjectInstance table;
  table.id = "table-0";
  table.category = "table";
  table.caption = "the table";
  table.obb.half_extents =
      Vec3(rng.uniform(0.55, 0.75), opts.table_top / 2, rng.uniform(0.40, 0.55));
  table.obb.center = Vec3(0, opts.table_top / 2, 0);

  // Camera on an orbit looking at the table center.
  double azimuth = rng.uniform(0, 2 * M_PI);
  double elevation = rng.uniform(0.45, 0.95);  // rad above the table plane
  double radius = rng.uniform(1.6, 2.4);
  Vec3 target(0, opts.table_top, 0);
  Vec3 eye = target + radius * Vec3(std::cos(azimuth) * std::cos(elevation),
                                    std::sin(elevation),
                                    std::sin(azimuth) * std::cos(elevation));
  Mat3 r_gc = look_at(eye, target);

  Mat3 world_q =
      opts.randomize_world ? random_rotation(rng) : Mat3::Identity();
  scene.gravity_rotation.rotation = world_q;
  scene.gravity_rotation.translation = Vec3::Zero();
  scene.extrinsics.rotation = world_q.transpose() * r_gc;
  scene.extrinsics.translation = world_q.transpose() * eye;

  Mat3 cam_from_grav_r = r_gc.transpose();
  Box2 table_box;
  if (!project_box(scene, cam_from_grav_r, eye, table.obb, &table_box)) {
    // The table may legitimately overflow the frame; clip its box instead.
    double u0 = 1e30, v0 = 1e30, u1 = -1e30, v1 = -1e30;
    for (const Vec3& corner : table.obb.corners()) {
      Vec3 pc = cam_from_grav_r * (corner - eye);
      if (pc.z() <= 0.05) continue;
      PixelPoint px = project(pc, scene.intrinsics);
      u0 = std::min(u0, px.u);
      v0 = std::min(v0, px.v);
      u1 = std::max(u1, px.u);
      v1 = std::max(v1, px.v);
    }
    table_box = {std::clamp(u0, 0.0, double(opts.width - 1)),
                 std::clamp(v0, 0.0, double(opts.height - 1)),
                 std::clamp(u1, 0.0, double(opts.width - 1)),
                 std::clamp(v1, 0.0, double(opts.height - 1))};
  }
  table.box2d = table_box;
  scene.objects.push_back(table);

  const CategorySpec* pool =
      opts.unseen_categories ? kUnseenCategories : kSeenCategories;
  size_t pool_size = opts.unseen_categories
                         ? std::size(kUnseenCategories)
                         : std::size(kSeenCategories);

  int count = opts.min_objects +
              int(rng.below(uint64_t(opts.max_objects - opts.min_objects + 1)));
  // Seed a repeated category so ordinal and choice questions have a group.
  const CategorySpec& repeated = pool[rng.below(pool_size)];

  std::map<std::string, int> made;
  for (int i = 0; i < count; ++i) {
    const CategorySpec& spec =
        (i < 3 && count >= 3) ? repeated : pool[rng.below(pool_size)];
    bool placed = false;
    for (int attempt = 0; attempt < 60 && !placed; ++attempt) {
      ObjectInstance obj;
      int n = made[spec.name];
      obj.id = std::string(spec.name) + "-" + std::to_string(n);
      obj.category = spec.name;
      double w = rng.uniform(spec.min_w, spec.max_w);
      double h = rng.uniform(spec.min_h, spec.max_h);
      double d = rng.uniform(spec.min_w * 0.8, spec.max_w * 0.9);
      obj.obb.half_extents = Vec3(w / 2, h / 2, d / 2);
      double yaw = rng.uniform(0, 2 * M_PI);
      obj.obb.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitY()).toRotationMatrix();
      double margin = std::hypot(w / 2, d / 2);
      double px = rng.uniform(-table.obb.half_extents.x() + margin,
                              table.obb.half_extents.x() - margin);
      double pz = rng.uniform(-table.obb.half_extents.z() + margin,
                              table.obb.half_extents.z() - margin);
      obj.obb.center = Vec3(px, opts.table_top + h / 2, pz);

      bool collides = false;
      for (size_t j = 1; j < scene.objects.size(); ++j) {
        OrientedBox3 inflated = obj.obb;
        inflated.half_extents += Vec3(0.015, 0.0, 0.015);
        if (obb_intersects(inflated, scene.objects[j].obb)) {
          collides = true;
          break;
        }
      }
      if (collides) continue;
      if (!project_box(scene, cam_from_grav_r, eye, obj.obb, &obj.box2d))
        continue;

      obj.color = kColors[rng.below(std::size(kColors))];
      obj.caption = "the " + std::string(*obj.color) + " " + obj.category;
      uint64_t style = rng.below(5);
      if (style <= 2) {
        Vec3 facing(std::cos(yaw), 0, std::sin(yaw));
        obj.orientation = (r_gc.transpose() * facing).normalized();
      } else if (style == 3) {
        obj.orientation = (r_gc.transpose() * Vec3(0, 1, 0)).normalized();
      }
      made[spec.name] = n + 1;
      scene.objects.push_back(std::move(obj));
      placed = true;
    }
  }

  std::vector<OrientedBox3> boxes;
  for (const ObjectInstance& o : scene.objects) boxes.push_back(o.obb);
  render_depth(&scene, boxes);
  return scene;
}

std::string write_synth_scene(const SceneFrame& scene, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::string depth_path = (fs::path(dir) / scene.depth_ref).string();
  write_depth_raw(depth_path, scene.depth);
  std::string scene_path =
      (fs::path(dir) / (scene.frame_id + ".json")).string();
  atomic_write_file(scene_path, scene_to_json(scene).dump(2) + "\n");
  return scene_path;
}

}  // namespace spatialref
