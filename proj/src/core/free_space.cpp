#include "core/free_space.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/textutil.hpp"

namespace spatialref {

namespace {

const char* kDirectionNames[] = {"left", "right", "front",  "behind",
                                 "above", "below", "between"};

bool footprints_intersect(const Polygon& a, const Polygon& b) {
  return polygon_area(convex_intersect(a, b)) > 1e-12;
}

int count_free_cells_in(const OccupancyMap& occ, const Polygon& region) {
  int count = 0;
  for (int iz = 0; iz < occ.nz; ++iz)
    for (int ix = 0; ix < occ.nx; ++ix)
      if (occ.cells[size_t(iz) * occ.nx + ix] == CellState::Free &&
          point_in_convex(region, occ.cell_center(ix, iz)))
        ++count;
  return count;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const std::string& id : ids) {
    if (!out.empty()) out += ",";
    out += id;
  }
  return out;
}

}  // namespace

const char* free_space_direction_name(FreeSpaceDirection d) {
  return kDirectionNames[int(d)];
}

std::optional<FreeSpaceDirection> free_space_direction_from_name(
    const std::string& s) {
  for (int i = 0; i < 7; ++i)
    if (s == kDirectionNames[i]) return FreeSpaceDirection(i);
  return std::nullopt;
}

std::vector<PlatformSurface> platforms_from_scene(const SceneFrame& scene,
                                                  const Config& cfg) {
  std::vector<PlatformSurface> out;
  for (const ObjectInstance& o : scene.objects) {
    bool is_platform =
        std::find(cfg.platform_categories.begin(), cfg.platform_categories.end(),
                  o.category) != cfg.platform_categories.end();
    if (!is_platform) continue;
    out.push_back({o.id, o.obb.top(), footprint(o.obb)});
  }
  return out;
}

const PlatformSurface* find_supporting_platform(
    const ObjectInstance& object, const std::vector<PlatformSurface>& platforms,
    const Config& cfg) {
  const PlatformSurface* best = nullptr;
  double best_gap = 0;
  double bottom = object.obb.bottom();
  for (const PlatformSurface& p : platforms) {
    if (p.object_id == object.id) continue;
    double gap = std::abs(bottom - p.top_height);
    if (gap > cfg.platform_gap_max) continue;
    if (footprint_overlap_ratio(object.obb, p.footprint) < cfg.support_overlap_min)
      continue;
    if (!best || gap < best_gap) {
      best = &p;
      best_gap = gap;
    }
  }
  return best;
}

const PlatformSurface* find_platform_beneath(
    const ObjectInstance& object, const std::vector<PlatformSurface>& platforms,
    const Config& cfg) {
  const PlatformSurface* best = nullptr;
  double bottom = object.obb.bottom();
  for (const PlatformSurface& p : platforms) {
    if (p.object_id == object.id) continue;
    if (p.top_height > bottom + cfg.platform_gap_max) continue;
    if (footprint_overlap_ratio(object.obb, p.footprint) < cfg.support_overlap_min)
      continue;
    if (!best || p.top_height > best->top_height) best = &p;
  }
  return best;
}

Polygon directional_sector(const SceneFrame& scene, const ObjectInstance& target,
                           FreeSpaceDirection dir, const Config& cfg) {
  ViewerFrame vf = scene.viewer();
  Vec2 d;
  switch (dir) {
    case FreeSpaceDirection::Left:
      d = {-vf.right.x(), -vf.right.z()};
      break;
    case FreeSpaceDirection::Right:
      d = {vf.right.x(), vf.right.z()};
      break;
    case FreeSpaceDirection::Front:  // the side facing the viewer
      d = {-vf.forward.x(), -vf.forward.z()};
      break;
    case FreeSpaceDirection::Behind:
      d = {vf.forward.x(), vf.forward.z()};
      break;
    default:
      throw ValidationError("directional sector needs left/right/front/behind");
  }
  Polygon fp = footprint(target.obb);
  Vec2 apex = polygon_centroid(fp);
  double radius = std::max(polygon_diameter(fp), cfg.sector_radius_floor);
  double theta0 = std::atan2(d.y(), d.x());

  Polygon sector;
  sector.push_back(apex);
  constexpr int kArcSegments = 32;
  for (int i = 0; i <= kArcSegments; ++i) {
    double theta = theta0 - M_PI / 4 + (M_PI / 2) * double(i) / kArcSegments;
    sector.push_back(apex + radius * Vec2(std::cos(theta), std::sin(theta)));
  }
  return sector;
}

std::vector<const ObjectInstance*> candidate_neighbors(
    const SceneFrame& scene, const std::vector<const ObjectInstance*>& targets,
    FreeSpaceDirection dir, const PlatformSurface& platform,
    const Polygon& search_region, const Config& cfg) {
  double target_top = 0, target_volume = 0;
  Polygon target_fp;
  for (const ObjectInstance* t : targets) {
    target_top = std::max(target_top, t->obb.top());
    target_volume = std::max(target_volume, t->obb.volume());
  }
  if (!targets.empty()) target_fp = footprint(targets[0]->obb);

  auto is_target = [&](const std::string& id) {
    for (const ObjectInstance* t : targets)
      if (t->id == id) return true;
    return false;
  };

  std::vector<const ObjectInstance*> out;
  for (const ObjectInstance& o : scene.objects) {
    if (is_target(o.id) || o.id == platform.object_id) continue;
    double bottom = o.obb.bottom(), top = o.obb.top();
    Polygon fp = footprint(o.obb);
    switch (dir) {
      case FreeSpaceDirection::Left:
      case FreeSpaceDirection::Right:
      case FreeSpaceDirection::Front:
      case FreeSpaceDirection::Behind:
      case FreeSpaceDirection::Between: {
        if (bottom > target_top + cfg.neighbor_height_margin) continue;
        if (top < platform.top_height - 1e-9) continue;
        if (o.obb.volume() > cfg.neighbor_volume_ratio_max * target_volume)
          continue;
        if (!footprints_intersect(fp, search_region)) continue;
        break;
      }
      case FreeSpaceDirection::Above: {
        if (bottom < platform.top_height - 1e-9 ||
            bottom > platform.top_height + cfg.above_bottom_margin)
          continue;
        if (top < platform.top_height - 1e-9) continue;
        if (!footprints_intersect(fp, platform.footprint)) continue;
        break;
      }
      case FreeSpaceDirection::Below: {
        if (!footprints_intersect(fp, target_fp)) continue;
        if (bottom > target_top) continue;
        if (top < platform.top_height - 1e-9) continue;
        break;
      }
    }
    out.push_back(&o);
  }
  return out;
}

std::vector<Vec3> sample_region_points(const Polygon& region,
                                       const OccupancyMap& occ,
                                       double plane_height, int count,
                                       CounterRng& rng) {
  std::vector<std::pair<int, int>> free_cells;
  for (int iz = 0; iz < occ.nz; ++iz)
    for (int ix = 0; ix < occ.nx; ++ix)
      if (occ.cells[size_t(iz) * occ.nx + ix] == CellState::Free &&
          point_in_convex(region, occ.cell_center(ix, iz)))
        free_cells.push_back({ix, iz});
  if (free_cells.empty()) return {};

  std::vector<Vec3> out;
  out.reserve(count);
  uint64_t attempts = 0, cap = uint64_t(count) * 1000;
  while (int(out.size()) < count && attempts < cap) {
    ++attempts;
    auto [ix, iz] = free_cells[rng.below(free_cells.size())];
    double x = occ.origin_x + (ix + rng.uniform()) * occ.cell_size;
    double z = occ.origin_z + (iz + rng.uniform()) * occ.cell_size;
    if (!point_in_convex(region, {x, z})) continue;
    out.push_back({x, plane_height, z});
  }
  return out;
}

std::vector<VisiblePoint> filter_visible(const SceneFrame& scene,
                                         const std::vector<Vec3>& points,
                                         const Config& cfg) {
  RigidTransform cam_from_grav = scene.camera_from_gravity();
  std::vector<VisiblePoint> out;
  for (const Vec3& p : points) {
    Vec3 cam = cam_from_grav.apply(p);
    if (cam.z() <= 1e-9) continue;
    PixelPoint px = project(cam, scene.intrinsics);
    int ix = int(std::lround(px.u)), iy = int(std::lround(px.v));
    if (!scene.depth.in_bounds(ix, iy) || !scene.depth.valid_at(ix, iy))
      continue;
    if (std::abs(cam.z() - double(scene.depth.at(ix, iy))) >
        cfg.visibility_depth_tol)
      continue;
    out.push_back({px, p, cam.z()});
  }
  return out;
}

std::optional<Vec3> backproject_to_plane(const SceneFrame& scene,
                                         const PixelPoint& pixel,
                                         double plane_height) {
  RigidTransform gfc = scene.gravity_from_camera();
  Vec3 dir_cam((pixel.u - scene.intrinsics.cx) / scene.intrinsics.fx,
               (pixel.v - scene.intrinsics.cy) / scene.intrinsics.fy, 1.0);
  Vec3 dir = gfc.rotation * dir_cam;
  Vec3 origin = gfc.translation;
  if (std::abs(dir.y()) < 1e-12) return std::nullopt;
  double t = (plane_height - origin.y()) / dir.y();
  if (t <= 0) return std::nullopt;
  return origin + t * dir;
}

std::optional<PixelPoint> select_placement_point(
    const SceneFrame& scene, const std::vector<VisiblePoint>& visible,
    int min_visible, const Polygon& region, const OccupancyMap& occ,
    double plane_height, const Config& cfg, std::string* reason) {
  if (int(visible.size()) < min_visible) {
    if (reason) *reason = "quota-unmet";
    return std::nullopt;
  }

  PixelPoint mean{0, 0};
  for (const VisiblePoint& v : visible) {
    mean.u += v.pixel.u;
    mean.v += v.pixel.v;
  }
  mean.u /= double(visible.size());
  mean.v /= double(visible.size());

  // The mean must itself pass the placement predicate: depth-consistent,
  // inside the region, and over a Free cell. Non-convex free space can pull
  // the mean onto an occupier, in which case the nearest visible point wins.
  bool mean_ok = false;
  if (std::optional<Vec3> hit = backproject_to_plane(scene, mean, plane_height)) {
    Vec3 cam = scene.camera_from_gravity().apply(*hit);
    int ix = int(std::lround(mean.u)), iy = int(std::lround(mean.v));
    mean_ok = cam.z() > 0 && scene.depth.in_bounds(ix, iy) &&
              scene.depth.valid_at(ix, iy) &&
              std::abs(cam.z() - double(scene.depth.at(ix, iy))) <=
                  cfg.visibility_depth_tol &&
              point_in_convex(region, {hit->x(), hit->z()}, -1e-7) &&
              occ.state_at(hit->x(), hit->z()) == CellState::Free;
  }
  if (mean_ok) return mean;

  const VisiblePoint* best = nullptr;
  double best_d2 = 0;
  for (const VisiblePoint& v : visible) {
    double du = v.pixel.u - mean.u, dv = v.pixel.v - mean.v;
    double d2 = du * du + dv * dv;
    if (!best || d2 < best_d2) {
      best = &v;
      best_d2 = d2;
    }
  }
  return best->pixel;
}

FreeSpaceOutcome run_free_space_query(const SceneFrame& scene,
                                      const FreeSpaceQuery& query,
                                      const Config& cfg) {
  size_t want = query.relation == FreeSpaceDirection::Between ? 2 : 1;
  if (query.target_ids.size() != want)
    throw ValidationError(std::string("query '") +
                          free_space_direction_name(query.relation) +
                          "' needs " + std::to_string(want) + " target id(s)");
  std::vector<const ObjectInstance*> targets;
  for (const std::string& id : query.target_ids)
    targets.push_back(&scene.get(id));

  FreeSpaceOutcome out;
  FreeSpaceRegion& region = out.region;
  region.relation = query.relation;
  region.target_ids = query.target_ids;
  region.seed = query.seed;

  auto reject = [&](const std::string& why) -> FreeSpaceOutcome& {
    region.rejection_reason = why;
    return out;
  };

  std::vector<PlatformSurface> platforms = platforms_from_scene(scene, cfg);
  bool vertical_quota = true;
  bool area_floor = true;
  Polygon search_region;

  switch (query.relation) {
    case FreeSpaceDirection::Left:
    case FreeSpaceDirection::Right:
    case FreeSpaceDirection::Front:
    case FreeSpaceDirection::Behind: {
      const PlatformSurface* p =
          find_supporting_platform(*targets[0], platforms, cfg);
      if (!p) return reject("no-supporting-platform");
      out.platform = *p;
      search_region = directional_sector(scene, *targets[0], query.relation, cfg);
      region.region = convex_intersect(search_region, out.platform.footprint);
      region.plane_height = out.platform.top_height;
      vertical_quota = false;
      area_floor = false;
      break;
    }
    case FreeSpaceDirection::Above: {
      out.platform = {targets[0]->id, targets[0]->obb.top(),
                      footprint(targets[0]->obb)};
      search_region = out.platform.footprint;
      region.region = scale_about_centroid(out.platform.footprint, cfg.region_shrink);
      region.plane_height = out.platform.top_height;
      break;
    }
    case FreeSpaceDirection::Below: {
      const PlatformSurface* p =
          find_platform_beneath(*targets[0], platforms, cfg);
      if (!p) return reject("no-supporting-platform");
      out.platform = *p;
      search_region = footprint(targets[0]->obb);
      region.region = convex_intersect(
          scale_about_centroid(search_region, cfg.region_shrink),
          out.platform.footprint);
      region.plane_height = out.platform.top_height;
      break;
    }
    case FreeSpaceDirection::Between: {
      const PlatformSurface* pa =
          find_supporting_platform(*targets[0], platforms, cfg);
      const PlatformSurface* pb =
          find_supporting_platform(*targets[1], platforms, cfg);
      if (!pa || !pb) return reject("no-supporting-platform");
      if (pa->object_id != pb->object_id)
        throw ValidationError("between targets rest on different platforms: " +
                              pa->object_id + " vs " + pb->object_id);
      out.platform = *pa;
      Polygon fa = footprint(targets[0]->obb), fb = footprint(targets[1]->obb);
      Vec2 d = polygon_centroid(fb) - polygon_centroid(fa);
      if (d.norm() < 1e-9) return reject("empty-region");
      d.normalize();
      double sa = -std::numeric_limits<double>::infinity();
      for (const Vec2& v : fa) sa = std::max(sa, v.dot(d));
      double sb = std::numeric_limits<double>::infinity();
      for (const Vec2& v : fb) sb = std::min(sb, v.dot(d));
      if (sa >= sb) return reject("empty-region");
      std::vector<Vec2> all(fa);
      all.insert(all.end(), fb.begin(), fb.end());
      Polygon band = clip_halfplane(convex_hull(all), -d, -sa);
      band = clip_halfplane(band, d, sb);
      search_region = band;
      region.region = convex_intersect(band, out.platform.footprint);
      region.plane_height = out.platform.top_height;
      break;
    }
  }

  if (region.region.size() < 3 || polygon_area(region.region) <= 0)
    return reject("empty-region");

  std::vector<const ObjectInstance*> neighbors = candidate_neighbors(
      scene, targets, query.relation, out.platform, search_region, cfg);
  for (const ObjectInstance* n : neighbors) out.neighbor_ids.push_back(n->id);

  std::vector<FootprintRef> occupiers;
  bool targets_occupy = query.relation != FreeSpaceDirection::Above &&
                        query.relation != FreeSpaceDirection::Below;
  if (targets_occupy)
    for (const ObjectInstance* t : targets)
      occupiers.push_back({t->id, footprint(t->obb)});
  for (const ObjectInstance* n : neighbors)
    occupiers.push_back({n->id, footprint(n->obb)});
  out.occupancy =
      build_occupancy_map(out.platform.footprint, occupiers, cfg.cell_size);

  int free_cells = count_free_cells_in(out.occupancy, region.region);
  region.free_area = free_cells * cfg.cell_size * cfg.cell_size;
  if (free_cells == 0) return reject("empty-region");
  if (area_floor && !(region.free_area > cfg.min_free_area))
    return reject("area-floor");

  int samples = query.samples.value_or(
      vertical_quota ? cfg.vertical_samples : cfg.directional_samples);
  int min_visible = query.min_visible.value_or(
      vertical_quota ? cfg.vertical_min_visible : cfg.directional_min_visible);

  CounterRng rng(derive_seed(query.seed,
                             scene.frame_id + "/" +
                                 free_space_direction_name(query.relation) +
                                 "/" + join_ids(query.target_ids)));
  std::vector<Vec3> pts = sample_region_points(
      region.region, out.occupancy, region.plane_height, samples, rng);
  region.sampled_count = int(pts.size());
  if (pts.empty()) return reject("empty-region");

  region.visible = filter_visible(scene, pts, cfg);
  std::string reason;
  region.selected =
      select_placement_point(scene, region.visible, min_visible, region.region,
                             out.occupancy, region.plane_height, cfg, &reason);
  if (!region.selected) region.rejection_reason = reason;
  return out;
}

FreeSpaceQuery parse_free_space_query(const nlohmann::json& j) {
  FreeSpaceQuery q;
  if (!j.is_object()) throw ValidationError("query must be a JSON object");
  if (!j.contains("relation") || !j.at("relation").is_string())
    throw ValidationError("query.relation must be a string");
  std::string rel = j.at("relation").get<std::string>();
  std::optional<FreeSpaceDirection> dir = free_space_direction_from_name(rel);
  if (!dir) throw ValidationError("unknown query relation: " + rel);
  q.relation = *dir;
  if (!j.contains("target_ids") || !j.at("target_ids").is_array())
    throw ValidationError("query.target_ids must be an array");
  for (const auto& e : j.at("target_ids")) {
    if (!e.is_string())
      throw ValidationError("query.target_ids must contain strings");
    q.target_ids.push_back(e.get<std::string>());
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw ValidationError("query.seed must be an integer");
    q.seed = j.at("seed").get<uint64_t>();
  }
  if (j.contains("quotas")) {
    const auto& quotas = j.at("quotas");
    if (!quotas.is_object()) throw ValidationError("query.quotas must be an object");
    if (quotas.contains("samples")) q.samples = quotas.at("samples").get<int>();
    if (quotas.contains("min_visible"))
      q.min_visible = quotas.at("min_visible").get<int>();
  }
  return q;
}

nlohmann::json region_to_json(const FreeSpaceRegion& region,
                              const CameraIntrinsics& k) {
  nlohmann::json j;
  j["relation"] = free_space_direction_name(region.relation);
  j["target_ids"] = region.target_ids;
  j["seed"] = region.seed;
  j["plane_height"] = region.plane_height;
  nlohmann::json poly = nlohmann::json::array();
  for (const Vec2& p : region.region) poly.push_back({p.x(), p.y()});
  j["region_polygon"] = poly;
  j["free_area_m2"] = region.free_area;
  j["sampled_count"] = region.sampled_count;
  j["visible_count"] = int(region.visible.size());
  if (region.selected) {
    j["selected_point_px"] = {region.selected->u, region.selected->v};
    j["selected_point_norm"] = {round_half_up(region.selected->u / k.width, 3),
                                round_half_up(region.selected->v / k.height, 3)};
  } else {
    j["selected_point_px"] = nullptr;
    j["selected_point_norm"] = nullptr;
  }
  j["rejection_reason"] =
      region.rejection_reason ? nlohmann::json(*region.rejection_reason)
                              : nlohmann::json(nullptr);
  return j;
}

}  // namespace spatialref
