#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/geometry.hpp"
#include "core/rng.hpp"
#include "core/scene.hpp"

namespace spatialref {

struct PlatformSurface {
  std::string object_id;
  double top_height = 0;
  Polygon footprint;
};

enum class FreeSpaceDirection { Left, Right, Front, Behind, Above, Below, Between };

const char* free_space_direction_name(FreeSpaceDirection d);
std::optional<FreeSpaceDirection> free_space_direction_from_name(const std::string& s);

struct FreeSpaceQuery {
  FreeSpaceDirection relation = FreeSpaceDirection::Left;
  std::vector<std::string> target_ids;  // one target; two for between
  uint64_t seed = 0;
  std::optional<int> samples;      // quota overrides
  std::optional<int> min_visible;
};

struct VisiblePoint {
  PixelPoint pixel;   // not rounded
  Vec3 world;         // gravity frame, on the sampling plane
  double depth = 0;   // camera-frame z
};

struct FreeSpaceRegion {
  FreeSpaceDirection relation = FreeSpaceDirection::Left;
  std::vector<std::string> target_ids;
  uint64_t seed = 0;
  Polygon region;            // sampling region on the platform plane
  double plane_height = 0;
  double free_area = 0;      // m^2 of Free cells inside the region
  int sampled_count = 0;
  std::vector<VisiblePoint> visible;
  std::optional<PixelPoint> selected;  // placement point, pixels
  std::optional<std::string> rejection_reason;
};

// Rich result for callers that need the intermediates.
struct FreeSpaceOutcome {
  FreeSpaceRegion region;
  PlatformSurface platform;
  std::vector<std::string> neighbor_ids;
  OccupancyMap occupancy;
};

// Platform surfaces of every object whose category is in
// cfg.platform_categories.
std::vector<PlatformSurface> platforms_from_scene(const SceneFrame& scene,
                                                  const Config& cfg);

// Platform whose top is within platform_gap_max of the object's bottom and
// whose footprint covers >= support_overlap_min of the object's bottom area;
// smallest vertical gap wins. nullptr when none qualifies.
const PlatformSurface* find_supporting_platform(
    const ObjectInstance& object, const std::vector<PlatformSurface>& platforms,
    const Config& cfg);

// For below-queries: nearest platform top at or under the object's bottom
// with the same overlap requirement (no gap cap).
const PlatformSurface* find_platform_beneath(
    const ObjectInstance& object, const std::vector<PlatformSurface>& platforms,
    const Config& cfg);

// 90-degree sector apexed at the target footprint centroid, radius
// max(footprint diagonal, sector_radius_floor), pointing along the viewer
// axis named by `dir` (left/right/front/behind).
Polygon directional_sector(const SceneFrame& scene, const ObjectInstance& target,
                           FreeSpaceDirection dir, const Config& cfg);

// Objects that can crowd the query region; excludes the target(s) and the
// platform object. Horizontal/between queries additionally require footprint
// intersection with `search_region`, a bounded height band, and the volume
// cap; above/below use their own band rules.
std::vector<const ObjectInstance*> candidate_neighbors(
    const SceneFrame& scene, const std::vector<const ObjectInstance*>& targets,
    FreeSpaceDirection dir, const PlatformSurface& platform,
    const Polygon& search_region, const Config& cfg);

// `count` points uniform over (Free cells of occ) ∩ region, at plane height.
// Empty when the region covers no free cell.
std::vector<Vec3> sample_region_points(const Polygon& region,
                                       const OccupancyMap& occ,
                                       double plane_height, int count,
                                       CounterRng& rng);

// Projects gravity-frame points and keeps those that land in-image over
// valid depth within visibility_depth_tol of the recorded depth.
std::vector<VisiblePoint> filter_visible(const SceneFrame& scene,
                                         const std::vector<Vec3>& points,
                                         const Config& cfg);

// Ray through `pixel` intersected with the horizontal plane at
// `plane_height`, in the gravity frame.
std::optional<Vec3> backproject_to_plane(const SceneFrame& scene,
                                         const PixelPoint& pixel,
                                         double plane_height);

// Mean of the visible pixels when it stays depth-consistent, inside the
// region, and on a Free cell; otherwise the nearest visible point to the
// mean. nullopt (with reason) when fewer than min_visible points survive.
std::optional<PixelPoint> select_placement_point(
    const SceneFrame& scene, const std::vector<VisiblePoint>& visible,
    int min_visible, const Polygon& region, const OccupancyMap& occ,
    double plane_height, const Config& cfg, std::string* reason);

// Full pipeline: platform association, neighbor filtering, occupancy,
// sampling, visibility, selection. Unsatisfiable geometry is reported via
// region.rejection_reason; malformed queries throw ValidationError.
FreeSpaceOutcome run_free_space_query(const SceneFrame& scene,
                                      const FreeSpaceQuery& query,
                                      const Config& cfg);

FreeSpaceQuery parse_free_space_query(const nlohmann::json& j);
nlohmann::json region_to_json(const FreeSpaceRegion& region,
                              const CameraIntrinsics& k);

}  // namespace spatialref
