#include "core/config.hpp"

#include <json.hpp>

namespace spatialref {

namespace {

using FieldPtr = double Config::*;

struct NumericField {
  const char* key;
  FieldPtr ptr;
};

const NumericField kNumericFields[] = {
    {"above_bottom_margin", &Config::above_bottom_margin},
    {"alpha", &Config::alpha},
    {"axis_angle_tol_deg", &Config::axis_angle_tol_deg},
    {"between_width_factor", &Config::between_width_factor},
    {"cell_size", &Config::cell_size},
    {"dominant_axis_sigma_factor", &Config::dominant_axis_sigma_factor},
    {"facing_angle_max_deg", &Config::facing_angle_max_deg},
    {"iou_min", &Config::iou_min},
    {"min_free_area", &Config::min_free_area},
    {"near_factor", &Config::near_factor},
    {"neighbor_height_margin", &Config::neighbor_height_margin},
    {"neighbor_volume_ratio_max", &Config::neighbor_volume_ratio_max},
    {"orientation_cos_min", &Config::orientation_cos_min},
    {"platform_gap_max", &Config::platform_gap_max},
    {"point_l1_max_px", &Config::point_l1_max_px},
    {"position_margin_frac", &Config::position_margin_frac},
    {"position_margin_min", &Config::position_margin_min},
    {"region_shrink", &Config::region_shrink},
    {"sector_radius_floor", &Config::sector_radius_floor},
    {"size_rel_tol", &Config::size_rel_tol},
    {"support_overlap_min", &Config::support_overlap_min},
    {"touch_gap_max", &Config::touch_gap_max},
    {"visibility_depth_tol", &Config::visibility_depth_tol},
};

}  // namespace

std::string Config::to_json() const {
  nlohmann::json j;
  for (const auto& f : kNumericFields) j[f.key] = this->*(f.ptr);
  j["directional_samples"] = directional_samples;
  j["directional_min_visible"] = directional_min_visible;
  j["vertical_samples"] = vertical_samples;
  j["vertical_min_visible"] = vertical_min_visible;
  j["qa_per_family"] = qa_per_family;
  j["seed"] = seed;
  j["platform_categories"] = platform_categories;
  return j.dump(2);
}

bool Config::set(const std::string& key, double value) {
  for (const auto& f : kNumericFields) {
    if (key == f.key) {
      this->*(f.ptr) = value;
      return true;
    }
  }
  if (key == "directional_samples") { directional_samples = static_cast<int>(value); return true; }
  if (key == "directional_min_visible") { directional_min_visible = static_cast<int>(value); return true; }
  if (key == "vertical_samples") { vertical_samples = static_cast<int>(value); return true; }
  if (key == "vertical_min_visible") { vertical_min_visible = static_cast<int>(value); return true; }
  if (key == "qa_per_family") { qa_per_family = static_cast<int>(value); return true; }
  if (key == "seed") { seed = static_cast<uint64_t>(value); return true; }
  return false;
}

}  // namespace spatialref
