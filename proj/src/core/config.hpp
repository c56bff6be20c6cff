#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spatialref {

// Every tunable threshold in one place. Defaults are the values the data
// generation and reward pipelines were designed around; `--show-defaults`
// prints this table.
struct Config {
  // Support / platform association.
  double platform_gap_max = 0.05;       // m, |object bottom - platform top|
  double support_overlap_min = 0.70;    // fraction of object bottom area
  double neighbor_volume_ratio_max = 4.236;  // (1/0.618)^3
  double neighbor_height_margin = 0.05;      // m, neighbor bottom vs target top
  double above_bottom_margin = 0.20;         // m, neighbor bottom vs platform top

  // Free-space regions.
  double sector_radius_floor = 0.20;   // m
  double region_shrink = 0.80;         // linear scale per axis, centered
  double min_free_area = 0.036;        // m^2, above/below/between regions
  double visibility_depth_tol = 0.025; // m
  int directional_samples = 9000;
  int directional_min_visible = 2000;
  int vertical_samples = 10000;
  int vertical_min_visible = 6000;
  double cell_size = 0.01;             // m, occupancy grid

  // Relation margins.
  double position_margin_min = 0.01;   // m
  double position_margin_frac = 0.05;  // of the smaller extent on the axis
  double touch_gap_max = 0.01;         // m, OBB surface gap
  double near_factor = 3.0;            // x mean footprint diagonal
  double facing_angle_max_deg = 45.0;  // facing-toward / facing-away cone
  double axis_angle_tol_deg = 15.0;    // horizontal / vertical tolerance
  double between_width_factor = 0.5;   // x mean anchor footprint diagonal

  // Ordinal ranking.
  double dominant_axis_sigma_factor = 0.5;  // x mean footprint diagonal

  // Box matching.
  double iou_min = 0.5;

  // Rewards.
  double alpha = 0.25;
  double point_l1_max_px = 50.0;
  double orientation_cos_min = 0.8;
  double size_rel_tol = 0.15;

  // QA generation: items drawn per requested family and scene.
  int qa_per_family = 6;

  // Sampling.
  uint64_t seed = 0;

  // Objects whose category marks them as a placement surface.
  std::vector<std::string> platform_categories = {
      "table", "desk", "shelf", "counter", "cabinet", "nightstand", "floor"};

  // JSON object with every field above, alphabetical keys.
  std::string to_json() const;

  // Sets a numeric field by its JSON key. Returns false for unknown keys.
  bool set(const std::string& key, double value);
};

}  // namespace spatialref
