#pragma once

#include <string>

#include "core/scene.hpp"

namespace spatialref {

// Procedural tabletop scenes for tests and demo fixtures: a table platform,
// a handful of upright boxes on it, a perspective camera looking at the
// table center, and a rendered depth map consistent with the geometry.
struct SynthOptions {
  int width = 640;
  int height = 480;
  int min_objects = 3;
  int max_objects = 8;
  double table_top = 0.75;       // m above the gravity-frame origin
  bool unseen_categories = false;
  bool randomize_world = true;   // random world frame under gravity_rotation
};

// Deterministic in (frame_id, seed, options). Object categories repeat so
// ordinal and choice questions have material; most objects carry captions
// and horizontal orientation vectors. depth_ref is set to frame_id +
// ".depth" but no file is written; use write_synth_scene for an on-disk
// fixture.
SceneFrame synth_scene(const std::string& frame_id, uint64_t seed,
                       const SynthOptions& opts = {});

// Writes <dir>/<frame_id>.json plus the raw float32 depth file next to it.
// Returns the scene JSON path.
std::string write_synth_scene(const SceneFrame& scene, const std::string& dir);

}  // namespace spatialref
