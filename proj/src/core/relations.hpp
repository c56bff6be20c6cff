#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/scene.hpp"

namespace spatialref {

enum class Relation {
  // Position.
  Left, Right, AboveWorld, BelowWorld, AboveCamera, BelowCamera,
  Front, Behind, Near, Far, Inside, Outside, Touching, Separated, Between,
  // Orientation.
  FacingToward, FacingAway, Horizontal, Vertical, RelativeAngle,
  // Attribute comparisons.
  Bigger, Smaller, Taller, Shorter, Wider, Thinner,
  // Quantitative.
  PointDepth, PairwiseDistance, ObjectWidth, ObjectHeight,
  // Placement.
  FreeSpaceDirectional,
};

enum class RelationGroup { Position, Orientation, Attribute, Quantitative, Placement };
enum class ValueKind { Boolean, Metric };

struct RelationInfo {
  Relation rel;
  const char* name;  // kebab-case, used in files and CLI flags
  RelationGroup group;
  int arity;  // number of participating objects
  ValueKind kind;
  bool needs_orientation;
};

const std::vector<RelationInfo>& relation_table();
const RelationInfo& relation_info(Relation rel);
std::optional<Relation> relation_from_name(const std::string& name);

struct RelationValue {
  ValueKind kind = ValueKind::Boolean;
  bool truth = false;
  double number = 0.0;
};

// Evaluates one relation for subject + others (others.size() == arity - 1).
// Boolean position comparisons use the viewer-aligned horizontal frame and a
// margin of max(position_margin_min, position_margin_frac * smaller extent
// along the comparison axis). Throws ValidationError for unknown ids, arity
// mismatch, or a missing orientation annotation.
RelationValue evaluate_relation(const SceneFrame& scene, Relation rel,
                                const std::string& subject,
                                const std::vector<std::string>& others,
                                const Config& cfg);

// The margin used for a boolean comparison of a and b along unit axis `axis`.
double comparison_margin(const OrientedBox3& a, const OrientedBox3& b,
                         const Vec3& axis, const Config& cfg);

// Largest horizontal extent of the gravity-frame footprint bounds.
double object_width(const OrientedBox3& box);
// Vertical extent (top - bottom).
double object_height(const OrientedBox3& box);

}  // namespace spatialref
