#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/relations.hpp"
#include "core/scene.hpp"

namespace spatialref {

// Ranking happens in the viewer-aligned gravity frame: X = viewer right,
// Y = up, Z = viewer forward (away from the camera).
enum class RankAxis { X, Y, Z };

enum class RankDirection {
  LeftToRight, RightToLeft, FrontToBack, BackToFront, TopToBottom, BottomToTop,
};

RankAxis axis_of(RankDirection dir);
const char* direction_name(RankDirection dir);  // e.g. "left_to_right"
std::optional<RankDirection> direction_from_name(const std::string& name);

// "first", "second", ... ; falls back to "17th"-style past twenty.
std::string ordinal_word(int k);

// Axis whose center coordinates vary most across the group, or nullopt when
// the best standard deviation stays below
// dominant_axis_sigma_factor * mean footprint diagonal. Ties prefer X, then
// Y, then Z. Requires >= 2 instances.
std::optional<RankAxis> dominant_axis(const SceneFrame& scene,
                                      const std::vector<const ObjectInstance*>& group,
                                      const Config& cfg);

struct RankedObject {
  const ObjectInstance* object;
  int ordinal;  // 1-based along the direction
};

// Sorts the group along the direction's axis. Ties fall back to the other
// axes in X, Y, Z priority order, then to the object id.
std::vector<RankedObject> rank_objects(const SceneFrame& scene,
                                       const std::vector<const ObjectInstance*>& group,
                                       RankDirection direction);

enum class ExpressionTier { Category, Attribute, Ordinal, Anchored };

struct ReferringExpression {
  std::string object_id;
  std::string text;
  ExpressionTier tier = ExpressionTier::Category;
  bool unique = false;  // resolves to exactly one object in this scene
  std::optional<RankDirection> direction;  // ordinal tier
  int ordinal = 0;                         // 1-based, ordinal tier
  std::optional<std::string> anchor_id;    // anchored tier
};

// Every object receives at least one expression. Ordinal expressions are
// emitted only for category groups with a dominant axis; groups without one
// keep their (non-unique) category expression.
std::vector<ReferringExpression> generate_referring_expressions(
    const SceneFrame& scene, const Config& cfg);

// ---------------------------------------------------------------------------

struct GraphEdge {
  std::string subject;
  std::vector<std::string> objects;  // arity - 1 participants
  Relation relation;
  RelationValue value;
};

struct SceneGraph {
  std::string frame_id;
  std::vector<GraphEdge> edges;  // deterministic order
};

// Evaluates the requested relations over all compatible tuples. Boolean
// edges are stored only when true; metric edges always. Symmetric metric
// relations are stored once with id-ordered participants. Tuples lacking a
// required orientation annotation are skipped.
SceneGraph build_scene_graph(const SceneFrame& scene,
                             const std::vector<Relation>& relations,
                             const Config& cfg);

// All relations except between and free-space-directional.
std::vector<Relation> default_graph_relations();

nlohmann::json graph_to_json(const SceneFrame& scene, const SceneGraph& graph);

// Members of each category, scene order, keyed by category name.
std::map<std::string, std::vector<const ObjectInstance*>> category_groups(
    const SceneFrame& scene);

}  // namespace spatialref
