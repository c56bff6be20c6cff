#include "core/relations.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace spatialref {

namespace {

const std::vector<RelationInfo> kTable = {
    {Relation::Left, "left", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::Right, "right", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::AboveWorld, "above-world", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::BelowWorld, "below-world", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::AboveCamera, "above-camera", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::BelowCamera, "below-camera", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::Front, "front", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::Behind, "behind", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::Near, "near", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::Far, "far", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::Inside, "inside", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::Outside, "outside", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::Touching, "touching", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::Separated, "separated", RelationGroup::Position, 2, ValueKind::Boolean, false},
    {Relation::Between, "between", RelationGroup::Position, 3, ValueKind::Boolean, false},
    {Relation::FacingToward, "facing-toward", RelationGroup::Orientation, 2, ValueKind::Boolean, true},
    {Relation::FacingAway, "facing-away", RelationGroup::Orientation, 2, ValueKind::Boolean, true},
    {Relation::Horizontal, "horizontal", RelationGroup::Orientation, 1, ValueKind::Boolean, true},
    {Relation::Vertical, "vertical", RelationGroup::Orientation, 1, ValueKind::Boolean, true},
    {Relation::RelativeAngle, "relative-angle", RelationGroup::Orientation, 2, ValueKind::Metric, true},
    {Relation::Bigger, "bigger", RelationGroup::Attribute, 2, ValueKind::Boolean, false},
    {Relation::Smaller, "smaller", RelationGroup::Attribute, 2, ValueKind::Boolean, false},
    {Relation::Taller, "taller", RelationGroup::Attribute, 2, ValueKind::Boolean, false},
    {Relation::Shorter, "shorter", RelationGroup::Attribute, 2, ValueKind::Boolean, false},
    {Relation::Wider, "wider", RelationGroup::Attribute, 2, ValueKind::Boolean, false},
    {Relation::Thinner, "thinner", RelationGroup::Attribute, 2, ValueKind::Boolean, false},
    {Relation::PointDepth, "point-depth", RelationGroup::Quantitative, 1, ValueKind::Metric, false},
    {Relation::PairwiseDistance, "pairwise-distance", RelationGroup::Quantitative, 2, ValueKind::Metric, false},
    {Relation::ObjectWidth, "object-width", RelationGroup::Quantitative, 1, ValueKind::Metric, false},
    {Relation::ObjectHeight, "object-height", RelationGroup::Quantitative, 1, ValueKind::Metric, false},
    {Relation::FreeSpaceDirectional, "free-space-directional", RelationGroup::Placement, 1, ValueKind::Boolean, false},
};

RelationValue boolean(bool v) {
  return {ValueKind::Boolean, v, 0.0};
}

RelationValue metric(double v) {
  return {ValueKind::Metric, false, v};
}

}  // namespace

const std::vector<RelationInfo>& relation_table() { return kTable; }

const RelationInfo& relation_info(Relation rel) {
  for (const RelationInfo& info : kTable)
    if (info.rel == rel) return info;
  throw InternalError("relation missing from table");
}

std::optional<Relation> relation_from_name(const std::string& name) {
  for (const RelationInfo& info : kTable)
    if (name == info.name) return info.rel;
  return std::nullopt;
}

double comparison_margin(const OrientedBox3& a, const OrientedBox3& b,
                         const Vec3& axis, const Config& cfg) {
  double ea = 2.0 * a.half_extent_along(axis);
  double eb = 2.0 * b.half_extent_along(axis);
  return std::max(cfg.position_margin_min,
                  cfg.position_margin_frac * std::min(ea, eb));
}

double object_width(const OrientedBox3& box) {
  Box2 b = polygon_bounds(footprint(box));
  return std::max(b.x1 - b.x0, b.y1 - b.y0);
}

double object_height(const OrientedBox3& box) { return box.top() - box.bottom(); }

RelationValue evaluate_relation(const SceneFrame& scene, Relation rel,
                                const std::string& subject,
                                const std::vector<std::string>& others,
                                const Config& cfg) {
  const RelationInfo& info = relation_info(rel);
  if (int(others.size()) != info.arity - 1)
    throw ValidationError(std::string("relation '") + info.name + "' expects " +
                          std::to_string(info.arity) + " objects, got " +
                          std::to_string(1 + others.size()));
  if (rel == Relation::FreeSpaceDirectional)
    throw ValidationError(
        "free-space-directional is answered by free-space queries, not the "
        "relation evaluator");

  const ObjectInstance& a = scene.get(subject);
  const ObjectInstance* b = info.arity >= 2 ? &scene.get(others[0]) : nullptr;
  const ObjectInstance* c = info.arity >= 3 ? &scene.get(others[1]) : nullptr;

  // Signed comparison along a viewer axis: delta = (subject - other) . axis.
  auto signed_delta = [&](const Vec3& axis) {
    return (a.obb.center - b->obb.center).dot(axis);
  };

  switch (rel) {
    case Relation::Left: {
      Vec3 axis = scene.viewer().right;
      return boolean(signed_delta(axis) < -comparison_margin(a.obb, b->obb, axis, cfg));
    }
    case Relation::Right: {
      Vec3 axis = scene.viewer().right;
      return boolean(signed_delta(axis) > comparison_margin(a.obb, b->obb, axis, cfg));
    }
    case Relation::Front: {
      Vec3 axis = scene.viewer().forward;
      return boolean(signed_delta(axis) < -comparison_margin(a.obb, b->obb, axis, cfg));
    }
    case Relation::Behind: {
      Vec3 axis = scene.viewer().forward;
      return boolean(signed_delta(axis) > comparison_margin(a.obb, b->obb, axis, cfg));
    }
    case Relation::AboveWorld: {
      Vec3 axis(0, 1, 0);
      return boolean(signed_delta(axis) > comparison_margin(a.obb, b->obb, axis, cfg));
    }
    case Relation::BelowWorld: {
      Vec3 axis(0, 1, 0);
      return boolean(signed_delta(axis) < -comparison_margin(a.obb, b->obb, axis, cfg));
    }
    case Relation::AboveCamera:
    case Relation::BelowCamera: {
      // Image-vertical ordering: compare along the camera's down axis.
      Vec3 axis = scene.gravity_from_camera().rotation * Vec3(0, 1, 0);
      double d = signed_delta(axis);
      double m = comparison_margin(a.obb, b->obb, axis, cfg);
      return boolean(rel == Relation::AboveCamera ? d < -m : d > m);
    }
    case Relation::Near:
    case Relation::Far: {
      double dist = (a.obb.center - b->obb.center).norm();
      double thresh = cfg.near_factor * 0.5 *
                      (footprint_diagonal(a.obb) + footprint_diagonal(b->obb));
      bool near = dist < thresh;
      return boolean(rel == Relation::Near ? near : !near);
    }
    case Relation::Inside: {
      bool all_in = true;
      for (const Vec3& corner : a.obb.corners())
        if (!b->obb.contains(corner)) {
          all_in = false;
          break;
        }
      return boolean(all_in);
    }
    case Relation::Outside:
      return boolean(!obb_intersects(a.obb, b->obb));
    case Relation::Touching:
      return boolean(obb_distance(a.obb, b->obb) < cfg.touch_gap_max);
    case Relation::Separated:
      return boolean(obb_distance(a.obb, b->obb) >= cfg.touch_gap_max);
    case Relation::Between: {
      Vec2 pa(a.obb.center.x(), a.obb.center.z());
      Vec2 pb(b->obb.center.x(), b->obb.center.z());
      Vec2 pc(c->obb.center.x(), c->obb.center.z());
      Vec2 seg = pc - pb;
      double len2 = seg.squaredNorm();
      if (len2 < 1e-12) return boolean(false);
      double t = (pa - pb).dot(seg) / len2;
      if (t <= 0.0 || t >= 1.0) return boolean(false);
      double perp = std::abs(seg.x() * (pa.y() - pb.y()) -
                             seg.y() * (pa.x() - pb.x())) / std::sqrt(len2);
      double corridor = cfg.between_width_factor * 0.5 *
                        (footprint_diagonal(b->obb) + footprint_diagonal(c->obb));
      return boolean(perp < corridor);
    }
    case Relation::FacingToward:
    case Relation::FacingAway: {
      Vec3 o = scene.orientation_in_gravity(a);
      Vec3 dir = b->obb.center - a.obb.center;
      if (dir.norm() < 1e-9) return boolean(false);
      double cos_angle = o.dot(dir.normalized());
      double limit = std::cos(cfg.facing_angle_max_deg * M_PI / 180.0);
      return boolean(rel == Relation::FacingToward ? cos_angle > limit
                                                   : cos_angle < -limit);
    }
    case Relation::Horizontal: {
      double tilt = std::abs(scene.orientation_in_gravity(a).y());
      return boolean(tilt <= std::sin(cfg.axis_angle_tol_deg * M_PI / 180.0));
    }
    case Relation::Vertical: {
      double tilt = std::abs(scene.orientation_in_gravity(a).y());
      return boolean(tilt >= std::cos(cfg.axis_angle_tol_deg * M_PI / 180.0));
    }
    case Relation::RelativeAngle: {
      Vec3 oa = scene.orientation_in_gravity(a);
      Vec3 ob = scene.orientation_in_gravity(*b);
      double cos_angle = std::clamp(oa.dot(ob), -1.0, 1.0);
      return metric(std::acos(cos_angle) * 180.0 / M_PI);  // degrees
    }
    case Relation::Bigger:
      return boolean(a.obb.volume() > b->obb.volume());
    case Relation::Smaller:
      return boolean(a.obb.volume() < b->obb.volume());
    case Relation::Taller:
      return boolean(object_height(a.obb) > object_height(b->obb));
    case Relation::Shorter:
      return boolean(object_height(a.obb) < object_height(b->obb));
    case Relation::Wider:
      return boolean(object_width(a.obb) > object_width(b->obb));
    case Relation::Thinner:
      return boolean(object_width(a.obb) < object_width(b->obb));
    case Relation::PointDepth: {
      Vec3 cam = scene.camera_from_gravity().apply(a.obb.center);
      return metric(cam.z());
    }
    case Relation::PairwiseDistance:
      return metric((a.obb.center - b->obb.center).norm());
    case Relation::ObjectWidth:
      return metric(object_width(a.obb));
    case Relation::ObjectHeight:
      return metric(object_height(a.obb));
    case Relation::FreeSpaceDirectional:
      break;  // handled above
  }
  throw InternalError("unhandled relation");
}

}  // namespace spatialref
