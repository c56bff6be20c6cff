#include "core/scene_graph.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace spatialref {

namespace {

const char* kDirectionNames[] = {"left_to_right", "right_to_left",
                                 "front_to_back", "back_to_front",
                                 "top_to_bottom", "bottom_to_top"};

const char* kDirectionPhrases[] = {"from left to right", "from right to left",
                                   "from front to back", "from back to front",
                                   "from top to bottom", "from bottom to top"};

const char* kOrdinalWords[] = {
    "first",      "second",     "third",     "fourth",    "fifth",
    "sixth",      "seventh",    "eighth",    "ninth",     "tenth",
    "eleventh",   "twelfth",    "thirteenth", "fourteenth", "fifteenth",
    "sixteenth",  "seventeenth", "eighteenth", "nineteenth", "twentieth"};

std::string lower_trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  std::string out = s.substr(b, e - b + 1);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Center coordinates in the viewer-aligned frame (right, up, forward).
Vec3 viewer_coords(const ViewerFrame& vf, const Vec3& center) {
  return {center.dot(vf.right), center.y(), center.dot(vf.forward)};
}

}  // namespace

RankAxis axis_of(RankDirection dir) {
  switch (dir) {
    case RankDirection::LeftToRight:
    case RankDirection::RightToLeft:
      return RankAxis::X;
    case RankDirection::TopToBottom:
    case RankDirection::BottomToTop:
      return RankAxis::Y;
    case RankDirection::FrontToBack:
    case RankDirection::BackToFront:
      return RankAxis::Z;
  }
  throw InternalError("bad direction");
}

const char* direction_name(RankDirection dir) {
  return kDirectionNames[int(dir)];
}

std::optional<RankDirection> direction_from_name(const std::string& name) {
  for (int i = 0; i < 6; ++i)
    if (name == kDirectionNames[i]) return RankDirection(i);
  return std::nullopt;
}

std::string ordinal_word(int k) {
  if (k >= 1 && k <= 20) return kOrdinalWords[k - 1];
  int tail = k % 100;
  int digit = k % 10;
  const char* suffix = "th";
  if (tail < 11 || tail > 13) {
    if (digit == 1) suffix = "st";
    else if (digit == 2) suffix = "nd";
    else if (digit == 3) suffix = "rd";
  }
  return std::to_string(k) + suffix;
}

std::optional<RankAxis> dominant_axis(const SceneFrame& scene,
                                      const std::vector<const ObjectInstance*>& group,
                                      const Config& cfg) {
  if (group.size() < 2)
    throw ValidationError("dominant axis needs at least 2 instances");
  ViewerFrame vf = scene.viewer();
  double n = double(group.size());
  Vec3 mean = Vec3::Zero();
  std::vector<Vec3> coords;
  coords.reserve(group.size());
  double diag_sum = 0;
  for (const ObjectInstance* o : group) {
    coords.push_back(viewer_coords(vf, o->obb.center));
    mean += coords.back();
    diag_sum += footprint_diagonal(o->obb);
  }
  mean /= n;
  Vec3 var = Vec3::Zero();
  for (const Vec3& c : coords) var += (c - mean).cwiseProduct(c - mean);
  var /= n;

  RankAxis best = RankAxis::X;
  double best_sigma = std::sqrt(var.x());
  if (std::sqrt(var.y()) > best_sigma) {
    best = RankAxis::Y;
    best_sigma = std::sqrt(var.y());
  }
  if (std::sqrt(var.z()) > best_sigma) {
    best = RankAxis::Z;
    best_sigma = std::sqrt(var.z());
  }
  if (best_sigma < cfg.dominant_axis_sigma_factor * (diag_sum / n))
    return std::nullopt;
  return best;
}

std::vector<RankedObject> rank_objects(const SceneFrame& scene,
                                       const std::vector<const ObjectInstance*>& group,
                                       RankDirection direction) {
  if (group.empty()) throw ValidationError("cannot rank an empty group");
  ViewerFrame vf = scene.viewer();
  int primary = int(axis_of(direction));
  bool descending = direction == RankDirection::RightToLeft ||
                    direction == RankDirection::BackToFront ||
                    direction == RankDirection::TopToBottom;

  struct Entry {
    const ObjectInstance* obj;
    Vec3 s;
  };
  std::vector<Entry> entries;
  entries.reserve(group.size());
  for (const ObjectInstance* o : group)
    entries.push_back({o, viewer_coords(vf, o->obb.center)});

  std::sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    double pa = a.s[primary], pb = b.s[primary];
    if (pa != pb) return descending ? pa > pb : pa < pb;
    for (int axis = 0; axis < 3; ++axis) {
      if (axis == primary) continue;
      if (a.s[axis] != b.s[axis]) return a.s[axis] < b.s[axis];
    }
    return a.obj->id < b.obj->id;
  });

  std::vector<RankedObject> out;
  out.reserve(entries.size());
  for (size_t i = 0; i < entries.size(); ++i)
    out.push_back({entries[i].obj, int(i) + 1});
  return out;
}

std::map<std::string, std::vector<const ObjectInstance*>> category_groups(
    const SceneFrame& scene) {
  std::map<std::string, std::vector<const ObjectInstance*>> groups;
  for (const ObjectInstance& o : scene.objects)
    groups[o.category].push_back(&o);
  return groups;
}

std::vector<ReferringExpression> generate_referring_expressions(
    const SceneFrame& scene, const Config& cfg) {
  std::vector<ReferringExpression> out;
  auto groups = category_groups(scene);

  // Caption multiplicity across the whole scene decides attribute-tier
  // uniqueness.
  std::map<std::string, int> caption_count;
  for (const ObjectInstance& o : scene.objects)
    if (o.caption) caption_count[lower_trim(*o.caption)]++;

  for (const auto& [category, members] : groups) {
    bool singleton = members.size() == 1;
    for (const ObjectInstance* o : members) {
      ReferringExpression cat;
      cat.object_id = o->id;
      cat.text = "the " + category;
      cat.tier = ExpressionTier::Category;
      cat.unique = singleton;
      out.push_back(cat);

      if (o->caption) {
        ReferringExpression attr;
        attr.object_id = o->id;
        attr.text = *o->caption;
        attr.tier = ExpressionTier::Attribute;
        attr.unique = caption_count[lower_trim(*o->caption)] == 1;
        out.push_back(attr);
      }
    }

    if (singleton) continue;

    std::optional<RankAxis> axis = dominant_axis(scene, members, cfg);
    if (axis) {
      RankDirection direction = *axis == RankAxis::X ? RankDirection::LeftToRight
                                : *axis == RankAxis::Y ? RankDirection::TopToBottom
                                                       : RankDirection::FrontToBack;
      for (const RankedObject& r : rank_objects(scene, members, direction)) {
        std::string base =
            r.object->caption ? *r.object->caption : "the " + category;
        ReferringExpression ord;
        ord.object_id = r.object->id;
        ord.text = base + ", which is the " + ordinal_word(r.ordinal) + " " +
                   category + " " + kDirectionPhrases[int(direction)];
        ord.tier = ExpressionTier::Ordinal;
        ord.unique = true;
        ord.direction = direction;
        ord.ordinal = r.ordinal;
        out.push_back(ord);
      }
    }

    // Anchored tier: nearest group member to a uniquely referable object of
    // another category, when the nearest distance is decisively unique.
    for (const ObjectInstance& anchor : scene.objects) {
      if (anchor.category == category) continue;
      if (groups[anchor.category].size() != 1) continue;
      const ObjectInstance* closest = nullptr;
      double best = 0, second = 0;
      for (const ObjectInstance* m : members) {
        double d = (m->obb.center - anchor.obb.center).norm();
        if (!closest || d < best) {
          second = closest ? best : std::numeric_limits<double>::infinity();
          closest = m;
          best = d;
        } else {
          second = std::min(second, d);
        }
      }
      if (closest && second - best > 0.01) {
        ReferringExpression anch;
        anch.object_id = closest->id;
        anch.text = "the " + category + " closest to the " + anchor.category;
        anch.tier = ExpressionTier::Anchored;
        anch.unique = true;
        anch.anchor_id = anchor.id;
        out.push_back(anch);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Relation> default_graph_relations() {
  std::vector<Relation> out;
  for (const RelationInfo& info : relation_table())
    if (info.rel != Relation::Between &&
        info.rel != Relation::FreeSpaceDirectional)
      out.push_back(info.rel);
  return out;
}

SceneGraph build_scene_graph(const SceneFrame& scene,
                             const std::vector<Relation>& relations,
                             const Config& cfg) {
  SceneGraph graph;
  graph.frame_id = scene.frame_id;

  auto oriented = [](const ObjectInstance& o) { return o.orientation.has_value(); };

  for (Relation rel : relations) {
    const RelationInfo& info = relation_info(rel);
    if (rel == Relation::FreeSpaceDirectional) continue;

    if (info.arity == 1) {
      for (const ObjectInstance& o : scene.objects) {
        if (info.needs_orientation && !oriented(o)) continue;
        RelationValue v = evaluate_relation(scene, rel, o.id, {}, cfg);
        if (v.kind == ValueKind::Boolean && !v.truth) continue;
        graph.edges.push_back({o.id, {}, rel, v});
      }
    } else if (info.arity == 2 && info.kind == ValueKind::Metric) {
      // Symmetric metrics once per unordered pair, id-ordered.
      for (size_t i = 0; i < scene.objects.size(); ++i) {
        for (size_t j = i + 1; j < scene.objects.size(); ++j) {
          const ObjectInstance* a = &scene.objects[i];
          const ObjectInstance* b = &scene.objects[j];
          if (info.needs_orientation && (!oriented(*a) || !oriented(*b)))
            continue;
          if (b->id < a->id) std::swap(a, b);
          RelationValue v = evaluate_relation(scene, rel, a->id, {b->id}, cfg);
          graph.edges.push_back({a->id, {b->id}, rel, v});
        }
      }
    } else if (info.arity == 2) {
      for (const ObjectInstance& a : scene.objects) {
        if (info.needs_orientation && !oriented(a)) continue;
        for (const ObjectInstance& b : scene.objects) {
          if (a.id == b.id) continue;
          RelationValue v = evaluate_relation(scene, rel, a.id, {b.id}, cfg);
          if (v.truth) graph.edges.push_back({a.id, {b.id}, rel, v});
        }
      }
    } else {  // between
      for (const ObjectInstance& a : scene.objects) {
        for (size_t i = 0; i < scene.objects.size(); ++i) {
          for (size_t j = i + 1; j < scene.objects.size(); ++j) {
            const ObjectInstance& b = scene.objects[i];
            const ObjectInstance& c = scene.objects[j];
            if (b.id == a.id || c.id == a.id) continue;
            RelationValue v = evaluate_relation(scene, rel, a.id, {b.id, c.id}, cfg);
            if (v.truth) graph.edges.push_back({a.id, {b.id, c.id}, rel, v});
          }
        }
      }
    }
  }

  std::sort(graph.edges.begin(), graph.edges.end(),
            [](const GraphEdge& a, const GraphEdge& b) {
              if (a.subject != b.subject) return a.subject < b.subject;
              std::string ra = relation_info(a.relation).name;
              std::string rb = relation_info(b.relation).name;
              if (ra != rb) return ra < rb;
              return a.objects < b.objects;
            });
  return graph;
}

nlohmann::json graph_to_json(const SceneFrame& scene, const SceneGraph& graph) {
  nlohmann::json j;
  j["frame_id"] = graph.frame_id;
  nlohmann::json nodes = nlohmann::json::array();
  for (const ObjectInstance& o : scene.objects) {
    nlohmann::json n;
    n["id"] = o.id;
    n["category"] = o.category;
    if (o.color) n["color"] = *o.color;
    if (o.caption) n["caption"] = *o.caption;
    n["box2d"] = {o.box2d.x0, o.box2d.y0, o.box2d.x1, o.box2d.y1};
    PixelPoint rep = o.representative_point2d();
    n["point2d"] = {rep.u, rep.v};
    nlohmann::json ob;
    ob["center"] = {o.obb.center.x(), o.obb.center.y(), o.obb.center.z()};
    ob["half_extents"] = {o.obb.half_extents.x(), o.obb.half_extents.y(),
                          o.obb.half_extents.z()};
    std::vector<double> r(9);
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col)
        r[row * 3 + col] = o.obb.rotation(row, col);
    ob["rotation"] = r;
    n["obb"] = ob;
    if (o.orientation)
      n["orientation"] = {o.orientation->x(), o.orientation->y(),
                          o.orientation->z()};
    nodes.push_back(n);
  }
  j["nodes"] = nodes;

  nlohmann::json edges = nlohmann::json::array();
  for (const GraphEdge& e : graph.edges) {
    nlohmann::json je;
    je["subject"] = e.subject;
    je["objects"] = e.objects;
    je["relation"] = relation_info(e.relation).name;
    if (e.value.kind == ValueKind::Boolean)
      je["value"] = e.value.truth;
    else
      je["value"] = e.value.number;
    edges.push_back(je);
  }
  j["edges"] = edges;
  return j;
}

}  // namespace spatialref
