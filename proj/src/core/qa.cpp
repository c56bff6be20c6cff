#include "core/qa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/relations.hpp"
#include "core/textutil.hpp"

namespace spatialref {

namespace {

using nlohmann::json;

const std::set<std::string>& known_kinds() {
  static const std::set<std::string> kinds{"vqa", "choice", "fact", "point",
                                           "reasoning"};
  return kinds;
}

// Which answer-rule ops each template kind may carry.
bool rule_allowed(const std::string& kind, const std::string& op) {
  if (kind == "vqa")
    return op == "relation-truth" || op == "relation-metric" ||
           op == "depth-at-point" || op == "bound-truth";
  if (kind == "choice") return op == "bound-choice";
  if (kind == "fact") return op == "statement";
  if (kind == "point" || kind == "reasoning")
    return op == "object-point" || op == "bound-point";
  return false;
}

std::vector<std::string> pattern_slots(const std::string& pattern) {
  std::vector<std::string> out;
  for (size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] != '[') continue;
    size_t close = pattern.find(']', i + 1);
    if (close == std::string::npos) break;
    out.push_back(pattern.substr(i + 1, close - i - 1));
    i = close;
  }
  return out;
}

std::string replace_all(std::string s, const std::string& from,
                        const std::string& to) {
  size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = char(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

TemplateRegistry TemplateRegistry::embedded() {
  json j;
  try {
    j = json::parse(embedded_qa_templates());
  } catch (const json::parse_error& e) {
    throw InternalError(std::string("embedded templates are invalid JSON: ") +
                        e.what());
  }
  return from_json(j);
}

TemplateRegistry TemplateRegistry::from_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
  return from_json(j);
}

TemplateRegistry TemplateRegistry::from_json(const json& j) {
  TemplateRegistry reg;
  if (!j.contains("templates") || !j.at("templates").is_array())
    throw ValidationError("template file needs a templates array");
  if (j.contains("free_space_direction_phrases"))
    for (const auto& [key, value] :
         j.at("free_space_direction_phrases").items())
      reg.direction_phrases_[key] = value.get<std::string>();
  if (j.contains("ordinal_direction_phrases"))
    for (const auto& [key, value] : j.at("ordinal_direction_phrases").items())
      reg.ordinal_phrases_[key] = value.get<std::string>();

  std::set<std::string> ids;
  for (const json& t : j.at("templates")) {
    QATemplate tpl;
    tpl.template_id = t.value("template_id", std::string());
    if (tpl.template_id.empty())
      throw ValidationError("template without template_id");
    if (!ids.insert(tpl.template_id).second)
      throw ValidationError("duplicate template_id: " + tpl.template_id);
    tpl.kind = t.value("kind", std::string());
    if (!known_kinds().count(tpl.kind))
      throw ValidationError(tpl.template_id + ": unknown kind '" + tpl.kind +
                            "'");
    tpl.family = t.value("family", std::string());
    tpl.pattern = t.value("pattern", std::string());
    if (tpl.family.empty() || tpl.pattern.empty())
      throw ValidationError(tpl.template_id + ": family and pattern required");
    if (t.contains("slots"))
      for (const json& s : t.at("slots"))
        tpl.slots.push_back(s.get<std::string>());
    for (const std::string& used : pattern_slots(tpl.pattern))
      if (std::find(tpl.slots.begin(), tpl.slots.end(), used) ==
          tpl.slots.end())
        throw ValidationError(tpl.template_id + ": pattern slot [" + used +
                              "] is not declared");
    if (!t.contains("answer_rule") || !t.at("answer_rule").is_object())
      throw ValidationError(tpl.template_id + ": answer_rule required");
    tpl.answer_rule = t.at("answer_rule");
    std::string op = tpl.answer_rule.value("op", std::string());
    if (!rule_allowed(tpl.kind, op))
      throw ValidationError(tpl.template_id + ": answer rule op '" + op +
                            "' does not fit kind '" + tpl.kind + "'");
    reg.templates_.push_back(std::move(tpl));
  }
  return reg;
}

const QATemplate& TemplateRegistry::get(const std::string& template_id) const {
  for (const QATemplate& t : templates_)
    if (t.template_id == template_id) return t;
  throw ValidationError("unknown template: " + template_id);
}

std::vector<const QATemplate*> TemplateRegistry::by_family(
    const std::string& family) const {
  std::vector<const QATemplate*> out;
  for (const QATemplate& t : templates_)
    if (t.family == family) out.push_back(&t);
  return out;
}

std::string TemplateRegistry::direction_phrase(
    const std::string& direction) const {
  auto it = direction_phrases_.find(direction);
  if (it == direction_phrases_.end())
    throw ValidationError("no direction phrase for '" + direction + "'");
  return it->second;
}

std::string TemplateRegistry::ordinal_phrase(RankDirection direction) const {
  auto it = ordinal_phrases_.find(direction_name(direction));
  if (it == ordinal_phrases_.end())
    throw ValidationError(std::string("no ordinal phrase for '") +
                          direction_name(direction) + "'");
  return it->second;
}

const char* answer_type_name(AnswerType t) {
  switch (t) {
    case AnswerType::Text: return "text";
    case AnswerType::Choice: return "choice";
    case AnswerType::NumberUnit: return "number+unit";
    case AnswerType::Point2D: return "point2d";
  }
  return "";
}

std::optional<AnswerType> answer_type_from_name(const std::string& s) {
  if (s == "text") return AnswerType::Text;
  if (s == "choice") return AnswerType::Choice;
  if (s == "number+unit") return AnswerType::NumberUnit;
  if (s == "point2d") return AnswerType::Point2D;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Template instantiation

namespace {

const SlotBinding& need_binding(const QATemplate& tpl, const Bindings& b,
                                const std::string& slot) {
  auto it = b.find(slot);
  if (it == b.end())
    throw ValidationError("unbound slot [" + slot + "] in template " +
                          tpl.template_id);
  return it->second;
}

std::string need_object(const QATemplate& tpl, const Bindings& b,
                        const std::string& slot) {
  const SlotBinding& binding = need_binding(tpl, b, slot);
  if (!binding.object_id)
    throw ValidationError("slot [" + slot + "] of template " +
                          tpl.template_id + " needs an object binding");
  return *binding.object_id;
}

Relation need_relation(const QATemplate& tpl, ValueKind kind) {
  std::string name = tpl.answer_rule.value("relation", std::string());
  std::optional<Relation> rel = relation_from_name(name);
  if (!rel)
    throw ValidationError(tpl.template_id + ": unknown relation '" + name +
                          "'");
  if (relation_info(*rel).kind != kind)
    throw ValidationError(tpl.template_id + ": relation '" + name +
                          "' has the wrong value kind for this rule");
  return *rel;
}

const GraphEdge* find_edge(const SceneGraph& graph, Relation rel,
                           const std::string& subject,
                           const std::vector<std::string>& objects) {
  for (const GraphEdge& e : graph.edges) {
    if (e.relation != rel) continue;
    if (e.subject == subject && e.objects == objects) return &e;
    // Symmetric metric pairs are stored once, id-ordered.
    if (objects.size() == 1 && e.objects.size() == 1 &&
        e.subject == objects[0] && e.objects[0] == subject)
      return &e;
  }
  return nullptr;
}

}  // namespace

QAPair instantiate_template(const QATemplate& tpl, const Bindings& bindings,
                            const SceneFrame& scene, const SceneGraph& graph,
                            const Config& cfg) {
  for (const std::string& slot : pattern_slots(tpl.pattern))
    need_binding(tpl, bindings, slot);

  std::string question = tpl.pattern;
  for (const std::string& slot : tpl.slots) {
    auto it = bindings.find(slot);
    if (it != bindings.end())
      question = replace_all(question, "[" + slot + "]", it->second.text);
  }

  QAPair qa;
  qa.question = question;

  const json& rule = tpl.answer_rule;
  std::string op = rule.value("op", std::string());
  if (op == "relation-truth") {
    Relation rel = need_relation(tpl, ValueKind::Boolean);
    std::string subject =
        need_object(tpl, bindings, rule.value("subject", std::string()));
    std::vector<std::string> objects;
    for (const json& slot : rule.value("objects", json::array()))
      objects.push_back(need_object(tpl, bindings, slot.get<std::string>()));
    bool truth = find_edge(graph, rel, subject, objects) != nullptr;
    if (!truth) {
      try {
        truth = evaluate_relation(scene, rel, subject, objects, cfg).truth;
      } catch (const Error& e) {
        throw ValidationError(tpl.template_id +
                              ": answer rule not computable: " + e.what());
      }
    }
    qa.answer_type = AnswerType::Text;
    qa.answer_text = truth ? "yes" : "no";
  } else if (op == "relation-metric") {
    Relation rel = need_relation(tpl, ValueKind::Metric);
    std::string subject =
        need_object(tpl, bindings, rule.value("subject", std::string()));
    std::vector<std::string> objects;
    for (const json& slot : rule.value("objects", json::array()))
      objects.push_back(need_object(tpl, bindings, slot.get<std::string>()));
    const GraphEdge* edge = find_edge(graph, rel, subject, objects);
    if (!edge)
      throw UnsatisfiableError(tpl.template_id +
                               ": answer rule references missing edge '" +
                               relation_info(rel).name + "' for " + subject);
    qa.answer_type = AnswerType::NumberUnit;
    qa.answer_value =
        round_half_up(edge->value.number, rule.value("decimals", 3));
    qa.answer_unit = rule.value("unit", std::string());
  } else if (op == "depth-at-point") {
    const SlotBinding& binding =
        need_binding(tpl, bindings, rule.value("point_slot", std::string()));
    if (!binding.pixel)
      throw ValidationError(tpl.template_id +
                            ": point slot needs a pixel binding");
    int ix = int(std::lround(binding.pixel->u));
    int iy = int(std::lround(binding.pixel->v));
    if (!scene.depth.in_bounds(ix, iy) || !scene.depth.valid_at(ix, iy))
      throw ValidationError(tpl.template_id + ": no valid depth at pixel (" +
                            std::to_string(ix) + ", " + std::to_string(iy) +
                            ")");
    qa.answer_type = AnswerType::NumberUnit;
    qa.answer_value = round_half_up(double(scene.depth.at(ix, iy)),
                                    rule.value("decimals", 3));
    qa.answer_unit = rule.value("unit", std::string());
  } else if (op == "object-point") {
    std::string id =
        need_object(tpl, bindings, rule.value("target", std::string()));
    const ObjectInstance& obj = scene.get(id);
    PixelPoint c = obj.representative_point2d();
    double x = round_half_up(c.u / scene.intrinsics.width, 3);
    double y = round_half_up(c.v / scene.intrinsics.height, 3);
    if (x < 0 || x > 1 || y < 0 || y > 1)
      throw ValidationError(tpl.template_id + ": object " + id +
                            " centers outside the image");
    qa.answer_type = AnswerType::Point2D;
    qa.answer_point = Vec2(x, y);
  } else if (op == "bound-point") {
    const SlotBinding& binding =
        need_binding(tpl, bindings, rule.value("slot", std::string()));
    if (!binding.point)
      throw ValidationError(tpl.template_id +
                            ": answer slot needs a point binding");
    qa.answer_type = AnswerType::Point2D;
    qa.answer_point = binding.point;
  } else if (op == "bound-truth") {
    const SlotBinding& binding =
        need_binding(tpl, bindings, rule.value("slot", std::string()));
    if (!binding.truth)
      throw ValidationError(tpl.template_id +
                            ": answer slot needs a truth binding");
    qa.answer_type = AnswerType::Text;
    qa.answer_text = *binding.truth ? "yes" : "no";
  } else if (op == "bound-choice") {
    const SlotBinding& binding =
        need_binding(tpl, bindings, rule.value("slot", std::string()));
    qa.answer_type = AnswerType::Choice;
    qa.answer_text = binding.text;
  } else if (op == "statement") {
    qa.answer_type = AnswerType::Text;
    qa.answer_text = question;
  } else {
    throw ValidationError(tpl.template_id + ": unknown answer rule op '" + op +
                          "'");
  }
  return qa;
}

// ---------------------------------------------------------------------------
// Generation scaffolding

namespace {

int tier_rank(ExpressionTier t) {
  switch (t) {
    case ExpressionTier::Category: return 0;
    case ExpressionTier::Attribute: return 1;
    case ExpressionTier::Ordinal: return 2;
    case ExpressionTier::Anchored: return 3;
  }
  return 4;
}

struct ExprCatalog {
  std::vector<ReferringExpression> all;
  std::map<std::string, ReferringExpression> best;  // unique, by object id
};

ExprCatalog build_catalog(const SceneFrame& scene, const Config& cfg) {
  ExprCatalog cat;
  cat.all = generate_referring_expressions(scene, cfg);
  for (const ReferringExpression& e : cat.all) {
    if (!e.unique) continue;
    auto it = cat.best.find(e.object_id);
    if (it == cat.best.end() || tier_rank(e.tier) < tier_rank(it->second.tier))
      cat.best[e.object_id] = e;
  }
  return cat;
}

std::optional<Vec2> normalized_point(const SceneFrame& scene,
                                     const ObjectInstance& obj) {
  PixelPoint c = obj.representative_point2d();
  double x = round_half_up(c.u / scene.intrinsics.width, 3);
  double y = round_half_up(c.v / scene.intrinsics.height, 3);
  if (x < 0 || x > 1 || y < 0 || y > 1) return std::nullopt;
  return Vec2(x, y);
}

std::string point_text(const Vec2& p) {
  return "(" + fmt_fixed(p.x(), 3) + ", " + fmt_fixed(p.y(), 3) + ")";
}

// Rounded normalized coordinates of a pixel, rejected when rounding would
// push the answer back onto an out-of-image pixel.
std::optional<Vec2> normalized_region_point(const SceneFrame& scene,
                                            const PixelPoint& px) {
  Vec2 p(round_half_up(px.u / scene.intrinsics.width, 3),
         round_half_up(px.v / scene.intrinsics.height, 3));
  int ix = int(std::floor(p.x() * scene.intrinsics.width + 0.5));
  int iy = int(std::floor(p.y() * scene.intrinsics.height + 0.5));
  if (ix < 0 || ix >= scene.intrinsics.width || iy < 0 ||
      iy >= scene.intrinsics.height)
    return std::nullopt;
  return p;
}

KeyStep position_step(const std::string& target, const Vec2& p) {
  KeyStep s;
  s.perception_type = KeyStep::Type::Position;
  s.target_text = target;
  s.value = {p.x(), p.y()};
  return s;
}

KeyStep orientation_step(const std::string& target, const Vec3& v) {
  KeyStep s;
  s.perception_type = KeyStep::Type::Orientation;
  s.target_text = target;
  s.value = {round_half_up(v.x(), 3), round_half_up(v.y(), 3),
             round_half_up(v.z(), 3)};
  return s;
}

KeyStep size_step(const std::string& target, double meters) {
  KeyStep s;
  s.perception_type = KeyStep::Type::Size;
  s.target_text = target;
  s.value = {round_half_up(meters, 3)};
  if (s.value[0] <= 0)
    throw InternalError("size step for " + target + " rounds to zero");
  return s;
}

std::vector<EvalConstraint> expr_constraints(const ReferringExpression& e,
                                             const SceneFrame& scene) {
  switch (e.tier) {
    case ExpressionTier::Category:
      return {};
    case ExpressionTier::Attribute:
      return {{"", "", true}};
    case ExpressionTier::Ordinal:
      return {{"viewer", "spatial-order", false}};
    case ExpressionTier::Anchored: {
      std::string anchor = "the scene";
      if (e.anchor_id) anchor = "the " + scene.get(*e.anchor_id).category;
      return {{anchor, "closest-to", false}};
    }
  }
  return {};
}

void append_constraints(std::vector<EvalConstraint>* dst,
                        const std::vector<EvalConstraint>& src) {
  dst->insert(dst->end(), src.begin(), src.end());
}

double longest_edge(const OrientedBox3& box) {
  return 2.0 * box.half_extents.maxCoeff();
}

double size_metric(Relation rel, const OrientedBox3& box) {
  switch (rel) {
    case Relation::Taller:
    case Relation::Shorter:
    case Relation::ObjectHeight:
      return object_height(box);
    case Relation::Wider:
    case Relation::Thinner:
    case Relation::ObjectWidth:
      return object_width(box);
    default:
      return longest_edge(box);
  }
}

struct Candidate {
  const QATemplate* tpl = nullptr;
  Bindings bindings;
  QAResolution resolution;
  std::vector<EvalConstraint> constraints;
  std::vector<KeyStep> reasoning;
  std::optional<std::string> subset;
  std::optional<Box2> mask_box;
  std::vector<PixelPoint> mask_points;
  std::string source;
};

// Objects that have both a unique expression and an in-image point.
struct NamedObject {
  const ObjectInstance* obj;
  ReferringExpression expr;
  Vec2 point;
};

std::vector<NamedObject> named_objects(const SceneFrame& scene,
                                       const ExprCatalog& catalog) {
  std::vector<NamedObject> out;
  for (const ObjectInstance& obj : scene.objects) {
    auto it = catalog.best.find(obj.id);
    if (it == catalog.best.end()) continue;
    std::optional<Vec2> p = normalized_point(scene, obj);
    if (!p) continue;
    out.push_back({&obj, it->second, *p});
  }
  return out;
}

const char* kSpatialQAFamilies[] = {
    "relative-position", "orientation", "attribute-comparison",
    "quantitative",      "free-space",  "location-placement",
    "fact",              "between",
};

std::string join_options(const std::vector<std::string>& options) {
  std::string out;
  for (size_t i = 0; i < options.size(); ++i) {
    if (i > 0) out += i + 1 == options.size() ? ", or " : ", ";
    out += options[i];
  }
  return out;
}

FreeSpaceQuery query_for_region(const FreeSpaceRegion& region) {
  FreeSpaceQuery q;
  q.relation = region.relation;
  q.target_ids = region.target_ids;
  q.seed = region.seed;
  return q;
}

}  // namespace

std::vector<std::string> generate_fact_statements(const SceneFrame& scene,
                                                  const SceneGraph& graph,
                                                  const TemplateRegistry& reg) {
  ExprCatalog catalog = build_catalog(scene, Config{});
  std::vector<std::string> facts;

  // Relation facts: one statement per true boolean edge a fact template
  // covers, in graph edge order.
  std::map<std::string, const QATemplate*> by_relation;
  const QATemplate* depth_tpl = nullptr;
  for (const QATemplate* tpl : reg.by_family("fact")) {
    std::string rel = tpl->answer_rule.value("relation", std::string());
    if (!rel.empty())
      by_relation[rel] = tpl;
    else if (tpl->pattern.find("camera") != std::string::npos)
      depth_tpl = tpl;
  }

  for (const GraphEdge& edge : graph.edges) {
    if (edge.value.kind != ValueKind::Boolean || !edge.value.truth) continue;
    auto it = by_relation.find(relation_info(edge.relation).name);
    if (it == by_relation.end()) continue;
    auto a = catalog.best.find(edge.subject);
    if (a == catalog.best.end() || edge.objects.size() != 1) continue;
    auto b = catalog.best.find(edge.objects[0]);
    if (b == catalog.best.end()) continue;
    std::string text = replace_all(it->second->pattern, "[A]", a->second.text);
    text = replace_all(text, "[B]", b->second.text);
    facts.push_back(capitalize(text));
  }

  // Camera-distance facts from the point-depth metric edges.
  if (depth_tpl) {
    for (const GraphEdge& edge : graph.edges) {
      if (edge.relation != Relation::PointDepth) continue;
      const ObjectInstance* obj = scene.find(edge.subject);
      if (!obj) continue;
      std::optional<Vec2> p = normalized_point(scene, *obj);
      if (!p) continue;
      std::string text =
          replace_all(depth_tpl->pattern, "[A]", point_text(*p));
      text = replace_all(text, "[X]",
                         fmt_fixed(edge.value.number, 1) + " meters");
      facts.push_back(text);
    }
  }
  return facts;
}

std::vector<FreeSpaceRegion> default_free_space_regions(const SceneFrame& scene,
                                                        const Config& cfg,
                                                        uint64_t seed) {
  static const FreeSpaceDirection kDirections[] = {
      FreeSpaceDirection::Left,   FreeSpaceDirection::Right,
      FreeSpaceDirection::Front,  FreeSpaceDirection::Behind,
      FreeSpaceDirection::Above,  FreeSpaceDirection::Below,
  };
  std::vector<FreeSpaceRegion> out;
  std::vector<PlatformSurface> platforms = platforms_from_scene(scene, cfg);

  for (const ObjectInstance& obj : scene.objects) {
    for (FreeSpaceDirection dir : kDirections) {
      FreeSpaceQuery q;
      q.relation = dir;
      q.target_ids = {obj.id};
      q.seed = derive_seed(seed, scene.frame_id + "/" +
                                     free_space_direction_name(dir) + "/" +
                                     obj.id);
      out.push_back(run_free_space_query(scene, q, cfg).region);
    }
  }

  // Between-queries for pairs sharing a supporting platform.
  for (size_t i = 0; i < scene.objects.size(); ++i) {
    const PlatformSurface* pa =
        find_supporting_platform(scene.objects[i], platforms, cfg);
    if (!pa) continue;
    for (size_t jj = i + 1; jj < scene.objects.size(); ++jj) {
      const PlatformSurface* pb =
          find_supporting_platform(scene.objects[jj], platforms, cfg);
      if (!pb || pb->object_id != pa->object_id) continue;
      FreeSpaceQuery q;
      q.relation = FreeSpaceDirection::Between;
      q.target_ids = {scene.objects[i].id, scene.objects[jj].id};
      q.seed = derive_seed(seed, scene.frame_id + "/between/" +
                                     scene.objects[i].id + "/" +
                                     scene.objects[jj].id);
      out.push_back(run_free_space_query(scene, q, cfg).region);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spatial QA over one scene

namespace {

struct GenContext {
  const SceneFrame& scene;
  const SceneGraph& graph;
  const std::vector<FreeSpaceRegion>& regions;
  const TemplateRegistry& reg;
  const Config& cfg;
  ExprCatalog catalog;
  std::vector<NamedObject> named;
};

std::string placement_phrase(const GenContext& ctx,
                             const FreeSpaceRegion& region,
                             const std::vector<const NamedObject*>& targets) {
  if (region.relation == FreeSpaceDirection::Between)
    return "between " + targets[0]->expr.text + " and " + targets[1]->expr.text;
  return ctx.reg.direction_phrase(
             free_space_direction_name(region.relation)) +
         " " + targets[0]->expr.text;
}

// The named objects a region's target ids refer to; empty when any target
// lacks a unique expression.
std::vector<const NamedObject*> region_targets(const GenContext& ctx,
                                               const FreeSpaceRegion& region) {
  std::vector<const NamedObject*> out;
  for (const std::string& id : region.target_ids) {
    const NamedObject* found = nullptr;
    for (const NamedObject& n : ctx.named)
      if (n.obj->id == id) found = &n;
    if (!found) return {};
    out.push_back(found);
  }
  return out;
}

void relation_pair_candidates(const GenContext& ctx,
                              const std::vector<const QATemplate*>& tpls,
                              std::vector<Candidate>* out) {
  for (const QATemplate* tpl : tpls) {
    if (tpl->answer_rule.value("op", std::string()) != "relation-truth")
      continue;
    std::optional<Relation> rel =
        relation_from_name(tpl->answer_rule.value("relation", std::string()));
    if (!rel) continue;
    const RelationInfo& info = relation_info(*rel);
    for (const NamedObject& a : ctx.named) {
      if (info.needs_orientation && !a.obj->orientation) continue;
      if (info.arity == 1) {
        Candidate c;
        c.tpl = tpl;
        c.bindings["A"] = {a.expr.text, a.obj->id, {}, {}, {}};
        c.resolution = {"relation-truth", info.name, {a.obj->id}, {}, 0, {}};
        c.constraints = expr_constraints(a.expr, ctx.scene);
        c.reasoning = {info.needs_orientation
                           ? orientation_step(a.expr.text, *a.obj->orientation)
                           : position_step(a.expr.text, a.point)};
        c.source = "3d-graph";
        out->push_back(std::move(c));
        continue;
      }
      if (info.arity != 2) continue;
      for (const NamedObject& b : ctx.named) {
        if (a.obj->id == b.obj->id) continue;
        Candidate c;
        c.tpl = tpl;
        c.bindings["A"] = {a.expr.text, a.obj->id, {}, {}, {}};
        c.bindings["B"] = {b.expr.text, b.obj->id, {}, {}, {}};
        c.resolution = {"relation-truth", info.name, {a.obj->id, b.obj->id},
                        {}, 0, {}};
        c.constraints = expr_constraints(a.expr, ctx.scene);
        c.constraints.push_back({b.expr.text, info.name, false});
        append_constraints(&c.constraints, expr_constraints(b.expr, ctx.scene));
        switch (info.group) {
          case RelationGroup::Orientation:
            c.reasoning = {orientation_step(a.expr.text, *a.obj->orientation),
                           position_step(b.expr.text, b.point)};
            break;
          case RelationGroup::Attribute:
            c.reasoning = {
                size_step(a.expr.text, size_metric(*rel, a.obj->obb)),
                size_step(b.expr.text, size_metric(*rel, b.obj->obb))};
            break;
          default:
            c.reasoning = {position_step(a.expr.text, a.point),
                           position_step(b.expr.text, b.point)};
            break;
        }
        c.source = "3d-graph";
        out->push_back(std::move(c));
      }
    }
  }
}

std::vector<Candidate> family_candidates(const GenContext& ctx,
                                         const std::string& family) {
  std::vector<Candidate> out;
  std::vector<const QATemplate*> tpls = ctx.reg.by_family(family);

  if (family == "relative-position" || family == "attribute-comparison" ||
      family == "orientation") {
    relation_pair_candidates(ctx, tpls, &out);
  }

  if (family == "orientation") {
    // Relative-angle questions need both participants annotated.
    for (const QATemplate* tpl : tpls) {
      if (tpl->answer_rule.value("op", std::string()) != "relation-metric")
        continue;
      for (const NamedObject& a : ctx.named) {
        if (!a.obj->orientation) continue;
        for (const NamedObject& b : ctx.named) {
          if (a.obj->id >= b.obj->id || !b.obj->orientation) continue;
          Candidate c;
          c.tpl = tpl;
          c.bindings["A"] = {a.expr.text, a.obj->id, {}, {}, {}};
          c.bindings["B"] = {b.expr.text, b.obj->id, {}, {}, {}};
          c.resolution = {"relation-metric", "relative-angle",
                          {a.obj->id, b.obj->id}, {}, 0, {}};
          c.constraints = expr_constraints(a.expr, ctx.scene);
          c.constraints.push_back({b.expr.text, "relative-angle", false});
          c.reasoning = {orientation_step(a.expr.text, *a.obj->orientation),
                         orientation_step(b.expr.text, *b.obj->orientation)};
          c.source = "3d-graph";
          out.push_back(std::move(c));
        }
      }
    }
  }

  if (family == "attribute-comparison") {
    for (const QATemplate* tpl : tpls) {
      if (tpl->answer_rule.value("op", std::string()) != "bound-choice")
        continue;
      std::optional<Relation> rel = relation_from_name(
          tpl->answer_rule.value("relation", std::string()));
      if (!rel) continue;
      for (const auto& [category, members] : category_groups(ctx.scene)) {
        std::vector<const NamedObject*> options;
        for (const ObjectInstance* m : members) {
          for (const NamedObject& n : ctx.named)
            if (n.obj->id == m->id) options.push_back(&n);
          if (options.size() == 4) break;
        }
        if (options.size() < 3) continue;
        const NamedObject* best = nullptr;
        double best_v = 0, second_v = 0;
        for (const NamedObject* o : options) {
          double v = size_metric(*rel, o->obj->obb);
          if (!best || v > best_v) {
            second_v = best ? best_v : 0;
            best = o;
            best_v = v;
          } else {
            second_v = std::max(second_v, v);
          }
        }
        if (!best || best_v - second_v < 1e-6) continue;
        Candidate c;
        c.tpl = tpl;
        std::vector<std::string> texts;
        for (const NamedObject* o : options) {
          texts.push_back(o->expr.text);
          c.resolution.object_ids.push_back(o->obj->id);
          c.reasoning.push_back(
              size_step(o->expr.text, size_metric(*rel, o->obj->obb)));
          append_constraints(&c.constraints,
                             expr_constraints(o->expr, ctx.scene));
        }
        c.bindings["OPTIONS"] = {join_options(texts), {}, {}, {}, {}};
        c.bindings["ANSWER"] = {best->expr.text, best->obj->id, {}, {}, {}};
        c.resolution.kind = "choice";
        c.resolution.relation = relation_info(*rel).name;
        c.source = "3d-graph";
        out.push_back(std::move(c));
      }
    }
  }

  if (family == "quantitative") {
    for (const QATemplate* tpl : tpls) {
      std::string op = tpl->answer_rule.value("op", std::string());
      if (op == "depth-at-point") {
        for (const NamedObject& a : ctx.named) {
          PixelPoint px = a.obj->representative_point2d();
          int ix = int(std::lround(px.u)), iy = int(std::lround(px.v));
          if (!ctx.scene.depth.in_bounds(ix, iy) ||
              !ctx.scene.depth.valid_at(ix, iy))
            continue;
          Candidate c;
          c.tpl = tpl;
          c.bindings["X"] = {point_text(a.point), {}, {}, px, {}};
          c.resolution = {"depth-at-point", "", {a.obj->id}, {}, 0, {}};
          c.reasoning = {position_step(a.expr.text, a.point)};
          c.source = "3d-graph";
          out.push_back(std::move(c));
        }
      } else if (op == "relation-metric") {
        std::optional<Relation> rel = relation_from_name(
            tpl->answer_rule.value("relation", std::string()));
        if (!rel) continue;
        const RelationInfo& info = relation_info(*rel);
        for (const NamedObject& a : ctx.named) {
          if (info.arity == 1) {
            Candidate c;
            c.tpl = tpl;
            c.bindings["A"] = {a.expr.text, a.obj->id, {}, {}, {}};
            c.resolution = {"relation-metric", info.name, {a.obj->id}, {}, 0,
                            {}};
            c.constraints = expr_constraints(a.expr, ctx.scene);
            c.reasoning = {size_step(a.expr.text, size_metric(*rel, a.obj->obb))};
            c.source = "3d-graph";
            out.push_back(std::move(c));
            continue;
          }
          for (const NamedObject& b : ctx.named) {
            if (a.obj->id >= b.obj->id) continue;
            Candidate c;
            c.tpl = tpl;
            c.bindings["A"] = {a.expr.text, a.obj->id, {}, {}, {}};
            c.bindings["B"] = {b.expr.text, b.obj->id, {}, {}, {}};
            c.resolution = {"relation-metric", info.name,
                            {a.obj->id, b.obj->id}, {}, 0, {}};
            c.constraints = expr_constraints(a.expr, ctx.scene);
            c.constraints.push_back({b.expr.text, info.name, false});
            c.reasoning = {position_step(a.expr.text, a.point),
                           position_step(b.expr.text, b.point)};
            c.source = "3d-graph";
            out.push_back(std::move(c));
          }
        }
      } else if (op == "relation-truth") {
        // Betweenness over subject + id-ordered anchor pairs.
        for (const NamedObject& a : ctx.named) {
          for (const NamedObject& b : ctx.named) {
            if (b.obj->id == a.obj->id) continue;
            for (const NamedObject& d : ctx.named) {
              if (d.obj->id <= b.obj->id || d.obj->id == a.obj->id) continue;
              Candidate c;
              c.tpl = tpl;
              c.bindings["A"] = {a.expr.text, a.obj->id, {}, {}, {}};
              c.bindings["B"] = {b.expr.text, b.obj->id, {}, {}, {}};
              c.bindings["C"] = {d.expr.text, d.obj->id, {}, {}, {}};
              c.resolution = {"relation-truth", "between",
                              {a.obj->id, b.obj->id, d.obj->id}, {}, 0, {}};
              c.constraints = expr_constraints(a.expr, ctx.scene);
              c.constraints.push_back({b.expr.text, "between", false});
              c.constraints.push_back({d.expr.text, "", false});
              c.reasoning = {position_step(a.expr.text, a.point),
                             position_step(b.expr.text, b.point),
                             position_step(d.expr.text, d.point)};
              c.source = "3d-graph";
              out.push_back(std::move(c));
            }
          }
        }
      }
    }
  }

  if (family == "free-space") {
    for (const FreeSpaceRegion& region : ctx.regions) {
      std::vector<const NamedObject*> targets = region_targets(ctx, region);
      if (targets.empty()) continue;
      bool between = region.relation == FreeSpaceDirection::Between;
      const QATemplate* tpl = nullptr;
      for (const QATemplate* t : tpls) {
        bool directional = std::find(t->slots.begin(), t->slots.end(), "D") !=
                           t->slots.end();
        if (directional != between) tpl = t;
      }
      if (!tpl) continue;
      Candidate c;
      c.tpl = tpl;
      if (between) {
        c.bindings["A"] = {targets[0]->expr.text, targets[0]->obj->id, {}, {}, {}};
        c.bindings["B"] = {targets[1]->expr.text, targets[1]->obj->id, {}, {}, {}};
        c.constraints = {{targets[0]->expr.text, "between", false},
                         {targets[1]->expr.text, "", false}};
        c.reasoning = {position_step(targets[0]->expr.text, targets[0]->point),
                       position_step(targets[1]->expr.text, targets[1]->point)};
      } else {
        std::string dir = free_space_direction_name(region.relation);
        c.bindings["D"] = {ctx.reg.direction_phrase(dir), {}, {}, {}, {}};
        c.bindings["A"] = {targets[0]->expr.text, targets[0]->obj->id, {}, {}, {}};
        c.constraints = {{targets[0]->expr.text, dir, false}};
        c.reasoning = {position_step(targets[0]->expr.text, targets[0]->point)};
      }
      c.bindings["R"] = {"", {}, {}, {}, region.selected.has_value()};
      c.resolution.kind = "free-truth";
      c.resolution.relation = free_space_direction_name(region.relation);
      for (const std::string& id : region.target_ids)
        c.resolution.object_ids.push_back(id);
      c.resolution.query = query_for_region(region);
      c.source = "freespace";
      out.push_back(std::move(c));
    }
  }

  if (family == "location-placement") {
    for (const QATemplate* tpl : tpls) {
      std::string op = tpl->answer_rule.value("op", std::string());
      bool wants_direction =
          std::find(tpl->slots.begin(), tpl->slots.end(), "D") !=
          tpl->slots.end();
      if (op == "object-point") {
        for (const NamedObject& a : ctx.named) {
          Candidate c;
          c.tpl = tpl;
          c.bindings["A"] = {a.expr.text, a.obj->id, {}, {}, {}};
          c.resolution = {"object-point", "", {a.obj->id}, {}, 0, {}};
          c.constraints = expr_constraints(a.expr, ctx.scene);
          c.reasoning = {position_step(a.expr.text, a.point)};
          c.subset = "location";
          c.mask_box = a.obj->box2d;
          c.source = "3d-graph";
          out.push_back(std::move(c));
        }
      } else if (tpl->slots.size() == 2 && tpl->slots[0] == "O") {
        // Ordinal references: "the second cup from the left".
        for (const ReferringExpression& e : ctx.catalog.all) {
          if (e.tier != ExpressionTier::Ordinal || !e.direction) continue;
          const ObjectInstance& obj = ctx.scene.get(e.object_id);
          std::optional<Vec2> p = normalized_point(ctx.scene, obj);
          if (!p) continue;
          Candidate c;
          c.tpl = tpl;
          std::string text = "the " + ordinal_word(e.ordinal) + " " +
                             obj.category + " " +
                             ctx.reg.ordinal_phrase(*e.direction);
          c.bindings["O"] = {text, obj.id, {}, {}, {}};
          c.bindings["P"] = {point_text(*p), obj.id, p, {}, {}};
          c.resolution = {"ordinal-point", obj.category, {obj.id},
                          e.direction, e.ordinal, {}};
          c.constraints = {{"viewer", "spatial-order", false}};
          c.reasoning = {position_step(text, *p)};
          c.subset = "location";
          c.mask_box = obj.box2d;
          c.source = "3d-graph";
          out.push_back(std::move(c));
        }
      } else if (op == "bound-point") {
        for (const FreeSpaceRegion& region : ctx.regions) {
          if (!region.selected) continue;
          bool between = region.relation == FreeSpaceDirection::Between;
          if (between == wants_direction) continue;
          std::vector<const NamedObject*> targets =
              region_targets(ctx, region);
          if (targets.empty()) continue;
          std::optional<Vec2> rp =
              normalized_region_point(ctx.scene, *region.selected);
          if (!rp) continue;
          Vec2 p = *rp;
          Candidate c;
          c.tpl = tpl;
          std::string phrase = placement_phrase(ctx, region, targets);
          if (between) {
            c.bindings["A"] = {targets[0]->expr.text, targets[0]->obj->id, {}, {}, {}};
            c.bindings["B"] = {targets[1]->expr.text, targets[1]->obj->id, {}, {}, {}};
            c.constraints = {{targets[0]->expr.text, "between", false},
                             {targets[1]->expr.text, "", false}};
            c.reasoning = {
                position_step(targets[0]->expr.text, targets[0]->point),
                position_step(targets[1]->expr.text, targets[1]->point)};
          } else {
            std::string dir = free_space_direction_name(region.relation);
            c.bindings["D"] = {ctx.reg.direction_phrase(dir), {}, {}, {}, {}};
            c.bindings["A"] = {targets[0]->expr.text, targets[0]->obj->id, {}, {}, {}};
            c.constraints = {{targets[0]->expr.text, dir, false}};
            c.reasoning = {
                position_step(targets[0]->expr.text, targets[0]->point)};
          }
          c.bindings["P"] = {point_text(p), {}, p, {}, {}};
          c.reasoning.push_back(position_step("a free spot " + phrase, p));
          c.resolution.kind = "free-point";
          c.resolution.relation = free_space_direction_name(region.relation);
          c.resolution.object_ids = region.target_ids;
          c.resolution.query = query_for_region(region);
          c.subset = "placement";
          for (const VisiblePoint& v : region.visible)
            c.mask_points.push_back(v.pixel);
          c.source = "freespace";
          out.push_back(std::move(c));
        }
      }
    }
  }

  if (family == "between") {
    // Cross-cutting selection: every item whose core relation is
    // betweenness, whatever kind it takes.
    static const char* kBaseFamilies[] = {"quantitative", "free-space",
                                          "location-placement"};
    for (const char* base : kBaseFamilies) {
      std::vector<Candidate> base_cands = family_candidates(ctx, base);
      for (Candidate& c : base_cands)
        if (c.resolution.relation == "between") out.push_back(std::move(c));
    }
  }

  if (family == "fact") {
    const QATemplate* statement_tpl = nullptr;
    for (const QATemplate* t : tpls)
      if (t->answer_rule.value("op", std::string()) == "statement")
        statement_tpl = t;
    if (statement_tpl) {
      for (const std::string& fact :
           generate_fact_statements(ctx.scene, ctx.graph, ctx.reg)) {
        Candidate c;
        c.resolution = {"statement", "", {}, {}, 0, {}};
        c.source = "2d-graph";
        c.bindings["FACT"] = {fact, {}, {}, {}, {}};
        out.push_back(std::move(c));
      }
    }
  }

  return out;
}

}  // namespace

std::vector<GeneratedQA> generate_spatial_qa(
    const SceneFrame& scene, const SceneGraph& graph,
    const std::vector<FreeSpaceRegion>& regions, const TemplateRegistry& reg,
    const std::vector<std::string>& families, const Config& cfg, uint64_t seed,
    bool mark_unseen, QAGenReport* report) {
  GenContext ctx{scene, graph, regions, reg, cfg, build_catalog(scene, cfg),
                 {}};
  ctx.named = named_objects(scene, ctx.catalog);

  std::vector<GeneratedQA> out;
  for (const std::string& family : families) {
    bool known = false;
    for (const char* f : kSpatialQAFamilies) known |= family == f;
    if (!known) throw ValidationError("unknown QA family: " + family);

    std::vector<Candidate> cands = family_candidates(ctx, family);
    if (cands.empty()) {
      if (report) report->skipped[family] = "no viable candidates in scene";
      continue;
    }

    uint64_t family_seed = derive_seed(seed, scene.frame_id + "/qa/" + family);
    CounterRng rng(family_seed);
    std::vector<size_t> idx(cands.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (size_t i = 0; i + 1 < idx.size(); ++i) {
      size_t j = i + size_t(rng.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    size_t want = size_t(std::max(cfg.qa_per_family, 0));

    size_t taken = 0;
    for (size_t pick : idx) {
      if (taken == want) break;
      Candidate& c = cands[pick];
      QAPair qa;
      if (c.tpl) {
        qa = instantiate_template(*c.tpl, c.bindings, scene, graph, cfg);
        // VQA questions must not contain their own numeric answer.
        if (c.tpl->kind == "vqa" && qa.answer_value) {
          std::string literal = fmt_fixed(
              *qa.answer_value, c.tpl->answer_rule.value("decimals", 3));
          if (qa.question.find(literal) != std::string::npos) continue;
        }
      } else {
        qa.question = c.bindings.at("FACT").text;
        qa.answer_type = AnswerType::Text;
        qa.answer_text = qa.question;
      }
      char seq[8];
      std::snprintf(seq, sizeof(seq), "%02zu", taken);
      qa.qa_id = scene.frame_id + "-" + family + "-" + seq;
      qa.image_ref = scene.frame_id;
      if (!scene.depth_ref.empty()) qa.depth_ref = scene.depth_ref;
      qa.reasoning = c.reasoning;
      qa.source = c.source;
      qa.step_count = count_reasoning_steps(c.constraints);
      qa.seed = family_seed;

      GeneratedQA g;
      g.qa = std::move(qa);
      g.family = family;
      g.resolution = std::move(c.resolution);
      g.constraints = std::move(c.constraints);
      g.subset = c.subset;
      if (mark_unseen && g.subset) g.subset = "unseen";
      g.mask_box = c.mask_box;
      g.mask_points = std::move(c.mask_points);
      out.push_back(std::move(g));
      ++taken;
      if (report) report->counts[family] += 1;
    }
    if (taken == 0 && report)
      report->skipped[family] = "no viable candidates in scene";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reasoning QA

const char* reasoning_task_name(ReasoningTask t) {
  switch (t) {
    case ReasoningTask::LocateFromDescription: return "locate-from-description";
    case ReasoningTask::IdentifyFromRelations: return "identify-from-relations";
    case ReasoningTask::LocateEmptySpace: return "locate-empty-space";
  }
  return "";
}

namespace {

struct IdentifyRelation {
  Relation rel;
  const char* phrase;
};

const IdentifyRelation kIdentifyPool[] = {
    {Relation::Left, "to the left of"},
    {Relation::Right, "to the right of"},
    {Relation::Front, "in front of"},
    {Relation::Behind, "behind"},
    {Relation::Bigger, "bigger than"},
    {Relation::Taller, "taller than"},
    {Relation::FacingToward, "facing toward"},
};

}  // namespace

GeneratedQA generate_reasoning_qa(const SceneFrame& scene,
                                  const SceneGraph& graph,
                                  const std::vector<FreeSpaceRegion>& regions,
                                  const TemplateRegistry& reg,
                                  ReasoningTask task, const Config& cfg,
                                  uint64_t seed) {
  GenContext ctx{scene, graph, regions, reg, cfg, build_catalog(scene, cfg),
                 {}};
  ctx.named = named_objects(scene, ctx.catalog);
  uint64_t task_seed = derive_seed(
      seed, scene.frame_id + "/reasoning/" + reasoning_task_name(task));
  CounterRng rng(task_seed);

  GeneratedQA g;
  g.family = "reasoning";

  if (task == ReasoningTask::LocateFromDescription) {
    if (ctx.named.empty())
      throw UnsatisfiableError("no uniquely describable object to locate");
    const NamedObject& a = ctx.named[rng.below(ctx.named.size())];
    const QATemplate& tpl = reg.get("rsn-locate");
    Bindings b;
    b["A"] = {a.expr.text, a.obj->id, {}, {}, {}};
    b["P"] = {point_text(a.point), a.obj->id, a.point, {}, {}};
    g.qa = instantiate_template(tpl, b, scene, graph, cfg);
    if (a.expr.anchor_id) {
      const ObjectInstance& anchor = scene.get(*a.expr.anchor_id);
      std::optional<Vec2> ap = normalized_point(scene, anchor);
      if (ap)
        g.qa.reasoning.push_back(
            position_step("the " + anchor.category, *ap));
    }
    g.qa.reasoning.push_back(position_step(a.expr.text, a.point));
    g.constraints = expr_constraints(a.expr, scene);
    g.resolution = {"object-point", "", {a.obj->id}, {}, 0, {}};
    g.subset = "location";
    g.mask_box = a.obj->box2d;
  } else if (task == ReasoningTask::IdentifyFromRelations) {
    // Scan for a (relation, anchor) pair satisfied by exactly one object.
    struct Pick {
      const IdentifyRelation* rel;
      const NamedObject* anchor;
      const NamedObject* subject;
    };
    std::vector<Pick> picks;
    for (const IdentifyRelation& ir : kIdentifyPool) {
      const RelationInfo& info = relation_info(ir.rel);
      for (const NamedObject& anchor : ctx.named) {
        const NamedObject* only = nullptr;
        int hits = 0;
        for (const NamedObject& s : ctx.named) {
          if (s.obj->id == anchor.obj->id) continue;
          if (info.needs_orientation && !s.obj->orientation) continue;
          if (evaluate_relation(scene, ir.rel, s.obj->id, {anchor.obj->id},
                                cfg)
                  .truth) {
            ++hits;
            only = &s;
          }
        }
        if (hits == 1) picks.push_back({&ir, &anchor, only});
      }
    }
    if (picks.empty())
      throw UnsatisfiableError(
          "no relation singles out one object in this scene");
    const Pick& pick = picks[rng.below(picks.size())];
    const QATemplate& tpl = reg.get("rsn-identify");
    Bindings b;
    b["REL"] = {std::string(pick.rel->phrase) + " " + pick.anchor->expr.text,
                {}, {}, {}, {}};
    b["P"] = {point_text(pick.subject->point), pick.subject->obj->id,
              pick.subject->point, {}, {}};
    g.qa = instantiate_template(tpl, b, scene, graph, cfg);
    const RelationInfo& info = relation_info(pick.rel->rel);
    switch (info.group) {
      case RelationGroup::Attribute:
        g.qa.reasoning = {
            size_step(pick.anchor->expr.text,
                      size_metric(pick.rel->rel, pick.anchor->obj->obb)),
            size_step("the target object",
                      size_metric(pick.rel->rel, pick.subject->obj->obb)),
            position_step("the target object", pick.subject->point)};
        break;
      case RelationGroup::Orientation:
        g.qa.reasoning = {
            orientation_step("the target object",
                             *pick.subject->obj->orientation),
            position_step(pick.anchor->expr.text, pick.anchor->point),
            position_step("the target object", pick.subject->point)};
        break;
      default:
        g.qa.reasoning = {
            position_step(pick.anchor->expr.text, pick.anchor->point),
            position_step("the target object", pick.subject->point)};
        break;
    }
    g.constraints = {{pick.anchor->expr.text, info.name, false}};
    g.resolution = {"identify", info.name,
                    {pick.anchor->obj->id, pick.subject->obj->id}, {}, 0, {}};
    g.subset = "location";
    g.mask_box = pick.subject->obj->box2d;
  } else {
    std::vector<const FreeSpaceRegion*> accepted;
    for (const FreeSpaceRegion& r : regions)
      if (r.selected && !region_targets(ctx, r).empty() &&
          normalized_region_point(scene, *r.selected))
        accepted.push_back(&r);
    if (accepted.empty())
      throw UnsatisfiableError("no accepted free-space region in this scene");
    const FreeSpaceRegion& region = *accepted[rng.below(accepted.size())];
    std::vector<const NamedObject*> targets = region_targets(ctx, region);
    Vec2 p = *normalized_region_point(scene, *region.selected);
    const QATemplate& tpl = reg.get("rsn-empty");
    std::string phrase = placement_phrase(ctx, region, targets);
    Bindings b;
    b["WHERE"] = {phrase, {}, {}, {}, {}};
    b["P"] = {point_text(p), {}, p, {}, {}};
    g.qa = instantiate_template(tpl, b, scene, graph, cfg);
    for (const NamedObject* t : targets)
      g.qa.reasoning.push_back(position_step(t->expr.text, t->point));
    g.qa.reasoning.push_back(position_step("a free spot " + phrase, p));
    if (region.relation == FreeSpaceDirection::Between) {
      g.constraints = {{targets[0]->expr.text, "between", false},
                       {targets[1]->expr.text, "", false}};
    } else {
      g.constraints = {{targets[0]->expr.text,
                        free_space_direction_name(region.relation), false}};
    }
    g.resolution.kind = "free-point";
    g.resolution.relation = free_space_direction_name(region.relation);
    g.resolution.object_ids = region.target_ids;
    g.resolution.query = query_for_region(region);
    g.subset = "placement";
    for (const VisiblePoint& v : region.visible)
      g.mask_points.push_back(v.pixel);
  }

  if (g.qa.reasoning.size() > 5) g.qa.reasoning.resize(5);
  g.qa.qa_id = scene.frame_id + "-" + reasoning_task_name(task);
  g.qa.image_ref = scene.frame_id;
  if (!scene.depth_ref.empty()) g.qa.depth_ref = scene.depth_ref;
  g.qa.source = "simulation";
  g.qa.step_count = count_reasoning_steps(g.constraints);
  g.qa.seed = task_seed;
  return g;
}

std::vector<GeneratedQA> generate_reasoning_suite(
    const SceneFrame& scene, const SceneGraph& graph,
    const std::vector<FreeSpaceRegion>& regions, const TemplateRegistry& reg,
    const Config& cfg, uint64_t seed, QAGenReport* report) {
  static const ReasoningTask kTasks[] = {ReasoningTask::LocateFromDescription,
                                         ReasoningTask::IdentifyFromRelations,
                                         ReasoningTask::LocateEmptySpace};
  std::vector<GeneratedQA> out;
  for (ReasoningTask task : kTasks) {
    try {
      out.push_back(generate_reasoning_qa(scene, graph, regions, reg, task,
                                          cfg, seed));
      if (report) report->counts["reasoning"] += 1;
    } catch (const UnsatisfiableError& e) {
      if (report)
        report->skipped[std::string("reasoning/") +
                        reasoning_task_name(task)] = e.what();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json qa_to_json(const QAPair& qa) {
  json j;
  j["qa_id"] = qa.qa_id;
  j["image_ref"] = qa.image_ref;
  if (qa.depth_ref) j["depth_ref"] = *qa.depth_ref;
  j["question"] = qa.question;
  j["answer_type"] = answer_type_name(qa.answer_type);
  switch (qa.answer_type) {
    case AnswerType::Text:
    case AnswerType::Choice:
      j["answer"] = qa.answer_text;
      break;
    case AnswerType::NumberUnit:
      j["answer"] = {{"unit", qa.answer_unit}, {"value", *qa.answer_value}};
      break;
    case AnswerType::Point2D:
      j["answer"] = {qa.answer_point->x(), qa.answer_point->y()};
      break;
  }
  json reasoning = json::array();
  for (const KeyStep& s : qa.reasoning) {
    json step;
    step["perception_type"] = key_step_type_name(s.perception_type);
    step["target_text"] = s.target_text;
    step["value"] = s.value;
    reasoning.push_back(step);
  }
  j["reasoning"] = reasoning;
  j["source"] = qa.source;
  j["step_count"] = qa.step_count;
  j["seed"] = qa.seed;
  return j;
}

QAPair qa_from_json(const json& j, const std::string& where) {
  QAPair qa;
  if (!j.contains("qa_id") || !j.at("qa_id").is_string())
    throw ValidationError(where + ": missing qa_id");
  qa.qa_id = j.at("qa_id").get<std::string>();
  qa.image_ref = j.value("image_ref", std::string());
  if (j.contains("depth_ref"))
    qa.depth_ref = j.at("depth_ref").get<std::string>();
  qa.question = j.value("question", std::string());
  std::optional<AnswerType> type =
      answer_type_from_name(j.value("answer_type", std::string()));
  if (!type) throw ValidationError(where + ": bad answer_type");
  qa.answer_type = *type;
  const json& answer = j.at("answer");
  switch (qa.answer_type) {
    case AnswerType::Text:
    case AnswerType::Choice:
      qa.answer_text = answer.get<std::string>();
      break;
    case AnswerType::NumberUnit:
      qa.answer_value = answer.at("value").get<double>();
      qa.answer_unit = answer.value("unit", std::string());
      break;
    case AnswerType::Point2D:
      if (!answer.is_array() || answer.size() != 2)
        throw ValidationError(where + ": point answer must be [x, y]");
      qa.answer_point =
          Vec2(answer[0].get<double>(), answer[1].get<double>());
      break;
  }
  for (const json& s : j.value("reasoning", json::array())) {
    KeyStep step;
    std::optional<KeyStep::Type> t =
        key_step_type_from_name(s.value("perception_type", std::string()));
    if (!t) throw ValidationError(where + ": bad reasoning perception_type");
    step.perception_type = *t;
    step.target_text = s.value("target_text", std::string());
    const json& v = s.at("value");
    if (v.is_number())
      step.value.push_back(v.get<double>());
    else
      for (const json& e : v) step.value.push_back(e.get<double>());
    qa.reasoning.push_back(std::move(step));
  }
  qa.source = j.value("source", std::string());
  qa.step_count = j.value("step_count", 1);
  qa.seed = j.value("seed", uint64_t(0));
  return qa;
}

void serialize_qa(const std::vector<QAPair>& pairs, const std::string& path) {
  std::string out;
  for (const QAPair& qa : pairs) {
    out += qa_to_json(qa).dump();
    out += "\n";
  }
  atomic_write_file(path, out);
}

std::vector<QAPair> read_qa_jsonl(const std::string& path) {
  std::vector<QAPair> out;
  std::istringstream in(read_file(path));
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(t);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    out.push_back(qa_from_json(j, where));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmark export

namespace {

Mask rect_mask(const CameraIntrinsics& k, const Box2& box, int dilate) {
  Mask mask{k.width, k.height, std::vector<uint8_t>(size_t(k.width) * k.height,
                                                    0)};
  int x0 = std::max(0, int(std::floor(box.x0)) - dilate);
  int y0 = std::max(0, int(std::floor(box.y0)) - dilate);
  int x1 = std::min(k.width - 1, int(std::ceil(box.x1)) + dilate);
  int y1 = std::min(k.height - 1, int(std::ceil(box.y1)) + dilate);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) mask.on[size_t(y) * k.width + x] = 1;
  return mask;
}

Mask hull_mask(const CameraIntrinsics& k, const std::vector<PixelPoint>& pts,
               double dilate) {
  Mask mask{k.width, k.height, std::vector<uint8_t>(size_t(k.width) * k.height,
                                                    0)};
  std::vector<Vec2> v;
  v.reserve(pts.size());
  for (const PixelPoint& p : pts) v.emplace_back(p.u, p.v);
  Polygon hull = convex_hull(std::move(v));
  if (hull.size() < 3) {
    for (const PixelPoint& p : pts) {
      int cx = int(std::lround(p.u)), cy = int(std::lround(p.v));
      for (int y = std::max(0, cy - int(dilate));
           y <= std::min(k.height - 1, cy + int(dilate)); ++y)
        for (int x = std::max(0, cx - int(dilate));
             x <= std::min(k.width - 1, cx + int(dilate)); ++x)
          mask.on[size_t(y) * k.width + x] = 1;
    }
    return mask;
  }
  Box2 bounds = polygon_bounds(hull);
  int x0 = std::max(0, int(std::floor(bounds.x0 - dilate)));
  int y0 = std::max(0, int(std::floor(bounds.y0 - dilate)));
  int x1 = std::min(k.width - 1, int(std::ceil(bounds.x1 + dilate)));
  int y1 = std::min(k.height - 1, int(std::ceil(bounds.y1 + dilate)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (point_in_convex(hull, Vec2(x, y), dilate))
        mask.on[size_t(y) * k.width + x] = 1;
  return mask;
}

}  // namespace

BenchmarkExport export_benchmark(const std::vector<GeneratedQA>& items,
                                 const SceneFrame& scene,
                                 const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "masks");

  BenchmarkExport out;
  for (const GeneratedQA& g : items) {
    if (!g.subset) continue;
    if (g.qa.answer_type != AnswerType::Point2D || !g.qa.answer_point)
      throw InternalError("benchmark item " + g.qa.qa_id +
                          " lacks a point answer");

    Mask mask = g.mask_box
                    ? rect_mask(scene.intrinsics, *g.mask_box, 2)
                    : hull_mask(scene.intrinsics, g.mask_points, 2.0);
    if (!point_in_mask(mask, g.qa.answer_point->x(), g.qa.answer_point->y(),
                       true))
      throw InternalError("benchmark mask for " + g.qa.qa_id +
                          " does not contain its own answer");

    std::string mask_name = "masks/" + g.qa.qa_id + ".png";
    write_mask_png((fs::path(out_dir) / mask_name).string(), mask);

    BenchmarkSample sample;
    sample.sample_id = g.qa.qa_id;
    sample.image_ref = g.qa.image_ref;
    sample.mask_ref = mask_name;
    sample.instruction = g.qa.question;
    sample.constraints = g.constraints;
    sample.step_label = g.qa.step_count;
    sample.subset = *g.subset;
    out.samples.push_back(std::move(sample));

    Prediction pred;
    pred.sample_id = g.qa.qa_id;
    pred.points = {*g.qa.answer_point};
    pred.normalized = true;
    out.self_predictions.push_back(std::move(pred));
  }
  return out;
}

}  // namespace spatialref
