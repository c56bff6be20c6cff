#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/eval.hpp"
#include "core/free_space.hpp"
#include "core/reward.hpp"
#include "core/scene.hpp"
#include "core/scene_graph.hpp"

namespace spatialref {

// Raw template text compiled into the library at build time.
const char* embedded_qa_templates();

struct QATemplate {
  std::string template_id;
  std::string kind;    // vqa | choice | fact | point | reasoning
  std::string family;  // relative-position | orientation | attribute-comparison
                       // | quantitative | free-space | location-placement
                       // | fact | reasoning
  std::string pattern;
  std::vector<std::string> slots;
  nlohmann::json answer_rule;
};

class TemplateRegistry {
 public:
  static TemplateRegistry embedded();
  static TemplateRegistry from_file(const std::string& path);
  static TemplateRegistry from_json(const nlohmann::json& j);

  const std::vector<QATemplate>& templates() const { return templates_; }
  const QATemplate& get(const std::string& template_id) const;
  std::vector<const QATemplate*> by_family(const std::string& family) const;

  // "left" -> "to the left of" (free-space queries),
  // "left_to_right" -> "from the left" (ordinal references).
  std::string direction_phrase(const std::string& direction) const;
  std::string ordinal_phrase(RankDirection direction) const;

 private:
  std::vector<QATemplate> templates_;
  std::map<std::string, std::string> direction_phrases_;
  std::map<std::string, std::string> ordinal_phrases_;
};

enum class AnswerType { Text, Choice, NumberUnit, Point2D };
const char* answer_type_name(AnswerType t);
std::optional<AnswerType> answer_type_from_name(const std::string& s);

struct QAPair {
  std::string qa_id;
  std::string image_ref;
  std::optional<std::string> depth_ref;
  std::string question;
  AnswerType answer_type = AnswerType::Text;
  std::string answer_text;               // text / choice answers
  std::optional<double> answer_value;    // number answers
  std::string answer_unit;
  std::optional<Vec2> answer_point;      // normalized, 3 decimals
  std::vector<KeyStep> reasoning;
  std::string source;                    // 2d-graph | 3d-graph | freespace | simulation
  int step_count = 1;
  uint64_t seed = 0;
};

struct SlotBinding {
  std::string text;
  std::optional<std::string> object_id;
  std::optional<Vec2> point;        // normalized payload for bound-point
  std::optional<PixelPoint> pixel;  // payload for depth-at-point
  std::optional<bool> truth;        // payload for bound-truth
};
using Bindings = std::map<std::string, SlotBinding>;

// Substitutes slot texts verbatim and computes the answer from the graph /
// scene per the template's answer rule. Fills question, answer fields and
// answer_type only; ids, reasoning and step counts belong to the generators.
QAPair instantiate_template(const QATemplate& tpl, const Bindings& bindings,
                            const SceneFrame& scene, const SceneGraph& graph,
                            const Config& cfg);

// Machine-checkable derivation of an answer, for independent re-solving.
struct QAResolution {
  std::string kind;  // relation-truth | relation-metric | depth-at-point |
                     // object-point | ordinal-point | free-point | choice |
                     // statement | bound-truth
  std::string relation;
  std::vector<std::string> object_ids;
  std::optional<RankDirection> direction;
  int ordinal = 0;
  std::optional<FreeSpaceQuery> query;
};

struct GeneratedQA {
  QAPair qa;
  std::string family;
  QAResolution resolution;
  std::vector<EvalConstraint> constraints;
  // Point-prediction items additionally carry benchmark-mask sources.
  std::optional<std::string> subset;   // "location" | "placement"
  std::optional<Box2> mask_box;        // location masks: the target's 2D box
  std::vector<PixelPoint> mask_points; // placement masks: visible free points
};

struct QAGenReport {
  std::map<std::string, int> counts;           // per requested family
  std::map<std::string, std::string> skipped;  // family -> reason
};

// Declarative statements derived from true graph edges plus camera-distance
// facts, deterministic order.
std::vector<std::string> generate_fact_statements(const SceneFrame& scene,
                                                  const SceneGraph& graph,
                                                  const TemplateRegistry& reg);

// The free-space sweep behind placement and free-space QA: every directional
// query for every platform-supported object, plus between-queries for
// same-platform pairs. Per-query seeds derive from `seed` and the query key.
std::vector<FreeSpaceRegion> default_free_space_regions(const SceneFrame& scene,
                                                        const Config& cfg,
                                                        uint64_t seed);

// Draws cfg.qa_per_family items for each requested family. Families that
// yield no candidates are skipped with a report entry. `mark_unseen` labels
// exported point items as the benchmark's unseen subset.
std::vector<GeneratedQA> generate_spatial_qa(
    const SceneFrame& scene, const SceneGraph& graph,
    const std::vector<FreeSpaceRegion>& regions, const TemplateRegistry& reg,
    const std::vector<std::string>& families, const Config& cfg, uint64_t seed,
    bool mark_unseen, QAGenReport* report);

enum class ReasoningTask { LocateFromDescription, IdentifyFromRelations, LocateEmptySpace };
const char* reasoning_task_name(ReasoningTask t);

// One simulation-style QA with a KeyStep chain covering every intermediate
// quantity used to derive the answer. Throws UnsatisfiableError when the
// scene cannot support the task.
GeneratedQA generate_reasoning_qa(const SceneFrame& scene,
                                  const SceneGraph& graph,
                                  const std::vector<FreeSpaceRegion>& regions,
                                  const TemplateRegistry& reg,
                                  ReasoningTask task, const Config& cfg,
                                  uint64_t seed);

// All three reasoning tasks; tasks the scene cannot support are skipped.
std::vector<GeneratedQA> generate_reasoning_suite(
    const SceneFrame& scene, const SceneGraph& graph,
    const std::vector<FreeSpaceRegion>& regions, const TemplateRegistry& reg,
    const Config& cfg, uint64_t seed, QAGenReport* report);

nlohmann::json qa_to_json(const QAPair& qa);
QAPair qa_from_json(const nlohmann::json& j, const std::string& where);

void serialize_qa(const std::vector<QAPair>& pairs, const std::string& path);
std::vector<QAPair> read_qa_jsonl(const std::string& path);

// Point-prediction items exported as a benchmark: samples plus the masks
// they reference (written under <out_dir>/masks/) and the generator's own
// answers as predictions, which must score 1.0 by construction.
struct BenchmarkExport {
  std::vector<BenchmarkSample> samples;
  std::vector<Prediction> self_predictions;
};

BenchmarkExport export_benchmark(const std::vector<GeneratedQA>& items,
                                 const SceneFrame& scene,
                                 const std::string& out_dir);

}  // namespace spatialref
