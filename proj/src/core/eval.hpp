#pragma once

#include <functional>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/geometry.hpp"

namespace spatialref {

// One structured constraint of a benchmark instruction. `anchor` is an object
// phrase or the literal "viewer"; `relation` is the directional phrase tied to
// it ("" when the constraint is a bare mention). Intrinsic attributes (color,
// size adjectives) are annotated but never counted as reasoning steps.
struct EvalConstraint {
  std::string anchor;
  std::string relation;
  bool intrinsic = false;
};

struct BenchmarkSample {
  std::string sample_id;
  std::string image_ref;
  std::string mask_ref;
  std::string instruction;
  std::vector<EvalConstraint> constraints;
  int step_label = 1;   // authoritative 1..5 label
  std::string subset;   // "location" | "placement" | "unseen"
};

struct Prediction {
  std::string sample_id;
  std::vector<Vec2> points;  // (x, y)
  bool normalized = true;
};

struct SampleScore {
  std::string sample_id;
  double success = 0.0;
};

struct StepDiscrepancy {
  std::string sample_id;
  int label = 0;
  int computed = 0;
};

struct EvalReport {
  double overall = 0.0;
  std::vector<SampleScore> per_sample;
  std::map<int, double> per_step;
  std::map<std::string, double> per_subset;
  std::vector<StepDiscrepancy> step_discrepancies;
};

// Normalized coordinates map to pixels as u = x * width, v = y * height,
// then round half-up. Out-of-bounds points are misses, never errors.
bool point_in_mask(const Mask& mask, double x, double y, bool normalized);

// Fraction of predicted points inside the mask. An empty point list is a
// scoring error, not a zero.
double sample_success(const Prediction& pred, const Mask& mask);

// clamp(#non-viewer anchors + #anchor-linked relations other than "on", 1, 5);
// intrinsic constraints contribute nothing.
int count_reasoning_steps(const std::vector<EvalConstraint>& constraints);

// Recomputes step counts from structured constraints; labels stay
// authoritative, mismatches are reported.
std::vector<StepDiscrepancy> verify_step_labels(
    const std::vector<BenchmarkSample>& samples);

EvalReport benchmark_success_rate(
    const std::vector<Prediction>& preds,
    const std::vector<BenchmarkSample>& samples,
    const std::function<Mask(const BenchmarkSample&)>& load_mask);

std::vector<BenchmarkSample> read_benchmark_jsonl(const std::string& path);
std::vector<Prediction> read_predictions_jsonl(const std::string& path);
nlohmann::json benchmark_sample_to_json(const BenchmarkSample& sample);

// Mask paths resolve relative to the benchmark file's directory.
EvalReport evaluate_files(const std::string& predictions_path,
                          const std::string& benchmark_path);

nlohmann::json report_to_json(const EvalReport& report);

}  // namespace spatialref
