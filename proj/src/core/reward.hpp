#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/geometry.hpp"

namespace spatialref {

// One reasoning step: "[Type] [target]: [value]". Position values are
// normalized image coordinates, orientation values unit 3-vectors, size
// values meters.
struct KeyStep {
  enum class Type { Position, Orientation, Size };
  Type perception_type = Type::Position;
  std::string target_text;
  std::vector<double> value;  // 2, 3, or 1 numbers by type
};

const char* key_step_type_name(KeyStep::Type t);
std::optional<KeyStep::Type> key_step_type_from_name(const std::string& s);

struct ParsedStep {
  std::string raw;
  bool ok = false;  // parses under the step grammar with a type-correct value
  KeyStep::Type type = KeyStep::Type::Position;
  std::string target_text;
  std::vector<double> value;
};

struct ParsedPoint {
  double x = 0, y = 0;
  bool normalized = false;  // both coordinates <= 1
};

struct ParsedResponse {
  bool format_ok = false;  // exactly <think>...</think><answer>...</answer>
  std::string think;
  std::string answer;
  std::vector<ParsedStep> steps;  // one per non-empty think line
  std::optional<ParsedPoint> final_point;
};

// Never throws on malformed text; malformed pieces are recorded as flags.
ParsedResponse parse_response(const std::string& text);

// Parses a single step line; used by the response parser and by tests.
ParsedStep parse_step_line(const std::string& line);

struct PointGroundTruth {
  std::string sample_id;
  PixelPoint point;  // pixels
  int width = 0, height = 0;
  std::vector<KeyStep> key_steps;
};

// 1 iff the response is exactly one think block followed by one answer
// block with nothing but whitespace outside the tags.
double outcome_format_reward(const ParsedResponse& r);

// 1 iff the answer point lies within point_l1_max_px of the ground truth
// point in L1 pixel distance (inclusive); 0 when absent.
double point_l1_reward(const ParsedResponse& r, const PointGroundTruth& gt,
                       const Config& cfg);

// 1 iff at least one step line is present and every step line is valid.
double process_format_reward(const ParsedResponse& r);

// Mean over ground-truth key steps of whether some parsed step with a
// matching type and target (case-insensitive substring, either direction)
// passes the per-type metric; 0 when gt.key_steps is empty.
double accuracy_reward(const ParsedResponse& r, const PointGroundTruth& gt,
                       const Config& cfg);

struct RewardBreakdown {
  double r_of = 0, r_p = 0, r_pf = 0, r_acc = 0;
  double alpha = 0;
  double total = 0;  // r_of + r_p + alpha * (r_pf + r_acc)
};

RewardBreakdown total_reward(const std::string& response_text,
                             const PointGroundTruth& gt, const Config& cfg);

// Per-sample advantages (r - mean) / population std; all-equal groups give
// zeros. Requires at least 2 rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards);

// ---------------------------------------------------------------------------
// JSONL plumbing.

struct ResponseRow {
  std::string sample_id;
  std::optional<std::string> group_id;
  std::string text;
};

std::vector<ResponseRow> read_responses_jsonl(const std::string& path);
std::vector<PointGroundTruth> read_point_gt_jsonl(const std::string& path);

struct ScoreRow {
  std::string sample_id;
  RewardBreakdown reward;
  std::optional<double> advantage;
};

// Scores responses against ground truth (ids must align exactly, same
// order-independent sets). group_size 0 disables advantages; otherwise it
// must divide the row count and groups are consecutive chunks in file order.
std::vector<ScoreRow> score_responses(const std::vector<ResponseRow>& responses,
                                      const std::vector<PointGroundTruth>& gt,
                                      int group_size, const Config& cfg);

std::string scores_to_jsonl(const std::vector<ScoreRow>& rows);

}  // namespace spatialref
