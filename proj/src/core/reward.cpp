#include "core/reward.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/textutil.hpp"

namespace spatialref {

namespace {

struct Cursor {
  const std::string& s;
  size_t pos = 0;

  bool eat(char c) {
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  bool eat(const char* lit) {
    size_t n = std::strlen(lit);
    if (s.compare(pos, n, lit) == 0) {
      pos += n;
      return true;
    }
    return false;
  }
  void skip_spaces() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool at_end() const { return pos >= s.size(); }
};

bool parse_number(Cursor& c, double* out) {
  const char* begin = c.s.c_str() + c.pos;
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin) return false;
  c.pos += size_t(end - begin);
  if (!std::isfinite(v)) return false;
  *out = v;
  return true;
}

// "(x, y)" / "(x, y, z)" with optional spaces after commas.
bool parse_tuple(Cursor& c, int count, std::vector<double>* out) {
  if (!c.eat('(')) return false;
  for (int i = 0; i < count; ++i) {
    if (i > 0) {
      if (!c.eat(',')) return false;
      c.skip_spaces();
    }
    double v;
    if (!parse_number(c, &v)) return false;
    out->push_back(v);
  }
  return c.eat(')');
}

std::optional<size_t> find_single(const std::string& text, const std::string& tag) {
  size_t first = text.find(tag);
  if (first == std::string::npos) return std::nullopt;
  if (text.find(tag, first + tag.size()) != std::string::npos)
    return std::nullopt;  // duplicated tag
  return first;
}

bool whitespace_only(const std::string& s, size_t from, size_t to) {
  for (size_t i = from; i < to && i < s.size(); ++i)
    if (!std::isspace(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

bool target_matches(const std::string& predicted, const std::string& truth) {
  std::string p = normalize_text(predicted), t = normalize_text(truth);
  if (p.empty() || t.empty()) return false;
  return p.find(t) != std::string::npos || t.find(p) != std::string::npos;
}

}  // namespace

const char* key_step_type_name(KeyStep::Type t) {
  switch (t) {
    case KeyStep::Type::Position: return "Position";
    case KeyStep::Type::Orientation: return "Orientation";
    case KeyStep::Type::Size: return "Size";
  }
  return "";
}

std::optional<KeyStep::Type> key_step_type_from_name(const std::string& s) {
  if (s == "Position") return KeyStep::Type::Position;
  if (s == "Orientation") return KeyStep::Type::Orientation;
  if (s == "Size") return KeyStep::Type::Size;
  return std::nullopt;
}

ParsedStep parse_step_line(const std::string& line) {
  ParsedStep step;
  step.raw = line;
  Cursor c{line};

  if (!c.eat('[')) return step;
  KeyStep::Type type;
  if (c.eat("Position]")) type = KeyStep::Type::Position;
  else if (c.eat("Orientation]")) type = KeyStep::Type::Orientation;
  else if (c.eat("Size]")) type = KeyStep::Type::Size;
  else return step;

  if (c.at_end() || (c.s[c.pos] != ' ' && c.s[c.pos] != '\t')) return step;
  c.skip_spaces();
  if (!c.eat('[')) return step;
  size_t close = line.find(']', c.pos);
  if (close == std::string::npos || close == c.pos) return step;
  std::string target = line.substr(c.pos, close - c.pos);
  c.pos = close + 1;
  if (!c.eat(':')) return step;
  c.skip_spaces();

  bool bracketed = c.eat('[');
  std::vector<double> value;
  switch (type) {
    case KeyStep::Type::Position:
      if (!parse_tuple(c, 2, &value)) return step;
      break;
    case KeyStep::Type::Orientation:
      if (!parse_tuple(c, 3, &value)) return step;
      break;
    case KeyStep::Type::Size: {
      double v;
      if (!parse_number(c, &v)) return step;
      value.push_back(v);
      break;
    }
  }
  if (bracketed && !c.eat(']')) return step;
  c.skip_spaces();
  if (!c.at_end()) return step;

  // Type-correctness of the value.
  switch (type) {
    case KeyStep::Type::Position:
      if (value[0] < 0 || value[0] > 1 || value[1] < 0 || value[1] > 1)
        return step;
      break;
    case KeyStep::Type::Orientation: {
      double n = std::sqrt(value[0] * value[0] + value[1] * value[1] +
                           value[2] * value[2]);
      if (std::abs(n - 1.0) > 5e-3) return step;
      break;
    }
    case KeyStep::Type::Size:
      if (!(value[0] > 0)) return step;
      break;
  }

  step.ok = true;
  step.type = type;
  step.target_text = trim(target);
  step.value = std::move(value);
  return step;
}

ParsedResponse parse_response(const std::string& text) {
  ParsedResponse r;

  // Extraction is lenient: first <think> block and first <answer> block, so
  // that malformatted responses can still earn the content-based rewards.
  size_t t_open = text.find("<think>");
  if (t_open != std::string::npos) {
    size_t t_close = text.find("</think>", t_open + 7);
    if (t_close != std::string::npos)
      r.think = text.substr(t_open + 7, t_close - (t_open + 7));
  }
  size_t a_open = text.find("<answer>");
  if (a_open != std::string::npos) {
    size_t a_close = text.find("</answer>", a_open + 8);
    if (a_close != std::string::npos)
      r.answer = text.substr(a_open + 8, a_close - (a_open + 8));
  }

  // Strict layout: exactly one of each tag, in order, nothing but whitespace
  // outside the two blocks.
  auto st_open = find_single(text, "<think>");
  auto st_close = find_single(text, "</think>");
  auto sa_open = find_single(text, "<answer>");
  auto sa_close = find_single(text, "</answer>");
  r.format_ok = st_open && st_close && sa_open && sa_close &&
                *st_open < *st_close && *st_close < *sa_open &&
                *sa_open < *sa_close && whitespace_only(text, 0, *st_open) &&
                whitespace_only(text, *st_close + 8, *sa_open) &&
                whitespace_only(text, *sa_close + 9, text.size());

  std::istringstream lines(r.think);
  std::string line;
  while (std::getline(lines, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    r.steps.push_back(parse_step_line(t));
  }

  // First "(x, y)" tuple in the answer is the final point.
  for (size_t i = 0; i < r.answer.size(); ++i) {
    if (r.answer[i] != '(') continue;
    Cursor c{r.answer, i};
    std::vector<double> value;
    if (parse_tuple(c, 2, &value)) {
      r.final_point = ParsedPoint{value[0], value[1],
                                  value[0] <= 1.0 && value[1] <= 1.0};
      break;
    }
  }
  return r;
}

double outcome_format_reward(const ParsedResponse& r) {
  return r.format_ok ? 1.0 : 0.0;
}

double point_l1_reward(const ParsedResponse& r, const PointGroundTruth& gt,
                       const Config& cfg) {
  if (!r.final_point) return 0.0;
  double u = r.final_point->x, v = r.final_point->y;
  if (r.final_point->normalized) {
    u *= gt.width;
    v *= gt.height;
  }
  double l1 = std::abs(u - gt.point.u) + std::abs(v - gt.point.v);
  return l1 <= cfg.point_l1_max_px ? 1.0 : 0.0;
}

double process_format_reward(const ParsedResponse& r) {
  if (r.steps.empty()) return 0.0;
  for (const ParsedStep& s : r.steps)
    if (!s.ok) return 0.0;
  return 1.0;
}

namespace {

bool step_value_passes(const ParsedStep& step, const KeyStep& gt,
                       const PointGroundTruth& truth, const Config& cfg) {
  switch (gt.perception_type) {
    case KeyStep::Type::Position: {
      if (gt.value.size() != 2) return false;
      double du = (step.value[0] - gt.value[0]) * truth.width;
      double dv = (step.value[1] - gt.value[1]) * truth.height;
      return std::abs(du) + std::abs(dv) <= cfg.point_l1_max_px;
    }
    case KeyStep::Type::Orientation: {
      if (gt.value.size() != 3) return false;
      Vec3 p(step.value[0], step.value[1], step.value[2]);
      Vec3 t(gt.value[0], gt.value[1], gt.value[2]);
      if (p.norm() < 1e-12 || t.norm() < 1e-12) return false;
      return p.normalized().dot(t.normalized()) > cfg.orientation_cos_min;
    }
    case KeyStep::Type::Size: {
      if (gt.value.size() != 1) return false;
      return std::abs(step.value[0] - gt.value[0]) <=
             cfg.size_rel_tol * std::abs(gt.value[0]);
    }
  }
  return false;
}

}  // namespace

double accuracy_reward(const ParsedResponse& r, const PointGroundTruth& gt,
                       const Config& cfg) {
  if (gt.key_steps.empty()) return 0.0;
  double hits = 0;
  for (const KeyStep& key : gt.key_steps) {
    for (const ParsedStep& step : r.steps) {
      if (!step.ok || step.type != key.perception_type) continue;
      if (!target_matches(step.target_text, key.target_text)) continue;
      if (step_value_passes(step, key, gt, cfg)) {
        hits += 1;
        break;
      }
    }
  }
  return hits / double(gt.key_steps.size());
}

RewardBreakdown total_reward(const std::string& response_text,
                             const PointGroundTruth& gt, const Config& cfg) {
  ParsedResponse parsed = parse_response(response_text);
  RewardBreakdown b;
  b.alpha = cfg.alpha;
  b.r_of = outcome_format_reward(parsed);
  b.r_p = point_l1_reward(parsed, gt, cfg);
  b.r_pf = process_format_reward(parsed);
  b.r_acc = accuracy_reward(parsed, gt, cfg);
  b.total = b.r_of + b.r_p + b.alpha * (b.r_pf + b.r_acc);
  return b;
}

std::vector<double> group_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2)
    throw ValidationError("advantage group needs at least 2 rewards");
  double mean = 0;
  for (double r : rewards) mean += r;
  mean /= double(rewards.size());
  double var = 0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= double(rewards.size());
  double sd = std::sqrt(var);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd < 1e-15) return out;  // identical rewards carry no signal
  for (size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json parse_jsonl_line(const std::string& line, const std::string& path,
                      size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ":" + std::to_string(lineno) +
                          ": invalid JSON: " + e.what());
  }
}

template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
  std::istringstream in(read_file(path));
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    fn(parse_jsonl_line(t, path, lineno), lineno);
  }
}

}  // namespace

std::vector<ResponseRow> read_responses_jsonl(const std::string& path) {
  std::vector<ResponseRow> rows;
  for_each_jsonl(path, [&](const json& j, size_t lineno) {
    ResponseRow row;
    if (!j.contains("sample_id") || !j.at("sample_id").is_string())
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": missing sample_id");
    row.sample_id = j.at("sample_id").get<std::string>();
    if (j.contains("group_id") && j.at("group_id").is_string())
      row.group_id = j.at("group_id").get<std::string>();
    if (!j.contains("text") || !j.at("text").is_string())
      throw ValidationError(path + ":" + std::to_string(lineno) +
                            ": missing text");
    row.text = j.at("text").get<std::string>();
    rows.push_back(std::move(row));
  });
  return rows;
}

std::vector<PointGroundTruth> read_point_gt_jsonl(const std::string& path) {
  std::vector<PointGroundTruth> rows;
  for_each_jsonl(path, [&](const json& j, size_t lineno) {
    std::string where = path + ":" + std::to_string(lineno);
    PointGroundTruth gt;
    if (!j.contains("sample_id") || !j.at("sample_id").is_string())
      throw ValidationError(where + ": missing sample_id");
    gt.sample_id = j.at("sample_id").get<std::string>();
    if (!j.contains("point") || !j.at("point").is_array() ||
        j.at("point").size() != 2)
      throw ValidationError(where + ": point must be [u, v]");
    gt.point = {j.at("point")[0].get<double>(), j.at("point")[1].get<double>()};
    if (!j.contains("width") || !j.contains("height"))
      throw ValidationError(where + ": missing width/height");
    gt.width = j.at("width").get<int>();
    gt.height = j.at("height").get<int>();
    if (gt.width < 1 || gt.height < 1)
      throw ValidationError(where + ": width/height must be >= 1");
    if (j.contains("key_steps")) {
      if (!j.at("key_steps").is_array())
        throw ValidationError(where + ": key_steps must be an array");
      for (const json& ks : j.at("key_steps")) {
        KeyStep step;
        auto type = key_step_type_from_name(
            ks.value("perception_type", std::string()));
        if (!type)
          throw ValidationError(where + ": bad key step perception_type");
        step.perception_type = *type;
        step.target_text = ks.value("target_text", std::string());
        if (step.target_text.empty())
          throw ValidationError(where + ": key step target_text empty");
        const json& v = ks.at("value");
        if (v.is_number()) {
          step.value.push_back(v.get<double>());
        } else if (v.is_array()) {
          for (const json& e : v) step.value.push_back(e.get<double>());
        }
        size_t want = step.perception_type == KeyStep::Type::Position ? 2
                      : step.perception_type == KeyStep::Type::Orientation ? 3
                                                                           : 1;
        if (step.value.size() != want)
          throw ValidationError(where + ": key step value arity mismatch");
        gt.key_steps.push_back(std::move(step));
      }
    }
    rows.push_back(std::move(gt));
  });
  return rows;
}

std::vector<ScoreRow> score_responses(const std::vector<ResponseRow>& responses,
                                      const std::vector<PointGroundTruth>& gt,
                                      int group_size, const Config& cfg) {
  std::map<std::string, const PointGroundTruth*> by_id;
  for (const PointGroundTruth& g : gt) {
    if (!by_id.emplace(g.sample_id, &g).second)
      throw ValidationError("duplicate ground-truth sample_id: " + g.sample_id);
  }
  std::set<std::string> response_ids;
  std::vector<std::string> orphans;
  for (const ResponseRow& r : responses) {
    if (!response_ids.insert(r.sample_id).second)
      throw ValidationError("duplicate response sample_id: " + r.sample_id);
    if (!by_id.count(r.sample_id)) orphans.push_back(r.sample_id);
  }
  for (const PointGroundTruth& g : gt)
    if (!response_ids.count(g.sample_id)) orphans.push_back(g.sample_id);
  if (!orphans.empty()) {
    std::string msg = "sample ids do not align:";
    for (const std::string& id : orphans) msg += " " + id;
    throw ValidationError(msg);
  }

  std::vector<ScoreRow> rows;
  rows.reserve(responses.size());
  for (const ResponseRow& r : responses) {
    ScoreRow row;
    row.sample_id = r.sample_id;
    row.reward = total_reward(r.text, *by_id.at(r.sample_id), cfg);
    rows.push_back(std::move(row));
  }

  if (group_size > 0) {
    if (group_size < 2)
      throw ValidationError("group size must be at least 2");
    if (rows.size() % size_t(group_size) != 0)
      throw ValidationError("row count " + std::to_string(rows.size()) +
                            " is not divisible by group size " +
                            std::to_string(group_size));
    for (size_t begin = 0; begin < rows.size(); begin += size_t(group_size)) {
      std::vector<double> rewards;
      for (int i = 0; i < group_size; ++i)
        rewards.push_back(rows[begin + i].reward.total);
      std::vector<double> adv = group_advantages(rewards);
      for (int i = 0; i < group_size; ++i) rows[begin + i].advantage = adv[i];
    }
  }
  return rows;
}

std::string scores_to_jsonl(const std::vector<ScoreRow>& rows) {
  std::string out;
  for (const ScoreRow& row : rows) {
    json j;
    j["sample_id"] = row.sample_id;
    j["r_of"] = row.reward.r_of;
    j["r_p"] = row.reward.r_p;
    j["r_pf"] = row.reward.r_pf;
    j["r_acc"] = row.reward.r_acc;
    j["alpha"] = row.reward.alpha;
    j["total"] = row.reward.total;
    if (row.advantage) j["advantage"] = *row.advantage;
    out += j.dump();
    out += "\n";
  }
  return out;
}

}  // namespace spatialref
