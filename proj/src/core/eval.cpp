#include "core/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "core/errors.hpp"
#include "core/image_io.hpp"
#include "core/textutil.hpp"

namespace spatialref {

namespace {

using nlohmann::json;

long round_pixel(double v) { return long(std::floor(v + 0.5)); }

}  // namespace

bool point_in_mask(const Mask& mask, double x, double y, bool normalized) {
  double u = x, v = y;
  if (normalized) {
    u = x * mask.width;
    v = y * mask.height;
  }
  long px = round_pixel(u), py = round_pixel(v);
  if (px < 0 || py < 0 || px >= mask.width || py >= mask.height) return false;
  return mask.at(int(px), int(py));
}

double sample_success(const Prediction& pred, const Mask& mask) {
  if (pred.points.empty())
    throw ValidationError("prediction " + pred.sample_id + " has no points");
  int inside = 0;
  for (const Vec2& p : pred.points)
    if (point_in_mask(mask, p.x(), p.y(), pred.normalized)) ++inside;
  return double(inside) / double(pred.points.size());
}

int count_reasoning_steps(const std::vector<EvalConstraint>& constraints) {
  int steps = 0;
  for (const EvalConstraint& c : constraints) {
    if (c.intrinsic) continue;
    if (c.anchor.empty() || c.anchor == "viewer") continue;
    steps += 1;
    if (!c.relation.empty() && c.relation != "on") steps += 1;
  }
  return std::clamp(steps, 1, 5);
}

std::vector<StepDiscrepancy> verify_step_labels(
    const std::vector<BenchmarkSample>& samples) {
  std::vector<StepDiscrepancy> out;
  for (const BenchmarkSample& s : samples) {
    int computed = count_reasoning_steps(s.constraints);
    if (computed != s.step_label)
      out.push_back({s.sample_id, s.step_label, computed});
  }
  return out;
}

EvalReport benchmark_success_rate(
    const std::vector<Prediction>& preds,
    const std::vector<BenchmarkSample>& samples,
    const std::function<Mask(const BenchmarkSample&)>& load_mask) {
  std::map<std::string, const Prediction*> by_id;
  for (const Prediction& p : preds) {
    if (!by_id.emplace(p.sample_id, &p).second)
      throw ValidationError("duplicate prediction for sample " + p.sample_id);
  }
  std::vector<std::string> missing;
  std::set<std::string> sample_ids;
  for (const BenchmarkSample& s : samples) {
    if (!sample_ids.insert(s.sample_id).second)
      throw ValidationError("duplicate benchmark sample " + s.sample_id);
    if (!by_id.count(s.sample_id)) missing.push_back(s.sample_id);
  }
  for (const Prediction& p : preds)
    if (!sample_ids.count(p.sample_id)) missing.push_back(p.sample_id);
  if (!missing.empty()) {
    std::string msg = "predictions and samples do not align:";
    for (const std::string& id : missing) msg += " " + id;
    throw ValidationError(msg);
  }
  if (samples.empty()) throw ValidationError("no benchmark samples");

  EvalReport report;
  std::map<int, std::pair<double, int>> step_acc;
  std::map<std::string, std::pair<double, int>> subset_acc;
  double sum = 0;
  for (const BenchmarkSample& s : samples) {
    Mask mask = load_mask(s);
    double success = sample_success(*by_id.at(s.sample_id), mask);
    report.per_sample.push_back({s.sample_id, success});
    sum += success;
    auto& st = step_acc[s.step_label];
    st.first += success;
    st.second += 1;
    auto& su = subset_acc[s.subset];
    su.first += success;
    su.second += 1;
  }
  report.overall = sum / double(samples.size());
  for (const auto& [step, acc] : step_acc)
    report.per_step[step] = acc.first / double(acc.second);
  for (const auto& [subset, acc] : subset_acc)
    report.per_subset[subset] = acc.first / double(acc.second);
  report.step_discrepancies = verify_step_labels(samples);
  return report;
}

namespace {

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

const std::set<std::string>& known_subsets() {
  static const std::set<std::string> subsets{"location", "placement",
                                             "unseen"};
  return subsets;
}

}  // namespace

std::vector<BenchmarkSample> read_benchmark_jsonl(const std::string& path) {
  std::vector<BenchmarkSample> samples;
  for_each_jsonl(path, [&](const json& j, size_t lineno) {
    std::string where = path + ":" + std::to_string(lineno);
    BenchmarkSample s;
    if (!j.contains("sample_id") || !j.at("sample_id").is_string())
      throw ValidationError(where + ": missing sample_id");
    s.sample_id = j.at("sample_id").get<std::string>();
    s.image_ref = j.value("image_ref", std::string());
    if (!j.contains("mask_ref") || !j.at("mask_ref").is_string())
      throw ValidationError(where + ": missing mask_ref");
    s.mask_ref = j.at("mask_ref").get<std::string>();
    s.instruction = j.value("instruction", std::string());
    if (j.contains("constraints")) {
      if (!j.at("constraints").is_array())
        throw ValidationError(where + ": constraints must be an array");
      for (const json& c : j.at("constraints")) {
        EvalConstraint ec;
        ec.anchor = c.value("anchor", std::string());
        ec.relation = c.value("relation", std::string());
        ec.intrinsic = c.value("intrinsic", false);
        s.constraints.push_back(std::move(ec));
      }
    }
    if (!j.contains("step") || !j.at("step").is_number_integer())
      throw ValidationError(where + ": missing integer step");
    s.step_label = j.at("step").get<int>();
    if (s.step_label < 1 || s.step_label > 5)
      throw ValidationError(where + ": step must be within 1..5");
    if (!j.contains("subset") || !j.at("subset").is_string())
      throw ValidationError(where + ": missing subset");
    s.subset = j.at("subset").get<std::string>();
    if (!known_subsets().count(s.subset))
      throw ValidationError(where + ": unknown subset '" + s.subset + "'");
    samples.push_back(std::move(s));
  });
  return samples;
}

std::vector<Prediction> read_predictions_jsonl(const std::string& path) {
  std::vector<Prediction> preds;
  for_each_jsonl(path, [&](const json& j, size_t lineno) {
    std::string where = path + ":" + std::to_string(lineno);
    Prediction p;
    if (!j.contains("sample_id") || !j.at("sample_id").is_string())
      throw ValidationError(where + ": missing sample_id");
    p.sample_id = j.at("sample_id").get<std::string>();
    if (!j.contains("points") || !j.at("points").is_array())
      throw ValidationError(where + ": missing points array");
    for (const json& pt : j.at("points")) {
      if (!pt.is_array() || pt.size() != 2)
        throw ValidationError(where + ": each point must be [x, y]");
      p.points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
    }
    std::string space = j.value("space", std::string("normalized"));
    if (space == "normalized") {
      p.normalized = true;
    } else if (space == "pixels") {
      p.normalized = false;
    } else {
      throw ValidationError(where + ": space must be normalized or pixels");
    }
    if (p.normalized) {
      for (const Vec2& pt : p.points)
        if (pt.x() < 0 || pt.x() > 1 || pt.y() < 0 || pt.y() > 1)
          throw ValidationError(where + ": normalized point outside [0,1]^2");
    }
    preds.push_back(std::move(p));
  });
  return preds;
}

nlohmann::json benchmark_sample_to_json(const BenchmarkSample& sample) {
  json j;
  j["sample_id"] = sample.sample_id;
  j["image_ref"] = sample.image_ref;
  j["mask_ref"] = sample.mask_ref;
  j["instruction"] = sample.instruction;
  json constraints = json::array();
  for (const EvalConstraint& c : sample.constraints) {
    constraints.push_back(
        {{"anchor", c.anchor}, {"relation", c.relation},
         {"intrinsic", c.intrinsic}});
  }
  j["constraints"] = constraints;
  j["step"] = sample.step_label;
  j["subset"] = sample.subset;
  return j;
}

EvalReport evaluate_files(const std::string& predictions_path,
                          const std::string& benchmark_path) {
  std::vector<Prediction> preds = read_predictions_jsonl(predictions_path);
  std::vector<BenchmarkSample> samples = read_benchmark_jsonl(benchmark_path);
  std::filesystem::path base =
      std::filesystem::path(benchmark_path).parent_path();
  return benchmark_success_rate(
      preds, samples, [&](const BenchmarkSample& s) {
        std::filesystem::path p(s.mask_ref);
        if (p.is_relative()) p = base / p;
        return read_mask_png(p.string());
      });
}

nlohmann::json report_to_json(const EvalReport& report) {
  json j;
  j["overall"] = report.overall;
  json per_sample = json::array();
  for (const SampleScore& s : report.per_sample)
    per_sample.push_back({{"sample_id", s.sample_id}, {"success", s.success}});
  j["per_sample"] = per_sample;
  json per_step = json::object();
  for (const auto& [step, mean] : report.per_step)
    per_step[std::to_string(step)] = mean;
  j["per_step"] = per_step;
  json per_subset = json::object();
  for (const auto& [subset, mean] : report.per_subset)
    per_subset[subset] = mean;
  j["per_subset"] = per_subset;
  json discrepancies = json::array();
  for (const StepDiscrepancy& d : report.step_discrepancies) {
    discrepancies.push_back({{"sample_id", d.sample_id},
                             {"label", d.label},
                             {"computed", d.computed}});
  }
  j["step_discrepancies"] = discrepancies;
  return j;
}

}  // namespace spatialref
