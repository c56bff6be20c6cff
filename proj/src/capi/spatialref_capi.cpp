#include "spatialref/spatialref.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "core/config.hpp"
#include "core/errors.hpp"
#include "core/eval.hpp"
#include "core/free_space.hpp"
#include "core/qa.hpp"
#include "core/reward.hpp"
#include "core/scene.hpp"
#include "core/scene_graph.hpp"

using namespace spatialref;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
srf_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SRF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    switch (e.code()) {
      case ErrorCode::Validation: return SRF_INVALID_INPUT;
      case ErrorCode::Unsatisfiable: return SRF_UNSATISFIABLE;
      case ErrorCode::Internal: return SRF_ERROR;
    }
    return SRF_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SRF_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return SRF_ERROR;
  }
}

srf_status invalid(const char* msg) {
  g_last_error = msg;
  return SRF_INVALID_INPUT;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t comma = s.find(',', start);
    if (comma == std::string::npos) comma = s.size();
    std::string item = s.substr(start, comma - start);
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    start = comma + 1;
  }
  return out;
}

}  // namespace

struct srf_config {
  Config cfg;
};

struct srf_scene {
  SceneFrame scene;
};

extern "C" {

const char* srf_version(void) { return "1.0.0"; }

const char* srf_last_error(void) { return g_last_error.c_str(); }

void srf_string_free(char* s) { std::free(s); }

srf_config* srf_config_create(void) { return new srf_config{}; }

void srf_config_free(srf_config* cfg) { delete cfg; }

srf_status srf_config_set(srf_config* cfg, const char* key, double value) {
  if (!cfg || !key) return invalid("null config or key");
  if (!cfg->cfg.set(key, value)) {
    g_last_error = std::string("unknown config key: ") + key;
    return SRF_INVALID_INPUT;
  }
  g_last_error.clear();
  return SRF_OK;
}

srf_status srf_config_set_seed(srf_config* cfg, uint64_t seed) {
  if (!cfg) return invalid("null config");
  cfg->cfg.seed = seed;
  g_last_error.clear();
  return SRF_OK;
}

char* srf_config_defaults_json(void) { return dup_string(Config{}.to_json()); }

srf_status srf_scene_open(const char* path, srf_scene** out) {
  if (!path || !out) return invalid("null path or output");
  return guarded([&] {
    auto scene = new srf_scene{load_scene(path)};
    *out = scene;
  });
}

void srf_scene_close(srf_scene* scene) { delete scene; }

srf_status srf_build_graph(const srf_scene* scene, const srf_config* cfg,
                           char** out_json) {
  if (!scene || !cfg || !out_json) return invalid("null argument");
  return guarded([&] {
    SceneGraph graph = build_scene_graph(scene->scene,
                                         default_graph_relations(), cfg->cfg);
    *out_json = dup_string(graph_to_json(scene->scene, graph).dump(2) + "\n");
  });
}

srf_status srf_sample_free_space(const srf_scene* scene, const srf_config* cfg,
                                 const char* query_json, char** out_json) {
  if (!scene || !cfg || !query_json || !out_json)
    return invalid("null argument");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(query_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(std::string("invalid query JSON: ") + e.what());
    }
    FreeSpaceQuery query = parse_free_space_query(j);
    FreeSpaceOutcome outcome =
        run_free_space_query(scene->scene, query, cfg->cfg);
    *out_json = dup_string(
        region_to_json(outcome.region, scene->scene.intrinsics).dump(2) +
        "\n");
  });
}

srf_status srf_generate_qa(const srf_scene* scene, const srf_config* cfg,
                           const char* families_csv, uint64_t seed,
                           const char* benchmark_dir, char** out_json) {
  if (!scene || !cfg || !families_csv || !out_json)
    return invalid("null argument");
  return guarded([&] {
    std::vector<std::string> families = split_csv(families_csv);
    if (families.empty()) throw ValidationError("no families requested");

    bool wants_reasoning = false;
    bool wants_regions = false;
    std::vector<std::string> spatial;
    for (const std::string& f : families) {
      if (f == "reasoning") {
        wants_reasoning = true;
        wants_regions = true;
        continue;
      }
      if (f == "free-space" || f == "location-placement" || f == "between")
        wants_regions = true;
      spatial.push_back(f);
    }

    TemplateRegistry reg = TemplateRegistry::embedded();
    SceneGraph graph = build_scene_graph(scene->scene,
                                         default_graph_relations(), cfg->cfg);
    std::vector<FreeSpaceRegion> regions;
    if (wants_regions)
      regions = default_free_space_regions(scene->scene, cfg->cfg, seed);

    QAGenReport report;
    std::vector<GeneratedQA> items =
        generate_spatial_qa(scene->scene, graph, regions, reg, spatial,
                            cfg->cfg, seed, false, &report);
    if (wants_reasoning) {
      std::vector<GeneratedQA> extra = generate_reasoning_suite(
          scene->scene, graph, regions, reg, cfg->cfg, seed, &report);
      for (GeneratedQA& g : extra) items.push_back(std::move(g));
    }

    nlohmann::json out;
    nlohmann::json arr = nlohmann::json::array();
    for (const GeneratedQA& g : items) arr.push_back(qa_to_json(g.qa));
    out["items"] = arr;
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [family, n] : report.counts) counts[family] = n;
    nlohmann::json skipped = nlohmann::json::object();
    for (const auto& [family, why] : report.skipped) skipped[family] = why;
    out["report"] = {{"counts", counts}, {"skipped", skipped}};

    if (benchmark_dir) {
      BenchmarkExport exp =
          export_benchmark(items, scene->scene, benchmark_dir);
      nlohmann::json samples = nlohmann::json::array();
      for (const BenchmarkSample& s : exp.samples)
        samples.push_back(benchmark_sample_to_json(s));
      nlohmann::json preds = nlohmann::json::array();
      for (const Prediction& p : exp.self_predictions) {
        nlohmann::json pj;
        pj["sample_id"] = p.sample_id;
        nlohmann::json pts = nlohmann::json::array();
        for (const Vec2& q : p.points) pts.push_back({q.x(), q.y()});
        pj["points"] = pts;
        pj["space"] = p.normalized ? "normalized" : "pixels";
        preds.push_back(pj);
      }
      out["benchmark"] = samples;
      out["predictions"] = preds;
    }
    *out_json = dup_string(out.dump());
  });
}

srf_status srf_score_responses(const srf_config* cfg,
                               const char* responses_path, const char* gt_path,
                               int group_size, char** out_jsonl) {
  if (!cfg || !responses_path || !gt_path || !out_jsonl)
    return invalid("null argument");
  return guarded([&] {
    std::vector<ResponseRow> responses = read_responses_jsonl(responses_path);
    std::vector<PointGroundTruth> gt = read_point_gt_jsonl(gt_path);
    std::vector<ScoreRow> rows =
        score_responses(responses, gt, group_size, cfg->cfg);
    *out_jsonl = dup_string(scores_to_jsonl(rows));
  });
}

srf_status srf_evaluate(const char* predictions_path,
                        const char* benchmark_path, char** out_json) {
  if (!predictions_path || !benchmark_path || !out_json)
    return invalid("null argument");
  return guarded([&] {
    EvalReport report = evaluate_files(predictions_path, benchmark_path);
    *out_json = dup_string(report_to_json(report).dump(2) + "\n");
  });
}

}  // extern "C"
