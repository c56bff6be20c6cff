#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "spatialref/spatialref.h"

namespace {

using nlohmann::json;

struct ConfigHandle {
  srf_config* cfg = srf_config_create();
  ~ConfigHandle() { srf_config_free(cfg); }
};

struct SceneHandle {
  srf_scene* scene = nullptr;
  ~SceneHandle() { srf_scene_close(scene); }
};

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { srf_string_free(s); }
};

int fail(srf_status status) {
  std::fprintf(stderr, "error: %s\n", srf_last_error());
  return int(status);
}

int fail_usage(const std::string& msg) {
  std::fprintf(stderr, "error: %s\n", msg.c_str());
  return 2;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

// "key=value" overrides plus the named convenience flags.
int apply_config(ConfigHandle& config, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      return fail_usage("--set expects key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq);
    double value = 0;
    try {
      value = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      return fail_usage("--set " + key + ": not a number");
    }
    srf_status st = srf_config_set(config.cfg, key.c_str(), value);
    if (st != SRF_OK) return fail(st);
  }
  return 0;
}

int cmd_build_graph(const std::string& scene_path, const std::string& out_path,
                    ConfigHandle& config) {
  SceneHandle scene;
  srf_status st = srf_scene_open(scene_path.c_str(), &scene.scene);
  if (st != SRF_OK) return fail(st);
  OwnedString out;
  st = srf_build_graph(scene.scene, config.cfg, &out.s);
  if (st != SRF_OK) return fail(st);
  write_file_atomic(out_path, out.s);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_gen_qa(const std::string& scene_path, const std::string& families,
               uint64_t seed, const std::string& out_path,
               const std::string& benchmark_dir, ConfigHandle& config) {
  SceneHandle scene;
  srf_status st = srf_scene_open(scene_path.c_str(), &scene.scene);
  if (st != SRF_OK) return fail(st);
  OwnedString out;
  st = srf_generate_qa(scene.scene, config.cfg, families.c_str(), seed,
                       benchmark_dir.empty() ? nullptr : benchmark_dir.c_str(),
                       &out.s);
  if (st != SRF_OK) return fail(st);

  json result = json::parse(out.s);
  std::string jsonl;
  for (const json& item : result.at("items")) jsonl += item.dump() + "\n";
  write_file_atomic(out_path, jsonl);

  if (!benchmark_dir.empty()) {
    namespace fs = std::filesystem;
    std::string bench, preds;
    for (const json& s : result.at("benchmark")) bench += s.dump() + "\n";
    for (const json& p : result.at("predictions")) preds += p.dump() + "\n";
    write_file_atomic((fs::path(benchmark_dir) / "benchmark.jsonl").string(),
                      bench);
    write_file_atomic((fs::path(benchmark_dir) / "predictions.jsonl").string(),
                      preds);
  }

  const json& counts = result.at("report").at("counts");
  const json& skipped = result.at("report").at("skipped");
  std::string summary;
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (!summary.empty()) summary += " ";
    summary += it.key() + "=" + std::to_string(it.value().get<int>());
  }
  std::printf("wrote %s (%s)\n", out_path.c_str(),
              summary.empty() ? "no items" : summary.c_str());
  for (auto it = skipped.begin(); it != skipped.end(); ++it)
    std::printf("skipped %s: %s\n", it.key().c_str(),
                it.value().get<std::string>().c_str());

  // A family the caller explicitly asked for must produce something.
  std::string empty_families;
  size_t start = 0;
  while (start <= families.size()) {
    size_t comma = families.find(',', start);
    if (comma == std::string::npos) comma = families.size();
    std::string f = families.substr(start, comma - start);
    size_t a = f.find_first_not_of(" \t");
    size_t b = f.find_last_not_of(" \t");
    f = a == std::string::npos ? "" : f.substr(a, b - a + 1);
    start = comma + 1;
    if (f.empty()) continue;
    if (!counts.contains(f) || counts.at(f).get<int>() == 0) {
      if (!empty_families.empty()) empty_families += ", ";
      empty_families += f;
    }
  }
  if (!empty_families.empty()) {
    std::fprintf(stderr, "error: no QA generated for family: %s\n",
                 empty_families.c_str());
    return 3;
  }
  return 0;
}

int cmd_score(const std::string& responses, const std::string& gt,
              const std::string& out_path, int group_size,
              ConfigHandle& config) {
  OwnedString out;
  srf_status st = srf_score_responses(config.cfg, responses.c_str(),
                                      gt.c_str(), group_size, &out.s);
  if (st != SRF_OK) return fail(st);
  write_file_atomic(out_path, out.s);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_evaluate(const std::string& predictions, const std::string& benchmark,
                 const std::string& out_path) {
  OwnedString out;
  srf_status st =
      srf_evaluate(predictions.c_str(), benchmark.c_str(), &out.s);
  if (st != SRF_OK) return fail(st);
  if (!out_path.empty()) write_file_atomic(out_path, out.s);

  json report = json::parse(out.s);
  std::printf("overall  %.4f\n", report.at("overall").get<double>());
  const json& subsets = report.at("per_subset");
  for (auto it = subsets.begin(); it != subsets.end(); ++it)
    std::printf("subset   %-10s %.4f\n", it.key().c_str(),
                it.value().get<double>());
  const json& steps = report.at("per_step");
  for (auto it = steps.begin(); it != steps.end(); ++it)
    std::printf("step %-4s %.4f\n", it.key().c_str(),
                it.value().get<double>());
  size_t flagged = report.at("step_discrepancies").size();
  if (flagged > 0)
    std::printf("step label discrepancies: %zu (labels kept)\n", flagged);
  if (!out_path.empty()) std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_sample_freespace(const std::string& scene_path,
                         const std::string& relation,
                         const std::string& targets, uint64_t seed,
                         const std::string& out_path, ConfigHandle& config) {
  SceneHandle scene;
  srf_status st = srf_scene_open(scene_path.c_str(), &scene.scene);
  if (st != SRF_OK) return fail(st);

  json query;
  query["relation"] = relation;
  json ids = json::array();
  size_t start = 0;
  while (start <= targets.size()) {
    size_t comma = targets.find(',', start);
    if (comma == std::string::npos) comma = targets.size();
    std::string id = targets.substr(start, comma - start);
    if (!id.empty()) ids.push_back(id);
    start = comma + 1;
  }
  query["target_ids"] = ids;
  query["seed"] = seed;

  OwnedString out;
  st = srf_sample_free_space(scene.scene, config.cfg, query.dump().c_str(),
                             &out.s);
  if (st != SRF_OK) return fail(st);
  write_file_atomic(out_path, out.s);

  json region = json::parse(out.s);
  const json& selected = region.at("selected_point_px");
  if (!selected.is_null()) {
    std::printf("wrote %s (selected %.1f, %.1f)\n", out_path.c_str(),
                selected.at(0).get<double>(), selected.at(1).get<double>());
    return 0;
  }
  const json& why = region.at("rejection_reason");
  std::fprintf(stderr, "error: no placement point: %s\n",
               why.is_string() ? why.get<std::string>().c_str() : "rejected");
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial-referring data pipeline"};
  app.set_help_all_flag("--help-all");

  bool show_defaults = false;
  app.add_flag("--show-defaults", show_defaults,
               "Print the config defaults table as JSON and exit");

  ConfigHandle config;
  std::vector<std::string> sets;
  app.add_option("--set", sets, "Override a config value (key=value)")
      ->take_all();
  double alpha = -1, iou = -1, cell = -1;
  app.add_option("--alpha", alpha, "Process/accuracy reward weight");
  app.add_option("--iou-threshold", iou, "Minimum IoU for box matching");
  app.add_option("--cell-size", cell, "Occupancy grid cell size in meters");

  std::string scene_path, out_path, families = "relative-position,orientation,"
      "attribute-comparison,quantitative,free-space,location-placement";
  std::string benchmark_dir, responses, gt, predictions, benchmark;
  std::string relation, targets;
  uint64_t seed = 0;
  int group_size = 0;

  CLI::App* bg = app.add_subcommand("build-graph",
                                    "Build a scene graph from a scene JSON");
  bg->add_option("--scene", scene_path, "Scene JSON path")->required();
  bg->add_option("--out", out_path, "Output graph JSON path")->required();

  CLI::App* gq = app.add_subcommand("gen-qa", "Generate QA from a scene");
  gq->add_option("--scene", scene_path, "Scene JSON path")->required();
  gq->add_option("--families", families, "Comma-separated QA families");
  gq->add_option("--seed", seed, "Sampling seed")->required();
  gq->add_option("--out", out_path, "Output QA JSONL path")->required();
  gq->add_option("--benchmark-dir", benchmark_dir,
                 "Also export point items as a benchmark here");

  CLI::App* sc = app.add_subcommand("score", "Score responses against GT");
  sc->add_option("--responses", responses, "Responses JSONL path")->required();
  sc->add_option("--gt", gt, "Point ground-truth JSONL path")->required();
  sc->add_option("--out", out_path, "Output scores JSONL path")->required();
  sc->add_option("--group-size", group_size,
                 "Advantage group size (0 disables advantages)");

  CLI::App* ev = app.add_subcommand("evaluate",
                                    "Evaluate predictions against a benchmark");
  ev->add_option("--predictions", predictions, "Predictions JSONL path")
      ->required();
  ev->add_option("--benchmark", benchmark, "Benchmark JSONL path")->required();
  ev->add_option("--out", out_path, "Report JSON path");

  CLI::App* fs = app.add_subcommand("sample-freespace",
                                    "Sample one free-space placement query");
  fs->add_option("--scene", scene_path, "Scene JSON path")->required();
  fs->add_option("--relation", relation,
                 "left|right|front|behind|above|below|between")
      ->required();
  fs->add_option("--targets", targets, "Comma-separated target object ids")
      ->required();
  fs->add_option("--seed", seed, "Sampling seed")->required();
  fs->add_option("--out", out_path, "Output region JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (show_defaults) {
      char* defaults = srf_config_defaults_json();
      std::printf("%s\n", defaults);
      srf_string_free(defaults);
      return 0;
    }

    int rc = apply_config(config, sets);
    if (rc != 0) return rc;
    if (alpha >= 0 &&
        srf_config_set(config.cfg, "alpha", alpha) != SRF_OK)
      return fail(SRF_INVALID_INPUT);
    if (iou >= 0 && srf_config_set(config.cfg, "iou_min", iou) != SRF_OK)
      return fail(SRF_INVALID_INPUT);
    if (cell >= 0 &&
        srf_config_set(config.cfg, "cell_size", cell) != SRF_OK)
      return fail(SRF_INVALID_INPUT);
    srf_config_set_seed(config.cfg, seed);

    if (bg->parsed()) return cmd_build_graph(scene_path, out_path, config);
    if (gq->parsed())
      return cmd_gen_qa(scene_path, families, seed, out_path, benchmark_dir,
                        config);
    if (sc->parsed())
      return cmd_score(responses, gt, out_path, group_size, config);
    if (ev->parsed()) return cmd_evaluate(predictions, benchmark, out_path);
    if (fs->parsed())
      return cmd_sample_freespace(scene_path, relation, targets, seed,
                                  out_path, config);

    std::fprintf(stderr, "%s\n", app.help().c_str());
    return 2;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
