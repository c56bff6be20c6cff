#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "core/errors.hpp"
#include "core/eval.hpp"
#include "core/image_io.hpp"
#include "helpers.hpp"

using namespace spatialref;
using namespace spatialref::testing;
using doctest::Contains;

namespace {

Mask make_mask(int w, int h) {
  Mask m;
  m.width = w;
  m.height = h;
  m.on.assign(size_t(w) * h, 0);
  return m;
}

void set_pixel(Mask& m, int x, int y, uint8_t v = 1) {
  m.on[size_t(y) * m.width + x] = v;
}

Mask left_half_mask(int w, int h) {
  Mask m = make_mask(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w / 2; ++x) set_pixel(m, x, y);
  return m;
}

std::string write_text(const std::filesystem::path& dir,
                       const std::string& name, const std::string& body) {
  std::filesystem::path p = dir / name;
  std::ofstream(p) << body;
  return p.string();
}

}  // namespace

TEST_CASE("mask point lookup rounds half-up") {
  Mask m = make_mask(10, 8);
  set_pixel(m, 2, 3);
  set_pixel(m, 3, 4);

  SUBCASE("pixel coordinates") {
    CHECK(point_in_mask(m, 2.0, 3.0, false));
    CHECK(point_in_mask(m, 2.49, 3.0, false));
    CHECK_FALSE(point_in_mask(m, 2.5, 3.0, false));  // rounds to column 3
    CHECK(point_in_mask(m, 1.5, 3.0, false));        // rounds to column 2
    CHECK_FALSE(point_in_mask(m, 2.0, 3.5, false));  // rounds to row 4
  }

  SUBCASE("normalized coordinates scale by the mask size") {
    // (0.25, 0.5) on 10x8: u = 2.5 -> 3, v = 4.0 -> 4.
    CHECK(point_in_mask(m, 0.25, 0.5, true));
    CHECK_FALSE(point_in_mask(m, 0.2, 0.5, true));  // u = 2.0 -> 2, row 4 off
  }

  SUBCASE("out-of-bounds points are misses, not errors") {
    CHECK_FALSE(point_in_mask(m, -0.1, 3.0, false));
    CHECK_FALSE(point_in_mask(m, 9.5, 3.0, false));  // rounds to column 10
    CHECK(point_in_mask(m, 9.49, 3.0, false) == bool(m.at(9, 3)));
    CHECK_FALSE(point_in_mask(m, 1.0, 0.5, true));   // u = 10
    CHECK_FALSE(point_in_mask(m, 0.5, -0.2, true));
  }
}

TEST_CASE("sample success is the fraction of points inside the mask") {
  Mask m = left_half_mask(20, 10);

  Prediction pred;
  pred.sample_id = "s-1";
  pred.normalized = true;
  pred.points = {{0.1, 0.5}, {0.2, 0.3}, {0.3, 0.9}, {0.9, 0.5}};
  CHECK(sample_success(pred, m) == doctest::Approx(0.75));

  SUBCASE("pixel-space predictions skip the scaling") {
    Prediction px;
    px.sample_id = "s-2";
    px.normalized = false;
    px.points = {{3.0, 5.0}, {15.0, 5.0}};
    CHECK(sample_success(px, m) == doctest::Approx(0.5));
  }

  SUBCASE("an empty point list is an error") {
    Prediction empty;
    empty.sample_id = "s-3";
    CHECK_THROWS_WITH_AS(sample_success(empty, m), Contains("has no points"),
                         ValidationError);
  }
}

TEST_CASE("reasoning step counting") {
  auto steps = [](std::vector<EvalConstraint> cs) {
    return count_reasoning_steps(cs);
  };

  CHECK(steps({}) == 1);  // clamped floor
  CHECK(steps({{"viewer", "left", false}}) == 1);
  CHECK(steps({{"", "", false}}) == 1);
  CHECK(steps({{"the table", "on", false}}) == 1);
  CHECK(steps({{"the table", "", false}}) == 1);
  CHECK(steps({{"the shelf", "left-of", false}}) == 2);
  CHECK(steps({{"the shelf", "left-of", false}, {"the bed", "behind", false}}) ==
        4);
  CHECK(steps({{"a", "near", false}, {"b", "near", false}, {"c", "near", false}}) ==
        5);  // 6 clamped down

  SUBCASE("intrinsic constraints never count") {
    CHECK(steps({{"the red mug", "left-of", true}}) == 1);
    CHECK(steps({{"the red mug", "left-of", true}, {"the desk", "on", false}}) ==
          1);
  }

  SUBCASE("mixed anchors add up") {
    CHECK(steps({{"viewer", "close-to", false},
                 {"the desk", "on", false},
                 {"the lamp", "right-of", false}}) == 3);
  }
}

TEST_CASE("step labels are verified against the constraints") {
  BenchmarkSample ok;
  ok.sample_id = "good";
  ok.constraints = {{"the shelf", "left-of", false}};
  ok.step_label = 2;
  ok.subset = "location";

  BenchmarkSample off;
  off.sample_id = "off-by-one";
  off.constraints = {{"the shelf", "left-of", false}};
  off.step_label = 3;
  off.subset = "location";

  std::vector<StepDiscrepancy> d = verify_step_labels({ok, off});
  REQUIRE(d.size() == 1);
  CHECK(d[0].sample_id == "off-by-one");
  CHECK(d[0].label == 3);
  CHECK(d[0].computed == 2);
}

TEST_CASE("benchmark success aggregates by step and subset") {
  Mask on = make_mask(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) set_pixel(on, x, y);
  Mask offm = make_mask(4, 4);

  auto sample = [](const std::string& id, int step, const std::string& subset) {
    BenchmarkSample s;
    s.sample_id = id;
    s.mask_ref = id + ".png";
    s.step_label = step;
    s.subset = subset;
    return s;
  };
  std::vector<BenchmarkSample> samples = {
      sample("a", 1, "location"), sample("b", 1, "location"),
      sample("c", 2, "placement"), sample("d", 2, "unseen")};

  auto pred = [](const std::string& id) {
    Prediction p;
    p.sample_id = id;
    p.points = {{0.5, 0.5}};
    return p;
  };
  std::vector<Prediction> preds = {pred("a"), pred("b"), pred("c"), pred("d")};

  // a and c land on the filled mask, b and d on the empty one.
  auto load = [&](const BenchmarkSample& s) {
    return (s.sample_id == "a" || s.sample_id == "c") ? on : offm;
  };

  EvalReport report = benchmark_success_rate(preds, samples, load);
  CHECK(report.overall == doctest::Approx(0.5));
  REQUIRE(report.per_sample.size() == 4);
  CHECK(report.per_sample[0].sample_id == "a");
  CHECK(report.per_sample[0].success == 1.0);
  CHECK(report.per_sample[1].success == 0.0);
  CHECK(report.per_step.at(1) == doctest::Approx(0.5));
  CHECK(report.per_step.at(2) == doctest::Approx(0.5));
  CHECK(report.per_subset.at("location") == doctest::Approx(0.5));
  CHECK(report.per_subset.at("placement") == doctest::Approx(1.0));
  CHECK(report.per_subset.at("unseen") == doctest::Approx(0.0));
  // Labels disagree with the bare constraint lists (computed 1 vs label 2).
  CHECK(report.step_discrepancies.size() == 2);

  SUBCASE("alignment and duplicates are rejected") {
    CHECK_THROWS_WITH_AS(
        benchmark_success_rate({pred("a"), pred("a")}, samples, load),
        Contains("duplicate prediction"), ValidationError);
    CHECK_THROWS_WITH_AS(
        benchmark_success_rate({pred("a"), pred("b"), pred("c")}, samples, load),
        Contains("do not align: d"), ValidationError);
    std::vector<Prediction> extra = preds;
    extra.push_back(pred("z"));
    CHECK_THROWS_WITH_AS(benchmark_success_rate(extra, samples, load),
                         Contains("do not align: z"), ValidationError);
    std::vector<BenchmarkSample> dup = {sample("a", 1, "location"),
                                        sample("a", 1, "location")};
    CHECK_THROWS_WITH_AS(
        benchmark_success_rate({pred("a")}, dup, load),
        Contains("duplicate benchmark sample"), ValidationError);
    CHECK_THROWS_WITH_AS(benchmark_success_rate({}, {}, load),
                         Contains("no benchmark samples"), ValidationError);
  }
}

TEST_CASE("benchmark jsonl reader") {
  auto dir = temp_dir("eval-bench");

  SUBCASE("a full row round-trips") {
    std::string path = write_text(
        dir, "bench.jsonl",
        R"({"sample_id": "s1", "image_ref": "img.png", "mask_ref": "m.png",)"
        R"( "instruction": "the mug left of the lamp",)"
        R"( "constraints": [{"anchor": "the lamp", "relation": "left-of"},)"
        R"( {"anchor": "viewer", "relation": "close-to"},)"
        R"( {"anchor": "the mug", "relation": "", "intrinsic": true}],)"
        R"( "step": 2, "subset": "location"})"
        "\n");
    std::vector<BenchmarkSample> samples = read_benchmark_jsonl(path);
    REQUIRE(samples.size() == 1);
    const BenchmarkSample& s = samples[0];
    CHECK(s.sample_id == "s1");
    CHECK(s.image_ref == "img.png");
    CHECK(s.mask_ref == "m.png");
    CHECK(s.instruction == "the mug left of the lamp");
    REQUIRE(s.constraints.size() == 3);
    CHECK(s.constraints[0].anchor == "the lamp");
    CHECK(s.constraints[0].relation == "left-of");
    CHECK_FALSE(s.constraints[0].intrinsic);
    CHECK(s.constraints[2].intrinsic);
    CHECK(s.step_label == 2);
    CHECK(s.subset == "location");

    nlohmann::json j = benchmark_sample_to_json(s);
    CHECK(j.at("sample_id") == "s1");
    CHECK(j.at("mask_ref") == "m.png");
    CHECK(j.at("step") == 2);
    CHECK(j.at("subset") == "location");
    REQUIRE(j.at("constraints").size() == 3);
    CHECK(j.at("constraints")[0].at("anchor") == "the lamp");
    CHECK(j.at("constraints")[2].at("intrinsic") == true);
  }

  SUBCASE("malformed rows name the file, line and field") {
    auto expect_error = [&](const std::string& name, const std::string& body,
                            const char* needle) {
      std::string path = write_text(dir, name, body + "\n");
      CHECK_THROWS_WITH_AS(read_benchmark_jsonl(path), Contains(needle),
                           ValidationError);
    };
    expect_error("e1.jsonl", R"({"mask_ref": "m", "step": 1, "subset": "unseen"})",
                 "missing sample_id");
    expect_error("e2.jsonl", R"({"sample_id": "s", "step": 1, "subset": "unseen"})",
                 "missing mask_ref");
    expect_error(
        "e3.jsonl",
        R"({"sample_id": "s", "mask_ref": "m", "constraints": 5, "step": 1, "subset": "unseen"})",
        "constraints must be an array");
    expect_error("e4.jsonl", R"({"sample_id": "s", "mask_ref": "m", "subset": "unseen"})",
                 "missing integer step");
    expect_error(
        "e5.jsonl",
        R"({"sample_id": "s", "mask_ref": "m", "step": 0, "subset": "unseen"})",
        "step must be within 1..5");
    expect_error(
        "e6.jsonl",
        R"({"sample_id": "s", "mask_ref": "m", "step": 6, "subset": "unseen"})",
        "step must be within 1..5");
    expect_error("e7.jsonl", R"({"sample_id": "s", "mask_ref": "m", "step": 1})",
                 "missing subset");
    expect_error(
        "e8.jsonl",
        R"({"sample_id": "s", "mask_ref": "m", "step": 1, "subset": "training"})",
        "unknown subset 'training'");

    std::string path = write_text(
        dir, "e9.jsonl",
        R"({"sample_id": "s", "mask_ref": "m", "step": 1, "subset": "unseen"})"
        "\n{oops\n");
    CHECK_THROWS_WITH_AS(read_benchmark_jsonl(path), Contains("e9.jsonl:2"),
                         ValidationError);
  }
}

TEST_CASE("prediction jsonl reader") {
  auto dir = temp_dir("eval-pred");

  SUBCASE("normalized by default, pixels on request") {
    std::string path = write_text(
        dir, "preds.jsonl",
        R"({"sample_id": "a", "points": [[0.25, 0.5], [0.75, 0.5]]})"
        "\n"
        R"({"sample_id": "b", "points": [[320, 240]], "space": "pixels"})"
        "\n");
    std::vector<Prediction> preds = read_predictions_jsonl(path);
    REQUIRE(preds.size() == 2);
    CHECK(preds[0].normalized);
    REQUIRE(preds[0].points.size() == 2);
    CHECK(preds[0].points[0].x() == 0.25);
    CHECK_FALSE(preds[1].normalized);
    CHECK(preds[1].points[0].x() == 320.0);
  }

  SUBCASE("validation errors") {
    auto expect_error = [&](const std::string& name, const std::string& body,
                            const char* needle) {
      std::string path = write_text(dir, name, body + "\n");
      CHECK_THROWS_WITH_AS(read_predictions_jsonl(path), Contains(needle),
                           ValidationError);
    };
    expect_error("p1.jsonl", R"({"points": [[0.5, 0.5]]})", "missing sample_id");
    expect_error("p2.jsonl", R"({"sample_id": "a"})", "missing points array");
    expect_error("p3.jsonl", R"({"sample_id": "a", "points": [[1, 2, 3]]})",
                 "each point must be [x, y]");
    expect_error("p4.jsonl", R"({"sample_id": "a", "points": [0.5]})",
                 "each point must be [x, y]");
    expect_error(
        "p5.jsonl",
        R"({"sample_id": "a", "points": [[0.5, 0.5]], "space": "voxels"})",
        "space must be normalized or pixels");
    expect_error("p6.jsonl", R"({"sample_id": "a", "points": [[1.5, 0.5]]})",
                 "normalized point outside [0,1]^2");
  }
}

TEST_CASE("file evaluation end to end") {
  std::filesystem::path dir = temp_dir("eval-files");

  Mask half = left_half_mask(20, 10);
  Mask full = make_mask(20, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) set_pixel(full, x, y);
  write_mask_png((dir / "half.png").string(), half);
  write_mask_png((dir / "full.png").string(), full);

  std::string bench = write_text(
      dir, "bench.jsonl",
      R"({"sample_id": "s1", "mask_ref": "half.png",)"
      R"( "constraints": [{"anchor": "the lamp", "relation": "left-of"}],)"
      R"( "step": 2, "subset": "location"})"
      "\n"
      R"({"sample_id": "s2", "mask_ref": "full.png", "step": 1, "subset": "unseen"})"
      "\n");
  std::string preds = write_text(
      dir, "preds.jsonl",
      R"({"sample_id": "s1", "points": [[0.2, 0.5], [0.8, 0.5]]})"
      "\n"
      R"({"sample_id": "s2", "points": [[0.5, 0.5]]})"
      "\n");

  EvalReport report = evaluate_files(preds, bench);
  CHECK(report.overall == doctest::Approx(0.75));
  REQUIRE(report.per_sample.size() == 2);
  CHECK(report.per_sample[0].success == doctest::Approx(0.5));
  CHECK(report.per_sample[1].success == doctest::Approx(1.0));
  CHECK(report.per_step.at(2) == doctest::Approx(0.5));
  CHECK(report.per_step.at(1) == doctest::Approx(1.0));
  CHECK(report.step_discrepancies.empty());

  SUBCASE("the report serializes with per-bucket tables") {
    nlohmann::json j = report_to_json(report);
    CHECK(j.at("overall").get<double>() == doctest::Approx(0.75));
    REQUIRE(j.at("per_sample").size() == 2);
    CHECK(j.at("per_sample")[0].at("sample_id") == "s1");
    CHECK(j.at("per_sample")[0].at("success").get<double>() ==
          doctest::Approx(0.5));
    CHECK(j.at("per_step").at("1").get<double>() == doctest::Approx(1.0));
    CHECK(j.at("per_step").at("2").get<double>() == doctest::Approx(0.5));
    CHECK(j.at("per_subset").at("location").get<double>() ==
          doctest::Approx(0.5));
    CHECK(j.at("per_subset").at("unseen").get<double>() == doctest::Approx(1.0));
    CHECK(j.at("step_discrepancies").is_array());
    CHECK(j.at("step_discrepancies").empty());
  }

  SUBCASE("a mismatched label shows up in the serialized report") {
    std::string bad_bench = write_text(
        dir, "bench2.jsonl",
        R"({"sample_id": "s1", "mask_ref": "half.png",)"
        R"( "constraints": [{"anchor": "the lamp", "relation": "left-of"}],)"
        R"( "step": 4, "subset": "location"})"
        "\n"
        R"({"sample_id": "s2", "mask_ref": "full.png", "step": 1, "subset": "unseen"})"
        "\n");
    EvalReport r2 = evaluate_files(preds, bad_bench);
    REQUIRE(r2.step_discrepancies.size() == 1);
    CHECK(r2.step_discrepancies[0].sample_id == "s1");
    CHECK(r2.step_discrepancies[0].label == 4);
    CHECK(r2.step_discrepancies[0].computed == 2);
    nlohmann::json j = report_to_json(r2);
    REQUIRE(j.at("step_discrepancies").size() == 1);
    CHECK(j.at("step_discrepancies")[0].at("label") == 4);
    CHECK(j.at("step_discrepancies")[0].at("computed") == 2);
  }

  SUBCASE("a missing mask file surfaces as an error") {
    std::string lost = write_text(
        dir, "bench3.jsonl",
        R"({"sample_id": "s1", "mask_ref": "nowhere.png", "step": 1, "subset": "unseen"})"
        "\n");
    std::string one_pred = write_text(
        dir, "pred3.jsonl", R"({"sample_id": "s1", "points": [[0.5, 0.5]]})"
        "\n");
    CHECK_THROWS_AS(evaluate_files(one_pred, lost), ValidationError);
  }
}
