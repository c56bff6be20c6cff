#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "core/errors.hpp"
#include "core/reward.hpp"
#include "core/textutil.hpp"
#include "helpers.hpp"

using namespace spatialref;
using namespace spatialref::testing;
using doctest::Contains;

namespace {

// Ground truth at the image center of a 640x480 frame: the point plus one
// key step per perception type.
PointGroundTruth center_gt() {
  PointGroundTruth gt;
  gt.sample_id = "s-0";
  gt.point = {320.0, 240.0};
  gt.width = 640;
  gt.height = 480;
  gt.key_steps = {
      {KeyStep::Type::Position, "the red cup", {0.5, 0.5}},
      {KeyStep::Type::Orientation, "the desk fan", {0.0, 0.0, 1.0}},
      {KeyStep::Type::Size, "the crate", {0.4}},
  };
  return gt;
}

const char* kPerfectResponse =
    "<think>\n"
    "[Position] [the red cup]: (0.5, 0.5)\n"
    "[Orientation] [the desk fan]: (0, 0, 1)\n"
    "[Size] [the crate]: 0.4\n"
    "</think>\n"
    "<answer>(0.5, 0.5)</answer>";

std::string write_jsonl(const std::filesystem::path& dir,
                        const std::string& name, const std::string& body) {
  std::filesystem::path p = dir / name;
  std::ofstream(p) << body;
  return p.string();
}

}  // namespace

TEST_CASE("step type names round trip") {
  CHECK(std::string(key_step_type_name(KeyStep::Type::Position)) == "Position");
  CHECK(std::string(key_step_type_name(KeyStep::Type::Orientation)) ==
        "Orientation");
  CHECK(std::string(key_step_type_name(KeyStep::Type::Size)) == "Size");
  CHECK(key_step_type_from_name("Position") == KeyStep::Type::Position);
  CHECK(key_step_type_from_name("Orientation") == KeyStep::Type::Orientation);
  CHECK(key_step_type_from_name("Size") == KeyStep::Type::Size);
  CHECK_FALSE(key_step_type_from_name("position").has_value());
  CHECK_FALSE(key_step_type_from_name("").has_value());
}

TEST_CASE("step lines that satisfy the grammar") {
  SUBCASE("position tuple") {
    ParsedStep s = parse_step_line("[Position] [the red cup]: (0.25, 0.75)");
    REQUIRE(s.ok);
    CHECK(s.type == KeyStep::Type::Position);
    CHECK(s.target_text == "the red cup");
    REQUIRE(s.value.size() == 2);
    CHECK(s.value[0] == 0.25);
    CHECK(s.value[1] == 0.75);
  }

  SUBCASE("orientation tuple") {
    ParsedStep s = parse_step_line("[Orientation] [the fan]: (0, 0, 1)");
    REQUIRE(s.ok);
    CHECK(s.type == KeyStep::Type::Orientation);
    REQUIRE(s.value.size() == 3);
    CHECK(s.value[2] == 1.0);
  }

  SUBCASE("size scalar") {
    ParsedStep s = parse_step_line("[Size] [the crate]: 0.42");
    REQUIRE(s.ok);
    CHECK(s.type == KeyStep::Type::Size);
    REQUIRE(s.value.size() == 1);
    CHECK(s.value[0] == 0.42);
  }

  SUBCASE("values may be wrapped in one bracket pair") {
    CHECK(parse_step_line("[Position] [a]: [(0.2, 0.3)]").ok);
    CHECK(parse_step_line("[Size] [a]: [0.3]").ok);
    CHECK(parse_step_line("[Orientation] [a]: [(1, 0, 0)]").ok);
  }

  SUBCASE("whitespace slack") {
    CHECK(parse_step_line("[Position]\t[a]: (0.2, 0.3)").ok);
    CHECK(parse_step_line("[Position]   [a]: (0.2, 0.3)").ok);
    CHECK(parse_step_line("[Position] [a]:(0.2,0.3)").ok);
    CHECK(parse_step_line("[Position] [a]:   (0.2,  0.3)").ok);
    CHECK(parse_step_line("[Position] [a]: (0.2, 0.3)   ").ok);
    CHECK(parse_step_line("[Size] [a]: 0.3\t").ok);
  }

  SUBCASE("the target text is trimmed") {
    ParsedStep s = parse_step_line("[Size] [  the crate ]: 0.3");
    REQUIRE(s.ok);
    CHECK(s.target_text == "the crate");
  }

  SUBCASE("numeric variety") {
    CHECK(parse_step_line("[Size] [a]: 1e-2").ok);
    CHECK(parse_step_line("[Size] [a]: +0.5").ok);
    CHECK(parse_step_line("[Position] [a]: (0, 1)").ok);
    CHECK(parse_step_line("[Orientation] [a]: (-1, 0, 0)").ok);
    CHECK(parse_step_line("[Orientation] [a]: (0.577, 0.577, 0.578)").ok);
  }
}

TEST_CASE("step lines that break the grammar") {
  const char* bad[] = {
      "",
      "Position [a]: (0.2, 0.3)",          // missing leading bracket
      "[Direction] [a]: (0.2, 0.3)",       // unknown type
      "[position] [a]: (0.2, 0.3)",        // case matters
      "[Position][a]: (0.2, 0.3)",         // no space after the type
      "[Position] a]: (0.2, 0.3)",         // target bracket missing
      "[Position] []: (0.2, 0.3)",         // empty target
      "[Position] [a] (0.2, 0.3)",         // missing colon
      "[Position] [a]: 0.2, 0.3",          // missing parentheses
      "[Position] [a]: (0.2)",             // wrong arity
      "[Position] [a]: (0.2, 0.3, 0.4)",   // three values where two belong
      "[Position] [a]: (0.2 , 0.3)",       // space before the comma
      "[Position] [a]: (0.2, 0.3) now",    // trailing words
      "[Position] [a]: [(0.2, 0.3)",       // unclosed value bracket
      "[Orientation] [a]: (0, 1)",         // wrong arity for the type
      "[Size] [a]: (0.3)",                 // scalar must not be a tuple
      "[Size] [a]: abc",                   // not a number
      "[Size] [a]: inf",                   // not finite
  };
  for (const char* line : bad) {
    CAPTURE(line);
    CHECK_FALSE(parse_step_line(line).ok);
  }

  SUBCASE("the raw line is preserved either way") {
    CHECK(parse_step_line("garbage").raw == "garbage");
    CHECK(parse_step_line("[Size] [a]: 0.3").raw == "[Size] [a]: 0.3");
  }
}

TEST_CASE("step values must be type-correct") {
  CHECK(parse_step_line("[Position] [a]: (0, 0)").ok);
  CHECK(parse_step_line("[Position] [a]: (1, 1)").ok);
  CHECK_FALSE(parse_step_line("[Position] [a]: (1.001, 0.5)").ok);
  CHECK_FALSE(parse_step_line("[Position] [a]: (0.5, -0.001)").ok);

  CHECK(parse_step_line("[Orientation] [a]: (0.7071, 0.7071, 0)").ok);
  CHECK(parse_step_line("[Orientation] [a]: (1.004, 0, 0)").ok);
  CHECK_FALSE(parse_step_line("[Orientation] [a]: (1.006, 0, 0)").ok);
  CHECK_FALSE(parse_step_line("[Orientation] [a]: (0, 0, 0)").ok);
  CHECK_FALSE(parse_step_line("[Orientation] [a]: (2, 0, 0)").ok);

  CHECK(parse_step_line("[Size] [a]: 0.001").ok);
  CHECK_FALSE(parse_step_line("[Size] [a]: 0").ok);
  CHECK_FALSE(parse_step_line("[Size] [a]: -0.3").ok);
}

TEST_CASE("response parsing splits tags and steps") {
  ParsedResponse r = parse_response(kPerfectResponse);
  CHECK(r.format_ok);
  CHECK(r.think.find("[Position]") != std::string::npos);
  CHECK(trim(r.answer) == "(0.5, 0.5)");
  REQUIRE(r.steps.size() == 3);
  for (const ParsedStep& s : r.steps) CHECK(s.ok);
  REQUIRE(r.final_point.has_value());
  CHECK(r.final_point->x == 0.5);
  CHECK(r.final_point->y == 0.5);
  CHECK(r.final_point->normalized);

  SUBCASE("whitespace around the blocks is tolerated") {
    ParsedResponse ws = parse_response(
        "  \n<think>[Size] [a]: 0.3</think>\n\t<answer>(0.1, 0.2)</answer>\n ");
    CHECK(ws.format_ok);
  }

  SUBCASE("blank think lines produce no steps") {
    ParsedResponse b = parse_response(
        "<think>\n\n  \n[Size] [a]: 0.3\n\n</think><answer>(0.1, 0.2)</answer>");
    CHECK(b.format_ok);
    REQUIRE(b.steps.size() == 1);
    CHECK(b.steps[0].ok);
  }

  SUBCASE("invalid step lines are kept with ok=false") {
    ParsedResponse b = parse_response(
        "<think>first I look around\n[Size] [a]: 0.3</think>"
        "<answer>(0.1, 0.2)</answer>");
    REQUIRE(b.steps.size() == 2);
    CHECK_FALSE(b.steps[0].ok);
    CHECK(b.steps[1].ok);
  }
}

TEST_CASE("strict format rejects malformed layouts") {
  CHECK_FALSE(parse_response("").format_ok);
  CHECK_FALSE(parse_response("<think>x</think>").format_ok);
  CHECK_FALSE(parse_response("<answer>(0.1, 0.2)</answer>").format_ok);
  CHECK_FALSE(
      parse_response("<answer>(0.1, 0.2)</answer><think>x</think>").format_ok);
  CHECK_FALSE(parse_response("pre <think>x</think><answer>y</answer>").format_ok);
  CHECK_FALSE(parse_response("<think>x</think> mid <answer>y</answer>").format_ok);
  CHECK_FALSE(parse_response("<think>x</think><answer>y</answer> post").format_ok);
  CHECK_FALSE(parse_response("<think>x</think><answer>y</answer>"
                             "<think>z</think>").format_ok);
  CHECK_FALSE(parse_response("<think>x<answer>y</answer>").format_ok);
  CHECK_FALSE(parse_response("<think>x</think><answer>y").format_ok);

  SUBCASE("lenient extraction still recovers content") {
    ParsedResponse r = parse_response(
        "I will now answer. <think>[Size] [a]: 0.3</think>"
        "<answer>(0.25, 0.5)</answer>");
    CHECK_FALSE(r.format_ok);
    REQUIRE(r.steps.size() == 1);
    CHECK(r.steps[0].ok);
    REQUIRE(r.final_point.has_value());
    CHECK(r.final_point->x == 0.25);
  }

  SUBCASE("duplicated tags break the format but keep the first block") {
    ParsedResponse r = parse_response(
        "<think>[Size] [a]: 0.3</think><answer>(0.1, 0.2)</answer>"
        "<answer>(0.9, 0.9)</answer>");
    CHECK_FALSE(r.format_ok);
    REQUIRE(r.final_point.has_value());
    CHECK(r.final_point->x == 0.1);
  }
}

TEST_CASE("final point extraction from the answer") {
  auto point_of = [](const std::string& answer) {
    return parse_response("<think>x</think><answer>" + answer + "</answer>")
        .final_point;
  };

  SUBCASE("first parsable tuple wins") {
    auto p = point_of("The spot (see image) is at (0.25, 0.75).");
    REQUIRE(p.has_value());
    CHECK(p->x == 0.25);
    CHECK(p->y == 0.75);
    CHECK(p->normalized);
  }

  SUBCASE("pixel-valued tuples are kept unnormalized") {
    auto p = point_of("(320, 240)");
    REQUIRE(p.has_value());
    CHECK_FALSE(p->normalized);
  }

  SUBCASE("mixed scales count as pixels") {
    auto p = point_of("(0.5, 240)");
    REQUIRE(p.has_value());
    CHECK_FALSE(p->normalized);
  }

  SUBCASE("no tuple, no point") {
    CHECK_FALSE(point_of("somewhere on the left").has_value());
    CHECK_FALSE(point_of("(0.5)").has_value());
    CHECK_FALSE(point_of("(0.5, )").has_value());
  }
}

TEST_CASE("outcome format and point rewards") {
  Config cfg;
  PointGroundTruth gt = center_gt();

  CHECK(outcome_format_reward(parse_response(kPerfectResponse)) == 1.0);
  CHECK(outcome_format_reward(parse_response("x<think>a</think>"
                                             "<answer>b</answer>")) == 0.0);

  auto r_p = [&](const std::string& answer) {
    ParsedResponse r =
        parse_response("<think>x</think><answer>" + answer + "</answer>");
    return point_l1_reward(r, gt, cfg);
  };

  SUBCASE("normalized answers scale by the image size") {
    CHECK(r_p("(0.5, 0.5)") == 1.0);
    // 0.55 * 640 = 352: L1 = 32 pixels.
    CHECK(r_p("(0.55, 0.5)") == 1.0);
    // 0.6 * 640 = 384: L1 = 64 pixels.
    CHECK(r_p("(0.6, 0.5)") == 0.0);
  }

  SUBCASE("the 50 pixel L1 budget is inclusive") {
    CHECK(r_p("(350, 260)") == 1.0);  // 30 + 20 = 50
    CHECK(r_p("(350, 261)") == 0.0);  // 51
    CHECK(r_p("(370, 240)") == 1.0);  // 50 on one axis
    CHECK(r_p("(370.5, 240)") == 0.0);
  }

  SUBCASE("absent points score zero") {
    CHECK(r_p("no idea") == 0.0);
  }
}

TEST_CASE("process format reward wants only valid steps") {
  auto r_pf = [](const std::string& think) {
    return process_format_reward(
        parse_response("<think>" + think + "</think><answer>x</answer>"));
  };
  CHECK(r_pf("[Size] [a]: 0.3") == 1.0);
  CHECK(r_pf("[Size] [a]: 0.3\n[Position] [b]: (0.1, 0.2)") == 1.0);
  CHECK(r_pf("") == 0.0);
  CHECK(r_pf("  \n  ") == 0.0);
  CHECK(r_pf("[Size] [a]: 0.3\nand then I looked") == 0.0);
  CHECK(r_pf("[Size] [a]: -1") == 0.0);
}

TEST_CASE("accuracy reward matches steps to key steps") {
  Config cfg;
  PointGroundTruth gt = center_gt();

  auto r_acc = [&](const std::string& think) {
    return accuracy_reward(
        parse_response("<think>" + think + "</think><answer>x</answer>"), gt,
        cfg);
  };

  SUBCASE("full credit") {
    CHECK(r_acc("[Position] [the red cup]: (0.5, 0.5)\n"
                "[Orientation] [the desk fan]: (0, 0, 1)\n"
                "[Size] [the crate]: 0.4") == 1.0);
  }

  SUBCASE("partial credit is the matched fraction") {
    CHECK(r_acc("[Position] [the red cup]: (0.5, 0.5)") ==
          doctest::Approx(1.0 / 3.0));
    CHECK(r_acc("[Position] [the red cup]: (0.5, 0.5)\n"
                "[Size] [the crate]: 0.4") == doctest::Approx(2.0 / 3.0));
  }

  SUBCASE("target matching is a case-insensitive substring either way") {
    CHECK(r_acc("[Size] [The Crate]: 0.4") == doctest::Approx(1.0 / 3.0));
    CHECK(r_acc("[Size] [crate]: 0.4") == doctest::Approx(1.0 / 3.0));
    CHECK(r_acc("[Size] [the wooden crate by the wall]: 0.4") == 0.0);
    CHECK(r_acc("[Size] [the   crate]: 0.4") == doctest::Approx(1.0 / 3.0));
    CHECK(r_acc("[Size] [the box]: 0.4") == 0.0);
  }

  SUBCASE("the step type must match the key step") {
    CHECK(r_acc("[Position] [the crate]: (0.5, 0.5)") == 0.0);
  }

  SUBCASE("position closeness uses the pixel L1 budget") {
    // 0.078125 is exactly representable: du = 0.078125 * 640 = 50 on the dot.
    CHECK(r_acc("[Position] [the red cup]: (0.578125, 0.5)") ==
          doctest::Approx(1.0 / 3.0));
    // 0.08 * 640 = 51.2 pixels pushes past the budget.
    CHECK(r_acc("[Position] [the red cup]: (0.58, 0.5)") == 0.0);
  }

  SUBCASE("orientation needs cosine strictly above the floor") {
    // 36 degrees off: cos = 0.809 > 0.8.
    CHECK(r_acc("[Orientation] [the desk fan]: (0.5878, 0, 0.809)") ==
          doctest::Approx(1.0 / 3.0));
    // 38 degrees off: cos = 0.788.
    CHECK(r_acc("[Orientation] [the desk fan]: (0.6157, 0, 0.788)") == 0.0);
  }

  SUBCASE("size tolerance is inclusive at fifteen percent") {
    CHECK(r_acc("[Size] [the crate]: 0.46") == doctest::Approx(1.0 / 3.0));
    CHECK(r_acc("[Size] [the crate]: 0.35") == doctest::Approx(1.0 / 3.0));
    CHECK(r_acc("[Size] [the crate]: 0.4601") == 0.0);
    CHECK(r_acc("[Size] [the crate]: 0.3399") == 0.0);
  }

  SUBCASE("invalid steps never match") {
    CHECK(r_acc("[Size] [the crate]: 0.4 approximately") == 0.0);
  }

  SUBCASE("no key steps means zero") {
    PointGroundTruth bare = gt;
    bare.key_steps.clear();
    ParsedResponse r = parse_response(kPerfectResponse);
    CHECK(accuracy_reward(r, bare, cfg) == 0.0);
  }
}

TEST_CASE("total reward composition") {
  Config cfg;
  PointGroundTruth gt = center_gt();

  SUBCASE("a perfect response earns 2.5") {
    RewardBreakdown b = total_reward(kPerfectResponse, gt, cfg);
    CHECK(b.r_of == 1.0);
    CHECK(b.r_p == 1.0);
    CHECK(b.r_pf == 1.0);
    CHECK(b.r_acc == 1.0);
    CHECK(b.alpha == 0.25);
    CHECK(b.total == doctest::Approx(2.5).epsilon(1e-12));
  }

  SUBCASE("an empty response earns 0") {
    RewardBreakdown b = total_reward("", gt, cfg);
    CHECK(b.total == 0.0);
  }

  SUBCASE("content rewards survive a broken format") {
    RewardBreakdown b =
        total_reward(std::string("oops ") + kPerfectResponse, gt, cfg);
    CHECK(b.r_of == 0.0);
    CHECK(b.r_p == 1.0);
    CHECK(b.r_pf == 1.0);
    CHECK(b.r_acc == 1.0);
    CHECK(b.total == doctest::Approx(1.5).epsilon(1e-12));
  }

  SUBCASE("alpha weighs the process terms") {
    Config heavy = cfg;
    heavy.alpha = 0.5;
    RewardBreakdown b = total_reward(kPerfectResponse, gt, heavy);
    CHECK(b.total == doctest::Approx(3.0).epsilon(1e-12));
  }
}

TEST_CASE("group advantages normalize within the group") {
  SUBCASE("two rewards map to -1 and 1") {
    std::vector<double> adv = group_advantages({0.0, 1.0});
    REQUIRE(adv.size() == 2);
    CHECK(adv[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("mean 0 and population std 1") {
    std::vector<double> rewards = {0.3, 1.7, 2.5, 0.0, 1.1, 2.2};
    std::vector<double> adv = group_advantages(rewards);
    double mean = 0, var = 0;
    for (double a : adv) mean += a;
    mean /= double(adv.size());
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= double(adv.size());
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("affine reward shifts cancel") {
    std::vector<double> base = {0.5, 1.25, 2.5, 0.75};
    std::vector<double> shifted;
    for (double r : base) shifted.push_back(3.0 * r + 7.0);
    std::vector<double> a = group_advantages(base);
    std::vector<double> b = group_advantages(shifted);
    for (size_t i = 0; i < a.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
  }

  SUBCASE("identical rewards yield zeros") {
    std::vector<double> adv = group_advantages({2.5, 2.5, 2.5});
    for (double a : adv) CHECK(a == 0.0);
  }

  SUBCASE("groups need at least two rewards") {
    CHECK_THROWS_WITH_AS(group_advantages({1.0}), Contains("at least 2"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(group_advantages({}), Contains("at least 2"),
                         ValidationError);
  }
}

TEST_CASE("response and ground-truth jsonl readers") {
  auto dir = temp_dir("reward-jsonl");

  SUBCASE("valid rows parse") {
    std::string path = write_jsonl(
        dir, "responses.jsonl",
        R"({"sample_id": "a", "text": "<think>x</think><answer>y</answer>"})"
        "\n\n"
        R"({"sample_id": "b", "group_id": "g1", "text": ""})"
        "\n");
    std::vector<ResponseRow> rows = read_responses_jsonl(path);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].sample_id == "a");
    CHECK_FALSE(rows[0].group_id.has_value());
    CHECK(rows[1].group_id == std::string("g1"));

    std::string gt_path = write_jsonl(
        dir, "gt.jsonl",
        R"({"sample_id": "a", "point": [320, 240], "width": 640, "height": 480,)"
        R"( "key_steps": [{"perception_type": "Size", "target_text": "crate",)"
        R"( "value": 0.4}, {"perception_type": "Position", "target_text": "cup",)"
        R"( "value": [0.5, 0.5]}]})"
        "\n");
    std::vector<PointGroundTruth> gt = read_point_gt_jsonl(gt_path);
    REQUIRE(gt.size() == 1);
    CHECK(gt[0].point.u == 320.0);
    REQUIRE(gt[0].key_steps.size() == 2);
    CHECK(gt[0].key_steps[0].perception_type == KeyStep::Type::Size);
    REQUIRE(gt[0].key_steps[1].value.size() == 2);
  }

  SUBCASE("errors carry the file and line") {
    std::string path = write_jsonl(dir, "bad.jsonl",
                                   "{\"sample_id\": \"a\", \"text\": \"t\"}\n"
                                   "{broken\n");
    CHECK_THROWS_WITH_AS(read_responses_jsonl(path), Contains("bad.jsonl:2"),
                         ValidationError);

    std::string no_id =
        write_jsonl(dir, "noid.jsonl", "{\"text\": \"t\"}\n");
    CHECK_THROWS_WITH_AS(read_responses_jsonl(no_id), Contains("sample_id"),
                         ValidationError);

    std::string no_text =
        write_jsonl(dir, "notext.jsonl", "{\"sample_id\": \"a\"}\n");
    CHECK_THROWS_WITH_AS(read_responses_jsonl(no_text), Contains("missing text"),
                         ValidationError);
  }

  SUBCASE("ground-truth validation") {
    auto bad_gt = [&](const std::string& name, const std::string& body) {
      return write_jsonl(dir, name, body);
    };
    CHECK_THROWS_WITH_AS(
        read_point_gt_jsonl(bad_gt("g1.jsonl", R"({"sample_id": "a"})")),
        Contains("point must be [u, v]"), ValidationError);
    CHECK_THROWS_WITH_AS(
        read_point_gt_jsonl(bad_gt(
            "g2.jsonl", R"({"sample_id": "a", "point": [1, 2, 3]})")),
        Contains("point must be [u, v]"), ValidationError);
    CHECK_THROWS_WITH_AS(
        read_point_gt_jsonl(bad_gt(
            "g3.jsonl", R"({"sample_id": "a", "point": [1, 2]})")),
        Contains("width/height"), ValidationError);
    CHECK_THROWS_WITH_AS(
        read_point_gt_jsonl(bad_gt(
            "g4.jsonl",
            R"({"sample_id": "a", "point": [1, 2], "width": 0, "height": 480})")),
        Contains(">= 1"), ValidationError);
    CHECK_THROWS_WITH_AS(
        read_point_gt_jsonl(bad_gt(
            "g5.jsonl",
            R"({"sample_id": "a", "point": [1, 2], "width": 640, "height": 480,)"
            R"( "key_steps": [{"perception_type": "Shape", "target_text": "x",)"
            R"( "value": 1}]})")),
        Contains("perception_type"), ValidationError);
    CHECK_THROWS_WITH_AS(
        read_point_gt_jsonl(bad_gt(
            "g6.jsonl",
            R"({"sample_id": "a", "point": [1, 2], "width": 640, "height": 480,)"
            R"( "key_steps": [{"perception_type": "Size", "target_text": "",)"
            R"( "value": 1}]})")),
        Contains("target_text empty"), ValidationError);
    CHECK_THROWS_WITH_AS(
        read_point_gt_jsonl(bad_gt(
            "g7.jsonl",
            R"({"sample_id": "a", "point": [1, 2], "width": 640, "height": 480,)"
            R"( "key_steps": [{"perception_type": "Size", "target_text": "x",)"
            R"( "value": [1, 2]}]})")),
        Contains("arity"), ValidationError);
  }
}

TEST_CASE("scoring aligns responses with ground truth") {
  Config cfg;
  PointGroundTruth gt_a = center_gt();
  gt_a.sample_id = "a";
  PointGroundTruth gt_b = center_gt();
  gt_b.sample_id = "b";

  ResponseRow good{"a", std::nullopt, kPerfectResponse};
  ResponseRow blank{"b", std::nullopt, ""};

  SUBCASE("rewards and grouped advantages") {
    std::vector<ScoreRow> rows =
        score_responses({good, blank}, {gt_a, gt_b}, 2, cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].sample_id == "a");
    CHECK(rows[0].reward.total == doctest::Approx(2.5));
    CHECK(rows[1].reward.total == 0.0);
    REQUIRE(rows[0].advantage.has_value());
    CHECK(*rows[0].advantage == doctest::Approx(1.0));
    CHECK(*rows[1].advantage == doctest::Approx(-1.0));
  }

  SUBCASE("group size zero skips advantages") {
    std::vector<ScoreRow> rows =
        score_responses({good, blank}, {gt_a, gt_b}, 0, cfg);
    CHECK_FALSE(rows[0].advantage.has_value());
    CHECK_FALSE(rows[1].advantage.has_value());
  }

  SUBCASE("groups are consecutive chunks in file order") {
    PointGroundTruth gt_c = center_gt();
    gt_c.sample_id = "c";
    PointGroundTruth gt_d = center_gt();
    gt_d.sample_id = "d";
    ResponseRow c{"c", std::nullopt, kPerfectResponse};
    ResponseRow d{"d", std::nullopt, ""};
    std::vector<ScoreRow> rows = score_responses(
        {good, blank, c, d}, {gt_a, gt_b, gt_c, gt_d}, 2, cfg);
    // Groups (a, b) and (c, d), each a perfect/zero pair.
    CHECK(*rows[0].advantage == doctest::Approx(1.0));
    CHECK(*rows[1].advantage == doctest::Approx(-1.0));
    CHECK(*rows[2].advantage == doctest::Approx(1.0));
    CHECK(*rows[3].advantage == doctest::Approx(-1.0));
  }

  SUBCASE("alignment failures") {
    ResponseRow stray{"z", std::nullopt, ""};
    CHECK_THROWS_WITH_AS(score_responses({good, stray}, {gt_a, gt_b}, 0, cfg),
                         Contains("sample ids do not align"), ValidationError);
    CHECK_THROWS_WITH_AS(score_responses({good}, {gt_a, gt_b}, 0, cfg),
                         Contains("do not align: b"), ValidationError);
    CHECK_THROWS_WITH_AS(score_responses({good, good}, {gt_a, gt_b}, 0, cfg),
                         Contains("duplicate response sample_id: a"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(score_responses({good, blank}, {gt_a, gt_a}, 0, cfg),
                         Contains("duplicate ground-truth sample_id: a"),
                         ValidationError);
  }

  SUBCASE("group size must be sane") {
    CHECK_THROWS_WITH_AS(score_responses({good, blank}, {gt_a, gt_b}, 1, cfg),
                         Contains("at least 2"), ValidationError);
    PointGroundTruth gt_c = center_gt();
    gt_c.sample_id = "c";
    ResponseRow c{"c", std::nullopt, ""};
    CHECK_THROWS_WITH_AS(
        score_responses({good, blank, c}, {gt_a, gt_b, gt_c}, 2, cfg),
        Contains("not divisible by group size"), ValidationError);
  }
}

TEST_CASE("score rows serialize one json object per line") {
  Config cfg;
  PointGroundTruth gt = center_gt();
  gt.sample_id = "a";
  PointGroundTruth gt_b = center_gt();
  gt_b.sample_id = "b";
  std::vector<ScoreRow> rows = score_responses(
      {{"a", std::nullopt, kPerfectResponse}, {"b", std::nullopt, ""}},
      {gt, gt_b}, 2, cfg);

  std::string jsonl = scores_to_jsonl(rows);
  std::vector<std::string> lines;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line))
    if (!trim(line).empty()) lines.push_back(line);
  REQUIRE(lines.size() == 2);

  nlohmann::json first = nlohmann::json::parse(lines[0]);
  CHECK(first.at("sample_id") == "a");
  CHECK(first.at("r_of") == 1.0);
  CHECK(first.at("r_p") == 1.0);
  CHECK(first.at("r_pf") == 1.0);
  CHECK(first.at("r_acc") == 1.0);
  CHECK(first.at("alpha") == 0.25);
  CHECK(first.at("total") == 2.5);
  CHECK(first.at("advantage") == 1.0);

  SUBCASE("ungrouped rows omit the advantage") {
    std::vector<ScoreRow> flat = score_responses(
        {{"a", std::nullopt, kPerfectResponse}, {"b", std::nullopt, ""}},
        {gt, gt_b}, 0, cfg);
    std::string out = scores_to_jsonl(flat);
    nlohmann::json j = nlohmann::json::parse(out.substr(0, out.find('\n')));
    CHECK_FALSE(j.contains("advantage"));
  }
}
