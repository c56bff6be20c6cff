#include <doctest.h>

#include <map>
#include <optional>
#include <set>

#include "core/errors.hpp"
#include "core/matching.hpp"
#include "core/rng.hpp"

using namespace spatialref;

namespace {

// The two-step rule written out directly: every reference picks its best
// prediction at or above the threshold, then each picked prediction keeps
// only its best reference. Ties break toward the lower index on both sides.
MatchResult oracle_match(const std::vector<Box2>& reference,
                         const std::vector<Box2>& predicted, double iou_min) {
  std::map<int, std::pair<int, double>> keeper;  // predicted -> (ref, iou)
  for (int i = 0; i < int(reference.size()); ++i) {
    int best_j = -1;
    double best = -1;
    for (int j = 0; j < int(predicted.size()); ++j) {
      double iou = box_iou_2d(reference[i], predicted[j]);
      if (iou >= iou_min && iou > best) {
        best = iou;
        best_j = j;
      }
    }
    if (best_j < 0) continue;
    auto it = keeper.find(best_j);
    if (it == keeper.end() || best > it->second.second)
      keeper[best_j] = {i, best};
  }

  MatchResult out;
  for (const auto& [j, ref_iou] : keeper)
    out.pairs.push_back({ref_iou.first, j, ref_iou.second});
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const MatchPair& a, const MatchPair& b) {
              return a.reference < b.reference;
            });
  std::set<int> ref_used, pred_used;
  for (const MatchPair& p : out.pairs) {
    ref_used.insert(p.reference);
    pred_used.insert(p.predicted);
  }
  for (int i = 0; i < int(reference.size()); ++i)
    if (!ref_used.count(i)) out.unmatched_reference.push_back(i);
  for (int j = 0; j < int(predicted.size()); ++j)
    if (!pred_used.count(j)) out.unmatched_predicted.push_back(j);
  return out;
}

Box2 jitter(const Box2& b, CounterRng& rng, double amount) {
  return {b.x0 + rng.uniform(-amount, amount), b.y0 + rng.uniform(-amount, amount),
          b.x1 + rng.uniform(-amount, amount), b.y1 + rng.uniform(-amount, amount)};
}

}  // namespace

TEST_CASE("matching hand cases") {
  std::vector<Box2> ref = {{0, 0, 10, 10}, {20, 0, 30, 10}};
  std::vector<Box2> pred = {{1, 0, 11, 10}, {21, 1, 31, 11}};
  MatchResult r = match_boxes_bidirectional(ref, pred, 0.5);
  REQUIRE(r.pairs.size() == 2);
  CHECK(r.pairs[0].reference == 0);
  CHECK(r.pairs[0].predicted == 0);
  CHECK(r.pairs[1].reference == 1);
  CHECK(r.pairs[1].predicted == 1);
  CHECK(r.unmatched_reference.empty());
  CHECK(r.unmatched_predicted.empty());

  // Both references prefer prediction 0; the better one (IoU 9/11 vs 8/12)
  // keeps it and the loser goes unmatched rather than sliding to a second
  // choice.
  std::vector<Box2> contested_ref = {{0, 0, 10, 10}, {3, 0, 13, 10}};
  std::vector<Box2> one_pred = {{1, 0, 11, 10}};
  r = match_boxes_bidirectional(contested_ref, one_pred, 0.3);
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].reference == 0);
  CHECK(r.unmatched_reference == std::vector<int>{1});

  // Below-threshold overlap matches nothing.
  r = match_boxes_bidirectional({{0, 0, 10, 10}}, {{9, 9, 19, 19}}, 0.5);
  CHECK(r.pairs.empty());
  CHECK(r.unmatched_reference == std::vector<int>{0});
  CHECK(r.unmatched_predicted == std::vector<int>{0});
}

TEST_CASE("threshold comparison is inclusive") {
  // IoU of these boxes is exactly 1/3.
  std::vector<Box2> ref = {{0, 0, 2, 2}};
  std::vector<Box2> pred = {{1, 0, 3, 2}};
  CHECK(match_boxes_bidirectional(ref, pred, 1.0 / 3.0).pairs.size() == 1);
  CHECK(match_boxes_bidirectional(ref, pred, 1.0 / 3.0 + 1e-9).pairs.empty());
}

TEST_CASE("matching rejects degenerate inputs") {
  std::vector<Box2> good = {{0, 0, 10, 10}};
  CHECK_THROWS_AS(match_boxes_bidirectional({{5, 5, 5, 10}}, good, 0.5),
                  ValidationError);
  CHECK_THROWS_AS(match_boxes_bidirectional(good, {{5, 5, 1, 10}}, 0.5),
                  ValidationError);
  CHECK_THROWS_AS(match_boxes_bidirectional(good, good, -0.1), ValidationError);
  CHECK_THROWS_AS(match_boxes_bidirectional(good, good, 1.5), ValidationError);

  MatchResult empty = match_boxes_bidirectional({}, good, 0.5);
  CHECK(empty.pairs.empty());
  CHECK(empty.unmatched_predicted == std::vector<int>{0});
}

TEST_CASE("matching agrees with the exhaustive oracle on random layouts") {
  CounterRng rng(211);
  for (int trial = 0; trial < 300; ++trial) {
    // Clustered boxes on a grid with jitter produce contested overlaps.
    std::vector<Box2> ref, pred;
    int nref = 1 + int(rng.below(12));
    for (int i = 0; i < nref; ++i) {
      double x = rng.uniform(0, 80), y = rng.uniform(0, 80);
      double w = rng.uniform(5, 25), h = rng.uniform(5, 25);
      ref.push_back({x, y, x + w, y + h});
      if (rng.uniform() < 0.8) pred.push_back(jitter(ref.back(), rng, 6.0));
      if (rng.uniform() < 0.3) pred.push_back(jitter(ref.back(), rng, 2.0));
    }
    if (rng.uniform() < 0.5) pred.push_back({100, 100, 120, 120});
    for (Box2& b : pred) {  // keep them valid after jitter
      if (b.x1 <= b.x0) b.x1 = b.x0 + 1;
      if (b.y1 <= b.y0) b.y1 = b.y0 + 1;
    }

    double iou_min = rng.uniform(0.2, 0.7);
    MatchResult got = match_boxes_bidirectional(ref, pred, iou_min);
    MatchResult want = oracle_match(ref, pred, iou_min);

    REQUIRE(got.pairs.size() == want.pairs.size());
    for (size_t i = 0; i < got.pairs.size(); ++i) {
      CHECK(got.pairs[i].reference == want.pairs[i].reference);
      CHECK(got.pairs[i].predicted == want.pairs[i].predicted);
      CHECK(got.pairs[i].iou == doctest::Approx(want.pairs[i].iou));
      CHECK(got.pairs[i].iou >= iou_min);
    }
    CHECK(got.unmatched_reference == want.unmatched_reference);
    CHECK(got.unmatched_predicted == want.unmatched_predicted);

    // One-to-one in both directions.
    std::set<int> refs, preds;
    for (const MatchPair& p : got.pairs) {
      CHECK(refs.insert(p.reference).second);
      CHECK(preds.insert(p.predicted).second);
    }
    CHECK(refs.size() + got.unmatched_reference.size() == ref.size());
    CHECK(preds.size() + got.unmatched_predicted.size() == pred.size());
  }
}
