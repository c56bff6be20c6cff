#include "core/matching.hpp"

#include <algorithm>
#include <map>

#include "core/errors.hpp"

namespace spatialref {

MatchResult match_boxes_bidirectional(const std::vector<Box2>& reference,
                                      const std::vector<Box2>& predicted,
                                      double iou_min) {
  if (iou_min < 0 || iou_min > 1)
    throw ValidationError("iou_min must lie in [0, 1]");
  for (const Box2& b : reference)
    if (!b.valid() || b.area() <= 0)
      throw ValidationError("degenerate reference box");
  for (const Box2& b : predicted)
    if (!b.valid() || b.area() <= 0)
      throw ValidationError("degenerate predicted box");

  // Step 1: reference -> best predicted above the threshold.
  struct Pick {
    int predicted;
    double iou;
  };
  std::vector<std::optional<Pick>> picks(reference.size());
  for (size_t i = 0; i < reference.size(); ++i) {
    for (size_t j = 0; j < predicted.size(); ++j) {
      double iou = box_iou_2d(reference[i], predicted[j]);
      if (iou < iou_min) continue;
      if (!picks[i] || iou > picks[i]->iou)
        picks[i] = Pick{int(j), iou};
    }
  }

  // Step 2: each predicted box keeps its single best reference.
  std::map<int, MatchPair> by_predicted;
  for (size_t i = 0; i < reference.size(); ++i) {
    if (!picks[i]) continue;
    MatchPair cand{int(i), picks[i]->predicted, picks[i]->iou};
    auto it = by_predicted.find(cand.predicted);
    if (it == by_predicted.end() || cand.iou > it->second.iou)
      by_predicted[cand.predicted] = cand;
  }

  MatchResult result;
  for (const auto& [p, pair] : by_predicted) result.pairs.push_back(pair);
  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const MatchPair& a, const MatchPair& b) {
              return a.reference < b.reference;
            });

  std::vector<bool> ref_used(reference.size(), false);
  std::vector<bool> pred_used(predicted.size(), false);
  for (const MatchPair& pair : result.pairs) {
    ref_used[pair.reference] = true;
    pred_used[pair.predicted] = true;
  }
  for (size_t i = 0; i < reference.size(); ++i)
    if (!ref_used[i]) result.unmatched_reference.push_back(int(i));
  for (size_t j = 0; j < predicted.size(); ++j)
    if (!pred_used[j]) result.unmatched_predicted.push_back(int(j));
  return result;
}

}  // namespace spatialref
