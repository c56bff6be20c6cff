#pragma once

#include <vector>

#include "core/geometry.hpp"

namespace spatialref {

struct MatchPair {
  int reference = -1;
  int predicted = -1;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;  // ascending reference index
  std::vector<int> unmatched_reference;
  std::vector<int> unmatched_predicted;
};

// Two-step bidirectional matching: (1) each reference box picks its best
// predicted box with IoU >= iou_min (several references may pick the same
// one); (2) each picked predicted box keeps only its highest-IoU reference.
// The result is one-to-one in both directions. Ties break toward the lower
// index. Degenerate boxes are rejected.
MatchResult match_boxes_bidirectional(const std::vector<Box2>& reference,
                                      const std::vector<Box2>& predicted,
                                      double iou_min);

}  // namespace spatialref
