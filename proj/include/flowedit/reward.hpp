#pragma once

#include <memory>

#include "flowedit/dataset.hpp"

namespace flowedit {

inline constexpr double kMaxComponentScore = 5.0;

// Three component scores, each in [0, 5]; the training reward is their sum.
struct RewardScore {
  double alignment = 0.0;
  double coherence = 0.0;
  double consistency = 0.0;

  double total() const noexcept { return alignment + coherence + consistency; }
  friend bool operator==(const RewardScore&, const RewardScore&) = default;
};

// Clamps each component into [0, 5]; NaN is rejected.
RewardScore make_score(double alignment, double coherence, double consistency);

// Where the instruction asks the point to go: the instructed mode center for
// move-to-mode, the exact transform otherwise.
Point instructed_target(Point source, int code);

// Squared distance between the coordinates an edit must preserve in `edited`
// and in `source`.
double preserved_distance_sq(Point edited, Point source, int code);

// alignment   = 5 exp(-|x0 - instructed target|^2)
// coherence   = 5 exp(-(distance from x0 to the nearest mode center)^2)
// consistency = 5 exp(-preserved_distance_sq)
RewardScore analytic_score(Point edited, Point source, int code);
inline RewardScore analytic_score(Point edited, const EditInstance& inst) {
  return analytic_score(edited, inst.source, inst.instruction.code);
}

class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual RewardScore score(Point edited, const EditInstance& inst) = 0;
};

class AnalyticScorer final : public Scorer {
 public:
  RewardScore score(Point edited, const EditInstance& inst) override { return analytic_score(edited, inst); }
};

}  // namespace flowedit
