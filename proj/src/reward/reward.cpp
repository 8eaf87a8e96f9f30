#include "flowedit/reward.hpp"

#include <algorithm>
#include <cmath>

#include "flowedit/error.hpp"

namespace flowedit {

namespace {

double sq(double v) { return v * v; }

double dist_sq(Point a, Point b) { return sq(a.x - b.x) + sq(a.y - b.y); }

double component(double distance_sq) { return kMaxComponentScore * std::exp(-distance_sq); }

}  // namespace

RewardScore make_score(double alignment, double coherence, double consistency) {
  require(!std::isnan(alignment) && !std::isnan(coherence) && !std::isnan(consistency), ErrorCode::non_finite,
          "reward component is NaN");
  return {std::clamp(alignment, 0.0, kMaxComponentScore), std::clamp(coherence, 0.0, kMaxComponentScore),
          std::clamp(consistency, 0.0, kMaxComponentScore)};
}

Point instructed_target(Point source, int code) {
  if (task_of(code) == Task::move_to_mode) return kModeCenters[static_cast<std::size_t>(code)];
  return apply_edit(source, code);
}

double preserved_distance_sq(Point edited, Point source, int code) {
  switch (task_of(code)) {
    case Task::move_to_mode: {
      // Offset from the instructed mode should equal the source's offset from its own mode.
      const Point to = kModeCenters[static_cast<std::size_t>(code)];
      const Point from = nearest_mode_center(source);
      return sq((edited.x - to.x) - (source.x - from.x)) + sq((edited.y - to.y) - (source.y - from.y));
    }
    case Task::reflect_axis:
      return code == 4 ? sq(edited.x - source.x) : sq(edited.y - source.y);
    case Task::translate_offset:
      return code <= 7 ? sq(edited.y - source.y) : sq(edited.x - source.x);
  }
  return 0.0;
}

RewardScore analytic_score(Point edited, Point source, int code) {
  double manifold = dist_sq(edited, kModeCenters[0]);
  for (const Point& c : kModeCenters) manifold = std::min(manifold, dist_sq(edited, c));
  return make_score(component(dist_sq(edited, instructed_target(source, code))), component(manifold),
                    component(preserved_distance_sq(edited, source, code)));
}

}  // namespace flowedit
