#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flowedit {

// Standard deviations below this make z-scores meaningless.
inline constexpr double kDegenerateStd = 1e-8;

// B x G rewards, row-major (instance b, rollout i) -> values[b * G + i].
struct RewardTable {
  std::size_t batch = 0;
  std::size_t group = 0;
  std::vector<double> values;

  double at(std::size_t b, std::size_t i) const { return values[b * group + i]; }
};

// (R_i - mean) / std within one group, population std. Throws
// ErrorCode::degenerate when std < kDegenerateStd.
std::vector<double> group_advantage(std::span<const double> rewards);

// A_b = (1/G) sum_i (R_bi - mu) / sigma with mu, sigma pooled over all B*G
// rewards (population std). Throws ErrorCode::degenerate when sigma is below
// kDegenerateStd.
std::vector<double> batch_advantage(const RewardTable& rewards);

// Per-rollout z-scores within each instance's group, concatenated (B*G).
std::vector<double> per_group_advantage(const RewardTable& rewards);

}  // namespace flowedit
