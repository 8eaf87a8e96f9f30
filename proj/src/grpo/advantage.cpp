#include "flowedit/advantage.hpp"

#include <cmath>
#include <string>

#include "flowedit/error.hpp"

namespace flowedit {

namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments population_moments(std::span<const double> values) {
  Moments m;
  for (double v : values) {
    require(std::isfinite(v), ErrorCode::non_finite, "non-finite reward");
    m.mean += v;
  }
  m.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(var / static_cast<double>(values.size()));
  return m;
}

}  // namespace

std::vector<double> group_advantage(std::span<const double> rewards) {
  require(rewards.size() >= 2, ErrorCode::invalid_argument, "group advantage needs G >= 2");
  const Moments m = population_moments(rewards);
  require(m.std >= kDegenerateStd, ErrorCode::degenerate, "degenerate group: reward std " + std::to_string(m.std));
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - m.mean) / m.std);
  return out;
}

std::vector<double> batch_advantage(const RewardTable& rewards) {
  require(rewards.values.size() == rewards.batch * rewards.group, ErrorCode::shape_mismatch,
          "reward table size does not match B x G");
  require(rewards.values.size() >= 2, ErrorCode::invalid_argument, "batch advantage needs B*G >= 2");
  const Moments m = population_moments(rewards.values);
  require(m.std >= kDegenerateStd, ErrorCode::degenerate, "degenerate batch: reward std " + std::to_string(m.std));
  std::vector<double> out(rewards.batch, 0.0);
  for (std::size_t b = 0; b < rewards.batch; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rewards.group; ++i) acc += (rewards.at(b, i) - m.mean) / m.std;
    out[b] = acc / static_cast<double>(rewards.group);
  }
  return out;
}

std::vector<double> per_group_advantage(const RewardTable& rewards) {
  require(rewards.values.size() == rewards.batch * rewards.group, ErrorCode::shape_mismatch,
          "reward table size does not match B x G");
  std::vector<double> out;
  out.reserve(rewards.values.size());
  for (std::size_t b = 0; b < rewards.batch; ++b) {
    const auto a = group_advantage(std::span<const double>(rewards.values).subspan(b * rewards.group, rewards.group));
    out.insert(out.end(), a.begin(), a.end());
  }
  return out;
}

}  // namespace flowedit
