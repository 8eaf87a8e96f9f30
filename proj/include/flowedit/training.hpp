#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flowedit/dense.hpp"
#include "flowedit/grpo.hpp"

namespace flowedit {

enum class Algorithm { grpo, dense };

// batch: one advantage per instance from pooled batch statistics (default).
// group: one advantage per rollout from its own group's statistics.
enum class AdvantageMode { batch, group };

AdvantageMode parse_advantage_mode(std::string_view name);

std::string_view algorithm_name(Algorithm algo);
Algorithm parse_algorithm(std::string_view name);

struct TrainConfig {
  std::size_t batch = 4;
  std::size_t group = 8;
  SdeConfig sde;
  ObjectiveOptions objective;
  AdvantageMode advantage = AdvantageMode::batch;
  int k = 5;
  double lr = 1e-5;
  std::size_t iterations = 500;
  double warmup_fraction = 0.1;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  // When false the wall_ms column is written as 0 so metrics files are
  // byte-comparable across runs.
  bool record_wall_time = false;

  void validate(Algorithm algo) const;
};

struct MetricsRow {
  std::size_t iteration = 0;
  double mean_reward = 0;
  double objective = 0;
  double kl = 0;
  std::uint64_t reward_queries = 0;  // cumulative
  std::uint64_t step_evals = 0;      // cumulative velocity-net evaluations
  double wall_ms = 0;
  bool skipped = false;
  // Dense only.
  std::vector<int> starts;
  int k = 0;
};

struct TrainResult {
  std::vector<MetricsRow> history;
  std::size_t skipped = 0;
};

using ScorerFactory = std::function<std::unique_ptr<Scorer>()>;
using MetricsSink = std::function<void(const MetricsRow&)>;

// Detached rollouts of G samples per instance followed by scoring. Rollout
// (b, i) of `iteration` draws x_T and its step noise from a stream seeded by
// (seed, iteration, b, i), so results do not depend on the worker count.
// `scorers` holds one scorer per worker.
GroupBatch collect_rollouts(const EditPolicy& policy, ParameterStore& store, std::vector<EditInstance> instances,
                            std::size_t group, const SdeConfig& cfg, std::uint64_t seed, std::size_t iteration,
                            std::span<const std::unique_ptr<Scorer>> scorers);

// On-policy loop: sample B instances from `pool`, roll out, score, form batch
// advantages and take one Adam step on the chosen objective. The reference
// policy is a frozen copy of `theta` at entry. Batches whose pooled reward std
// is degenerate are skipped and counted.
TrainResult train(Algorithm algo, const EditPolicy& policy, ParameterStore& theta,
                  std::span<const EditInstance> pool, const TrainConfig& config, const ScorerFactory& scorers,
                  const MetricsSink& sink = {});

}  // namespace flowedit
