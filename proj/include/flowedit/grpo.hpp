#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowedit/advantage.hpp"
#include "flowedit/policy.hpp"
#include "flowedit/reward.hpp"
#include "flowedit/sampler.hpp"

namespace flowedit {

// B instances with G rollouts each. Trajectory rows are ordered b * G + i and
// every rollout covers the full schedule from index T to 0.
struct GroupBatch {
  std::vector<EditInstance> instances;
  std::size_t group = 0;
  Trajectory rollouts;
  std::vector<RewardScore> scores;
  RewardTable rewards;
  // One per instance (batch-level) or one per rollout (group-level ablation).
  std::vector<double> advantages;

  double advantage(std::size_t row) const {
    return advantages.size() == rows() ? advantages[row] : advantages[row / group];
  }
  std::size_t batch() const noexcept { return instances.size(); }
  std::size_t rows() const noexcept { return instances.size() * group; }
  // Condition row r -> instance index (r / G).
  std::vector<std::size_t> instance_rows() const { return repeat_rows(batch(), group); }
  void validate() const;
};

struct ObjectiveOptions {
  double clip = 0.2;
  double kl_coef = 0.01;
};

struct ObjectiveValue {
  Var loss;          // -J
  double value = 0;  // J
  double kl = 0;     // mean per-step KL to the reference
};

// Drift and transition log-density of stored transitions, stacked step-major:
// row k * n + r is step steps[k] (offset from traj.from_index) of row r.
// Inputs x_t are constants; logp is taken at the stored x_{t-1}.
struct TransitionEval {
  Var drift;  // (S n) x 2
  Var logp;   // (S n) x 1
};

TransitionEval eval_transitions(Graph& g, const EditPolicy& policy, ParameterStore& store, Var cond,
                                const Trajectory& traj, std::span<const int> steps, const SdeConfig& cfg);

// log p_theta(x_{t-1} | x_t) - log p_old at step offset `step` of `traj`,
// one row per trajectory row. The denominator is the log-density recorded at
// rollout time and enters as a constant.
Var step_log_ratio(Graph& g, const EditPolicy& policy, ParameterStore& theta, Var cond, const Trajectory& traj,
                   int step, const SdeConfig& cfg);
Var step_ratio(Graph& g, const EditPolicy& policy, ParameterStore& theta, Var cond, const Trajectory& traj, int step,
               const SdeConfig& cfg);

// Gaussian KL between transitions sharing std sigma_t / sqrt(T):
// |mu_theta - mu_ref|^2 T / (2 sigma_t^2) = |s_theta - s_ref|^2 / (2 T sigma_t^2),
// one value per row. `sigma` holds sigma_t per row.
Var transition_kl(Var drift_theta, const Tensor& drift_ref, const Tensor& sigma, int steps);

// min(r A, clip(r, 1 - eps, 1 + eps) A), elementwise over equal shapes.
Var clipped_surrogate(Var ratio, Var advantage, double clip);

// Clipped per-step surrogate averaged over steps, rollouts and instances,
// minus kl_coef times the mean per-step KL to `ref`. Returns -J as the loss.
ObjectiveValue grpo_objective(Graph& g, const EditPolicy& policy, ParameterStore& theta, ParameterStore& ref,
                              const GroupBatch& batch, const SdeConfig& cfg, const ObjectiveOptions& options);

}  // namespace flowedit
