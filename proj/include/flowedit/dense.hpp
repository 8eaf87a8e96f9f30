#pragma once

#include <span>
#include <vector>

#include "flowedit/grpo.hpp"

namespace flowedit {

// Uniform start index r on {k, ..., T}.
int pick_start(int steps, int k, Rng& rng);

struct DenseSegment {
  int start = 0;
  int k = 0;
  // x_r .. x_{r-k}, recorded with gradients on the chain.
  Segment segment;
  // x_{r-k} .. x_0, detached.
  Trajectory completion;

  const Tensor& final_state() const {
    return completion.states.empty() ? segment.trajectory.final_state() : completion.final_state();
  }
};

// Detached prefix from x_T down to index r, k gradient-carrying steps, then a
// detached completion to index 0. `cond` must have x_T.rows() rows.
DenseSegment dense_rollout(Graph& g, const EditPolicy& policy, ParameterStore& store, Var cond, const Tensor& x_T,
                           int start, int k, const SdeConfig& cfg, NoiseSource& noise);

// psi = sum over segment steps of log p_theta - log p_old, one row per
// trajectory row. `old_logps[j]` is the rollout-time log-density of step j.
Var psi(const Segment& segment, std::span<const Tensor> old_logps);

// exp(clip(psi, -log(1 + eps), log(1 + eps))).
Var dense_ratio(Var psi, double clip);

struct DenseObjectiveValue {
  Var loss;
  double value = 0;
  double kl = 0;
  // Segments replayed from the stored rollouts, one per instance.
  std::vector<Segment> segments;
};

// Replays, for each instance b, the k stored steps starting at index starts[b]
// with gradients on the chain, forms the trajectory ratio from psi and
// averages the clipped surrogate over rollouts and instances. KL to `ref` is
// the mean per-step transition KL over the replayed steps.
DenseObjectiveValue dense_objective(Graph& g, const EditPolicy& policy, ParameterStore& theta, ParameterStore& ref,
                                    const GroupBatch& batch, std::span<const int> starts, int k,
                                    const SdeConfig& cfg, const ObjectiveOptions& options);

}  // namespace flowedit
