#include "flowedit/grpo.hpp"

#include <cmath>
#include <string>

#include "flowedit/error.hpp"

namespace flowedit {

void GroupBatch::validate() const {
  require(batch() >= 2 && group >= 2, ErrorCode::invalid_argument, "group batch needs B >= 2 and G >= 2");
  require(rewards.batch == batch() && rewards.group == group && rewards.values.size() == rows(),
          ErrorCode::shape_mismatch, "reward table does not match B x G");
  require(advantages.size() == batch() || advantages.size() == rows(), ErrorCode::shape_mismatch,
          "expected one advantage per instance or per rollout");
  require(!rollouts.states.empty() && rollouts.states.front().rows() == rows(), ErrorCode::shape_mismatch,
          "rollout rows do not match B x G");
  for (double r : rewards.values) require(std::isfinite(r), ErrorCode::non_finite, "non-finite reward");
}

TransitionEval eval_transitions(Graph& g, const EditPolicy& policy, ParameterStore& store, Var cond,
                                const Trajectory& traj, std::span<const int> steps, const SdeConfig& cfg) {
  require(!steps.empty(), ErrorCode::invalid_argument, "no transitions requested");
  const std::size_t n = traj.states.front().rows();
  require(cond.rows() == n, ErrorCode::shape_mismatch, "condition rows do not match trajectory rows");
  const std::size_t total = steps.size() * n;
  Tensor x(total, 2), next(total, 2), t(total, 1), sigma(total, 1), std_dev(total, 2);
  std::vector<std::size_t> cond_rows(total);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const int s = steps[k];
    require(s >= 0 && s < traj.steps(), ErrorCode::invalid_argument, "step offset outside trajectory");
    const auto su = static_cast<std::size_t>(s);
    require(traj.logps[su].has_value(), ErrorCode::invalid_argument,
            "step " + std::to_string(s) + " is deterministic; its ratio is undefined");
    const int index = traj.from_index - s;
    const double sd = cfg.step_std(index);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t row = k * n + r;
      for (std::size_t c = 0; c < 2; ++c) {
        x(row, c) = traj.states[su](r, c);
        next(row, c) = traj.states[su + 1](r, c);
        std_dev(row, c) = sd;
      }
      t[row] = cfg.time_at(index);
      sigma[row] = cfg.sigma_at(index);
      cond_rows[row] = r;
    }
  }
  Var xv = g.constant(std::move(x));
  Var v = policy.velocity(g, store, xv, g.constant(t), ops::gather_rows(cond, cond_rows));
  Var s = score_drift(xv, v, t, sigma);
  Var mean = ops::sub(xv, ops::scale(s, 1.0 / static_cast<double>(cfg.steps)));
  Var lp = ops::gaussian_logpdf(g.constant(std::move(next)), mean, g.constant(std::move(std_dev)));
  return {s, ops::sum_cols(lp)};
}

Var step_log_ratio(Graph& g, const EditPolicy& policy, ParameterStore& theta, Var cond, const Trajectory& traj,
                   int step, const SdeConfig& cfg) {
  const int steps[] = {step};
  TransitionEval e = eval_transitions(g, policy, theta, cond, traj, steps, cfg);
  return ops::sub(e.logp, g.constant(*traj.logps[static_cast<std::size_t>(step)]));
}

Var step_ratio(Graph& g, const EditPolicy& policy, ParameterStore& theta, Var cond, const Trajectory& traj, int step,
               const SdeConfig& cfg) {
  return ops::exp(step_log_ratio(g, policy, theta, cond, traj, step, cfg));
}

Var transition_kl(Var drift_theta, const Tensor& drift_ref, const Tensor& sigma, int steps) {
  Graph& g = drift_theta.graph();
  require(drift_ref.same_shape(drift_theta.value()) && sigma.rows() == drift_ref.rows(), ErrorCode::shape_mismatch,
          "transition_kl: shape mismatch");
  Tensor weight(sigma.rows(), 1);
  for (std::size_t r = 0; r < sigma.rows(); ++r) {
    require(sigma[r] > 0.0, ErrorCode::invalid_argument, "transition_kl: deterministic step");
    weight[r] = 1.0 / (2.0 * static_cast<double>(steps) * sigma[r] * sigma[r]);
  }
  Var diff = ops::sub(drift_theta, g.constant(drift_ref));
  return ops::mul_col(ops::sum_cols(ops::square(diff)), g.constant(std::move(weight)));
}

Var clipped_surrogate(Var ratio, Var advantage, double clip) {
  require(clip > 0.0, ErrorCode::config, "clip range must be positive");
  Var unclipped = ops::mul(ratio, advantage);
  Var clipped = ops::mul(ops::clip(ratio, 1.0 - clip, 1.0 + clip), advantage);
  return ops::minimum(unclipped, clipped);
}

namespace {

// Advantage of every row, repeated once per step block.
Tensor advantage_column(const GroupBatch& batch, std::size_t blocks) {
  Tensor out(blocks * batch.rows(), 1);
  for (std::size_t k = 0; k < blocks; ++k)
    for (std::size_t r = 0; r < batch.rows(); ++r) out[k * batch.rows() + r] = batch.advantage(r);
  return out;
}

}  // namespace

ObjectiveValue grpo_objective(Graph& g, const EditPolicy& policy, ParameterStore& theta, ParameterStore& ref,
                              const GroupBatch& batch, const SdeConfig& cfg, const ObjectiveOptions& options) {
  batch.validate();
  require(batch.rollouts.from_index == cfg.steps && batch.rollouts.steps() == cfg.steps, ErrorCode::invalid_argument,
          "GRPO rollouts must cover the full schedule");
  require(options.clip > 0.0, ErrorCode::config, "clip range must be positive");
  const std::vector<std::size_t> rows = batch.instance_rows();
  std::vector<int> steps(static_cast<std::size_t>(cfg.steps));
  for (int s = 0; s < cfg.steps; ++s) steps[static_cast<std::size_t>(s)] = s;

  Var cond = policy.condition(g, theta, batch.instances, rows);
  TransitionEval cur = eval_transitions(g, policy, theta, cond, batch.rollouts, steps, cfg);

  const std::size_t n = batch.rows();
  Tensor old_logp(steps.size() * n, 1), sigma(steps.size() * n, 1);
  for (std::size_t k = 0; k < steps.size(); ++k)
    for (std::size_t r = 0; r < n; ++r) {
      old_logp[k * n + r] = (*batch.rollouts.logps[k])[r];
      sigma[k * n + r] = cfg.sigma_at(cfg.steps - static_cast<int>(k));
    }
  Var ratio = ops::exp(ops::sub(cur.logp, g.constant(std::move(old_logp))));
  Var adv = g.constant(advantage_column(batch, steps.size()));
  Var surrogate = ops::mean(clipped_surrogate(ratio, adv, options.clip));

  Tensor ref_drift;
  {
    Graph::NoGradScope no_grad(g);
    Var ref_cond = policy.condition(g, ref, batch.instances, rows);
    ref_drift = eval_transitions(g, policy, ref, ref_cond, batch.rollouts, steps, cfg).drift.value();
  }
  Var kl = ops::mean(transition_kl(cur.drift, ref_drift, sigma, cfg.steps));
  Var objective = ops::sub(surrogate, ops::scale(kl, options.kl_coef));
  return {ops::neg(objective), objective.value().item(), kl.value().item()};
}

}  // namespace flowedit
