#include "flowedit/dense.hpp"

#include <cmath>
#include <random>

#include "flowedit/error.hpp"

namespace flowedit {

int pick_start(int steps, int k, Rng& rng) {
  require(k >= 1, ErrorCode::invalid_argument, "dense segment length k must be >= 1");
  require(k <= steps, ErrorCode::invalid_argument, "dense segment length k exceeds T");
  return std::uniform_int_distribution<int>(k, steps)(rng);
}

DenseSegment dense_rollout(Graph& g, const EditPolicy& policy, ParameterStore& store, Var cond, const Tensor& x_T,
                           int start, int k, const SdeConfig& cfg, NoiseSource& noise) {
  cfg.validate();
  require(k >= 1 && start >= k && start <= cfg.steps, ErrorCode::invalid_argument, "dense rollout needs k <= r <= T");
  const VelocityField field = policy.field(store, cond);
  Segment prefix = rollout(g, field, g.constant(x_T), cfg.steps, cfg.steps - start, cfg, noise, false);
  DenseSegment out;
  out.start = start;
  out.k = k;
  out.segment = rollout(g, field, g.constant(prefix.trajectory.final_state()), start, k, cfg, noise, true);
  if (start > k) {
    Segment tail = rollout(g, field, out.segment.states.back(), start - k, start - k, cfg, noise, false);
    out.completion = std::move(tail.trajectory);
  }
  return out;
}

Var psi(const Segment& segment, std::span<const Tensor> old_logps) {
  require(!segment.logps.empty(), ErrorCode::invalid_argument, "psi over an empty segment");
  require(old_logps.size() == segment.logps.size(), ErrorCode::shape_mismatch,
          "old log-densities do not match segment length");
  Var total;
  for (std::size_t j = 0; j < segment.logps.size(); ++j) {
    require(segment.logps[j].has_value(), ErrorCode::invalid_argument, "deterministic step inside dense segment");
    Var lp = *segment.logps[j];
    Var term = ops::sub(lp, lp.graph().constant(old_logps[j]));
    total = j == 0 ? term : ops::add(total, term);
  }
  return total;
}

Var dense_ratio(Var psi, double clip) {
  require(clip > 0.0, ErrorCode::config, "clip range must be positive");
  const double band = std::log1p(clip);
  return ops::exp(ops::clip(psi, -band, band));
}

DenseObjectiveValue dense_objective(Graph& g, const EditPolicy& policy, ParameterStore& theta, ParameterStore& ref,
                                    const GroupBatch& batch, std::span<const int> starts, int k,
                                    const SdeConfig& cfg, const ObjectiveOptions& options) {
  batch.validate();
  require(starts.size() == batch.batch(), ErrorCode::shape_mismatch, "expected one start index per instance");
  require(batch.rollouts.from_index == cfg.steps && batch.rollouts.steps() == cfg.steps, ErrorCode::invalid_argument,
          "dense replay needs full-schedule rollouts");
  const std::size_t G = batch.group;
  const std::vector<std::size_t> rows = batch.instance_rows();
  Var cond = policy.condition(g, theta, batch.instances, rows);
  Tensor ref_cond_value;
  {
    Graph::NoGradScope no_grad(g);
    ref_cond_value = policy.condition(g, ref, batch.instances, rows).value();
  }

  DenseObjectiveValue out;
  std::vector<Var> ratios;
  std::vector<Var> kls;
  const double lo = 1.0 / (1.0 + options.clip);
  const double hi = 1.0 + options.clip;
  for (std::size_t b = 0; b < batch.batch(); ++b) {
    const int r = starts[b];
    require(k >= 1 && r >= k && r <= cfg.steps, ErrorCode::invalid_argument, "start index outside {k, ..., T}");
    const auto first = static_cast<std::size_t>(cfg.steps - r);
    std::vector<Tensor> path, old_logps;
    for (int j = 0; j <= k; ++j) {
      const std::size_t s = first + static_cast<std::size_t>(j);
      Tensor x(G, 2);
      for (std::size_t i = 0; i < G; ++i)
        for (std::size_t c = 0; c < 2; ++c) x(i, c) = batch.rollouts.states[s](b * G + i, c);
      path.push_back(std::move(x));
      if (j == k) break;
      require(batch.rollouts.logps[s].has_value(), ErrorCode::invalid_argument, "deterministic step inside segment");
      Tensor lp(G, 1);
      for (std::size_t i = 0; i < G; ++i) lp[i] = (*batch.rollouts.logps[s])[b * G + i];
      old_logps.push_back(std::move(lp));
    }
    Var cond_b = ops::slice_rows(cond, b * G, G);
    Segment seg = replay_path(g, policy.field(theta, cond_b), path, r, cfg);

    Var ratio = dense_ratio(psi(seg, old_logps), options.clip);
    for (double v : ratio.value().values())
      require(v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12), ErrorCode::invalid_argument,
              "dense ratio left its log-space band");
    ratios.push_back(ratio);

    Tensor ref_cond_b(G, ref_cond_value.cols());
    for (std::size_t i = 0; i < G; ++i)
      for (std::size_t c = 0; c < ref_cond_value.cols(); ++c) ref_cond_b(i, c) = ref_cond_value(b * G + i, c);
    for (int j = 0; j < k; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const int index = r - j;
      Tensor ref_drift;
      {
        Graph::NoGradScope no_grad(g);
        Var rc = g.constant(ref_cond_b);
        ref_drift = drift(g, policy.field(ref, rc), g.constant(seg.trajectory.states[ju]), cfg.time_at(index),
                          cfg.sigma_at(index))
                        .value();
      }
      kls.push_back(transition_kl(seg.drifts[ju], ref_drift, Tensor(G, 1, cfg.sigma_at(index)), cfg.steps));
    }
    out.segments.push_back(std::move(seg));
  }

  Var ratio = ops::concat_rows(ratios);
  Tensor adv_col(batch.rows(), 1);
  for (std::size_t row = 0; row < batch.rows(); ++row) adv_col[row] = batch.advantage(row);
  Var adv = g.constant(std::move(adv_col));
  // The outer clip is inert after the log-space clip; kept as printed.
  Var surrogate = ops::mean(clipped_surrogate(ratio, adv, options.clip));
  Var kl = ops::mean(ops::concat_rows(kls));
  Var objective = ops::sub(surrogate, ops::scale(kl, options.kl_coef));
  out.loss = ops::neg(objective);
  out.value = objective.value().item();
  out.kl = kl.value().item();
  return out;
}

}  // namespace flowedit
