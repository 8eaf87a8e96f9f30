#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "flowedit/dense.hpp"
#include "rl_fixture.hpp"

namespace flowedit::testing {

// Scalar recomputation of the dense loss as a function of the parameters,
// anchored at the current ones: stop-gradient inputs and recorded samples are
// frozen at their anchor values, and each replayed state moves with the
// displacement of its transition mean.
struct DenseOracle {
  RlFixture& fx;
  std::vector<int> starts;
  int k;
  ObjectiveOptions options;
  // Per instance, per segment step.
  std::vector<std::vector<Tensor>> path, old, anchor_drift, ref_drift;

  Tensor drifts(ParameterStore& store, std::size_t b, int j) {
    Graph g;
    Graph::NoGradScope no_grad(g);
    const std::size_t G = fx.batch.group;
    std::vector<EditInstance> inst(G, fx.batch.instances[b]);
    std::vector<std::size_t> rows(G);
    for (std::size_t i = 0; i < G; ++i) rows[i] = i;
    Var cond = fx.policy.condition(g, store, inst, rows);
    const int index = starts[b] - j;
    return drift(g, fx.policy.field(store, cond), g.constant(path[b][static_cast<std::size_t>(j)]),
                 fx.cfg.time_at(index), fx.cfg.sigma_at(index))
        .value();
  }

  DenseOracle(RlFixture& f, std::vector<int> s, int k_, ObjectiveOptions o)
      : fx(f), starts(std::move(s)), k(k_), options(o) {
    const std::size_t G = fx.batch.group;
    const int T = fx.cfg.steps;
    for (std::size_t b = 0; b < starts.size(); ++b) {
      path.emplace_back();
      old.emplace_back();
      const auto first = static_cast<std::size_t>(T - starts[b]);
      for (int j = 0; j <= k; ++j) {
        Tensor x(G, 2), lp(G, 1);
        for (std::size_t i = 0; i < G; ++i) {
          for (std::size_t c = 0; c < 2; ++c) x(i, c) = fx.batch.rollouts.states[first + j](b * G + i, c);
          if (j < k) lp[i] = (*fx.batch.rollouts.logps[first + j])[b * G + i];
        }
        path[b].push_back(x);
        if (j < k) old[b].push_back(lp);
      }
      anchor_drift.emplace_back();
      ref_drift.emplace_back();
      for (int j = 0; j < k; ++j) {
        anchor_drift[b].push_back(drifts(fx.theta, b, j));
        ref_drift[b].push_back(drifts(fx.ref, b, j));
      }
    }
  }

  double loss() {
    const std::size_t G = fx.batch.group;
    const double T = fx.cfg.steps;
    const double band = std::log(1.0 + options.clip);
    double surrogate = 0.0, kl = 0.0;
    std::size_t kl_terms = 0;
    for (std::size_t b = 0; b < starts.size(); ++b) {
      std::vector<double> psi_rows(G, 0.0);
      Tensor offset(G, 2);
      for (int j = 0; j < k; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const int index = starts[b] - j;
        const double sd = fx.cfg.step_std(index);
        const double sigma = fx.cfg.sigma_at(index);
        const Tensor s = drifts(fx.theta, b, j);
        Tensor next_offset(G, 2);
        for (std::size_t i = 0; i < G; ++i) {
          double lp = 0.0, sq = 0.0;
          for (std::size_t c = 0; c < 2; ++c) {
            const double x = path[b][ju](i, c);
            const double mean = x + offset(i, c) - s(i, c) / T;
            const double anchor_mean = x - anchor_drift[b][ju](i, c) / T;
            const double z = (path[b][ju + 1](i, c) - mean) / sd;
            lp += -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
            next_offset(i, c) = mean - anchor_mean;
            const double diff = s(i, c) - ref_drift[b][ju](i, c);
            sq += diff * diff;
          }
          psi_rows[i] += lp - old[b][ju][i];
          kl += sq / (2.0 * T * sigma * sigma);
          ++kl_terms;
        }
        offset = next_offset;
      }
      for (std::size_t i = 0; i < G; ++i) {
        const double ratio = std::exp(std::clamp(psi_rows[i], -band, band));
        const double a = fx.batch.advantage(b * G + i);
        surrogate += std::min(ratio * a, std::clamp(ratio, 1.0 - options.clip, 1.0 + options.clip) * a);
      }
    }
    surrogate /= static_cast<double>(starts.size() * G);
    kl /= static_cast<double>(kl_terms);
    return -(surrogate - options.kl_coef * kl);
  }
};

}  // namespace flowedit::testing
