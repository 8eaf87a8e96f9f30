#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "flowedit/graph.hpp"
#include "flowedit/rng.hpp"

namespace flowedit {

// Discretisation and noise schedule. Step indices run from `steps` (t = 1,
// pure noise) down to 0 (t = 0, data); index i sits at time i / steps.
struct SdeConfig {
  int steps = 10;
  // One entry means a constant level; otherwise entry i-1 is the level used by
  // the step leaving index i.
  std::vector<double> sigma{0.3};

  void validate() const;
  double sigma_at(int index) const;
  double time_at(int index) const { return static_cast<double>(index) / static_cast<double>(steps); }
  double step_std(int index) const;
};

// Velocity field v(x, t) over a batch of points (n x 2).
using VelocityField = std::function<Var(Graph&, Var x, double t)>;

// s(x, t) = v + (sigma^2 / 2) * (x + (1 - t) * v), row-wise with per-row t and
// sigma columns (n x 1).
Var score_drift(Var x, Var v, const Tensor& t, const Tensor& sigma);

Var drift(Graph& g, const VelocityField& field, Var x, double t, double sigma);

class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  // Next standard normal draw for `rows` points.
  virtual Tensor next(std::size_t rows) = 0;
};

// One independent generator per row.
class StreamNoise final : public NoiseSource {
 public:
  explicit StreamNoise(std::vector<Rng> per_row) : rngs_(std::move(per_row)) {}
  Tensor next(std::size_t rows) override;

 private:
  std::vector<Rng> rngs_;
};

// Replays previously recorded draws in order.
class ReplayNoise final : public NoiseSource {
 public:
  explicit ReplayNoise(std::span<const Tensor> draws) : draws_(draws) {}
  Tensor next(std::size_t rows) override;

 private:
  std::span<const Tensor> draws_;
  std::size_t cursor_ = 0;
};

struct StepResult {
  Var next;
  Var mean;
  Var drift;
  Tensor noise;
  // Per-row log density of the realised sample (treated as data) under the
  // transition Gaussian; empty for a deterministic (sigma = 0) step.
  std::optional<Var> logp;
};

// x_{i-1} = x_i - s(sg(x_i), t_i) / T + sigma_i / sqrt(T) * eps
StepResult sde_step(Graph& g, const VelocityField& field, Var x, int index, const SdeConfig& cfg, const Tensor& noise);

struct Trajectory {
  int from_index = 0;
  std::vector<Tensor> states;  // from_index, from_index - 1, ...
  std::vector<Tensor> means;
  std::vector<Tensor> noises;
  std::vector<std::optional<Tensor>> logps;

  int steps() const noexcept { return static_cast<int>(means.size()); }
  int to_index() const noexcept { return from_index - steps(); }
  const Tensor& final_state() const { return states.back(); }
};

struct Segment {
  Trajectory trajectory;
  std::vector<Var> states;
  std::vector<Var> means;
  std::vector<Var> drifts;
  std::vector<std::optional<Var>> logps;
};

// `steps` consecutive SDE steps from `from_index`. With grad = false the whole
// segment is detached; with grad = true the chain is recorded so gradients
// flow through the additive x_t terms of every step.
Segment rollout(Graph& g, const VelocityField& field, Var x_start, int from_index, int steps, const SdeConfig& cfg,
                NoiseSource& noise, bool grad);

// Re-evaluates a recorded path (states[0] at index from_index) under `field`.
// State values stay equal to the recorded ones; each state after the first
// carries the gradient of its transition mean, so later steps see the chain.
// Log densities are taken at the recorded samples. Noises are the implied
// draws (x' - mean) / std.
Segment replay_path(Graph& g, const VelocityField& field, std::span<const Tensor> states, int from_index,
                    const SdeConfig& cfg);

// Deterministic Euler integration x_{i-1} = x_i - v(x_i, t_i) / T from index T to 0.
Tensor ode_sample(const VelocityField& field, const Tensor& x_start, int steps);

// Recomputes states from means and noises; used to check noise accounting.
std::vector<Tensor> replay_states(const Trajectory& traj, const SdeConfig& cfg);

// One line per step: index state mean noise logp (row 0 of a batch).
void dump_trajectory(std::ostream& out, const Trajectory& traj, std::size_t row = 0);

}  // namespace flowedit
