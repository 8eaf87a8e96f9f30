#include "flowedit/sampler.hpp"

#include <cmath>
#include <ostream>

#include "flowedit/error.hpp"

namespace flowedit {

void SdeConfig::validate() const {
  require(steps >= 1, ErrorCode::config, "SDE step count must be >= 1");
  require(sigma.size() == 1 || sigma.size() == static_cast<std::size_t>(steps), ErrorCode::config,
          "sigma schedule must have 1 or T entries");
  for (double s : sigma) require(std::isfinite(s) && s >= 0.0, ErrorCode::config, "sigma levels must be >= 0");
}

double SdeConfig::sigma_at(int index) const {
  require(index >= 1 && index <= steps, ErrorCode::invalid_argument,
          "step index " + std::to_string(index) + " outside [1, " + std::to_string(steps) + "]");
  return sigma.size() == 1 ? sigma[0] : sigma[static_cast<std::size_t>(index - 1)];
}

double SdeConfig::step_std(int index) const { return sigma_at(index) / std::sqrt(static_cast<double>(steps)); }

Var score_drift(Var x, Var v, const Tensor& t, const Tensor& sigma) {
  Graph& g = x.graph();
  Tensor one_minus_t(t.rows(), 1);
  Tensor half_var(sigma.rows(), 1);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    one_minus_t[r] = 1.0 - t[r];
    half_var[r] = 0.5 * sigma[r] * sigma[r];
  }
  Var inner = ops::add(x, ops::mul_col(v, g.constant(std::move(one_minus_t))));
  return ops::add(v, ops::mul_col(inner, g.constant(std::move(half_var))));
}

Var drift(Graph& g, const VelocityField& field, Var x, double t, double sigma) {
  require(t > 0.0 && t <= 1.0, ErrorCode::invalid_argument, "drift requires 0 < t <= 1");
  Var v = field(g, x, t);
  return score_drift(x, v, Tensor(x.rows(), 1, t), Tensor(x.rows(), 1, sigma));
}

Tensor StreamNoise::next(std::size_t rows) {
  require(rows == rngs_.size(), ErrorCode::shape_mismatch, "noise stream count does not match batch rows");
  Tensor out(rows, 2);
  for (std::size_t r = 0; r < rows; ++r) {
    out(r, 0) = standard_normal(rngs_[r]);
    out(r, 1) = standard_normal(rngs_[r]);
  }
  return out;
}

Tensor ReplayNoise::next(std::size_t rows) {
  require(cursor_ < draws_.size(), ErrorCode::invalid_argument, "replay noise exhausted");
  const Tensor& t = draws_[cursor_++];
  require(t.rows() == rows, ErrorCode::shape_mismatch, "replayed noise has wrong row count");
  return t;
}

StepResult sde_step(Graph& g, const VelocityField& field, Var x, int index, const SdeConfig& cfg, const Tensor& noise) {
  require(index >= 1, ErrorCode::invalid_argument, "sde_step requires index >= 1");
  require(noise.same_shape(x.value()), ErrorCode::shape_mismatch, "noise shape does not match state");
  const double sigma = cfg.sigma_at(index);
  const double t = cfg.time_at(index);
  const double std_dev = cfg.step_std(index);
  // Only the network input is detached; the additive x term keeps its edge.
  Var s = drift(g, field, ops::stop_gradient(x), t, sigma);
  Var mean = ops::sub(x, ops::scale(s, 1.0 / static_cast<double>(cfg.steps)));
  Tensor scaled = noise;
  for (auto& e : scaled.values()) e *= std_dev;
  Var next = ops::add(mean, g.constant(std::move(scaled)));
  StepResult out{next, mean, s, noise, std::nullopt};
  if (sigma > 0.0) {
    Var lp = ops::gaussian_logpdf(ops::stop_gradient(next), mean, g.constant(std_dev));
    out.logp = ops::sum_cols(lp);
  }
  return out;
}

namespace {

Segment run_steps(Graph& g, const VelocityField& field, Var x, int from_index, int steps, const SdeConfig& cfg,
                  NoiseSource& noise) {
  Segment seg;
  seg.trajectory.from_index = from_index;
  seg.trajectory.states.push_back(x.value());
  seg.states.push_back(x);
  for (int k = 0; k < steps; ++k) {
    const int index = from_index - k;
    StepResult step = sde_step(g, field, x, index, cfg, noise.next(x.rows()));
    x = step.next;
    seg.states.push_back(step.next);
    seg.means.push_back(step.mean);
    seg.drifts.push_back(step.drift);
    seg.logps.push_back(step.logp);
    seg.trajectory.states.push_back(step.next.value());
    seg.trajectory.means.push_back(step.mean.value());
    seg.trajectory.noises.push_back(std::move(step.noise));
    seg.trajectory.logps.push_back(step.logp ? std::optional<Tensor>(step.logp->value()) : std::nullopt);
  }
  return seg;
}

}  // namespace

Segment rollout(Graph& g, const VelocityField& field, Var x_start, int from_index, int steps, const SdeConfig& cfg,
                NoiseSource& noise, bool grad) {
  cfg.validate();
  require(steps >= 0 && from_index >= steps && from_index <= cfg.steps, ErrorCode::invalid_argument,
          "rollout requires steps <= from_index <= T");
  if (grad) return run_steps(g, field, x_start, from_index, steps, cfg, noise);
  Graph::NoGradScope no_grad(g);
  return run_steps(g, field, ops::stop_gradient(x_start), from_index, steps, cfg, noise);
}

Segment replay_path(Graph& g, const VelocityField& field, std::span<const Tensor> states, int from_index,
                    const SdeConfig& cfg) {
  cfg.validate();
  require(states.size() >= 2, ErrorCode::invalid_argument, "replay_path needs at least one transition");
  const int steps = static_cast<int>(states.size()) - 1;
  require(from_index <= cfg.steps && from_index - steps >= 0, ErrorCode::invalid_argument,
          "replayed path leaves the schedule");
  Segment seg;
  seg.trajectory.from_index = from_index;
  seg.trajectory.states.push_back(states[0]);
  Var x = g.constant(states[0]);
  seg.states.push_back(x);
  for (int k = 0; k < steps; ++k) {
    const int index = from_index - k;
    const double sigma = cfg.sigma_at(index);
    require(sigma > 0.0, ErrorCode::invalid_argument, "replay_path over a deterministic step");
    const double std_dev = cfg.step_std(index);
    const Tensor& recorded = states[static_cast<std::size_t>(k) + 1];
    require(recorded.same_shape(x.value()), ErrorCode::shape_mismatch, "replayed states change shape");
    Var s = drift(g, field, ops::stop_gradient(x), cfg.time_at(index), sigma);
    Var mean = ops::sub(x, ops::scale(s, 1.0 / static_cast<double>(cfg.steps)));
    Var lp = ops::sum_cols(ops::gaussian_logpdf(g.constant(recorded), mean, g.constant(std_dev)));
    // Value of the recorded sample, gradient of the mean.
    Var next = g.record(recorded, {mean}, [mean](Graph& g, const Tensor& up) { g.accumulate(mean, up); });
    Tensor noise(recorded.rows(), recorded.cols());
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = (recorded[i] - mean.value()[i]) / std_dev;
    seg.states.push_back(next);
    seg.means.push_back(mean);
    seg.drifts.push_back(s);
    seg.logps.push_back(lp);
    seg.trajectory.states.push_back(recorded);
    seg.trajectory.means.push_back(mean.value());
    seg.trajectory.noises.push_back(std::move(noise));
    seg.trajectory.logps.push_back(lp.value());
    x = next;
  }
  return seg;
}

Tensor ode_sample(const VelocityField& field, const Tensor& x_start, int steps) {
  require(steps >= 1, ErrorCode::invalid_argument, "ode_sample requires T >= 1");
  Graph g;
  Graph::NoGradScope no_grad(g);
  Var x = g.constant(x_start);
  for (int index = steps; index >= 1; --index) {
    const double t = static_cast<double>(index) / static_cast<double>(steps);
    Var v = field(g, x, t);
    x = ops::sub(x, ops::scale(v, 1.0 / static_cast<double>(steps)));
  }
  return x.value();
}

std::vector<Tensor> replay_states(const Trajectory& traj, const SdeConfig& cfg) {
  std::vector<Tensor> states{traj.states.front()};
  for (int k = 0; k < traj.steps(); ++k) {
    const double std_dev = cfg.step_std(traj.from_index - k);
    Tensor next = traj.means[static_cast<std::size_t>(k)];
    const Tensor& eps = traj.noises[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += eps[i] * std_dev;
    states.push_back(std::move(next));
  }
  return states;
}

void dump_trajectory(std::ostream& out, const Trajectory& traj, std::size_t row) {
  const auto old_precision = out.precision(17);
  out << "# index state_x state_y mean_x mean_y noise_x noise_y logp\n";
  for (int k = 0; k < traj.steps(); ++k) {
    const auto s = static_cast<std::size_t>(k);
    const Tensor& x = traj.states[s];
    const Tensor& m = traj.means[s];
    const Tensor& e = traj.noises[s];
    out << traj.from_index - k << ' ' << x(row, 0) << ' ' << x(row, 1) << ' ' << m(row, 0) << ' ' << m(row, 1) << ' '
        << e(row, 0) << ' ' << e(row, 1) << ' ';
    if (traj.logps[s])
      out << (*traj.logps[s])[row];
    else
      out << "deterministic";
    out << '\n';
  }
  const Tensor& last = traj.final_state();
  out << traj.to_index() << ' ' << last(row, 0) << ' ' << last(row, 1) << '\n';
  out.precision(old_precision);
}

}  // namespace flowedit
