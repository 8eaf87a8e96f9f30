#include "flowedit/training.hpp"

#include <chrono>
#include <exception>
#include <random>
#include <thread>

#include "flowedit/error.hpp"
#include "flowedit/optim.hpp"

namespace flowedit {

std::string_view algorithm_name(Algorithm algo) { return algo == Algorithm::grpo ? "grpo" : "dense"; }

Algorithm parse_algorithm(std::string_view name) {
  if (name == "grpo") return Algorithm::grpo;
  if (name == "dense") return Algorithm::dense;
  fail(ErrorCode::config, "unknown algorithm '" + std::string(name) + "' (expected grpo or dense)");
}

AdvantageMode parse_advantage_mode(std::string_view name) {
  if (name == "batch") return AdvantageMode::batch;
  if (name == "group") return AdvantageMode::group;
  fail(ErrorCode::config, "unknown advantage mode '" + std::string(name) + "' (expected batch or group)");
}

void TrainConfig::validate(Algorithm algo) const {
  sde.validate();
  require(batch >= 2, ErrorCode::config, "batch size B must be >= 2");
  require(group >= 2, ErrorCode::config, "group size G must be >= 2");
  require(objective.clip > 0.0, ErrorCode::config, "clip range must be > 0");
  require(objective.kl_coef >= 0.0, ErrorCode::config, "KL coefficient must be >= 0");
  require(lr > 0.0 && std::isfinite(lr), ErrorCode::config, "learning rate must be > 0");
  require(warmup_fraction >= 0.0 && warmup_fraction < 1.0, ErrorCode::config, "warmup fraction must lie in [0, 1)");
  require(grad_clip > 0.0, ErrorCode::config, "gradient clip must be > 0");
  require(workers >= 1, ErrorCode::config, "workers must be >= 1");
  for (int i = 1; i <= sde.steps; ++i)
    require(sde.sigma_at(i) > 0.0, ErrorCode::config, "RL fine-tuning needs sigma > 0 at every step");
  if (algo == Algorithm::dense)
    require(k >= 1 && k <= sde.steps, ErrorCode::config, "dense k must lie in [1, T]");
}

namespace {

// G rollouts of one instance, detached.
Trajectory rollout_instance(const EditPolicy& policy, ParameterStore& store, const EditInstance& inst,
                            std::size_t group, const SdeConfig& cfg, std::uint64_t seed, std::size_t iteration,
                            std::size_t b) {
  std::vector<Rng> rngs;
  Tensor x_T(group, 2);
  for (std::size_t i = 0; i < group; ++i) {
    Rng rng(derive_seed(seed, {iteration, b, i}));
    x_T(i, 0) = standard_normal(rng);
    x_T(i, 1) = standard_normal(rng);
    rngs.push_back(rng);
  }
  Graph g;
  Graph::NoGradScope no_grad(g);
  const EditInstance single[] = {inst};
  const std::vector<std::size_t> rows(group, 0);
  Var cond = policy.condition(g, store, single, rows);
  StreamNoise noise(std::move(rngs));
  return rollout(g, policy.field(store, cond), g.constant(x_T), cfg.steps, cfg.steps, cfg, noise, false).trajectory;
}

void copy_rows(Tensor& dst, std::size_t offset, const Tensor& src) {
  for (std::size_t r = 0; r < src.rows(); ++r)
    for (std::size_t c = 0; c < src.cols(); ++c) dst(offset + r, c) = src(r, c);
}

}  // namespace

GroupBatch collect_rollouts(const EditPolicy& policy, ParameterStore& store, std::vector<EditInstance> instances,
                            std::size_t group, const SdeConfig& cfg, std::uint64_t seed, std::size_t iteration,
                            std::span<const std::unique_ptr<Scorer>> scorers) {
  require(!scorers.empty(), ErrorCode::invalid_argument, "no scorers supplied");
  const std::size_t B = instances.size();
  std::vector<Trajectory> parts(B);
  std::vector<RewardScore> scores(B * group);
  const std::size_t workers = std::min(scorers.size(), B);

  auto work = [&](std::size_t w) {
    for (std::size_t b = w; b < B; b += workers) {
      parts[b] = rollout_instance(policy, store, instances[b], group, cfg, seed, iteration, b);
      const Tensor& x0 = parts[b].final_state();
      for (std::size_t i = 0; i < group; ++i) scores[b * group + i] = scorers[w]->score(point_at(x0, i), instances[b]);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w)
      threads.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  GroupBatch batch;
  batch.group = group;
  batch.instances = std::move(instances);
  Trajectory& traj = batch.rollouts;
  traj.from_index = cfg.steps;
  const std::size_t n = B * group;
  const std::size_t steps = static_cast<std::size_t>(cfg.steps);
  traj.states.assign(steps + 1, Tensor(n, 2));
  traj.means.assign(steps, Tensor(n, 2));
  traj.noises.assign(steps, Tensor(n, 2));
  traj.logps.assign(steps, Tensor(n, 1));
  for (std::size_t b = 0; b < B; ++b) {
    const Trajectory& p = parts[b];
    for (std::size_t s = 0; s <= steps; ++s) copy_rows(traj.states[s], b * group, p.states[s]);
    for (std::size_t s = 0; s < steps; ++s) {
      copy_rows(traj.means[s], b * group, p.means[s]);
      copy_rows(traj.noises[s], b * group, p.noises[s]);
      if (p.logps[s])
        copy_rows(*traj.logps[s], b * group, *p.logps[s]);
      else
        traj.logps[s].reset();
    }
  }
  batch.scores = std::move(scores);
  batch.rewards.batch = B;
  batch.rewards.group = group;
  for (const RewardScore& s : batch.scores) batch.rewards.values.push_back(s.total());
  return batch;
}

TrainResult train(Algorithm algo, const EditPolicy& policy, ParameterStore& theta,
                  std::span<const EditInstance> pool, const TrainConfig& config, const ScorerFactory& scorers,
                  const MetricsSink& sink) {
  config.validate(algo);
  require(!pool.empty(), ErrorCode::invalid_argument, "empty training pool");
  std::vector<std::unique_ptr<Scorer>> scorer_pool;
  for (std::size_t w = 0; w < std::min(config.workers, config.batch); ++w) scorer_pool.push_back(scorers());

  ParameterStore ref = theta;
  Adam adam;
  TrainResult result;
  const std::uint64_t T = static_cast<std::uint64_t>(config.sde.steps);
  const std::uint64_t per_rollout = algo == Algorithm::grpo ? 2 * T : T + static_cast<std::uint64_t>(config.k);
  std::uint64_t queries = 0;
  std::uint64_t evals = 0;

  for (std::size_t it = 0; it < config.iterations; ++it) {
    const auto started = std::chrono::steady_clock::now();
    Rng pick(derive_seed(config.seed, {it, 0xB47C4ull}));
    std::uniform_int_distribution<std::size_t> index(0, pool.size() - 1);
    std::vector<EditInstance> instances;
    for (std::size_t b = 0; b < config.batch; ++b) instances.push_back(pool[index(pick)]);

    GroupBatch batch =
        collect_rollouts(policy, theta, std::move(instances), config.group, config.sde, config.seed, it, scorer_pool);
    const std::uint64_t rollouts = config.batch * config.group;
    queries += rollouts;
    evals += rollouts * T;

    MetricsRow row;
    row.iteration = it;
    for (double r : batch.rewards.values) row.mean_reward += r;
    row.mean_reward /= static_cast<double>(rollouts);
    if (algo == Algorithm::dense) {
      row.k = config.k;
      for (std::size_t b = 0; b < config.batch; ++b) {
        Rng rng(derive_seed(config.seed, {it, 0xDE5Eull, b}));
        row.starts.push_back(pick_start(config.sde.steps, config.k, rng));
      }
    }

    bool degenerate = false;
    try {
      batch.advantages = config.advantage == AdvantageMode::batch ? batch_advantage(batch.rewards)
                                                                  : per_group_advantage(batch.rewards);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate) throw;
      degenerate = true;
    }
    if (degenerate) {
      row.skipped = true;
      ++result.skipped;
    } else {
      evals += rollouts * (per_rollout - T);
      theta.zero_grad();
      Graph g;
      Var loss;
      if (algo == Algorithm::grpo) {
        ObjectiveValue v = grpo_objective(g, policy, theta, ref, batch, config.sde, config.objective);
        loss = v.loss;
        row.objective = v.value;
        row.kl = v.kl;
      } else {
        DenseObjectiveValue v =
            dense_objective(g, policy, theta, ref, batch, row.starts, config.k, config.sde, config.objective);
        loss = v.loss;
        row.objective = v.value;
        row.kl = v.kl;
      }
      g.backward(loss);
      clip_grad_norm(theta, config.grad_clip);
      adam.step(theta, scheduled_lr(config.lr, it, config.iterations, config.warmup_fraction));
    }
    row.reward_queries = queries;
    row.step_evals = evals;
    if (config.record_wall_time)
      row.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    if (sink) sink(row);
    result.history.push_back(std::move(row));
  }
  return result;
}

}  // namespace flowedit
