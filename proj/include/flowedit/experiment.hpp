#pragma once

#include <filesystem>
#include <string>

#include "flowedit/config.hpp"
#include "flowedit/encoder.hpp"

namespace flowedit {

// Seeds of the derived data sets; pretraining, RL sampling and evaluation
// never share instances for a given run seed.
std::vector<EditInstance> pretrain_set(const RunConfig& config);
std::vector<EditInstance> train_pool(const RunConfig& config);
std::vector<EditInstance> eval_set(const RunConfig& config);

// Fresh parameters for the configured architecture.
ParameterStore init_policy(const RunConfig& config, const EditPolicy& policy);
// Parameters from a checkpoint; names and shapes must match the architecture.
ParameterStore load_policy(const RunConfig& config, const EditPolicy& policy, const std::filesystem::path& path);

ScorerFactory make_scorer_factory(const RunConfig& config);

struct EvalReport {
  std::size_t instances = 0;
  RewardScore sde_mean;
  double sde_total = 0;
  // Same instances and starting noise, sigma = 0.
  double ode_total = 0;

  std::string to_json() const;
};

EvalReport evaluate(const RunConfig& config, const EditPolicy& policy, ParameterStore& store);

// Each writes config.json next to its outputs.
//   pretrain: policy.ckpt, pretrain_loss.csv, summary.json
//   train:    policy.ckpt, metrics.csv, summary.json
void run_pretrain(const RunConfig& config, const std::filesystem::path& out_dir);
TrainResult run_train(const RunConfig& config, Algorithm algo, const std::filesystem::path& checkpoint,
                      const std::filesystem::path& out_dir);
EvalReport run_eval(const RunConfig& config, const std::filesystem::path& checkpoint);
std::string run_probe(const RunConfig& config, const std::filesystem::path& checkpoint, int code);

}  // namespace flowedit
