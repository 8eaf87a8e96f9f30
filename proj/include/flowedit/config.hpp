#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "flowedit/policy.hpp"
#include "flowedit/pretrain.hpp"
#include "flowedit/training.hpp"

namespace flowedit {

// Every knob of a run, stored as a flat JSON object. Unknown keys are
// rejected so a typo cannot silently fall back to a default.
struct RunConfig {
  std::string task = "move-to-mode";
  int steps = 10;
  int k = 5;
  std::size_t focus_tokens = 4;
  std::size_t group = 8;
  std::size_t batch = 4;
  std::vector<double> sigma{0.3};
  double clip = 0.2;
  double kl_coef = 0.01;
  double lr = 1e-5;
  std::size_t iterations = 500;
  std::uint64_t seed = 0;
  // "analytic" or "remote:host:port".
  std::string scorer = "analytic";
  std::string output_dir;

  // "batch" or "group".
  std::string advantage = "batch";
  double warmup_fraction = 0.1;
  double grad_clip = 1.0;
  std::size_t workers = 1;
  bool record_wall_time = false;
  bool relocation = true;
  std::size_t train_instances = 2048;
  std::size_t eval_instances = 256;
  std::string checkpoint = "runs/pretrain/policy.ckpt";

  std::size_t pretrain_epochs = 60;
  double pretrain_lr = 3e-3;
  std::size_t pretrain_batch = 64;
  std::size_t pretrain_instances = 4096;

  std::size_t hidden = 32;
  std::size_t depth = 2;
  std::size_t embed_dim = 16;
  std::size_t layers = 3;

  void validate() const;

  Task task_kind() const;
  PolicyConfig policy() const;
  SdeConfig sde() const;
  TrainConfig train() const;
  PretrainOptions pretrain() const;

  std::string to_json() const;
  static RunConfig from_json(std::string_view text);
  // Applies one key with a JSON-encoded value ("0.3", "[0.3,0.2]", "\"dense\"")
  // or, for string keys, a bare string.
  void set(std::string_view key, std::string_view value);
};

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

}  // namespace flowedit
