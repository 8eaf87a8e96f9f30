#include "flowedit/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flowedit/error.hpp"
#include "flowedit/socket.hpp"

namespace flowedit {

namespace {

using nlohmann::json;

#define FLOWEDIT_CONFIG_FIELDS(X)                                                                          \
  X(task) X(steps) X(k) X(focus_tokens) X(group) X(batch) X(sigma) X(clip) X(kl_coef) X(lr) X(iterations) \
  X(seed) X(scorer) X(output_dir) X(advantage) X(warmup_fraction) X(grad_clip) X(workers) X(record_wall_time)          \
  X(relocation) X(train_instances) X(eval_instances) X(checkpoint) X(pretrain_epochs) X(pretrain_lr)      \
  X(pretrain_batch) X(pretrain_instances) X(hidden) X(depth) X(embed_dim) X(layers)

json to_object(const RunConfig& c) {
  json j;
#define X(name) j[#name] = c.name;
  FLOWEDIT_CONFIG_FIELDS(X)
#undef X
  return j;
}

template <typename T>
void read_field(const json& j, std::string_view key, T& out) {
  try {
    out = j.get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::config, "config key '" + std::string(key) + "': " + e.what());
  }
}

bool assign(RunConfig& c, std::string_view key, const json& value) {
#define X(name)                     \
  if (key == #name) {               \
    read_field(value, key, c.name); \
    return true;                    \
  }
  FLOWEDIT_CONFIG_FIELDS(X)
#undef X
  return false;
}

bool is_string_key(std::string_view key) {
  return key == "task" || key == "scorer" || key == "output_dir" || key == "checkpoint" || key == "advantage";
}

}  // namespace

void RunConfig::validate() const {
  task_kind();
  require(layers >= 1 && embed_dim >= 1 && hidden >= 1 && depth >= 1, ErrorCode::config,
          "model sizes must be >= 1");
  require(focus_tokens >= 1, ErrorCode::config, "focus_tokens must be >= 1");
  require(train_instances >= 1 && eval_instances >= 1 && pretrain_instances >= 1, ErrorCode::config,
          "instance counts must be >= 1");
  require(pretrain_batch >= 1 && pretrain_lr > 0.0, ErrorCode::config, "invalid pretraining settings");
  require(scorer == "analytic" || scorer.rfind("remote:", 0) == 0, ErrorCode::config,
          "scorer must be 'analytic' or 'remote:host:port'");
  if (scorer != "analytic") parse_endpoint(std::string_view(scorer).substr(7));
  train().validate(Algorithm::dense);
}

Task RunConfig::task_kind() const {
  try {
    return parse_task(task);
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
}

PolicyConfig RunConfig::policy() const {
  PolicyConfig p;
  p.encoder.dim = embed_dim;
  p.encoder.layers = layers;
  p.encoder.focus_tokens = focus_tokens;
  p.hidden = hidden;
  p.depth = depth;
  p.relocation = relocation;
  return p;
}

SdeConfig RunConfig::sde() const {
  SdeConfig s;
  s.steps = steps;
  s.sigma = sigma;
  return s;
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  t.batch = batch;
  t.group = group;
  t.sde = sde();
  t.objective.clip = clip;
  t.objective.kl_coef = kl_coef;
  t.advantage = parse_advantage_mode(advantage);
  t.k = k;
  t.lr = lr;
  t.iterations = iterations;
  t.warmup_fraction = warmup_fraction;
  t.grad_clip = grad_clip;
  t.seed = seed;
  t.workers = workers;
  t.record_wall_time = record_wall_time;
  return t;
}

PretrainOptions RunConfig::pretrain() const {
  PretrainOptions p;
  p.epochs = pretrain_epochs;
  p.lr = pretrain_lr;
  p.batch_size = pretrain_batch;
  p.grad_clip = grad_clip;
  p.seed = seed;
  return p;
}

std::string RunConfig::to_json() const { return to_object(*this).dump(2) + "\n"; }

RunConfig RunConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::config, std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), ErrorCode::config, "config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items())
    require(assign(c, key, value), ErrorCode::config, "unknown config key '" + key + "'");
  return c;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  json j;
  try {
    j = json::parse(value);
  } catch (const json::parse_error&) {
    require(is_string_key(key), ErrorCode::config,
            "value for '" + std::string(key) + "' is not valid JSON: " + std::string(value));
    j = std::string(value);
  }
  require(assign(*this, key, j), ErrorCode::config, "unknown config key '" + std::string(key) + "'");
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return RunConfig::from_json(buffer.str());
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io, "cannot write config " + path.string());
  out << config.to_json();
  require(out.good(), ErrorCode::io, "failed writing config " + path.string());
}

}  // namespace flowedit
