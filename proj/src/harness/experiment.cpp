#include "flowedit/experiment.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flowedit/error.hpp"
#include "flowedit/metrics.hpp"
#include "flowedit/scorer_client.hpp"

namespace flowedit {

namespace {

void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io, "cannot write " + path.string());
  out << text;
  require(out.good(), ErrorCode::io, "failed writing " + path.string());
}

}  // namespace

std::vector<EditInstance> pretrain_set(const RunConfig& config) {
  return synth_dataset(config.task_kind(), config.pretrain_instances, derive_seed(config.seed, {0x9E7}));
}

std::vector<EditInstance> train_pool(const RunConfig& config) {
  return synth_dataset(config.task_kind(), config.train_instances, derive_seed(config.seed, {0x7EA1}));
}

std::vector<EditInstance> eval_set(const RunConfig& config) {
  return synth_dataset(config.task_kind(), config.eval_instances, derive_seed(config.seed, {0xE7A1}));
}

ParameterStore init_policy(const RunConfig& config, const EditPolicy& policy) {
  ParameterStore store;
  policy.init(store, derive_seed(config.seed, {0x1A17}));
  return store;
}

ParameterStore load_policy(const RunConfig& config, const EditPolicy& policy, const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorCode::io, "checkpoint not found: " + path.string());
  ParameterStore store = init_policy(config, policy);
  const ParameterStore loaded = load_checkpoint(path);
  require(loaded.size() == store.size(), ErrorCode::config,
          "checkpoint " + path.string() + " does not match the configured architecture");
  store.assign_values(loaded);
  return store;
}

ScorerFactory make_scorer_factory(const RunConfig& config) {
  if (config.scorer == "analytic") return [] { return std::make_unique<AnalyticScorer>(); };
  RemoteScorerOptions options;
  options.endpoint = parse_endpoint(std::string_view(config.scorer).substr(7));
  return [options] { return std::make_unique<RemoteScorer>(options); };
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["instances"] = instances;
  j["alignment"] = sde_mean.alignment;
  j["coherence"] = sde_mean.coherence;
  j["consistency"] = sde_mean.consistency;
  j["total"] = sde_total;
  j["ode_total"] = ode_total;
  return j.dump(2) + "\n";
}

EvalReport evaluate(const RunConfig& config, const EditPolicy& policy, ParameterStore& store) {
  const std::vector<EditInstance> data = eval_set(config);
  const ScorerFactory factory = make_scorer_factory(config);
  std::vector<std::unique_ptr<Scorer>> scorers;
  for (std::size_t w = 0; w < std::max<std::size_t>(1, config.workers); ++w) scorers.push_back(factory());
  const std::uint64_t seed = derive_seed(config.seed, {0xE7A1, 1});
  const SdeConfig sde = config.sde();
  GroupBatch sde_batch = collect_rollouts(policy, store, data, 1, sde, seed, 0, scorers);
  SdeConfig ode = sde;
  ode.sigma = {0.0};
  GroupBatch ode_batch = collect_rollouts(policy, store, data, 1, ode, seed, 0, scorers);

  EvalReport report;
  report.instances = data.size();
  const double n = static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    report.sde_mean.alignment += sde_batch.scores[i].alignment / n;
    report.sde_mean.coherence += sde_batch.scores[i].coherence / n;
    report.sde_mean.consistency += sde_batch.scores[i].consistency / n;
    report.sde_total += sde_batch.scores[i].total() / n;
    report.ode_total += ode_batch.scores[i].total() / n;
  }
  return report;
}

void run_pretrain(const RunConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  prepare_dir(out_dir);
  save_config(config, out_dir / "config.json");
  const EditPolicy policy(config.policy());
  ParameterStore store = init_policy(config, policy);
  const std::vector<EditInstance> data = pretrain_set(config);
  const PretrainResult result = cfm_pretrain(policy, store, data, config.pretrain());
  std::ostringstream loss;
  loss.precision(17);
  loss << "epoch,loss\n";
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) loss << e << ',' << result.epoch_loss[e] << '\n';
  write_text(out_dir / "pretrain_loss.csv", loss.str());
  save_checkpoint(store, out_dir / "policy.ckpt");
  nlohmann::json summary;
  summary["epochs"] = result.epoch_loss.size();
  summary["final_loss"] = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back();
  summary["parameters"] = store.scalar_count();
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
}

TrainResult run_train(const RunConfig& config, Algorithm algo, const std::filesystem::path& checkpoint,
                      const std::filesystem::path& out_dir) {
  config.validate();
  const EditPolicy policy(config.policy());
  ParameterStore theta = load_policy(config, policy, checkpoint);
  prepare_dir(out_dir);
  save_config(config, out_dir / "config.json");
  const bool dense = algo == Algorithm::dense;
  MetricsWriter writer(out_dir / "metrics.csv", dense);
  const std::vector<EditInstance> pool = train_pool(config);
  TrainResult result = train(algo, policy, theta, pool, config.train(), make_scorer_factory(config),
                             [&](const MetricsRow& row) { writer.write(row); });
  save_checkpoint(theta, out_dir / "policy.ckpt");
  nlohmann::json summary;
  summary["algo"] = algorithm_name(algo);
  summary["iterations"] = result.history.size();
  summary["skipped_batches"] = result.skipped;
  summary["reward_queries"] = result.history.empty() ? 0 : result.history.back().reward_queries;
  summary["step_evals"] = result.history.empty() ? 0 : result.history.back().step_evals;
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");
  return result;
}

EvalReport run_eval(const RunConfig& config, const std::filesystem::path& checkpoint) {
  config.validate();
  const EditPolicy policy(config.policy());
  ParameterStore store = load_policy(config, policy, checkpoint);
  return evaluate(config, policy, store);
}

std::string run_probe(const RunConfig& config, const std::filesystem::path& checkpoint, int code) {
  config.validate();
  require(valid_code(code), ErrorCode::config, "instruction code must lie in [0, 9]");
  const EditPolicy policy(config.policy());
  ParameterStore store = load_policy(config, policy, checkpoint);
  const Instruction inst = make_instruction(code);
  const std::vector<ProbeRow> rows = attention_probe(policy.encoder(), store, inst.tokens, config.relocation);
  return probe_csv(rows);
}

}  // namespace flowedit
