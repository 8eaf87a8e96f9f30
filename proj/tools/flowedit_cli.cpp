#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flowedit/flowedit.h"

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  std::string checkpoint;
  long long seed = -1;
  std::string task;
};

int report(fe_status status, const char* what) {
  if (status == FE_OK) return 0;
  std::cerr << "flowedit " << what << ": " << fe_status_name(status) << ": " << fe_last_error() << "\n";
  return 1;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool wants_out, bool wants_checkpoint) {
  cmd->add_option("--config", flags.config_path, "Flat JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--set", flags.overrides, "Override a config key: key=value (repeatable)");
  cmd->add_option("--seed", flags.seed, "Run seed");
  cmd->add_option("--task", flags.task, "move-to-mode | reflect-axis | translate-offset");
  if (wants_out) cmd->add_option("--out", flags.out, "Output directory (default: config output_dir)");
  if (wants_checkpoint) cmd->add_option("--checkpoint", flags.checkpoint, "Policy checkpoint");
}

class Config {
 public:
  ~Config() { fe_config_free(cfg_); }
  fe_config* get() const { return cfg_; }

  fe_status build(const CommonFlags& flags) {
    fe_status st = flags.config_path.empty() ? fe_config_new(&cfg_) : fe_config_load(flags.config_path.c_str(), &cfg_);
    if (st != FE_OK) return st;
    for (const std::string& kv : flags.overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "flowedit: --set expects key=value, got '" << kv << "'\n";
        return FE_ERR_CONFIG;
      }
      st = fe_config_set(cfg_, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
      if (st != FE_OK) return st;
    }
    if (flags.seed >= 0 && (st = fe_config_set(cfg_, "seed", std::to_string(flags.seed).c_str())) != FE_OK) return st;
    if (!flags.task.empty() && (st = fe_config_set(cfg_, "task", flags.task.c_str())) != FE_OK) return st;
    return fe_config_validate(cfg_);
  }

  std::string text(fe_status (*getter)(const fe_config*, fe_text**)) const {
    fe_text* t = nullptr;
    if (getter(cfg_, &t) != FE_OK) return {};
    std::string s(fe_text_data(t), fe_text_size(t));
    fe_text_free(t);
    return s;
  }

 private:
  fe_config* cfg_ = nullptr;
};

std::string pick(const std::string& flag, const std::string& configured, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (!configured.empty()) return configured;
  return fallback;
}

int print_text(fe_status st, fe_text* t, const char* what) {
  if (st != FE_OK) return report(st, what);
  if (!t) return 1;
  std::cout << fe_text_data(t);
  fe_text_free(t);
  return 0;
}

int serve_mock(const std::string& listen, unsigned long long seed, const std::string& fault) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  fe_mock_scorer* server = nullptr;
  const fe_status st = fe_mock_scorer_start(listen.c_str(), seed, fault.c_str(), &server);
  if (st != FE_OK) return report(st, "mock-scorer");
  std::cout << "listening on port " << fe_mock_scorer_port(server) << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  fe_mock_scorer_stop(server);
  fe_mock_scorer_free(server);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-matching policy editing with group-relative RL fine-tuning"};
  app.require_subcommand(1);

  CommonFlags pre_flags, train_flags, eval_flags, probe_flags;
  std::string algo = "grpo";
  int code = 0;
  std::string listen = "127.0.0.1:0";
  unsigned long long mock_seed = 0;
  std::string fault = "none";
  std::vector<std::string> runs;
  std::string curves_out = "curves.csv";

  auto* pre = app.add_subcommand("pretrain", "Flow-matching pretraining on synthetic edit pairs");
  add_common(pre, pre_flags, true, false);

  auto* trn = app.add_subcommand("train", "RL fine-tuning from a pretrained checkpoint");
  add_common(trn, train_flags, true, true);
  trn->add_option("--algo", algo, "grpo | dense")->check(CLI::IsMember({"grpo", "dense"}));

  auto* ev = app.add_subcommand("eval", "Mean reward components on held-out instances");
  add_common(ev, eval_flags, false, true);

  auto* probe = app.add_subcommand("probe-attention", "Per-layer focus position and attention statistics");
  add_common(probe, probe_flags, false, true);
  probe->add_option("--code", code, "Instruction code 0..9")->check(CLI::Range(0, 9));

  auto* mock = app.add_subcommand("mock-scorer", "Serve analytic rewards over the scorer protocol");
  mock->add_option("--listen", listen, "host:port (port 0 picks a free one)");
  mock->add_option("--seed", mock_seed, "Seed (echoed, scoring is deterministic)");
  mock->add_option("--fault", fault, "none | out-of-range | malformed | silent | drop")
      ->check(CLI::IsMember({"none", "out-of-range", "malformed", "silent", "drop"}));

  auto* curves = app.add_subcommand("export-curves", "Merge run metrics into one reward curve CSV");
  curves->add_option("runs", runs, "Run directories holding metrics.csv")->required();
  curves->add_option("--out", curves_out, "Merged CSV path");

  CLI11_PARSE(app, argc, argv);

  if (fe_abi_version() != FE_ABI_VERSION) {
    std::cerr << "flowedit: library ABI " << fe_abi_version() << " does not match " << FE_ABI_VERSION << "\n";
    return 1;
  }

  if (*pre) {
    Config cfg;
    if (fe_status st = cfg.build(pre_flags)) return report(st, "pretrain");
    const std::string out = pick(pre_flags.out, cfg.text(fe_config_output_dir), "runs/pretrain");
    return report(fe_pretrain(cfg.get(), out.c_str()), "pretrain");
  }
  if (*trn) {
    Config cfg;
    if (fe_status st = cfg.build(train_flags)) return report(st, "train");
    const std::string out = pick(train_flags.out, cfg.text(fe_config_output_dir), "runs/" + algo);
    const std::string ckpt = pick(train_flags.checkpoint, cfg.text(fe_config_checkpoint), "");
    return report(fe_train(cfg.get(), algo.c_str(), ckpt.c_str(), out.c_str()), "train");
  }
  if (*ev) {
    Config cfg;
    if (fe_status st = cfg.build(eval_flags)) return report(st, "eval");
    const std::string ckpt = pick(eval_flags.checkpoint, cfg.text(fe_config_checkpoint), "");
    fe_text* t = nullptr;
    const fe_status st = fe_eval(cfg.get(), ckpt.c_str(), &t);
    return print_text(st, t, "eval");
  }
  if (*probe) {
    Config cfg;
    if (fe_status st = cfg.build(probe_flags)) return report(st, "probe-attention");
    const std::string ckpt = pick(probe_flags.checkpoint, cfg.text(fe_config_checkpoint), "");
    fe_text* t = nullptr;
    const fe_status st = fe_probe_attention(cfg.get(), ckpt.c_str(), code, &t);
    return print_text(st, t, "probe-attention");
  }
  if (*mock) return serve_mock(listen, mock_seed, fault);
  if (*curves) {
    std::vector<const char*> dirs;
    for (const auto& r : runs) dirs.push_back(r.c_str());
    return report(fe_export_curves(dirs.data(), dirs.size(), curves_out.c_str()), "export-curves");
  }
  return 0;
}
