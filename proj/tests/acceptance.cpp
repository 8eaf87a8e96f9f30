// Acceptance run: one PASS/FAIL line per criterion, extra measurements on
// indented "info" lines. Exit status is nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "dense_oracle.hpp"
#include "flowedit/error.hpp"
#include "flowedit/experiment.hpp"
#include "flowedit/mock_scorer.hpp"
#include "flowedit/scorer_client.hpp"
#include "rl_fixture.hpp"

using namespace flowedit;
using namespace std::chrono_literals;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const fs::path kWork = fs::temp_directory_path() / "flowedit_acceptance";
int failures = 0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void verdict(const char* id, const char* name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << id << ' ' << (pass ? "PASS" : "FAIL") << "  " << name << ": " << detail << std::endl;
}

void info(const std::string& line) { std::cout << "    info: " << line << std::endl; }

template <typename F>
ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// A1 ------------------------------------------------------------------------
void gradient_fidelity() {
  const auto t0 = Clock::now();
  testing::RlFixture g_fx(2, 2, 0.02, 5);
  const ObjectiveOptions options{0.2, 0.5};
  auto g_loss = [&] {
    Graph g;
    return grpo_objective(g, g_fx.policy, g_fx.theta, g_fx.ref, g_fx.batch, g_fx.cfg, options).loss.value().item();
  };
  auto g_back = [&] {
    g_fx.theta.zero_grad();
    Graph g;
    g.backward(grpo_objective(g, g_fx.policy, g_fx.theta, g_fx.ref, g_fx.batch, g_fx.cfg, options).loss);
  };
  const auto grpo = testing::check_gradients(g_fx.theta, g_loss, g_back);

  testing::RlFixture d_fx(3, 2, 0.02, 5);
  const std::vector<int> starts{2, 3};
  testing::DenseOracle oracle(d_fx, starts, 2, options);
  auto d_back = [&] {
    d_fx.theta.zero_grad();
    Graph g;
    g.backward(dense_objective(g, d_fx.policy, d_fx.theta, d_fx.ref, d_fx.batch, starts, 2, d_fx.cfg, options).loss);
  };
  const auto dense = testing::check_gradients(d_fx.theta, [&] { return oracle.loss(); }, d_back);
  const double elapsed = seconds_since(t0);
  const std::size_t params = g_fx.theta.scalar_count();
  verdict("A1", "gradient fidelity",
          grpo.max_rel < 1e-5 && dense.max_rel < 1e-5 && params <= 500 && elapsed < 30.0,
          fmt("grpo max_rel=%.2e, dense max_rel=%.2e over %zu parameters, B=2 G=2 k=2, %.1fs", grpo.max_rel,
              dense.max_rel, params, elapsed));
}

// A2 ------------------------------------------------------------------------
void zero_noise_equivalence() {
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const EditPolicy policy(testing::tiny_policy(trial % 2 == 0));
    ParameterStore store;
    policy.init(store, 1000 + static_cast<std::uint64_t>(trial));
    testing::jitter(store, 0.3, 2000 + static_cast<std::uint64_t>(trial));
    const auto data = testing::two_instances();
    SdeConfig cfg;
    cfg.steps = 10;
    cfg.sigma = {0.0};
    Rng rng(3000 + static_cast<std::uint64_t>(trial));
    const Tensor x_T = normal_tensor(2, 2, 1.0, rng);
    Graph g;
    const std::size_t rows[] = {0, 1};
    Var cond = policy.condition(g, store, data, rows);
    const VelocityField field = policy.field(store, cond);
    std::vector<Rng> streams{Rng(1), Rng(2)};
    StreamNoise noise(std::move(streams));
    const Segment sde = rollout(g, field, g.constant(x_T), 10, 10, cfg, noise, false);
    Tensor x = x_T;
    for (int i = 10; i >= 1; --i) {
      const Tensor v = field(g, g.constant(x), static_cast<double>(i) / 10.0).value();
      for (std::size_t e = 0; e < x.size(); ++e) x[e] = x[e] - v[e] / 10.0;
      const Tensor& s = sde.trajectory.states[static_cast<std::size_t>(10 - i + 1)];
      for (std::size_t e = 0; e < x.size(); ++e) worst = std::max(worst, std::abs(s[e] - x[e]));
    }
  }
  verdict("A2", "zero-noise equivalence", worst < 1e-12,
          fmt("max |SDE - ODE| = %.2e over 100 nets x 10 states", worst));
}

// A3 ------------------------------------------------------------------------
void advantage_algebra() {
  Rng rng(77);
  double worst_sum = 0.0, worst_affine = 0.0;
  int rejected = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t B = 2 + static_cast<std::size_t>(uniform01(rng) * 7), G = 2 + static_cast<std::size_t>(uniform01(rng) * 9);
    RewardTable t{B, G, {}};
    for (std::size_t i = 0; i < B * G; ++i) t.values.push_back(15.0 * uniform01(rng));
    const auto a = batch_advantage(t);
    double sum = 0.0;
    for (double v : a) sum += v;
    worst_sum = std::max(worst_sum, std::abs(sum));
    const double alpha = 0.01 + 10.0 * uniform01(rng), shift = 40.0 * uniform01(rng) - 20.0;
    for (auto& v : t.values) v = alpha * v + shift;
    const auto b = batch_advantage(t);
    for (std::size_t i = 0; i < B; ++i) worst_affine = std::max(worst_affine, std::abs(a[i] - b[i]));
    RewardTable flat{B, G, std::vector<double>(B * G, 15.0 * uniform01(rng))};
    if (error_of([&] { batch_advantage(flat); }) == ErrorCode::degenerate) ++rejected;
  }
  verdict("A3", "advantage algebra", worst_sum < 1e-10 && worst_affine < 1e-10 && rejected == 1000,
          fmt("max |sum A| = %.2e, max affine drift = %.2e, %d/1000 constant tables rejected", worst_sum,
              worst_affine, rejected));
}

// A4 ------------------------------------------------------------------------
std::vector<Tensor> instance_path(const GroupBatch& batch, std::size_t b, std::size_t first, int k,
                                  std::vector<Tensor>* old) {
  const std::size_t G = batch.group;
  std::vector<Tensor> path;
  for (int j = 0; j <= k; ++j) {
    Tensor x(G, 2), lp(G, 1);
    for (std::size_t i = 0; i < G; ++i) {
      for (std::size_t c = 0; c < 2; ++c) x(i, c) = batch.rollouts.states[first + j](b * G + i, c);
      if (j < k) lp[i] = (*batch.rollouts.logps[first + j])[b * G + i];
    }
    path.push_back(x);
    if (j < k) old->push_back(lp);
  }
  return path;
}

double psi_row(testing::RlFixture& fx, std::size_t b, int r, int k, std::size_t row) {
  const std::size_t G = fx.batch.group;
  std::vector<Tensor> old;
  const auto path = instance_path(fx.batch, b, static_cast<std::size_t>(fx.cfg.steps - r), k, &old);
  Graph g;
  std::vector<EditInstance> inst(G, fx.batch.instances[b]);
  std::vector<std::size_t> rows(G);
  for (std::size_t i = 0; i < G; ++i) rows[i] = i;
  Var cond = fx.policy.condition(g, fx.theta, inst, rows);
  const Segment seg = replay_path(g, fx.policy.field(fx.theta, cond), path, r, fx.cfg);
  return psi(seg, old).value()[row];
}

void ratio_identities() {
  testing::RlFixture fx(5, 4, 0.0, 3);
  bool ratio_one = true, psi_zero = true;
  {
    Graph g;
    Var cond = fx.policy.condition(g, fx.theta, fx.batch.instances, fx.batch.instance_rows());
    for (int step = 0; step < 5; ++step)
      for (double v : step_ratio(g, fx.policy, fx.theta, cond, fx.batch.rollouts, step, fx.cfg).value().values())
        ratio_one = ratio_one && v == 1.0;
  }
  for (std::size_t b = 0; b < 2; ++b)
    for (int r = 1; r <= 5; ++r)
      for (int k = 1; k <= r; ++k)
        for (std::size_t i = 0; i < 4; ++i) psi_zero = psi_zero && psi_row(fx, b, r, k, i) == 0.0;

  Rng rng(5);
  Graph g;
  Tensor draws(100000, 1);
  for (auto& v : draws.values()) v = 40.0 * uniform01(rng) - 20.0;
  std::size_t inside = 0;
  for (double v : dense_ratio(g.constant(draws), 0.2).value().values())
    if (v >= 1.0 / 1.2 && v <= 1.2) ++inside;

  testing::jitter(fx.theta, 0.05, 9);
  double additivity = 0.0;
  for (std::size_t b = 0; b < 2; ++b)
    for (int r = 2; r <= 5; ++r)
      for (std::size_t i = 0; i < 4; ++i) {
        const double whole = psi_row(fx, b, r, 2, i);
        const double parts = psi_row(fx, b, r, 1, i) + psi_row(fx, b, r - 1, 1, i);
        additivity = std::max(additivity, std::abs(whole - parts));
      }
  verdict("A4", "ratio identities", ratio_one && psi_zero && inside == 100000 && additivity < 1e-12,
          fmt("step ratio == 1: %s, psi == 0: %s, %zu/100000 dense ratios in band, additivity error %.2e",
              ratio_one ? "yes" : "no", psi_zero ? "yes" : "no", inside, additivity));
}

// A5 ------------------------------------------------------------------------
void stop_gradient_contract() {
  ParameterStore store;
  Rng rng(6);
  store.add("p", normal_tensor(3, 3, 1.0, rng));
  bool blocked = true;
  {
    Graph g;
    Var p = g.param(store, "p");
    Var frozen = ops::stop_gradient(ops::tanh(ops::matmul(p, p)));
    g.backward(ops::sum(ops::add(ops::square(frozen), ops::exp(ops::stop_gradient(p)))));
    for (double v : store.get("p").grad.values()) blocked = blocked && v == 0.0;
  }

  const EditPolicy policy(testing::tiny_policy());
  ParameterStore theta;
  policy.init(theta, 21);
  testing::jitter(theta, 0.3, 22);
  const auto data = testing::two_instances();
  const std::size_t rows[] = {0, 1};
  SdeConfig cfg;
  cfg.steps = 5;
  cfg.sigma = {0.4};
  const Tensor x_start = normal_tensor(2, 2, 1.0, rng);
  const std::vector<Tensor> eps{normal_tensor(2, 2, 1.0, rng), normal_tensor(2, 2, 1.0, rng)};
  const Tensor weights(2, 2, {0.5, -1.5, 0.25, 2.0});

  theta.zero_grad();
  {
    Graph g;
    ReplayNoise replay(eps);
    Segment seg = rollout(g, policy.field(theta, policy.condition(g, theta, data, rows)), g.constant(x_start), 4, 2,
                          cfg, replay, true);
    g.backward(ops::add(ops::sum(ops::mul(seg.states.back(), g.constant(weights))),
                        ops::add(ops::sum(*seg.logps[0]), ops::sum(*seg.logps[1]))));
  }
  std::vector<Tensor> library;
  for (const auto& p : theta) library.push_back(p->grad);

  // Reference graph: every network input is a fresh constant holding the state value.
  theta.zero_grad();
  {
    Graph g;
    const VelocityField field = policy.field(theta, policy.condition(g, theta, data, rows));
    Var x = g.constant(x_start);
    std::vector<Var> logps;
    for (int j = 0; j < 2; ++j) {
      const int index = 4 - j;
      Var s = drift(g, field, g.constant(x.value()), cfg.time_at(index), cfg.sigma_at(index));
      Var mean = ops::sub(x, ops::scale(s, 1.0 / cfg.steps));
      Tensor step_noise = eps[static_cast<std::size_t>(j)];
      for (auto& v : step_noise.values()) v *= cfg.step_std(index);
      Var next = ops::add(mean, g.constant(step_noise));
      logps.push_back(ops::sum(
          ops::gaussian_logpdf(g.constant(next.value()), mean, g.constant(Tensor::scalar(cfg.step_std(index))))));
      x = next;
    }
    g.backward(ops::add(ops::sum(ops::mul(x, g.constant(weights))), ops::add(logps[0], logps[1])));
  }
  double diff = 0.0, norm = 0.0;
  std::size_t i = 0;
  for (const auto& p : theta) {
    for (std::size_t e = 0; e < p->grad.size(); ++e) {
      diff = std::max(diff, std::abs(p->grad[e] - library[i][e]));
      norm += std::abs(p->grad[e]);
    }
    ++i;
  }
  verdict("A5", "stop-gradient contract", blocked && diff < 1e-12 && norm > 0.0,
          fmt("gradient behind sg exactly zero: %s; 2-step rollout vs reference graph max |diff| = %.2e",
              blocked ? "yes" : "no", diff));
}

// A6 ------------------------------------------------------------------------
struct Crossing {
  std::optional<std::uint64_t> queries;
  double best_trailing = 0.0;
  double final_trailing = 0.0;
};

Crossing crossing(const std::vector<MetricsRow>& history, double threshold) {
  Crossing c;
  double window = 0.0;
  c.best_trailing = -1e300;
  for (std::size_t i = 0; i < history.size(); ++i) {
    window += history[i].mean_reward;
    if (i >= 10) window -= history[i - 10].mean_reward;
    if (i < 9) continue;
    const double trailing = window / 10.0;
    c.best_trailing = std::max(c.best_trailing, trailing);
    c.final_trailing = trailing;
    if (!c.queries && trailing >= threshold) c.queries = history[i].reward_queries;
  }
  return c;
}

struct PairStats {
  int grpo_crossed = 0, dense_crossed = 0, dense_first = 0;
  double grpo_best = 0, dense_best = 0, grpo_final = 0, dense_final = 0, worst_pair_seconds = 0;
};

PairStats paired_runs(RunConfig config, const fs::path& checkpoint, double threshold, const std::string& tag,
                      bool verbose) {
  PairStats s;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    config.seed = seed;
    const auto t0 = Clock::now();
    const TrainResult g = run_train(config, Algorithm::grpo, checkpoint, kWork / tag / ("grpo_" + std::to_string(seed)));
    const TrainResult d =
        run_train(config, Algorithm::dense, checkpoint, kWork / tag / ("dense_" + std::to_string(seed)));
    s.worst_pair_seconds = std::max(s.worst_pair_seconds, seconds_since(t0));
    const Crossing cg = crossing(g.history, threshold), cd = crossing(d.history, threshold);
    s.grpo_crossed += cg.queries.has_value();
    s.dense_crossed += cd.queries.has_value();
    if (cd.queries && (!cg.queries || *cd.queries < *cg.queries)) ++s.dense_first;
    s.grpo_best += cg.best_trailing / 10.0;
    s.dense_best += cd.best_trailing / 10.0;
    s.grpo_final += cg.final_trailing / 10.0;
    s.dense_final += cd.final_trailing / 10.0;
    if (verbose) {
      auto q = [](const Crossing& c) { return c.queries ? std::to_string(*c.queries) : std::string("-"); };
      info(fmt("%s seed %llu: grpo best/final trailing-10 %.3f/%.3f (queries to threshold %s), dense %.3f/%.3f (%s)",
               tag.c_str(), static_cast<unsigned long long>(seed), cg.best_trailing, cg.final_trailing,
               q(cg).c_str(), cd.best_trailing, cd.final_trailing, q(cd).c_str()));
    }
  }
  return s;
}

fs::path pretrained_checkpoint(const RunConfig& config) {
  static fs::path ckpt;
  if (ckpt.empty()) {
    run_pretrain(config, kWork / "pretrain");
    ckpt = kWork / "pretrain" / "policy.ckpt";
  }
  return ckpt;
}

void training_trend() {
  RunConfig config;
  config.lr = 3e-4;
  const auto t0 = Clock::now();
  const fs::path ckpt = pretrained_checkpoint(config);
  RunConfig eval_config = config;
  eval_config.eval_instances = 1024;
  const EvalReport base = run_eval(eval_config, ckpt);
  const double threshold = base.sde_total + 1.0;
  info(fmt("pretrained baseline: mean SDE reward %.3f, ODE %.3f over 1024 eval instances (%.1fs); threshold %.3f",
           base.sde_total, base.ode_total, seconds_since(t0), threshold));

  const PairStats s = paired_runs(config, ckpt, threshold, "batch", true);
  const bool pass = s.grpo_crossed == 10 && s.dense_crossed == 10 && s.dense_first >= 7 &&
                    s.worst_pair_seconds < 900.0;
  verdict("A6", "training trend",
          pass,
          fmt("lr %.0e, batch advantage: threshold reached by grpo in %d/10, dense in %d/10 seeds; dense first in "
              "%d/10; mean best trailing-10 reward grpo %.3f dense %.3f (needs %.3f); slowest pair %.0fs",
              config.lr, s.grpo_crossed, s.dense_crossed, s.dense_first, s.grpo_best, s.dense_best, threshold,
              s.worst_pair_seconds));

  // Same protocol with per-group advantages; not part of the verdict.
  RunConfig ablation = config;
  ablation.advantage = "group";
  ablation.lr = 1e-3;
  const PairStats a = paired_runs(ablation, ckpt, threshold, "group", false);
  info(fmt("ablation, per-group advantage, lr 1e-3: grpo reached threshold in %d/10, dense in %d/10, dense first in "
           "%d/10; mean best trailing-10 grpo %.3f dense %.3f, final grpo %.3f dense %.3f",
           a.grpo_crossed, a.dense_crossed, a.dense_first, a.grpo_best, a.dense_best, a.grpo_final, a.dense_final));
}

// A7 ------------------------------------------------------------------------
// Standard attention stack written against the graph primitives.
Var plain_stack(Graph& g, ParameterStore& store, const EncoderConfig& c, std::span<const int> tokens) {
  std::vector<std::size_t> ids(tokens.begin(), tokens.end());
  Var h = ops::add(ops::gather_rows(g.param(store, "encoder/embed"), ids),
                   ops::slice_rows(g.param(store, "encoder/position"), 0, tokens.size()));
  for (std::size_t i = 0; i < c.layers; ++i) {
    auto w = [&](const char* leaf) { return g.param(store, "encoder/L" + std::to_string(i) + "/" + leaf); };
    Var q = ops::matmul(h, w("wq")), k = ops::matmul(h, w("wk")), v = ops::matmul(h, w("wv"));
    Var attn = ops::softmax_rows(ops::scale(ops::matmul(q, ops::transpose(k)), 1.0 / std::sqrt(static_cast<double>(c.dim))));
    Var mixed = ops::add(h, ops::matmul(ops::matmul(attn, v), w("wo")));
    Var hidden = ops::tanh(ops::add_row(ops::matmul(mixed, w("w1")), w("b1")));
    h = ops::add(mixed, ops::add_row(ops::matmul(hidden, w("w2")), w("b2")));
  }
  return h;
}

void token_focus() {
  RunConfig config;
  const fs::path ckpt = pretrained_checkpoint(config);
  const EditPolicy policy(config.policy());
  ParameterStore store = load_policy(config, policy, ckpt);
  const Instruction inst = make_instruction(0);
  const std::size_t l = inst.tokens.size(), xi = config.focus_tokens;
  const auto rows = attention_probe(policy.encoder(), store, inst.tokens, true);
  bool in_range = true, open_interval = true;
  std::set<int> argmax_tokens;
  std::string layers;
  for (const auto& r : rows) {
    in_range = in_range && r.pos.has_value() && *r.pos <= l - xi;
    open_interval = open_interval && r.pos.has_value() && *r.pos > 0 && *r.pos < l - xi;
    argmax_tokens.insert(r.argmax_token);
    layers += fmt(" L%zu(pos %zu, token %d, entropy %.3f)", r.layer, r.pos.value_or(999), r.argmax_token,
                  r.mean_entropy);
  }
  bool bit_equal = true;
  for (int code = 0; code < kCodeCount; ++code) {
    const Instruction probe = make_instruction(code);
    Graph g;
    const Tensor a = policy.encoder().encode_sequence(g, store, probe.tokens, false).value();
    const Tensor b = plain_stack(g, store, policy.encoder().config(), probe.tokens).value();
    for (std::size_t e = 0; e < a.size(); ++e) bit_equal = bit_equal && a[e] == b[e];
  }
  verdict("A7", "token focus", in_range && argmax_tokens.size() >= 2 && bit_equal,
          fmt("instruction code 0 (l=%zu, xi=%zu):%s; %zu distinct argmax tokens; relocation-off bit-equal to plain "
              "stack: %s",
              l, xi, layers.c_str(), argmax_tokens.size(), bit_equal ? "yes" : "no"));
  info(fmt("pos strictly between 0 and l - xi on every layer: %s; uniform-attention entropy ln %zu = %.3f",
           open_interval ? "yes" : "no", l, std::log(static_cast<double>(l))));
}

// A8 ------------------------------------------------------------------------
void reward_round_trip() {
  std::size_t equal = 0;
  {
    MockScorer server(MockScorerOptions{{"127.0.0.1", 0}, 0, ScorerFault::none});
    server.start();
    RemoteScorer client(RemoteScorerOptions{server.endpoint(), 2000ms, 3});
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
      const Point e{10 * uniform01(rng) - 5, 10 * uniform01(rng) - 5};
      const Point s{10 * uniform01(rng) - 5, 10 * uniform01(rng) - 5};
      const int code = static_cast<int>(uniform01(rng) * kCodeCount);
      if (client.score(e, s, code) == analytic_score(e, s, code)) ++equal;
    }
  }
  auto fault_code = [](ScorerFault fault) {
    MockScorer server(MockScorerOptions{{"127.0.0.1", 0}, 0, fault});
    server.start();
    RemoteScorer client(RemoteScorerOptions{server.endpoint(), 200ms, 3});
    return error_of([&] { client.score({0, 0}, {1, 1}, 2); });
  };
  const bool range = fault_code(ScorerFault::out_of_range) == ErrorCode::out_of_range;
  const bool malformed = fault_code(ScorerFault::malformed) == ErrorCode::protocol;
  const bool timeout = fault_code(ScorerFault::silent) == ErrorCode::timeout;
  const bool dropped = fault_code(ScorerFault::drop) == ErrorCode::connection;
  verdict("A8", "reward round trip", equal == 1000 && range && malformed && timeout && dropped,
          fmt("%zu/1000 remote scores identical; range error %s, malformed %s, timeout %s, dropped connection %s",
              equal, range ? "ok" : "wrong", malformed ? "ok" : "wrong", timeout ? "ok" : "wrong",
              dropped ? "ok" : "wrong"));
}

// A9 ------------------------------------------------------------------------
void determinism() {
  const fs::path dir = kWork / "cli";
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << R"({"steps": 6, "k": 3, "group": 4, "batch": 2, "iterations": 20,
    "lr": 0.001, "train_instances": 64, "eval_instances": 16, "pretrain_epochs": 3, "pretrain_instances": 256,
    "hidden": 16, "embed_dim": 8, "layers": 2})";
  auto cli = [&](const std::string& args) {
    const std::string cmd = std::string(FLOWEDIT_CLI) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  const std::string cfg = " --config " + (dir / "config.json").string();
  bool ok = true;
  std::size_t compared = 0;
  for (const char* run : {"a", "b"}) {
    const fs::path base = dir / run;
    ok = ok && cli("pretrain" + cfg + " --seed 4 --out " + (base / "pre").string());
    for (const char* algo : {"grpo", "dense"})
      ok = ok && cli(std::string("train --algo ") + algo + cfg + " --seed 4 --checkpoint " +
                     (base / "pre" / "policy.ckpt").string() + " --out " + (base / algo).string());
  }
  for (const char* file : {"pre/policy.ckpt", "pre/pretrain_loss.csv", "grpo/metrics.csv", "grpo/policy.ckpt",
                           "dense/metrics.csv", "dense/policy.ckpt"}) {
    const std::string a = slurp(dir / "a" / file), b = slurp(dir / "b" / file);
    ok = ok && !a.empty() && a == b;
    ++compared;
  }
  verdict("A9", "determinism", ok, fmt("%zu artifacts from two pretrain + grpo + dense CLI runs byte-identical: %s",
                                       compared, ok ? "yes" : "no"));
}

}  // namespace

int main() {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  const auto t0 = Clock::now();
  const std::pair<const char*, void (*)()> criteria[] = {
      {"A1", gradient_fidelity}, {"A2", zero_noise_equivalence}, {"A3", advantage_algebra},
      {"A4", ratio_identities},  {"A5", stop_gradient_contract}, {"A6", training_trend},
      {"A7", token_focus},       {"A8", reward_round_trip},      {"A9", determinism}};
  for (const auto& [id, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      verdict(id, "aborted", false, e.what());
    }
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion failed")
            << fmt(" (%.0fs)", seconds_since(t0)) << std::endl;
  return failures == 0 ? 0 : 1;
}
