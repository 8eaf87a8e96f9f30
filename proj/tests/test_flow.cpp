#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "flowedit/dataset.hpp"
#include "flowedit/error.hpp"
#include "flowedit/pretrain.hpp"
#include "flowedit/sampler.hpp"
#include "test_support.hpp"

using namespace flowedit;

TEST_CASE("instruction codes round trip through tokens") {
  for (int code = 0; code < kCodeCount; ++code) {
    const Instruction inst = make_instruction(code);
    CHECK(inst.tokens.size() >= 1);
    CHECK(inst.tokens.size() <= 32);
    CHECK(decode_code(inst.tokens) == code);
  }
  CHECK_THROWS_AS(make_instruction(10), Error);
  const int bad[] = {token_id("move"), 99};
  CHECK_THROWS_AS(decode_code(bad), Error);
}

TEST_CASE("ground-truth edits") {
  // Moves keep the offset from the nearest center.
  const Point src{0.1, -0.3};
  const Point near = nearest_mode_center(src);
  const Point moved = apply_edit(src, 0);
  CHECK(moved.x == doctest::Approx(2.0 + (src.x - near.x)));
  CHECK(moved.y == doctest::Approx(2.0 + (src.y - near.y)));
  CHECK(apply_edit({1, 2}, 4) == Point{1, -2});
  CHECK(apply_edit({1, 2}, 5) == Point{-1, 2});
  CHECK(apply_edit({-2, 2}, 6) == Point{2, 2});
  CHECK(apply_edit({2, 2}, 9) == Point{2, -2});
}

TEST_CASE("synthetic datasets are deterministic and consistent") {
  for (Task task : {Task::move_to_mode, Task::reflect_axis, Task::translate_offset}) {
    const auto a = synth_dataset(task, 200, 42);
    const auto b = synth_dataset(task, 200, 42);
    const auto c = synth_dataset(task, 200, 43);
    REQUIRE(a.size() == 200);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].source == b[i].source);
      CHECK(a[i].instruction.tokens == b[i].instruction.tokens);
      CHECK(task_of(a[i].instruction.code) == task);
      CHECK(decode_code(a[i].instruction.tokens) == a[i].instruction.code);
      CHECK(a[i].target == apply_edit(a[i].source, a[i].instruction.code));
      differs = differs || !(a[i].source == c[i].source);
    }
    CHECK(differs);
  }
  CHECK_THROWS_AS(parse_task("rotate"), Error);
}

TEST_CASE("translations land on a mode") {
  for (const auto& inst : synth_dataset(Task::translate_offset, 300, 9)) {
    const Point c = nearest_mode_center(inst.target);
    CHECK(std::hypot(inst.target.x - c.x, inst.target.y - c.y) < 2.0);
  }
}

TEST_CASE("dataset text format round trip") {
  const auto data = synth_dataset(Task::move_to_mode, 50, 1);
  std::stringstream buffer;
  write_dataset(buffer, data);
  const auto back = read_dataset(buffer);
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back[i].source == data[i].source);
    CHECK(back[i].target == data[i].target);
    CHECK(back[i].instruction.code == data[i].instruction.code);
    CHECK(back[i].instruction.tokens == data[i].instruction.tokens);
  }
  std::stringstream bad("# comment\n0.5 0.5 4 0,1,2 0.5 -0.5\n");
  CHECK_THROWS_AS(read_dataset(bad), Error);
}

TEST_CASE("velocity network finite-difference probes") {
  const EditPolicy policy(testing::tiny_policy());
  ParameterStore store;
  policy.init(store, 3);
  const auto data = testing::two_instances();
  const std::size_t rows[] = {0, 1, 1};
  Rng rng(17);
  for (int probe = 0; probe < 3; ++probe) {
    const Tensor x = normal_tensor(3, 2, 1.0, rng);
    Tensor t(3, 1);
    for (auto& v : t.values()) v = uniform01(rng);
    auto forward = [&](Graph& g) {
      Var cond = policy.condition(g, store, data, rows);
      Var v = policy.velocity(g, store, g.constant(x), g.constant(t), cond);
      return ops::sum(ops::mul(v, g.constant(Tensor(3, 2, {0.3, -1.0, 0.7, 0.2, -0.4, 1.1}))));
    };
    auto loss = [&] {
      Graph g;
      return forward(g).value().item();
    };
    auto backward = [&] {
      store.zero_grad();
      Graph g;
      g.backward(forward(g));
    };
    const auto r = testing::check_gradients(store, loss, backward);
    INFO(r.worst);
    CHECK(r.max_rel < 1e-6);
  }
}

TEST_CASE("policy condition carries the source and is row independent") {
  const EditPolicy policy(testing::tiny_policy());
  ParameterStore store;
  policy.init(store, 3);
  const auto data = testing::two_instances();
  Graph g;
  const std::size_t both[] = {0, 1};
  const std::size_t only_second[] = {1};
  const Tensor a = policy.condition(g, store, data, both).value();
  const Tensor b = policy.condition(g, store, data, only_second).value();
  CHECK(a(0, 0) == data[0].source.x);
  CHECK(a(1, 1) == data[1].source.y);
  for (std::size_t c = 0; c < a.cols(); ++c) CHECK(a(1, c) == b(0, c));
}

TEST_CASE("zero-epoch pretraining leaves parameters bit-identical") {
  const EditPolicy policy(testing::tiny_policy());
  ParameterStore store;
  policy.init(store, 5);
  const ParameterStore before = store;
  PretrainOptions options;
  options.epochs = 0;
  cfm_pretrain(policy, store, synth_dataset(Task::move_to_mode, 32, 1), options);
  CHECK(bit_equal(before, store));
}

TEST_CASE("pretraining is reproducible and reduces the loss") {
  const EditPolicy policy(testing::tiny_policy());
  const auto data = synth_dataset(Task::move_to_mode, 256, 2);
  ParameterStore a, b;
  policy.init(a, 5);
  policy.init(b, 5);
  const double initial = cfm_loss(policy, a, data, 99);
  PretrainOptions options;
  options.epochs = 1;
  options.batch_size = 32;
  cfm_pretrain(policy, a, data, options);
  cfm_pretrain(policy, b, data, options);
  CHECK(bit_equal(a, b));
  CHECK(cfm_loss(policy, a, data, 99) < initial);
}

TEST_CASE("pretrained move-to-mode policy lands within three mode std of the instructed mode") {
  const EditPolicy policy{PolicyConfig{}};
  ParameterStore store;
  policy.init(store, 0);
  const auto train = synth_dataset(Task::move_to_mode, 4096, 1);
  PretrainOptions options;
  cfm_pretrain(policy, store, train, options);

  const auto held_out = synth_dataset(Task::move_to_mode, 400, 777);
  Graph g;
  Graph::NoGradScope no_grad(g);
  const auto rows = repeat_rows(held_out.size(), 1);
  Var cond = policy.condition(g, store, held_out, rows);
  Rng rng(5);
  const Tensor x_T = normal_tensor(held_out.size(), 2, 1.0, rng);
  const Tensor x0 = ode_sample(policy.field(store, cond), x_T, 10);
  std::size_t inside = 0;
  double lipschitz_worst = 0.0;
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    const Point center = kModeCenters[static_cast<std::size_t>(held_out[i].instruction.code)];
    if (std::hypot(x0(i, 0) - center.x, x0(i, 1) - center.y) <= 3.0 * kModeStd) ++inside;
  }
  // Perturbing x by 1e-6 moves the trained field by far less than 1e-2.
  Tensor x = normal_tensor(held_out.size(), 2, 1.0, rng);
  Tensor x_shift = x;
  for (auto& v : x_shift.values()) v += 1e-6;
  const auto field = policy.field(store, cond);
  lipschitz_worst = max_abs_diff(field(g, g.constant(x), 0.5).value(), field(g, g.constant(x_shift), 0.5).value());
  const double fraction = static_cast<double>(inside) / static_cast<double>(held_out.size());
  MESSAGE("fraction within 3 sigma: " << fraction);
  CHECK(fraction >= 0.9);
  CHECK(lipschitz_worst < 1e-2);
}
