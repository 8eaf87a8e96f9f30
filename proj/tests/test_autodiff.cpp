#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "flowedit/error.hpp"
#include "flowedit/graph.hpp"
#include "flowedit/optim.hpp"
#include "flowedit/rng.hpp"
#include "test_support.hpp"

using namespace flowedit;
using flowedit::testing::check_gradients;

namespace {

// Composite midpoint rule on [lo, hi].
double integrate(const std::function<double(double)>& f, double lo, double hi, int n) {
  const double dx = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += f(lo + (i + 0.5) * dx);
  return acc * dx;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::invalid_argument;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("flowedit_test_" + name);
}

}  // namespace

TEST_CASE("elementwise and reduction forward values") {
  Graph g;
  Var a = g.constant(Tensor(1, 2, {1, 2}));
  Var b = g.constant(Tensor(1, 2, {3, 4}));
  CHECK(ops::add(a, b).value()[0] == 4.0);
  CHECK(ops::add(a, b).value()[1] == 6.0);
  Var sm = ops::softmax_rows(g.constant(Tensor(1, 3, 0.0)));
  for (double v : sm.value().values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(ops::sum(b).value().item() == 7.0);
  CHECK(ops::mean(b).value().item() == 3.5);
}

TEST_CASE("gaussian logpdf closed form and quadrature oracle") {
  Graph g;
  const double lp = ops::gaussian_logpdf(g.constant(0.0), g.constant(0.0), g.constant(1.0)).value().item();
  CHECK(lp == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(lp == doctest::Approx(-0.9189385).epsilon(1e-7));

  // The density from the op integrates to one and matches the CDF mass of a window.
  const double mean = 0.3, sd = 0.7;
  auto density = [&](double x) {
    Graph h;
    return std::exp(ops::gaussian_logpdf(h.constant(x), h.constant(mean), h.constant(sd)).value().item());
  };
  CHECK(integrate(density, mean - 12 * sd, mean + 12 * sd, 20000) == doctest::Approx(1.0).epsilon(1e-9));
  const double window = integrate(density, mean - sd, mean + sd, 20000);
  CHECK(window == doctest::Approx(std::erf(1.0 / std::sqrt(2.0))).epsilon(1e-9));
}

TEST_CASE("shape mismatch and non-finite values raise their codes") {
  Graph g;
  Var a = g.constant(Tensor(2, 2, 1.0));
  Var b = g.constant(Tensor(3, 2, 1.0));
  CHECK(code_of([&] { ops::add(a, b); }) == ErrorCode::shape_mismatch);
  CHECK(code_of([&] { ops::matmul(a, b); }) == ErrorCode::shape_mismatch);
  CHECK(code_of([&] { ops::log(g.constant(Tensor(1, 1, 0.0))); }) == ErrorCode::non_finite);
  CHECK(code_of([&] { ops::exp(g.constant(Tensor(1, 1, 1000.0))); }) == ErrorCode::non_finite);
  CHECK(code_of([&] { g.constant(Tensor(1, 1, std::nan(""))); }) == ErrorCode::non_finite);
}

TEST_CASE("backward on linear root gives the input") {
  ParameterStore store;
  store.add("w", Tensor(1, 2, {1, 2}));
  Graph g;
  Var root = ops::sum(ops::mul(g.param(store, "w"), g.constant(Tensor(1, 2, {3, 4}))));
  g.backward(root);
  CHECK(store.get("w").grad[0] == 3.0);
  CHECK(store.get("w").grad[1] == 4.0);
}

TEST_CASE("backward rejects non-scalar roots") {
  ParameterStore store;
  store.add("w", Tensor(1, 2, 1.0));
  Graph g;
  Var w = g.param(store, "w");
  CHECK(code_of([&] { g.backward(w); }) == ErrorCode::shape_mismatch);
}

TEST_CASE("stop gradient") {
  SUBCASE("sg(x) * x at 3 has derivative 3") {
    ParameterStore store;
    store.add("x", Tensor::scalar(3.0));
    Graph g;
    Var x = g.param(store, "x");
    g.backward(ops::mul(ops::stop_gradient(x), x));
    CHECK(store.get("x").grad.item() == 3.0);
  }
  SUBCASE("sg(x^2) at 5 has derivative exactly 0") {
    ParameterStore store;
    store.add("x", Tensor::scalar(5.0));
    Graph g;
    Var x = g.param(store, "x");
    Var y = ops::stop_gradient(ops::square(x));
    g.backward(ops::add(y, ops::scale(ops::stop_gradient(x), 2.0)));
    CHECK(store.get("x").grad.item() == 0.0);
    CHECK(std::signbit(store.get("x").grad.item()) == false);
  }
  SUBCASE("forward identity is bit-exact") {
    Graph g;
    Rng rng(3);
    Tensor t = normal_tensor(4, 3, 10.0, rng);
    CHECK(bit_equal(ops::stop_gradient(g.constant(t)).value(), t));
  }
}

TEST_CASE("finite differences over every op") {
  ParameterStore store;
  Rng rng(11);
  store.add("a", normal_tensor(3, 4, 0.5, rng));
  store.add("b", normal_tensor(4, 2, 0.5, rng));
  store.add("bias", normal_tensor(1, 2, 0.5, rng));
  store.add("col", normal_tensor(3, 1, 0.5, rng));
  store.add("s", Tensor::scalar(0.7));
  store.add("sd", Tensor(3, 2, 0.8));
  auto forward = [&](Graph& g) {
    Var a = g.param(store, "a");
    Var m = ops::add_row(ops::matmul(a, g.param(store, "b")), g.param(store, "bias"));  // 3x2
    Var t = ops::tanh(m);
    Var e = ops::exp(ops::scale(t, 0.5));
    Var sm = ops::softmax_rows(ops::mul_col(e, g.param(store, "col")));
    Var lg = ops::log(ops::add_scalar(ops::square(sm), 0.1));
    Var cl = ops::clip(ops::scale_by(lg, g.param(store, "s")), -1.2, 0.0);
    Var mn = ops::minimum(cl, ops::neg(t));
    Var lp = ops::gaussian_logpdf(mn, ops::transpose(ops::transpose(t)), g.param(store, "sd"));
    Var cat = ops::concat_cols(std::vector<Var>{lp, ops::sum_cols(a)});
    const std::size_t rows[] = {2, 0, 2};
    Var gathered = ops::gather_rows(cat, rows);
    Var stacked = ops::concat_rows(std::vector<Var>{gathered, ops::slice_rows(cat, 1, 2)});
    Var replaced = ops::replace_rows(stacked, 1, ops::mean_rows(stacked));
    return ops::add(ops::mean(replaced), ops::element(ops::sub(replaced, stacked), 1, 0));
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
  const auto r = check_gradients(store, loss, backward);
  INFO(r.worst);
  CHECK(r.max_rel < 1e-6);
}

TEST_CASE("backward is deterministic") {
  ParameterStore store;
  Rng rng(5);
  store.add("w", normal_tensor(5, 5, 1.0, rng));
  auto run = [&] {
    store.zero_grad();
    Graph g;
    Var w = g.param(store, "w");
    g.backward(ops::sum(ops::tanh(ops::matmul(w, w))));
    return store.get("w").grad;
  };
  CHECK(bit_equal(run(), run()));
}

TEST_CASE("no-grad scope leaves parameters without gradient") {
  ParameterStore store;
  store.add("w", Tensor(1, 1, 2.0));
  Graph g;
  Var detached;
  {
    Graph::NoGradScope scope(g);
    detached = g.param(store, "w");
  }
  Var live = g.param(store, "w");
  CHECK_FALSE(detached.requires_grad());
  CHECK(live.requires_grad());
  g.backward(ops::add(ops::square(live), detached));
  CHECK(store.get("w").grad.item() == 4.0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  ParameterStore store;
  Rng rng(7);
  store.add("velocity/w0", normal_tensor(3, 4, 1.0, rng));
  store.add("encoder/embed", normal_tensor(2, 5, 1.0, rng));
  store.add("tiny", Tensor(1, 1, -0.0));
  const auto path = temp_path("roundtrip.ckpt");
  save_checkpoint(store, path);
  const ParameterStore loaded = load_checkpoint(path);
  CHECK(bit_equal(store, loaded));
  CHECK(std::signbit(loaded.get("tiny").value[0]));
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint layout and version check") {
  ParameterStore store;
  store.add("p", Tensor(1, 2, {1.5, -2.0}));
  const auto path = temp_path("layout.ckpt");
  save_checkpoint(store, path);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  // magic 8 + version 4 + count 4 + name len 4 + name 1 + ndims 4 + dims 16 + payload 16
  REQUIRE(bytes.size() == 8 + 4 + 4 + 4 + 1 + 4 + 16 + 16);
  CHECK(bytes.substr(0, 8) == "FEDITCKP");
  CHECK(static_cast<unsigned char>(bytes[8]) == kCheckpointVersion);
  double first = 0.0;
  std::memcpy(&first, bytes.data() + bytes.size() - 16, 8);
  CHECK(first == 1.5);

  bytes[8] = static_cast<char>(kCheckpointVersion + 1);
  {
    std::ofstream out(path, std::ios::binary);
    out << bytes;
  }
  CHECK(code_of([&] { load_checkpoint(path); }) == ErrorCode::version_mismatch);
  std::filesystem::remove(path);
  CHECK(code_of([&] { load_checkpoint(path); }) == ErrorCode::io);
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
  ParameterStore store;
  store.add("w", Tensor(1, 2, {1.0, -1.0}));
  store.get("w").grad = Tensor(1, 2, {0.5, -2.0});
  Adam adam;
  adam.step(store, 0.1);
  // Bias-corrected m/sqrt(v) = g/|g| on the first step.
  CHECK(store.get("w").value[0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(store.get("w").value[1] == doctest::Approx(-0.9).epsilon(1e-7));
}

TEST_CASE("learning-rate schedule and gradient clipping") {
  CHECK(scheduled_lr(1.0, 0, 100, 0.1) == doctest::Approx(0.1));
  CHECK(scheduled_lr(1.0, 9, 100, 0.1) == doctest::Approx(1.0));
  CHECK(scheduled_lr(1.0, 99, 100, 0.1) < 0.01);
  CHECK(scheduled_lr(1.0, 55, 100, 0.0) < scheduled_lr(1.0, 45, 100, 0.0));

  ParameterStore store;
  store.add("a", Tensor(1, 2));
  store.get("a").grad = Tensor(1, 2, {3.0, 4.0});
  CHECK(clip_grad_norm(store, 1.0) == doctest::Approx(5.0));
  CHECK(store.get("a").grad[0] == doctest::Approx(0.6));
  CHECK(store.get("a").grad[1] == doctest::Approx(0.8));
}
