#include "flowedit/pretrain.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "flowedit/error.hpp"
#include "flowedit/optim.hpp"

namespace flowedit {

namespace {

// Minibatch loss mean_rows ||v(x_t, t, c) - (noise - target)||^2.
Var batch_loss(Graph& g, const EditPolicy& policy, ParameterStore& store, std::span<const EditInstance> batch,
               Rng& rng) {
  const std::size_t n = batch.size();
  Tensor x_t(n, 2);
  Tensor t(n, 1);
  Tensor target_velocity(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    const double tr = uniform01(rng);
    const double nx = standard_normal(rng);
    const double ny = standard_normal(rng);
    const Point& y = batch[r].target;
    t[r] = tr;
    x_t(r, 0) = (1.0 - tr) * y.x + tr * nx;
    x_t(r, 1) = (1.0 - tr) * y.y + tr * ny;
    target_velocity(r, 0) = nx - y.x;
    target_velocity(r, 1) = ny - y.y;
  }
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  Var cond = policy.condition(g, store, batch, rows);
  Var v = policy.velocity(g, store, g.constant(std::move(x_t)), g.constant(std::move(t)), cond);
  Var err = ops::sub(v, g.constant(std::move(target_velocity)));
  return ops::scale(ops::sum(ops::square(err)), 1.0 / static_cast<double>(n));
}

}  // namespace

PretrainResult cfm_pretrain(const EditPolicy& policy, ParameterStore& store, std::span<const EditInstance> data,
                            const PretrainOptions& options) {
  require(!data.empty(), ErrorCode::invalid_argument, "pretraining dataset is empty");
  require(options.batch_size > 0, ErrorCode::config, "batch size must be positive");
  PretrainResult result;
  Rng rng(derive_seed(options.seed, {0x5052}));
  Adam adam;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batches_per_epoch = (data.size() + options.batch_size - 1) / options.batch_size;
  const std::size_t total_steps = batches_per_epoch * options.epochs;
  std::size_t step = 0;
  std::vector<EditInstance> batch;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < data.size(); start += options.batch_size) {
      batch.clear();
      for (std::size_t k = start; k < std::min(start + options.batch_size, data.size()); ++k)
        batch.push_back(data[order[k]]);
      store.zero_grad();
      Graph g;
      Var loss = batch_loss(g, policy, store, batch, rng);
      require(loss.value().all_finite(), ErrorCode::non_finite,
              "pretraining diverged at epoch " + std::to_string(epoch));
      g.backward(loss);
      clip_grad_norm(store, options.grad_clip);
      adam.step(store, scheduled_lr(options.lr, step++, total_steps, 0.05));
      loss_sum += loss.value().item();
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(batches_per_epoch));
  }
  return result;
}

double cfm_loss(const EditPolicy& policy, ParameterStore& store, std::span<const EditInstance> data,
                std::uint64_t seed) {
  require(!data.empty(), ErrorCode::invalid_argument, "dataset is empty");
  Rng rng(derive_seed(seed, {0x4556}));
  Graph g;
  Graph::NoGradScope no_grad(g);
  return batch_loss(g, policy, store, data, rng).value().item();
}

}  // namespace flowedit
