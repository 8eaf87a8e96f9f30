#pragma once

#include <cstddef>
#include <vector>

#include "flowedit/parameter_store.hpp"

namespace flowedit {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Adam over every parameter of a store. Moment buffers follow the store's
// insertion order, so the store layout must not change between steps.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(ParameterStore& store, double lr);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  AdamOptions options_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t t_ = 0;
};

// Linear warmup over the first `warmup_fraction` of `total` iterations, then
// cosine decay to zero.
double scheduled_lr(double base_lr, std::size_t iteration, std::size_t total, double warmup_fraction);

// Rescales all gradients so their global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_grad_norm(ParameterStore& store, double max_norm);

}  // namespace flowedit
