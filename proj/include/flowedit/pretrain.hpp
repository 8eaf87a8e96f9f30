#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowedit/policy.hpp"

namespace flowedit {

struct PretrainOptions {
  std::size_t epochs = 60;
  double lr = 3e-3;
  std::size_t batch_size = 64;
  double grad_clip = 1.0;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  // Mean minibatch loss per epoch.
  std::vector<double> epoch_loss;
};

// Conditional flow matching on paired data with the path
// x_t = (1 - t) * target + t * noise. The regression target for v is
// noise - target, i.e. dx_t/dt, which is the direction the sampler's
// x_{i-1} = x_i - v / T update integrates backwards.
PretrainResult cfm_pretrain(const EditPolicy& policy, ParameterStore& store, std::span<const EditInstance> data,
                            const PretrainOptions& options);

// Loss over the whole dataset at a fixed (seeded) draw of t and noise.
double cfm_loss(const EditPolicy& policy, ParameterStore& store, std::span<const EditInstance> data,
                std::uint64_t seed);

}  // namespace flowedit
