#pragma once

#include <cstddef>

#include "flowedit/graph.hpp"
#include "flowedit/rng.hpp"

namespace flowedit {

struct VelocityNetConfig {
  // Width of the conditioning vector appended to (x, t).
  std::size_t cond_dim = 18;
  std::size_t hidden = 32;
  std::size_t depth = 2;
};

// tanh MLP v(x, t, c): input [x (2), t (1), c (cond_dim)], output 2.
// Parameters live under "velocity/".
class VelocityNet {
 public:
  explicit VelocityNet(VelocityNetConfig config);

  const VelocityNetConfig& config() const noexcept { return config_; }
  std::size_t input_dim() const noexcept { return 3 + config_.cond_dim; }

  void init(ParameterStore& store, Rng& rng) const;

  // x: n x 2, t: n x 1, cond: n x cond_dim.
  Var forward(Graph& g, ParameterStore& store, Var x, Var t, Var cond) const;

 private:
  VelocityNetConfig config_;
};

}  // namespace flowedit
