#include "flowedit/velocity_net.hpp"

#include <array>
#include <cmath>
#include <string>

#include "flowedit/error.hpp"

namespace flowedit {

VelocityNet::VelocityNet(VelocityNetConfig config) : config_(config) {
  require(config_.hidden > 0 && config_.depth >= 1, ErrorCode::config, "velocity net needs depth >= 1 and hidden > 0");
}

void VelocityNet::init(ParameterStore& store, Rng& rng) const {
  std::size_t fan_in = input_dim();
  for (std::size_t l = 0; l <= config_.depth; ++l) {
    const bool last = l == config_.depth;
    const std::size_t fan_out = last ? 2 : config_.hidden;
    const double scale = (last ? 0.1 : 1.0) / std::sqrt(static_cast<double>(fan_in));
    store.add("velocity/w" + std::to_string(l), normal_tensor(fan_in, fan_out, scale, rng));
    store.add("velocity/b" + std::to_string(l), Tensor(1, fan_out));
    fan_in = fan_out;
  }
}

Var VelocityNet::forward(Graph& g, ParameterStore& store, Var x, Var t, Var cond) const {
  require(x.cols() == 2 && t.cols() == 1 && cond.cols() == config_.cond_dim, ErrorCode::shape_mismatch,
          "velocity net inputs have wrong widths");
  require(t.rows() == x.rows() && cond.rows() == x.rows(), ErrorCode::shape_mismatch,
          "velocity net inputs have different row counts");
  const std::array<Var, 3> parts{x, t, cond};
  Var h = ops::concat_cols(parts);
  for (std::size_t l = 0; l <= config_.depth; ++l) {
    Var w = g.param(store, "velocity/w" + std::to_string(l));
    Var b = g.param(store, "velocity/b" + std::to_string(l));
    h = ops::add_row(ops::matmul(h, w), b);
    if (l < config_.depth) h = ops::tanh(h);
  }
  return h;
}

}  // namespace flowedit
