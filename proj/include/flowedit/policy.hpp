#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowedit/dataset.hpp"
#include "flowedit/encoder.hpp"
#include "flowedit/sampler.hpp"
#include "flowedit/velocity_net.hpp"

namespace flowedit {

struct PolicyConfig {
  EncoderConfig encoder;
  std::size_t hidden = 32;
  std::size_t depth = 2;
  bool relocation = true;
};

// Instruction encoder feeding a conditional velocity network. The condition
// of a row is [source_x, source_y, mean-pooled instruction embedding].
class EditPolicy {
 public:
  explicit EditPolicy(PolicyConfig config);

  const PolicyConfig& config() const noexcept { return config_; }
  const TokenFocusEncoder& encoder() const noexcept { return encoder_; }
  const VelocityNet& net() const noexcept { return net_; }

  void init(ParameterStore& store, std::uint64_t seed) const;

  // One condition row per entry of `rows`, each an index into `instances`.
  // Each distinct instruction is encoded once per call.
  Var condition(Graph& g, ParameterStore& store, std::span<const EditInstance> instances,
                std::span<const std::size_t> rows) const;

  Var velocity(Graph& g, ParameterStore& store, Var x, Var t, Var cond) const;

  // Field over a fixed set of condition rows; x must have cond.rows() rows.
  VelocityField field(ParameterStore& store, Var cond) const;

 private:
  PolicyConfig config_;
  TokenFocusEncoder encoder_;
  VelocityNet net_;
};

// Row index list [0, 0, ..., 1, 1, ...] with `repeat` copies of each of `count` instances.
std::vector<std::size_t> repeat_rows(std::size_t count, std::size_t repeat);

Tensor points_tensor(std::span<const Point> points);
Point point_at(const Tensor& t, std::size_t row);

}  // namespace flowedit
