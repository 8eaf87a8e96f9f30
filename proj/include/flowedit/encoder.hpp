#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowedit/graph.hpp"
#include "flowedit/rng.hpp"

namespace flowedit {

struct EncoderConfig {
  std::size_t vocab = 23;
  std::size_t dim = 16;
  std::size_t layers = 3;
  // Number of consecutive tokens replaced by soft tokens at each layer.
  std::size_t focus_tokens = 4;
  std::size_t max_len = 32;
};

struct PositionPrediction {
  // Empty when the sequence is too short to hold a window (l <= focus_tokens).
  std::optional<std::size_t> pos;
  // 1 x (l - focus_tokens + 1) distribution over window starts.
  Var probs;
};

struct LayerTrace {
  std::optional<std::size_t> pos;
  Tensor position_probs;
  Tensor attention;  // l x l, rows sum to one
};

enum class InjectMode {
  // Hard replacement at the argmax window; backward routes the gradient to the
  // position distribution as if the window had been softly selected.
  straight_through,
  // Probability-weighted mixture of all windows. Differentiable everywhere;
  // used to check the straight-through gradient.
  relaxed,
};

// Single-head self-attention stack over instruction tokens with per-layer
// token focus relocation. Parameters live under "encoder/", "predictor/" and
// "soft_tokens/".
class TokenFocusEncoder {
 public:
  explicit TokenFocusEncoder(EncoderConfig config);

  const EncoderConfig& config() const noexcept { return config_; }

  void init(ParameterStore& store, Rng& rng) const;

  // Final-layer token states (l x dim).
  Var encode_sequence(Graph& g, ParameterStore& store, std::span<const int> tokens, bool relocation,
                      std::vector<LayerTrace>* trace = nullptr,
                      InjectMode mode = InjectMode::straight_through) const;

  // Mean-pooled final layer (1 x dim).
  Var encode(Graph& g, ParameterStore& store, std::span<const int> tokens, bool relocation,
             std::vector<LayerTrace>* trace = nullptr) const;

  PositionPrediction predict_pos(Graph& g, ParameterStore& store, std::size_t layer, Var h) const;

  // Soft tokens of one layer (focus_tokens x dim).
  Var soft_tokens(Graph& g, ParameterStore& store, std::size_t layer) const;

 private:
  Var layer_forward(Graph& g, ParameterStore& store, std::size_t layer, Var h, Tensor* attention) const;

  EncoderConfig config_;
};

// Rows [pos, pos + block.rows()) of h replaced by `block`; other rows untouched.
Var inject(Var h, std::size_t pos, Var block);

// Hard replacement with a straight-through gradient into `probs`
// (1 x number-of-windows): the backward pass treats the output as
// sum_p probs[p] * inject(h, p, block).
Var inject_straight_through(Var h, std::size_t pos, Var block, Var probs);

Var inject_relaxed(Var h, Var block, Var probs);

// tokens (focus x m) times attention (l x l); requires m == l.
Tensor focus_scores(const Tensor& tokens, const Tensor& attention);

struct ProbeRow {
  std::size_t layer = 0;
  std::optional<std::size_t> pos;
  // Token position receiving the most attention mass (column sum of A).
  std::size_t argmax_position = 0;
  int argmax_token = 0;
  double mean_entropy = 0.0;
  std::vector<double> row_entropies;
};

std::vector<ProbeRow> attention_probe(const TokenFocusEncoder& encoder, ParameterStore& store,
                                      std::span<const int> tokens, bool relocation);

std::string probe_csv(std::span<const ProbeRow> rows);

}  // namespace flowedit
