#include "flowedit/encoder.hpp"

#include <cmath>
#include <sstream>

#include "flowedit/error.hpp"

namespace flowedit {

namespace {

std::string layer_key(std::string_view ns, std::size_t layer, std::string_view leaf = {}) {
  std::string key = std::string(ns) + "/L" + std::to_string(layer);
  if (!leaf.empty()) key += "/" + std::string(leaf);
  return key;
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace

TokenFocusEncoder::TokenFocusEncoder(EncoderConfig config) : config_(config) {
  require(config_.vocab > 0 && config_.dim > 0 && config_.layers > 0, ErrorCode::config,
          "encoder dimensions must be positive");
  require(config_.focus_tokens >= 1, ErrorCode::config, "focus_tokens must be >= 1");
  require(config_.max_len >= 1 && config_.max_len <= 32, ErrorCode::config, "max_len must be in [1, 32]");
}

void TokenFocusEncoder::init(ParameterStore& store, Rng& rng) const {
  const std::size_t d = config_.dim;
  const double unit = 1.0 / std::sqrt(static_cast<double>(d));
  store.add("encoder/embed", normal_tensor(config_.vocab, d, 1.0, rng));
  store.add("encoder/position", normal_tensor(config_.max_len, d, 0.3, rng));
  for (std::size_t i = 0; i < config_.layers; ++i) {
    // Small query/key weights keep initial attention close to uniform.
    store.add(layer_key("encoder", i, "wq"), normal_tensor(d, d, 0.05 * unit, rng));
    store.add(layer_key("encoder", i, "wk"), normal_tensor(d, d, 0.05 * unit, rng));
    store.add(layer_key("encoder", i, "wv"), normal_tensor(d, d, unit, rng));
    store.add(layer_key("encoder", i, "wo"), normal_tensor(d, d, 0.5 * unit, rng));
    store.add(layer_key("encoder", i, "w1"), normal_tensor(d, d, unit, rng));
    store.add(layer_key("encoder", i, "b1"), Tensor(1, d));
    store.add(layer_key("encoder", i, "w2"), normal_tensor(d, d, 0.5 * unit, rng));
    store.add(layer_key("encoder", i, "b2"), Tensor(1, d));
  }
  for (std::size_t i = 0; i < config_.layers; ++i) {
    store.add(layer_key("predictor", i, "w"), normal_tensor(d, 1, 0.1, rng));
    store.add(layer_key("predictor", i, "b"), Tensor(1, 1));
  }
  for (std::size_t i = 0; i < config_.layers; ++i)
    store.add(layer_key("soft_tokens", i), normal_tensor(config_.focus_tokens, d, 0.5, rng));
}

Var TokenFocusEncoder::soft_tokens(Graph& g, ParameterStore& store, std::size_t layer) const {
  return g.param(store, layer_key("soft_tokens", layer));
}

PositionPrediction TokenFocusEncoder::predict_pos(Graph& g, ParameterStore& store, std::size_t layer, Var h) const {
  require(h.rows() >= 1, ErrorCode::invalid_argument, "predict_pos: empty sequence");
  const std::size_t l = h.rows();
  const std::size_t xi = config_.focus_tokens;
  if (l <= xi) return {std::nullopt, Var()};
  const std::size_t windows = l - xi + 1;
  Tensor window_mean(windows, l);
  for (std::size_t p = 0; p < windows; ++p)
    for (std::size_t j = p; j < p + xi; ++j) window_mean(p, j) = 1.0 / static_cast<double>(xi);
  Var pooled = ops::matmul(g.constant(std::move(window_mean)), h);
  Var logits = ops::add_row(ops::matmul(pooled, g.param(store, layer_key("predictor", layer, "w"))),
                            g.param(store, layer_key("predictor", layer, "b")));
  Var logits_row = ops::transpose(logits);
  const std::size_t pos = argmax_lowest(logits_row.value().values());
  require(pos + xi <= l, ErrorCode::out_of_range, "predicted position outside [0, l - xi]");
  return {pos, ops::softmax_rows(logits_row)};
}

Var TokenFocusEncoder::layer_forward(Graph& g, ParameterStore& store, std::size_t layer, Var h,
                                     Tensor* attention) const {
  auto w = [&](std::string_view leaf) { return g.param(store, layer_key("encoder", layer, leaf)); };
  Var q = ops::matmul(h, w("wq"));
  Var k = ops::matmul(h, w("wk"));
  Var v = ops::matmul(h, w("wv"));
  Var scores = ops::scale(ops::matmul(q, ops::transpose(k)), 1.0 / std::sqrt(static_cast<double>(config_.dim)));
  Var attn = ops::softmax_rows(scores);
  if (attention != nullptr) *attention = attn.value();
  Var mixed = ops::add(h, ops::matmul(ops::matmul(attn, v), w("wo")));
  Var hidden = ops::tanh(ops::add_row(ops::matmul(mixed, w("w1")), w("b1")));
  return ops::add(mixed, ops::add_row(ops::matmul(hidden, w("w2")), w("b2")));
}

Var TokenFocusEncoder::encode_sequence(Graph& g, ParameterStore& store, std::span<const int> tokens, bool relocation,
                                       std::vector<LayerTrace>* trace, InjectMode mode) const {
  require(!tokens.empty() && tokens.size() <= config_.max_len, ErrorCode::invalid_argument,
          "instruction length " + std::to_string(tokens.size()) + " outside [1, " +
              std::to_string(config_.max_len) + "]");
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (int t : tokens) {
    require(t >= 0 && static_cast<std::size_t>(t) < config_.vocab, ErrorCode::invalid_argument,
            "unknown token id " + std::to_string(t));
    ids.push_back(static_cast<std::size_t>(t));
  }
  Var h = ops::add(ops::gather_rows(g.param(store, "encoder/embed"), ids),
                   ops::slice_rows(g.param(store, "encoder/position"), 0, tokens.size()));
  if (trace != nullptr) trace->clear();
  for (std::size_t i = 0; i < config_.layers; ++i) {
    LayerTrace layer_trace;
    if (relocation) {
      PositionPrediction pred = predict_pos(g, store, i, h);
      if (pred.pos) {
        Var bank = soft_tokens(g, store, i);
        h = mode == InjectMode::relaxed ? inject_relaxed(h, bank, pred.probs)
                                        : inject_straight_through(h, *pred.pos, bank, pred.probs);
        layer_trace.pos = pred.pos;
        layer_trace.position_probs = pred.probs.value();
      }
    }
    h = layer_forward(g, store, i, h, trace != nullptr ? &layer_trace.attention : nullptr);
    if (trace != nullptr) trace->push_back(std::move(layer_trace));
  }
  return h;
}

Var TokenFocusEncoder::encode(Graph& g, ParameterStore& store, std::span<const int> tokens, bool relocation,
                              std::vector<LayerTrace>* trace) const {
  return ops::mean_rows(encode_sequence(g, store, tokens, relocation, trace));
}

Var inject(Var h, std::size_t pos, Var block) {
  require(pos + block.rows() <= h.rows(), ErrorCode::out_of_range,
          "inject: window [" + std::to_string(pos) + ", " + std::to_string(pos + block.rows()) +
              ") exceeds sequence length " + std::to_string(h.rows()));
  return ops::replace_rows(h, pos, block);
}

Var inject_straight_through(Var h, std::size_t pos, Var block, Var probs) {
  const std::size_t windows = probs.cols();
  require(probs.rows() == 1 && windows == h.rows() - block.rows() + 1 && pos < windows, ErrorCode::shape_mismatch,
          "inject_straight_through: position distribution does not match sequence");
  Var hard = inject(h, pos, block);
  Graph& g = h.graph();
  return g.record(hard.value(), {hard, h, block, probs}, [hard, h, block, probs, windows](Graph& g, const Tensor& up) {
    g.accumulate(hard, up);
    if (!probs.requires_grad()) return;
    const std::size_t xi = block.rows();
    Tensor dprobs(1, windows);
    for (std::size_t p = 0; p < windows; ++p) {
      double dot = 0.0;
      for (std::size_t r = 0; r < up.rows(); ++r) {
        const bool replaced = r >= p && r < p + xi;
        for (std::size_t c = 0; c < up.cols(); ++c)
          dot += up(r, c) * (replaced ? block.value()(r - p, c) : h.value()(r, c));
      }
      dprobs[p] = dot;
    }
    g.accumulate(probs, dprobs);
  });
}

Var inject_relaxed(Var h, Var block, Var probs) {
  const std::size_t windows = probs.cols();
  require(probs.rows() == 1 && windows == h.rows() - block.rows() + 1, ErrorCode::shape_mismatch,
          "inject_relaxed: position distribution does not match sequence");
  Var out = ops::scale_by(inject(h, 0, block), ops::element(probs, 0, 0));
  for (std::size_t p = 1; p < windows; ++p)
    out = ops::add(out, ops::scale_by(inject(h, p, block), ops::element(probs, 0, p)));
  return out;
}

Tensor focus_scores(const Tensor& tokens, const Tensor& attention) {
  require(attention.rows() == attention.cols(), ErrorCode::shape_mismatch, "focus_scores: attention map must be square");
  require(tokens.cols() == attention.rows(), ErrorCode::shape_mismatch,
          "focus_scores: tokens " + tokens.shape_string() + " do not conform to attention " + attention.shape_string());
  Tensor out(tokens.rows(), attention.cols());
  for (std::size_t i = 0; i < tokens.rows(); ++i)
    for (std::size_t j = 0; j < tokens.cols(); ++j)
      for (std::size_t c = 0; c < attention.cols(); ++c) out(i, c) += tokens(i, j) * attention(j, c);
  return out;
}

std::vector<ProbeRow> attention_probe(const TokenFocusEncoder& encoder, ParameterStore& store,
                                      std::span<const int> tokens, bool relocation) {
  Graph g;
  Graph::NoGradScope no_grad(g);
  std::vector<LayerTrace> trace;
  encoder.encode_sequence(g, store, tokens, relocation, &trace);
  std::vector<ProbeRow> rows;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const Tensor& a = trace[i].attention;
    ProbeRow row;
    row.layer = i;
    row.pos = trace[i].pos;
    std::vector<double> received(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
      double entropy = 0.0;
      for (std::size_t c = 0; c < a.cols(); ++c) {
        received[c] += a(r, c);
        if (a(r, c) > 0.0) entropy -= a(r, c) * std::log(a(r, c));
      }
      row.row_entropies.push_back(entropy);
      row.mean_entropy += entropy / static_cast<double>(a.rows());
    }
    row.argmax_position = argmax_lowest(received);
    row.argmax_token = tokens[row.argmax_position];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string probe_csv(std::span<const ProbeRow> rows) {
  std::ostringstream out;
  out.precision(17);
  out << "layer,pos,argmax_position,argmax_token,entropy\n";
  for (const auto& r : rows) {
    out << r.layer << ',' << (r.pos ? std::to_string(*r.pos) : std::string("none")) << ',' << r.argmax_position << ','
        << r.argmax_token << ',' << r.mean_entropy << '\n';
  }
  return out.str();
}

}  // namespace flowedit
