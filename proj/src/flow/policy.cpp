#include "flowedit/policy.hpp"

#include <array>
#include <map>

#include "flowedit/error.hpp"

namespace flowedit {

EditPolicy::EditPolicy(PolicyConfig config)
    : config_(config),
      encoder_(config.encoder),
      net_(VelocityNetConfig{2 + config.encoder.dim, config.hidden, config.depth}) {}

void EditPolicy::init(ParameterStore& store, std::uint64_t seed) const {
  Rng enc_rng(derive_seed(seed, {1}));
  Rng net_rng(derive_seed(seed, {2}));
  encoder_.init(store, enc_rng);
  net_.init(store, net_rng);
}

Var EditPolicy::condition(Graph& g, ParameterStore& store, std::span<const EditInstance> instances,
                          std::span<const std::size_t> rows) const {
  std::map<std::vector<int>, std::size_t> slot;
  std::vector<Var> embeddings;
  std::vector<std::size_t> embedding_row(rows.size());
  Tensor sources(rows.size(), 2);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < instances.size(), ErrorCode::invalid_argument, "condition row refers to missing instance");
    const EditInstance& inst = instances[rows[r]];
    auto [it, inserted] = slot.try_emplace(inst.instruction.tokens, embeddings.size());
    if (inserted) embeddings.push_back(encoder_.encode(g, store, inst.instruction.tokens, config_.relocation));
    embedding_row[r] = it->second;
    sources(r, 0) = inst.source.x;
    sources(r, 1) = inst.source.y;
  }
  Var table = ops::concat_rows(embeddings);
  const std::array<Var, 2> parts{g.constant(std::move(sources)), ops::gather_rows(table, embedding_row)};
  return ops::concat_cols(parts);
}

Var EditPolicy::velocity(Graph& g, ParameterStore& store, Var x, Var t, Var cond) const {
  return net_.forward(g, store, x, t, cond);
}

VelocityField EditPolicy::field(ParameterStore& store, Var cond) const {
  return [this, &store, cond](Graph& g, Var x, double t) {
    return net_.forward(g, store, x, g.constant(Tensor(x.rows(), 1, t)), cond);
  };
}

std::vector<std::size_t> repeat_rows(std::size_t count, std::size_t repeat) {
  std::vector<std::size_t> rows;
  rows.reserve(count * repeat);
  for (std::size_t b = 0; b < count; ++b)
    for (std::size_t i = 0; i < repeat; ++i) rows.push_back(b);
  return rows;
}

Tensor points_tensor(std::span<const Point> points) {
  Tensor out(points.size(), 2);
  for (std::size_t r = 0; r < points.size(); ++r) {
    out(r, 0) = points[r].x;
    out(r, 1) = points[r].y;
  }
  return out;
}

Point point_at(const Tensor& t, std::size_t row) { return {t(row, 0), t(row, 1)}; }

}  // namespace flowedit
