#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "flowedit/parameter_store.hpp"
#include "flowedit/tensor.hpp"

namespace flowedit {

class Graph;

// Handle to a node recorded in a Graph. Cheap to copy; valid while the graph
// lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;
  Graph& graph() const { return *graph_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

// Define-by-run tape. Nodes are appended in creation order, so parents always
// precede children and a reverse sweep is a reverse topological order.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var constant(double value) { return constant(Tensor::scalar(value)); }

  // Leaf bound to a stored parameter. Repeated calls for the same parameter
  // (and the same recording state) return the same node. Gradients are accumulated into Parameter::grad by
  // backward().
  Var param(ParameterStore& store, std::string_view name);
  Var param(Parameter& p);

  // Reverse sweep from a 1x1 root; accumulates into bound parameter grads.
  void backward(Var root);

  // Gradient of a node after backward(); zeros when nothing reached it.
  Tensor grad(Var v) const;

  bool recording() const noexcept { return recording_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // While alive, new nodes never require gradients.
  class NoGradScope {
   public:
    explicit NoGradScope(Graph& g) : graph_(g), saved_(g.recording_) { g.recording_ = false; }
    ~NoGradScope() { graph_.recording_ = saved_; }
    NoGradScope(const NoGradScope&) = delete;
    NoGradScope& operator=(const NoGradScope&) = delete;

   private:
    Graph& graph_;
    bool saved_;
  };

  using BackwardFn = std::function<void(Graph&, const Tensor& upstream)>;

  // Op authoring interface used by the op library.
  Var record(Tensor value, std::vector<Var> parents, BackwardFn backward);
  void accumulate(Var target, const Tensor& contribution);
  void accumulate_at(Var target, std::size_t index, double contribution);

 private:
  friend class Var;
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> detached_param_nodes_;
  bool recording_ = true;
};

// Op library. Every op validates shapes, checks its output for non-finite
// values and records a backward rule when any input requires gradients.
namespace ops {

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// a (n x c) + bias (1 x c) broadcast over rows.
Var add_row(Var a, Var bias);
// a (n x c) * column (n x 1) broadcast over columns.
Var mul_col(Var a, Var column);
// a * s where s is 1x1.
Var scale_by(Var a, Var s);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var neg(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var softmax_rows(Var a);
Var sum(Var a);
Var mean(Var a);
// Row sums: (n x c) -> (n x 1).
Var sum_cols(Var a);
// Column means: (n x c) -> (1 x c).
Var mean_rows(Var a);
// Zero gradient outside [lo, hi], identity inside (boundaries inclusive).
Var clip(Var a, double lo, double hi);
// Elementwise minimum; ties route the gradient to `a`.
Var minimum(Var a, Var b);
// Elementwise Gaussian log-density of x under N(mean, std^2).
Var gaussian_logpdf(Var x, Var mean, Var std);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var gather_rows(Var a, std::span<const std::size_t> rows);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var element(Var a, std::size_t r, std::size_t c);
// Copy of `a` with rows [begin, begin + rows(block)) replaced by `block`.
Var replace_rows(Var a, std::size_t begin, Var block);
// Forward identity; contributes nothing to the gradient of its input.
Var stop_gradient(Var a);

}  // namespace ops

}  // namespace flowedit
