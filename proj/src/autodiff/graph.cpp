#include "flowedit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flowedit/error.hpp"

namespace flowedit {

const Tensor& Var::value() const { return graph_->nodes_[id_].value; }

bool Var::requires_grad() const { return graph_->nodes_[id_].requires_grad; }

Var Graph::constant(Tensor value) { return record(std::move(value), {}, nullptr); }

Var Graph::param(ParameterStore& store, std::string_view name) { return param(store.get(name)); }

Var Graph::param(Parameter& p) {
  auto& cache = recording_ ? param_nodes_ : detached_param_nodes_;
  if (auto it = cache.find(&p); it != cache.end()) return Var(this, it->second);
  Var v = record(p.value, {}, nullptr);
  Node& node = nodes_[v.id()];
  node.requires_grad = recording_;
  node.param = recording_ ? &p : nullptr;
  cache.emplace(&p, v.id());
  return v;
}

Var Graph::record(Tensor value, std::vector<Var> parents, BackwardFn backward) {
  require(value.all_finite(), ErrorCode::non_finite,
          "non-finite value produced by graph op (shape " + value.shape_string() + ")");
  Node node;
  node.value = std::move(value);
  if (recording_ && backward) {
    node.requires_grad = std::any_of(parents.begin(), parents.end(),
                                     [](const Var& p) { return p.requires_grad(); });
    if (node.requires_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Graph::accumulate(Var target, const Tensor& contribution) {
  Node& node = nodes_[target.id()];
  if (!node.requires_grad) return;
  if (node.grad.empty()) node.grad = Tensor(node.value.rows(), node.value.cols());
  for (std::size_t i = 0; i < contribution.size(); ++i) node.grad[i] += contribution[i];
}

void Graph::accumulate_at(Var target, std::size_t index, double contribution) {
  Node& node = nodes_[target.id()];
  if (!node.requires_grad) return;
  if (node.grad.empty()) node.grad = Tensor(node.value.rows(), node.value.cols());
  node.grad[index] += contribution;
}

Tensor Graph::grad(Var v) const {
  const Node& node = nodes_[v.id()];
  if (node.grad.empty()) return Tensor(node.value.rows(), node.value.cols());
  return node.grad;
}

void Graph::backward(Var root) {
  require(root.rows() == 1 && root.cols() == 1, ErrorCode::shape_mismatch,
          "backward root must be scalar, got " + root.value().shape_string());
  for (auto& node : nodes_) node.grad = Tensor();
  if (!root.requires_grad()) return;
  nodes_[root.id()].grad = Tensor::scalar(1.0);
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.requires_grad || node.grad.empty()) continue;
    require(node.grad.all_finite(), ErrorCode::non_finite, "non-finite gradient during backward");
    if (node.backward) node.backward(*this, node.grad);
  }
  for (auto& node : nodes_) {
    if (node.param == nullptr || node.grad.empty()) continue;
    Tensor& dst = node.param->grad;
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += node.grad[k];
  }
}

namespace ops {

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  require(a.value().same_shape(b.value()), ErrorCode::shape_mismatch,
          std::string(op) + ": shape mismatch " + a.value().shape_string() + " vs " +
              b.value().shape_string());
}

template <typename F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

// out = a * b with optional transposes; inner loop order keeps each output
// element's accumulation order independent of the number of rows.
Tensor mat_product(const Tensor& a, bool ta, const Tensor& b, bool tb) {
  const std::size_t n = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t kb = tb ? b.cols() : b.rows();
  const std::size_t m = tb ? b.rows() : b.cols();
  require(k == kb, ErrorCode::shape_mismatch,
          "matmul: inner dimensions differ " + a.shape_string() + " vs " + b.shape_string());
  Tensor out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta ? a(p, i) : a(i, p);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) out(i, j) += av * (tb ? b(j, p) : b(p, j));
    }
  }
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tensor out = mat_product(a.value(), false, b.value(), false);
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& up) {
    if (a.requires_grad()) g.accumulate(a, mat_product(up, false, b.value(), true));
    if (b.requires_grad()) g.accumulate(b, mat_product(a.value(), true, up, false));
  });
}

Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(c, r) = x(r, c);
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up) {
    Tensor d(up.cols(), up.rows());
    for (std::size_t r = 0; r < up.rows(); ++r)
      for (std::size_t c = 0; c < up.cols(); ++c) d(c, r) = up(r, c);
    g.accumulate(a, d);
  });
}

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& up) {
    g.accumulate(a, up);
    g.accumulate(b, up);
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& up) {
    g.accumulate(a, up);
    if (b.requires_grad()) g.accumulate(b, map(up, [](double v) { return -v; }));
  });
}

Var mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& up) {
    if (a.requires_grad()) {
      Tensor d = up;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= b.value()[i];
      g.accumulate(a, d);
    }
    if (b.requires_grad()) {
      Tensor d = up;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= a.value()[i];
      g.accumulate(b, d);
    }
  });
}

Var add_row(Var a, Var bias) {
  const Tensor& x = a.value();
  require(bias.rows() == 1 && bias.cols() == x.cols(), ErrorCode::shape_mismatch,
          "add_row: bias " + bias.value().shape_string() + " vs " + x.shape_string());
  Tensor out = x;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bias.value()[c];
  return a.graph().record(std::move(out), {a, bias}, [a, bias](Graph& g, const Tensor& up) {
    g.accumulate(a, up);
    if (bias.requires_grad()) {
      Tensor d(1, up.cols());
      for (std::size_t r = 0; r < up.rows(); ++r)
        for (std::size_t c = 0; c < up.cols(); ++c) d[c] += up(r, c);
      g.accumulate(bias, d);
    }
  });
}

Var mul_col(Var a, Var column) {
  const Tensor& x = a.value();
  require(column.cols() == 1 && column.rows() == x.rows(), ErrorCode::shape_mismatch,
          "mul_col: column " + column.value().shape_string() + " vs " + x.shape_string());
  Tensor out = x;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= column.value()[r];
  return a.graph().record(std::move(out), {a, column}, [a, column](Graph& g, const Tensor& up) {
    if (a.requires_grad()) {
      Tensor d = up;
      for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) *= column.value()[r];
      g.accumulate(a, d);
    }
    if (column.requires_grad()) {
      Tensor d(up.rows(), 1);
      for (std::size_t r = 0; r < up.rows(); ++r)
        for (std::size_t c = 0; c < up.cols(); ++c) d[r] += up(r, c) * a.value()(r, c);
      g.accumulate(column, d);
    }
  });
}

Var scale_by(Var a, Var s) {
  require(s.rows() == 1 && s.cols() == 1, ErrorCode::shape_mismatch, "scale_by: factor must be 1x1");
  const double f = s.value()[0];
  Tensor out = map(a.value(), [f](double v) { return v * f; });
  return a.graph().record(std::move(out), {a, s}, [a, s](Graph& g, const Tensor& up) {
    const double f = s.value()[0];
    if (a.requires_grad()) g.accumulate(a, map(up, [f](double v) { return v * f; }));
    if (s.requires_grad()) {
      double d = 0.0;
      for (std::size_t i = 0; i < up.size(); ++i) d += up[i] * a.value()[i];
      g.accumulate_at(s, 0, d);
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = map(a.value(), [factor](double v) { return v * factor; });
  return a.graph().record(std::move(out), {a}, [a, factor](Graph& g, const Tensor& up) {
    g.accumulate(a, map(up, [factor](double v) { return v * factor; }));
  });
}

Var add_scalar(Var a, double offset) {
  Tensor out = map(a.value(), [offset](double v) { return v + offset; });
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up) { g.accumulate(a, up); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var tanh(Var a) {
  Tensor out = map(a.value(), [](double v) { return std::tanh(v); });
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up) {
    Tensor d = up;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double t = std::tanh(a.value()[i]);
      d[i] *= 1.0 - t * t;
    }
    g.accumulate(a, d);
  });
}

Var exp(Var a) {
  Tensor out = map(a.value(), [](double v) { return std::exp(v); });
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up) {
    Tensor d = up;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= std::exp(a.value()[i]);
    g.accumulate(a, d);
  });
}

Var log(Var a) {
  Tensor out = map(a.value(), [](double v) { return std::log(v); });
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up) {
    Tensor d = up;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] /= a.value()[i];
    g.accumulate(a, d);
  });
}

Var square(Var a) {
  Tensor out = map(a.value(), [](double v) { return v * v; });
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up) {
    Tensor d = up;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 2.0 * a.value()[i];
    g.accumulate(a, d);
  });
}

namespace {

Tensor softmax_rows_value(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double peak = x(r, 0);
    for (std::size_t c = 1; c < x.cols(); ++c) peak = std::max(peak, x(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = std::exp(x(r, c) - peak);
      total += out(r, c);
    }
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) /= total;
  }
  return out;
}

}  // namespace

Var softmax_rows(Var a) {
  require(a.cols() > 0, ErrorCode::shape_mismatch, "softmax_rows on empty rows");
  Tensor out = softmax_rows_value(a.value());
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up) {
    const Tensor y = softmax_rows_value(a.value());
    Tensor d(y.rows(), y.cols());
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += up(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) d(r, c) = y(r, c) * (up(r, c) - dot);
    }
    g.accumulate(a, d);
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.graph().record(Tensor::scalar(total), {a}, [a](Graph& g, const Tensor& up) {
    g.accumulate(a, Tensor(a.rows(), a.cols(), up[0]));
  });
}

Var mean(Var a) {
  require(a.value().size() > 0, ErrorCode::shape_mismatch, "mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_cols(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out[r] += x(r, c);
  return a.graph().record(std::move(out), {a}, [a](Graph& g, const Tensor& up) {
    Tensor d(a.rows(), a.cols());
    for (std::size_t r = 0; r < d.rows(); ++r)
      for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) = up[r];
    g.accumulate(a, d);
  });
}

Var mean_rows(Var a) {
  const Tensor& x = a.value();
  require(x.rows() > 0, ErrorCode::shape_mismatch, "mean_rows of empty tensor");
  const double inv = 1.0 / static_cast<double>(x.rows());
  Tensor out(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += x(r, c);
  for (std::size_t c = 0; c < x.cols(); ++c) out[c] *= inv;
  return a.graph().record(std::move(out), {a}, [a, inv](Graph& g, const Tensor& up) {
    Tensor d(a.rows(), a.cols());
    for (std::size_t r = 0; r < d.rows(); ++r)
      for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) = up[c] * inv;
    g.accumulate(a, d);
  });
}

Var clip(Var a, double lo, double hi) {
  require(lo <= hi, ErrorCode::invalid_argument, "clip: lo > hi");
  Tensor out = map(a.value(), [lo, hi](double v) { return std::clamp(v, lo, hi); });
  return a.graph().record(std::move(out), {a}, [a, lo, hi](Graph& g, const Tensor& up) {
    Tensor d = up;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double v = a.value()[i];
      if (v < lo || v > hi) d[i] = 0.0;
    }
    g.accumulate(a, d);
  });
}

Var minimum(Var a, Var b) {
  check_same_shape(a, b, "minimum");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(out[i], b.value()[i]);
  return a.graph().record(std::move(out), {a, b}, [a, b](Graph& g, const Tensor& up) {
    Tensor da(up.rows(), up.cols());
    Tensor db(up.rows(), up.cols());
    for (std::size_t i = 0; i < up.size(); ++i) {
      if (a.value()[i] <= b.value()[i]) {
        da[i] = up[i];
      } else {
        db[i] = up[i];
      }
    }
    g.accumulate(a, da);
    g.accumulate(b, db);
  });
}

Var gaussian_logpdf(Var x, Var mean, Var std) {
  check_same_shape(x, mean, "gaussian_logpdf");
  const bool scalar_std = std.rows() == 1 && std.cols() == 1;
  require(scalar_std || std.value().same_shape(x.value()), ErrorCode::shape_mismatch,
          "gaussian_logpdf: std must be 1x1 or match x");
  const double half_log_two_pi = 0.5 * std::log(2.0 * std::numbers::pi);
  auto std_at = [scalar_std](const Var& s, std::size_t i) { return scalar_std ? s.value()[0] : s.value()[i]; };
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double s = std_at(std, i);
    require(s > 0.0, ErrorCode::invalid_argument, "gaussian_logpdf: std must be positive");
    const double z = (x.value()[i] - mean.value()[i]) / s;
    out[i] = -half_log_two_pi - std::log(s) - 0.5 * z * z;
  }
  return x.graph().record(std::move(out), {x, mean, std}, [x, mean, std, std_at, scalar_std](Graph& g, const Tensor& up) {
    Tensor dx(up.rows(), up.cols());
    Tensor ds(std.rows(), std.cols());
    for (std::size_t i = 0; i < up.size(); ++i) {
      const double s = std_at(std, i);
      const double diff = x.value()[i] - mean.value()[i];
      dx[i] = -up[i] * diff / (s * s);
      ds[scalar_std ? 0 : i] += up[i] * (-1.0 / s + diff * diff / (s * s * s));
    }
    if (x.requires_grad()) g.accumulate(x, dx);
    if (mean.requires_grad()) g.accumulate(mean, map(dx, [](double v) { return -v; }));
    if (std.requires_grad()) g.accumulate(std, ds);
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), ErrorCode::invalid_argument, "concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, ErrorCode::shape_mismatch, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < p.cols(); ++c) out(r, offset + c) = p.value()(r, c);
    offset += p.cols();
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return parts[0].graph().record(std::move(out), parents, [parents](Graph& g, const Tensor& up) {
    std::size_t offset = 0;
    for (const Var& p : parents) {
      if (p.requires_grad()) {
        Tensor d(p.rows(), p.cols());
        for (std::size_t r = 0; r < d.rows(); ++r)
          for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) = up(r, offset + c);
        g.accumulate(p, d);
      }
      offset += p.cols();
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), ErrorCode::invalid_argument, "concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, ErrorCode::shape_mismatch, "concat_rows: column counts differ");
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const Var& p : parts) data.insert(data.end(), p.value().values().begin(), p.value().values().end());
  std::vector<Var> parents(parts.begin(), parts.end());
  return parts[0].graph().record(Tensor(rows, cols, std::move(data)), parents, [parents](Graph& g, const Tensor& up) {
    std::size_t offset = 0;
    for (const Var& p : parents) {
      if (p.requires_grad()) {
        Tensor d(p.rows(), p.cols());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = up[offset + i];
        g.accumulate(p, d);
      }
      offset += p.value().size();
    }
  });
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  const Tensor& x = a.value();
  Tensor out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < x.rows(), ErrorCode::shape_mismatch, "gather_rows: index out of range");
    for (std::size_t c = 0; c < x.cols(); ++c) out(i, c) = x(rows[i], c);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return a.graph().record(std::move(out), {a}, [a, idx](Graph& g, const Tensor& up) {
    Tensor d(a.rows(), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < d.cols(); ++c) d(idx[i], c) += up(i, c);
    g.accumulate(a, d);
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  require(begin + count <= a.rows(), ErrorCode::shape_mismatch, "slice_rows: range out of bounds");
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = begin + i;
  return gather_rows(a, idx);
}

Var element(Var a, std::size_t r, std::size_t c) {
  require(r < a.rows() && c < a.cols(), ErrorCode::shape_mismatch, "element: index out of range");
  const std::size_t flat = r * a.cols() + c;
  return a.graph().record(Tensor::scalar(a.value()[flat]), {a}, [a, flat](Graph& g, const Tensor& up) {
    g.accumulate_at(a, flat, up[0]);
  });
}

Var replace_rows(Var a, std::size_t begin, Var block) {
  require(block.cols() == a.cols() && begin + block.rows() <= a.rows(), ErrorCode::shape_mismatch,
          "replace_rows: block " + block.value().shape_string() + " at row " + std::to_string(begin) +
              " does not fit " + a.value().shape_string());
  Tensor out = a.value();
  for (std::size_t r = 0; r < block.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(begin + r, c) = block.value()(r, c);
  return a.graph().record(std::move(out), {a, block}, [a, begin, block](Graph& g, const Tensor& up) {
    const std::size_t end = begin + block.rows();
    if (a.requires_grad()) {
      Tensor d = up;
      for (std::size_t r = begin; r < end; ++r)
        for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) = 0.0;
      g.accumulate(a, d);
    }
    if (block.requires_grad()) {
      Tensor d(block.rows(), block.cols());
      for (std::size_t r = 0; r < d.rows(); ++r)
        for (std::size_t c = 0; c < d.cols(); ++c) d(r, c) = up(begin + r, c);
      g.accumulate(block, d);
    }
  });
}

Var stop_gradient(Var a) { return a.graph().record(a.value(), {}, nullptr); }

}  // namespace ops
}  // namespace flowedit
