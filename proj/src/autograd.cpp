#include "drasp/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace drasp {

using detail::Node;

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
}

void require_rank(const Var& a, std::size_t rank, const char* op) {
  if (a.value().rank() != rank) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                                shape_string(a.shape()));
  }
}

// Gradient buffer of an input, allocated on first use.
Tensor& accum(const std::shared_ptr<Node>& n) {
  if (n->grad.shape() != n->value.shape()) n->grad = Tensor::zeros(n->value.shape());
  return n->grad;
}

void matmul_into(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t m,
                 std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
}

}  // namespace

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::leaf(Tensor value) {
  auto node = std::make_shared<Node>();
  node->grad = Tensor::zeros(value.shape());
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

void Var::assign(Tensor value) {
  if (!node_->is_leaf()) throw std::logic_error("assign() on an interior graph node");
  if (value.shape() != node_->value.shape()) {
    throw std::invalid_argument("assign(): shape mismatch " + shape_string(value.shape()) + " vs " +
                                shape_string(node_->value.shape()));
  }
  node_->value = std::move(value);
}

Tensor& Var::mutable_value() {
  if (!node_->is_leaf()) throw std::logic_error("mutable_value() on an interior graph node");
  return node_->value;
}

void Var::zero_grad() {
  if (node_->requires_grad) node_->grad = Tensor::zeros(node_->value.shape());
}

Var Var::from_op(Tensor value, std::vector<Var> inputs, std::function<void(const Node&)> propagate) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool any = std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v.requires_grad(); });
  if (any) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& v : inputs) node->inputs.push_back(std::move(v.node_));
    node->propagate = std::move(propagate);
  }
  return Var(std::move(node));
}

void backward(const Var& output) {
  if (!output.defined()) throw std::invalid_argument("backward(): undefined output");
  if (output.value().size() != 1) {
    throw std::invalid_argument("backward(): output must be scalar, got shape " + shape_string(output.shape()));
  }
  if (!output.requires_grad()) return;

  // Iterative post-order DFS; reversed it is a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{output.node_.get(), 0}};
  seen.insert(output.node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (!n->is_leaf()) n->grad = Tensor::zeros(n->value.shape());
  }
  if (output.node_->is_leaf()) {
    output.node_->grad[0] += 1.0;
    return;
  }
  output.node_->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->is_leaf() && n->propagate) n->propagate(*n);
  }
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return Var::from_op(std::move(out), {a, b}, [](const Node& self) {
    for (const auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      auto& g = accum(in);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return Var::from_op(std::move(out), {a, b}, [](const Node& self) {
    const double sign[2] = {1.0, -1.0};
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& in = self.inputs[k];
      if (!in->requires_grad) continue;
      auto& g = accum(in);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign[k] * self.grad[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return Var::from_op(std::move(out), {a, b}, [](const Node& self) {
    const auto& x = self.inputs[0];
    const auto& y = self.inputs[1];
    if (x->requires_grad) {
      auto& g = accum(x);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y->value[i];
    }
    if (y->requires_grad) {
      auto& g = accum(y);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x->value[i];
    }
  });
}

Var scale(const Var& a, double factor) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= factor;
  return Var::from_op(std::move(out), {a}, [factor](const Node& self) {
    auto& g = accum(self.inputs[0]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Var scale(const Var& a, const Var& factor) {
  if (factor.value().size() != 1) {
    throw std::invalid_argument("scale: factor must be a scalar, got shape " + shape_string(factor.shape()));
  }
  const double f = factor.value()[0];
  Tensor out = a.value();
  for (auto& v : out.data()) v *= f;
  return Var::from_op(std::move(out), {a, factor}, [](const Node& self) {
    const auto& x = self.inputs[0];
    const auto& s = self.inputs[1];
    if (x->requires_grad) {
      auto& g = accum(x);
      const double f = s->value[0];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += f * self.grad[i];
    }
    if (s->requires_grad) {
      double dot = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) dot += self.grad[i] * x->value[i];
      accum(s)[0] += dot;
    }
  });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var square(const Var& a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= v;
  return Var::from_op(std::move(out), {a}, [](const Node& self) {
    const auto& x = self.inputs[0];
    auto& g = accum(x);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * x->value[i] * self.grad[i];
  });
}

Var abs(const Var& a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = std::abs(v);
  return Var::from_op(std::move(out), {a}, [](const Node& self) {
    const auto& x = self.inputs[0];
    auto& g = accum(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double xi = x->value[i];
      const double sign = xi > 0.0 ? 1.0 : (xi < 0.0 ? -1.0 : 0.0);
      g[i] += sign * self.grad[i];
    }
  });
}

Var tanh(const Var& a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = std::tanh(v);
  return Var::from_op(std::move(out), {a}, [](const Node& self) {
    auto& g = accum(self.inputs[0]);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] += (1.0 - y * y) * self.grad[i];
    }
  });
}

Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return Var::from_op(Tensor::scalar(total), {a}, [](const Node& self) {
    auto& g = accum(self.inputs[0]);
    const double up = self.grad[0];
    for (auto& v : g.data()) v += up;
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return Var::from_op(std::move(out), {a}, [](const Node& self) {
    auto& g = accum(self.inputs[0]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Var transpose(const Var& a) {
  require_rank(a, 2, "transpose");
  const auto m = a.value().rows();
  const auto n = a.value().cols();
  Tensor out = Tensor::zeros({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.value().at(i, j);
  return Var::from_op(std::move(out), {a}, [m, n](const Node& self) {
    auto& g = accum(self.inputs[0]);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g.at(i, j) += self.grad.at(j, i);
  });
}

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const auto m = a.value().rows();
  const auto k = a.value().cols();
  const auto n = b.value().cols();
  if (b.value().rows() != k) {
    throw std::invalid_argument("matmul: inner dimension mismatch " + shape_string(a.shape()) + " * " +
                                shape_string(b.shape()));
  }
  Tensor out = Tensor::zeros({m, n});
  matmul_into(a.value().data(), b.value().data(), out.data(), m, k, n);
  return Var::from_op(std::move(out), {a, b}, [m, k, n](const Node& self) {
    const auto& x = self.inputs[0];
    const auto& y = self.inputs[1];
    if (x->requires_grad) {
      // dX = G * Y^T
      auto& g = accum(x);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += self.grad[i * n + j] * y->value[p * n + j];
          g[i * k + p] += acc;
        }
    }
    if (y->requires_grad) {
      // dY = X^T * G
      auto& g = accum(y);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double xip = x->value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) g[p * n + j] += xip * self.grad[i * n + j];
        }
    }
  });
}

Var matvec(const Var& m, const Var& v) {
  require_rank(m, 2, "matvec");
  require_rank(v, 1, "matvec");
  const auto rows = m.value().rows();
  const auto cols = m.value().cols();
  if (v.value().size() != cols) {
    throw std::invalid_argument("matvec: shape mismatch " + shape_string(m.shape()) + " * " +
                                shape_string(v.shape()));
  }
  Tensor out = Tensor::zeros({rows});
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) acc += m.value()[i * cols + j] * v.value()[j];
    out[i] = acc;
  }
  return Var::from_op(std::move(out), {m, v}, [rows, cols](const Node& self) {
    const auto& mat = self.inputs[0];
    const auto& vec = self.inputs[1];
    if (mat->requires_grad) {
      auto& g = accum(mat);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += self.grad[i] * vec->value[j];
    }
    if (vec->requires_grad) {
      auto& g = accum(vec);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g[j] += self.grad[i] * mat->value[i * cols + j];
    }
  });
}

Var add_row(const Var& m, const Var& row) {
  require_rank(m, 2, "add_row");
  require_rank(row, 1, "add_row");
  const auto rows = m.value().rows();
  const auto cols = m.value().cols();
  if (row.value().size() != cols) {
    throw std::invalid_argument("add_row: shape mismatch " + shape_string(m.shape()) + " + " +
                                shape_string(row.shape()));
  }
  Tensor out = m.value();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] += row.value()[j];
  return Var::from_op(std::move(out), {m, row}, [rows, cols](const Node& self) {
    if (self.inputs[0]->requires_grad) {
      auto& g = accum(self.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (self.inputs[1]->requires_grad) {
      auto& g = accum(self.inputs[1]);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g[j] += self.grad[i * cols + j];
    }
  });
}

Var mean_rows(const Var& m) {
  require_rank(m, 2, "mean_rows");
  const auto rows = m.value().rows();
  const auto cols = m.value().cols();
  Tensor out = Tensor::zeros({cols});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j] += m.value()[i * cols + j];
  const double inv = 1.0 / static_cast<double>(rows);
  for (auto& v : out.data()) v *= inv;
  return Var::from_op(std::move(out), {m}, [rows, cols, inv](const Node& self) {
    auto& g = accum(self.inputs[0]);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += inv * self.grad[j];
  });
}

Var weighted_rows(const Var& w, const Var& m) {
  require_rank(w, 1, "weighted_rows");
  require_rank(m, 2, "weighted_rows");
  const auto rows = m.value().rows();
  const auto cols = m.value().cols();
  if (w.value().size() != rows) {
    throw std::invalid_argument("weighted_rows: " + shape_string(w.shape()) + " weights for " +
                                shape_string(m.shape()));
  }
  Tensor out = Tensor::zeros({cols});
  for (std::size_t i = 0; i < rows; ++i) {
    const double wi = w.value()[i];
    for (std::size_t j = 0; j < cols; ++j) out[j] += wi * m.value()[i * cols + j];
  }
  return Var::from_op(std::move(out), {w, m}, [rows, cols](const Node& self) {
    const auto& wn = self.inputs[0];
    const auto& mn = self.inputs[1];
    if (wn->requires_grad) {
      auto& g = accum(wn);
      for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += self.grad[j] * mn->value[i * cols + j];
        g[i] += acc;
      }
    }
    if (mn->requires_grad) {
      auto& g = accum(mn);
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += wn->value[i] * self.grad[j];
    }
  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  std::vector<double> values;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    require_rank(p, 1, "concat");
    values.insert(values.end(), p.value().data().begin(), p.value().data().end());
    sizes.push_back(p.value().size());
  }
  return Var::from_op(Tensor::vector(std::move(values)), parts, [sizes](const Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      const auto& in = self.inputs[k];
      if (in->requires_grad) {
        auto& g = accum(in);
        for (std::size_t i = 0; i < sizes[k]; ++i) g[i] += self.grad[offset + i];
      }
      offset += sizes[k];
    }
  });
}

Var slice(const Var& v, std::size_t begin, std::size_t count) {
  require_rank(v, 1, "slice");
  if (count == 0 || begin + count > v.value().size()) {
    throw std::invalid_argument("slice: range out of bounds for " + shape_string(v.shape()));
  }
  std::vector<double> values(v.value().data().begin() + static_cast<std::ptrdiff_t>(begin),
                             v.value().data().begin() + static_cast<std::ptrdiff_t>(begin + count));
  return Var::from_op(Tensor::vector(std::move(values)), {v}, [begin, count](const Node& self) {
    auto& g = accum(self.inputs[0]);
    for (std::size_t i = 0; i < count; ++i) g[begin + i] += self.grad[i];
  });
}

Tensor clamped_sqrt(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.data()) v = std::sqrt(std::max(v, kSqrtClampFloor));
  return out;
}

Var clamped_sqrt(const Var& a) {
  return Var::from_op(clamped_sqrt(a.value()), {a}, [](const Node& self) {
    const auto& x = self.inputs[0];
    auto& g = accum(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x->value[i] > kSqrtClampFloor) g[i] += self.grad[i] / (2.0 * self.value[i]);
    }
  });
}

std::vector<double> softmax_values(std::span<const double> logits, double temperature) {
  if (logits.empty()) throw std::invalid_argument("empty sequence");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw std::invalid_argument("invalid temperature");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& v : out) {
    v = std::exp((v - top) / temperature);
    total += v;
  }
  for (auto& v : out) v /= total;
  return out;
}

Tensor softmax(const Tensor& logits, double temperature) {
  if (logits.rank() != 1) throw std::invalid_argument("softmax: expected a vector, got " + shape_string(logits.shape()));
  return Tensor::vector(softmax_values(logits.data(), temperature));
}

Var softmax(const Var& logits, double temperature) {
  Tensor out = softmax(logits.value(), temperature);
  return Var::from_op(std::move(out), {logits}, [temperature](const Node& self) {
    double dot = 0.0;
    for (std::size_t i = 0; i < self.value.size(); ++i) dot += self.grad[i] * self.value[i];
    auto& g = accum(self.inputs[0]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.value[i] * (self.grad[i] - dot) / temperature;
  });
}

Var ParameterSet::add(std::string name, Tensor init) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Var v = Var::leaf(std::move(init));
  index_.emplace(name, items_.size());
  items_.push_back({std::move(name), v});
  return v;
}

const Parameter& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return items_[it->second];
}

bool ParameterSet::contains(const std::string& name) const { return index_.contains(name); }

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.var.value().size();
  return n;
}

void ParameterSet::zero_grad() const {
  for (auto p : items_) p.var.zero_grad();
}

std::map<std::string, Tensor> ParameterSet::gradients() const {
  std::map<std::string, Tensor> out;
  for (const auto& p : items_) out.emplace(p.name, p.var.grad());
  return out;
}

std::map<std::string, Tensor> ParameterSet::snapshot() const {
  std::map<std::string, Tensor> out;
  for (const auto& p : items_) out.emplace(p.name, p.var.value());
  return out;
}

void ParameterSet::restore(const std::map<std::string, Tensor>& values) const {
  for (auto p : items_) {
    auto it = values.find(p.name);
    if (it == values.end()) throw std::invalid_argument("missing parameter in snapshot: " + p.name);
    p.var.assign(it->second);
  }
}

std::map<std::string, Tensor> backward(const Var& output, const ParameterSet& params) {
  backward(output);
  return params.gradients();
}

}  // namespace drasp
