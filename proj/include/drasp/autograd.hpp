#pragma once

#include <functional>
#include <map>
#include <span>
#include <memory>
#include <string>
#include <vector>

#include "drasp/tensor.hpp"

namespace drasp {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Adds this node's gradient contribution into each input's grad.
  std::function<void(const Node&)> propagate;

  bool is_leaf() const { return inputs.empty(); }
};

}  // namespace detail

/// Handle to a node of a reverse-mode computation graph. Copies share the
/// node. A graph belongs to a single thread while it is being built or
/// differentiated.
class Var {
 public:
  Var() = default;

  static Var constant(Tensor value);
  static Var leaf(Tensor value);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  const Tensor& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }

  /// Overwrites the value of a leaf in place (optimizer updates, finite
  /// differences). Throws for interior nodes.
  void assign(Tensor value);
  Tensor& mutable_value();
  void zero_grad();

  const detail::Node* node() const { return node_.get(); }

  static Var from_op(Tensor value, std::vector<Var> inputs, std::function<void(const detail::Node&)> propagate);

 private:
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend void backward(const Var& output);
};

/// Reverse-mode pass from a scalar output. Leaf gradients accumulate across
/// calls until zeroed; interior gradients are recomputed on every call.
void backward(const Var& output);

// Graph operators. Shapes must match exactly unless stated otherwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double factor);
/// Scalar (rank 0 or single-element) variable times a tensor.
Var scale(const Var& a, const Var& factor);
Var neg(const Var& a);
Var square(const Var& a);
Var abs(const Var& a);
Var tanh(const Var& a);
Var sum(const Var& a);
Var mean(const Var& a);
Var reshape(const Var& a, Shape shape);
Var transpose(const Var& a);
/// (m x k) * (k x n).
Var matmul(const Var& a, const Var& b);
/// (m x k) matrix times k vector, giving an m vector.
Var matvec(const Var& m, const Var& v);
/// Adds a length-n vector to every row of an (m x n) matrix.
Var add_row(const Var& m, const Var& row);
/// Column means of an (m x n) matrix.
Var mean_rows(const Var& m);
/// Sum over rows weighted by a length-m vector: sum_s w[s] * m[s, :].
Var weighted_rows(const Var& w, const Var& m);
Var concat(const std::vector<Var>& parts);
/// Contiguous slice [begin, begin + count) of a vector.
Var slice(const Var& v, std::size_t begin, std::size_t count);

constexpr double kSqrtClampFloor = 1e-9;

/// sqrt(max(x, 1e-9)) element-wise. Clamped entries receive zero gradient.
Var clamped_sqrt(const Var& a);

/// Softmax of a vector of logits divided by temperature, computed with
/// max-subtraction.
Var softmax(const Var& logits, double temperature = 1.0);

// Plain-value forms of the two numerically delicate primitives.
std::vector<double> softmax_values(std::span<const double> logits, double temperature = 1.0);
Tensor softmax(const Tensor& logits, double temperature = 1.0);
Tensor clamped_sqrt(const Tensor& x);

/// A named trainable leaf.
struct Parameter {
  std::string name;
  Var var;
};

/// Ordered registry of the trainable leaves of a model. Names are unique.
class ParameterSet {
 public:
  Var add(std::string name, Tensor init);

  const std::vector<Parameter>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t scalar_count() const;

  void zero_grad() const;
  std::map<std::string, Tensor> gradients() const;
  std::map<std::string, Tensor> snapshot() const;
  /// Copies values in by name; every parameter must be present with a
  /// matching shape.
  void restore(const std::map<std::string, Tensor>& values) const;

 private:
  std::vector<Parameter> items_;
  std::map<std::string, std::size_t> index_;
};

/// Runs backward from a scalar output and returns the gradients of every
/// parameter in the set.
std::map<std::string, Tensor> backward(const Var& output, const ParameterSet& params);

}  // namespace drasp
