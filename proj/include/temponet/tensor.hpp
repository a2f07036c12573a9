#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "temponet/common.hpp"
#include "temponet/shape.hpp"

namespace temponet {

template <class Scalar>
class Graph;

template <class Scalar>
struct TensorData {
  Shape shape;
  Buffer<Scalar> values;
  Buffer<Scalar> grad;  // empty until materialized by a backward pass
  bool requires_grad = false;
  std::uint64_t graph_id = 0;  // generation id of the graph that owns node_id
  int node_id = -1;

  void ensure_grad() {
    if (grad.empty()) grad.assign(values.size(), Scalar(0));
  }
};

// Shared-handle dense tensor. Values are row-major and immutable while the
// tensor participates in a graph; parameters are mutated only between steps.
template <class Scalar>
class Tensor {
 public:
  using Data = TensorData<Scalar>;

  Tensor() = default;

  static Tensor zeros(const Shape& shape) { return constant(shape, Scalar(0)); }

  static Tensor constant(const Shape& shape, Scalar value) {
    Tensor t{std::make_shared<Data>()};
    t.data_->shape = shape;
    t.data_->values.assign(static_cast<std::size_t>(shape.numel()), value);
    return t;
  }

  static Tensor from_values(const Shape& shape, std::vector<Scalar> values) {
    if (static_cast<Index>(values.size()) != shape.numel()) {
      throw ShapeError("Tensor: " + std::to_string(values.size()) +
                       " values for shape " + shape.str());
    }
    Tensor t{std::make_shared<Data>()};
    t.data_->shape = shape;
    t.data_->values.assign(values.begin(), values.end());
    return t;
  }

  static Tensor scalar(Scalar v) { return constant(Shape{1}, v); }

  // Allocates without initializing; caller fills every element.
  static Tensor uninitialized(const Shape& shape) {
    Tensor t{std::make_shared<Data>()};
    t.data_->shape = shape;
    t.data_->values.resize(static_cast<std::size_t>(shape.numel()));
    return t;
  }

  bool valid() const { return static_cast<bool>(data_); }

  const Shape& shape() const { return data_->shape; }
  Index numel() const { return data_->shape.numel(); }

  std::span<const Scalar> values() const {
    return {data_->values.data(), data_->values.size()};
  }
  std::span<Scalar> values_mut() {
    return {data_->values.data(), data_->values.size()};
  }

  Scalar item() const {
    if (numel() != 1) {
      throw ContractError("Tensor::item: shape " + shape().str() +
                          " is not scalar");
    }
    return data_->values[0];
  }

  Scalar at(std::initializer_list<Index> idx) const {
    return data_->values[static_cast<std::size_t>(offset(idx))];
  }
  Scalar& at_mut(std::initializer_list<Index> idx) {
    return data_->values[static_cast<std::size_t>(offset(idx))];
  }

  bool requires_grad() const { return data_->requires_grad; }
  Tensor& set_requires_grad(bool value) {
    data_->requires_grad = value;
    return *this;
  }

  // Gradient of the last backward pass; zeros if no path reached this tensor.
  // Repeated backward calls without zero_grad() accumulate.
  std::vector<Scalar> grad() const {
    if (data_->grad.empty()) {
      return std::vector<Scalar>(data_->values.size(), Scalar(0));
    }
    return std::vector<Scalar>(data_->grad.begin(), data_->grad.end());
  }

  std::span<Scalar> grad_raw() {
    data_->ensure_grad();
    return {data_->grad.data(), data_->grad.size()};
  }

  void zero_grad() {
    if (!data_->grad.empty()) {
      data_->grad.assign(data_->values.size(), Scalar(0));
    }
  }

  int node_id() const { return data_->node_id; }

  const std::shared_ptr<Data>& data_ptr() const { return data_; }

 private:
  explicit Tensor(std::shared_ptr<Data> d) : data_(std::move(d)) {}

  Index offset(std::initializer_list<Index> idx) const {
    const Shape& s = data_->shape;
    if (static_cast<int>(idx.size()) != s.rank()) {
      throw ContractError("Tensor::at: " + std::to_string(idx.size()) +
                          " indices for shape " + s.str());
    }
    Index off = 0;
    int axis = 0;
    for (Index i : idx) {
      if (i < 0 || i >= s.dim(axis)) {
        throw ContractError("Tensor::at: index " + std::to_string(i) +
                            " out of range on axis " + std::to_string(axis) +
                            " of " + s.str());
      }
      off = off * s.dim(axis) + i;
      ++axis;
    }
    return off;
  }

  std::shared_ptr<Data> data_;

  friend class Graph<Scalar>;
};

// Append-only tape of recorded operations. Insertion order is a topological
// order by construction, and backward walks it in exact reverse.
template <class Scalar>
class Graph {
 public:
  struct Node {
    const char* tag;
    std::array<int, 4> inputs{-1, -1, -1, -1};
    int n_inputs = 0;
    std::shared_ptr<TensorData<Scalar>> out;
    std::function<void()> backward_fn;  // null for leaves
  };

  Graph() : id_(++next_id_) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // RAII activation; ops record onto the innermost active graph.
  class Scope {
   public:
    explicit Scope(Graph& g) : prev_(active_) { active_ = &g; }
    ~Scope() { active_ = prev_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Graph* prev_;
  };

  static Graph* active() { return active_; }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_[i]; }

  // True when d was produced by an op on this graph, i.e. gradient flows
  // through it even if it is not itself a requires-grad leaf.
  bool is_op_output(const TensorData<Scalar>& d) const {
    return d.graph_id == id_ && d.node_id >= 0 &&
           nodes_[static_cast<std::size_t>(d.node_id)].backward_fn != nullptr;
  }

  void clear() { nodes_.clear(); }

  // Populates grad buffers of every requires-grad leaf reachable from loss.
  void backward(const Tensor<Scalar>& loss) {
    if (!loss.valid() || loss.numel() != 1) {
      throw ContractError(
          "backward: loss must be a scalar tensor" +
          std::string(loss.valid() ? ", got shape " + loss.shape().str() : ""));
    }
    if (nodes_.empty()) throw ContractError("backward: graph is empty");
    auto& ld = *loss.data_ptr();
    if (ld.graph_id != id_ || ld.node_id < 0) {
      throw ContractError("backward: loss was not recorded on this graph");
    }
    if (!std::isfinite(ld.values[0])) {
      throw NumericError("backward: loss is not finite");
    }
    // Intermediate grads are scratch space for this pass; leaf grads persist
    // and accumulate across passes.
    for (int i = 0; i <= ld.node_id; ++i) {
      if (nodes_[static_cast<std::size_t>(i)].backward_fn) {
        nodes_[static_cast<std::size_t>(i)].out->grad.clear();
      }
    }
    ld.ensure_grad();
    ld.grad[0] = Scalar(1);
    for (int i = ld.node_id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.backward_fn && !n.out->grad.empty()) n.backward_fn();
    }
  }

  // Op support: registers inputs (as leaves when new to this graph), then the
  // output node with its pull-back closure.
  void record(const char* tag,
              std::initializer_list<const Tensor<Scalar>*> inputs,
              const Tensor<Scalar>& out, std::function<void()> backward_fn) {
    Node n;
    n.tag = tag;
    for (const Tensor<Scalar>* in : inputs) {
      if (n.n_inputs >= 4) throw ContractError("Graph::record: > 4 inputs");
      n.inputs[static_cast<std::size_t>(n.n_inputs++)] =
          ensure_registered(in->data_ptr());
    }
    n.out = out.data_ptr();
    n.backward_fn = std::move(backward_fn);
    n.out->graph_id = id_;
    n.out->node_id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(n));
  }

 private:
  int ensure_registered(const std::shared_ptr<TensorData<Scalar>>& d) {
    if (d->graph_id == id_ && d->node_id >= 0) return d->node_id;
    Node leaf;
    leaf.tag = "leaf";
    leaf.out = d;
    d->graph_id = id_;
    d->node_id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(leaf));
    return d->node_id;
  }

  std::vector<Node> nodes_;
  std::uint64_t id_;
  inline static std::uint64_t next_id_ = 0;
  inline static thread_local Graph* active_ = nullptr;
};

template <class Scalar>
void backward(const Tensor<Scalar>& loss) {
  Graph<Scalar>* g = Graph<Scalar>::active();
  if (g == nullptr) {
    throw ContractError("backward: no active graph");
  }
  g->backward(loss);
}

using Tensord = Tensor<double>;
using Graphd = Graph<double>;

}  // namespace temponet
