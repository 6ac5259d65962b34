#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "pgat/tensor.hpp"

namespace pgat {

class Graph;

/// Handle to a value recorded on a Graph.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class BackwardContext;
using BackwardFn = std::function<void(BackwardContext&)>;

/// Reverse-mode tape. Nodes are appended in evaluation order, so creation
/// order is a topological order and backward is a single reverse sweep.
///
/// A graph is single-use: backward() consumes it.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf node. Only leaves created with requires_grad receive gradients.
  Var input(Tensor value, bool requires_grad = false);

  /// Records an op output. `backward` is dropped when no input needs a gradient.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Gradient of the last backward() target w.r.t. v. Zeros when v did not
  /// influence the target.
  const Tensor& grad(Var v) const;

  /// Propagates d(loss)/d(node) to every node that requires it. `loss` must be scalar.
  void backward(Var loss);

  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  friend class BackwardContext;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

/// View handed to an op's backward closure.
class BackwardContext {
 public:
  const Tensor& output() const { return graph_.nodes_[id_].value; }
  const Tensor& output_grad() const { return graph_.nodes_[id_].grad; }
  const Tensor& input(std::size_t k) const { return graph_.nodes_[input_id(k)].value; }
  bool needs_grad(std::size_t k) const { return graph_.nodes_[input_id(k)].requires_grad; }

  /// Accumulator for input k's gradient, zero-initialised on first access.
  Tensor& input_grad(std::size_t k);

 private:
  friend class Graph;
  BackwardContext(Graph& g, std::size_t id) : graph_(g), id_(id) {}
  std::size_t input_id(std::size_t k) const { return graph_.nodes_[id_].inputs.at(k); }

  Graph& graph_;
  std::size_t id_;
};

}  // namespace pgat
