#include "pgat/graph.hpp"

#include "pgat/errors.hpp"

namespace pgat {

const Tensor& Var::value() const {
  if (graph == nullptr) throw UsageError("Var is not bound to a graph");
  return graph->value(*this);
}

Var Graph::input(Tensor value, bool requires_grad) {
  if (consumed_) throw UsageError("graph already consumed by backward()");
  nodes_.push_back(Node{std::move(value), {}, requires_grad, {}, {}});
  return Var{this, nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (consumed_) throw UsageError("graph already consumed by backward()");
  Node n;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const Var& v : inputs) {
    if (v.graph != this) throw UsageError("op mixes variables from different graphs");
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

const Graph::Node& Graph::node(Var v) const {
  if (v.graph != this || v.id >= nodes_.size()) throw UsageError("Var does not belong to this graph");
  return nodes_[v.id];
}

const Tensor& Graph::value(Var v) const { return node(v).value; }

bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

const Tensor& Graph::grad(Var v) const {
  const Node& n = node(v);
  if (!consumed_) throw UsageError("grad() requested before backward()");
  if (!n.requires_grad) throw UsageError("grad() requested for a node that does not require grad");
  if (n.grad.empty()) const_cast<Node&>(n).grad = Tensor::zeros_like(n.value);
  return n.grad;
}

void Graph::backward(Var loss) {
  const Node& target = node(loss);
  if (consumed_) throw UsageError("backward() called twice on the same graph");
  if (target.value.numel() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " + shape_string(target.value.shape()));
  }
  consumed_ = true;
  if (!target.requires_grad) return;
  nodes_[loss.id].grad = Tensor(target.value.shape(), Real(1));
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    BackwardContext ctx(*this, i);
    n.backward(ctx);
  }
}

Tensor& BackwardContext::input_grad(std::size_t k) {
  Graph::Node& in = graph_.nodes_[input_id(k)];
  if (in.grad.empty()) in.grad = Tensor::zeros_like(in.value);
  return in.grad;
}

}  // namespace pgat
