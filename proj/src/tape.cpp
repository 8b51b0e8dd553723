// SPDX-License-Identifier: Apache-2.0
#include "polyflex/tape.hpp"

#include "polyflex/icnn.hpp"

namespace polyflex {

Tape::Var Tape::softplus_node(Var a) {
  const double t = val(a);
  return push(Op::Softplus, softplus(t), a.i, -1, sigmoid(t));
}

Tape::Var Tape::sigmoid_node(Var a) {
  const double s = sigmoid(val(a));
  return push(Op::Sigmoid, s, a.i, -1, s * (1.0 - s));
}

void Tape::backward(Var output) {
  for (Node& n : nodes_) n.adj = 0.0;
  nodes_[static_cast<std::size_t>(output.i)].adj = 1.0;
  for (std::size_t k = nodes_.size(); k-- > 0;) {
    const Node& n = nodes_[k];
    const double w = n.adj;
    if (w == 0.0) continue;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add:
        nodes_[static_cast<std::size_t>(n.a)].adj += w;
        nodes_[static_cast<std::size_t>(n.b)].adj += w;
        break;
      case Op::Sub:
        nodes_[static_cast<std::size_t>(n.a)].adj += w;
        nodes_[static_cast<std::size_t>(n.b)].adj -= w;
        break;
      case Op::Mul:
        nodes_[static_cast<std::size_t>(n.a)].adj += w * nodes_[static_cast<std::size_t>(n.b)].val;
        nodes_[static_cast<std::size_t>(n.b)].adj += w * nodes_[static_cast<std::size_t>(n.a)].val;
        break;
      case Op::MulConst:
        nodes_[static_cast<std::size_t>(n.a)].adj += w * n.aux;
        break;
      case Op::AddConst:
        nodes_[static_cast<std::size_t>(n.a)].adj += w;
        break;
      case Op::Softplus:
      case Op::Sigmoid:
        nodes_[static_cast<std::size_t>(n.a)].adj += w * n.aux;
        break;
      case Op::Square:
        nodes_[static_cast<std::size_t>(n.a)].adj += 2.0 * w * nodes_[static_cast<std::size_t>(n.a)].val;
        break;
    }
  }
}

}  // namespace polyflex
