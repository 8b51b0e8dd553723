// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace polyflex {

// Scalar reverse-mode tape. Nodes are appended in evaluation order, so the
// tape itself is a topological order and the backward pass is a single
// reverse sweep. Used as the serial reference implementation of the training
// loss gradient; the OpenMP kernel is checked against it.
class Tape {
 public:
  struct Var {
    std::int32_t i = -1;
  };

  Var input(double v) { return push(Op::Leaf, v, -1, -1); }
  Var constant(double v) { return push(Op::Leaf, v, -1, -1); }

  Var add(Var a, Var b) { return push(Op::Add, val(a) + val(b), a.i, b.i); }
  Var sub(Var a, Var b) { return push(Op::Sub, val(a) - val(b), a.i, b.i); }
  Var mul(Var a, Var b) { return push(Op::Mul, val(a) * val(b), a.i, b.i); }
  Var mul_const(Var a, double c) { return push(Op::MulConst, val(a) * c, a.i, -1, c); }
  Var add_const(Var a, double c) { return push(Op::AddConst, val(a) + c, a.i, -1, c); }
  Var softplus_node(Var a);
  Var sigmoid_node(Var a);
  Var square(Var a) { return push(Op::Square, val(a) * val(a), a.i, -1); }

  double val(Var v) const { return nodes_[static_cast<std::size_t>(v.i)].val; }
  double adjoint(Var v) const { return nodes_[static_cast<std::size_t>(v.i)].adj; }

  void backward(Var output);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  enum class Op : std::uint8_t { Leaf, Add, Sub, Mul, MulConst, AddConst, Softplus, Sigmoid, Square };

  struct Node {
    Op op;
    std::int32_t a;
    std::int32_t b;
    double val;
    double adj;
    double aux;  // constant factor or cached activation derivative
  };

  Var push(Op op, double v, std::int32_t a, std::int32_t b, double aux = 0.0) {
    nodes_.push_back(Node{op, a, b, v, 0.0, aux});
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  std::vector<Node> nodes_;
};

}  // namespace polyflex
