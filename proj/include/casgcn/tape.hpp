// Dense matrix arithmetic with tape-based reverse-mode differentiation.
//
// Values are Eigen double matrices (vectors are n-by-1, scalars 1-by-1).
// Every operation appends a node to the tape; operands always precede
// results, so a single reverse sweep from the loss node accumulates exact
// adjoints. No operation mutates its operands.
//
// A Tape is single-context: one forward build plus backward sweeps at a
// time. Distinct tapes are independent and may be used concurrently.
#pragma once

#include "casgcn/cascade.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace casgcn::ad {

using casgcn::Matrix;

struct Var {
  std::int32_t id{-1};
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  // Leaf value (input, constant, or parameter). Gradients accumulate into
  // leaves like into any other node.
  Var leaf(Matrix value);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double factor);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var log1p(Var a);
  Var concat_cols(Var a, Var b);
  Var row_sum(Var a);  // collapses rows: result is 1 x cols

  // Per-row neighbor maximum: out(v, d) = max over u with adjacency(v, u) != 0
  // of in(u, d); zero when row v has no neighbors. Adjacency is a constant.
  Var neighbor_max(Var a, const Matrix& adjacency);

  const Matrix& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Reverse accumulation from a scalar loss; returns one adjoint per node.
  // Throws std::invalid_argument if the loss value is not 1x1.
  std::vector<Matrix> backward(Var loss) const;

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kMatmul,
    kTranspose,
    kAdd,
    kSub,
    kMul,
    kScale,
    kSigmoid,
    kTanh,
    kRelu,
    kLog1p,
    kConcatCols,
    kRowSum,
    kNeighborMax,
  };

  struct Node {
    Op op{Op::kLeaf};
    std::int32_t lhs{-1};
    std::int32_t rhs{-1};
    double aux{};
    Matrix value;
    Matrix extra;  // kNeighborMax: argmax source row per entry (-1 for none)
  };

  Var push(Node node);
  const Node& node(Var v) const;

  // deque: value() references stay valid as the tape grows
  std::deque<Node> nodes_;
};

// Named, ordered parameter set. The order is part of the contract: it fixes
// initialization draws, gradient layout, and checkpoint layout.
class ParamStore {
 public:
  Matrix& add(const std::string& name, Matrix value);
  bool has(const std::string& name) const;
  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Matrix& value(std::size_t i) { return values_[i]; }
  const Matrix& value(std::size_t i) const { return values_[i]; }

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

// Adjoints aligned with a ParamStore, one matrix per parameter.
struct GradientMap {
  std::vector<std::string> names;
  std::vector<Matrix> grads;
  const Matrix& at(const std::string& name) const;
  bool all_finite() const;
  void accumulate(const GradientMap& other);  // shapes must match
  void scale(double factor);
};

GradientMap zero_gradients(const ParamStore& params);

// One leaf per parameter, in store order.
struct BoundParams {
  std::vector<Var> vars;
};
BoundParams bind_params(Tape& tape, const ParamStore& params);

// backward() restricted to the bound parameters; parameters that do not
// participate in the loss get zero gradients.
GradientMap param_gradients(const Tape& tape, Var loss, const BoundParams& bound,
                            const ParamStore& params);

// Builds a scalar loss on a fresh tape from leaves bound to `params`.
using TapedScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Max over all parameter entries of
//   |analytic - central_difference| / max(1, |analytic|).
// Throws std::runtime_error naming the parameter entry if any evaluation or
// gradient is non-finite.
double grad_check(const TapedScalarFn& f, const ParamStore& params, double epsilon);

}  // namespace casgcn::ad
