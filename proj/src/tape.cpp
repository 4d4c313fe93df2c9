#include "casgcn/tape.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace casgcn::ad {

namespace {

std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch: " + shape_of(a) +
                                " vs " + shape_of(b));
  }
}

}  // namespace

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::out_of_range("tape: invalid var");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  if (va.cols() != vb.rows()) {
    throw std::invalid_argument("matmul: inner dimensions disagree: " + shape_of(va) +
                                " vs " + shape_of(vb));
  }
  Node n;
  n.op = Op::kMatmul;
  n.lhs = a.id;
  n.rhs = b.id;
  n.value = va * vb;
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  Node n;
  n.op = Op::kTranspose;
  n.lhs = a.id;
  n.value = node(a).value.transpose();
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  require_same_shape("add", va, vb);
  Node n;
  n.op = Op::kAdd;
  n.lhs = a.id;
  n.rhs = b.id;
  n.value = va + vb;
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  require_same_shape("sub", va, vb);
  Node n;
  n.op = Op::kSub;
  n.lhs = a.id;
  n.rhs = b.id;
  n.value = va - vb;
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  require_same_shape("mul", va, vb);
  Node n;
  n.op = Op::kMul;
  n.lhs = a.id;
  n.rhs = b.id;
  n.value = va.cwiseProduct(vb);
  return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
  Node n;
  n.op = Op::kScale;
  n.lhs = a.id;
  n.aux = factor;
  n.value = node(a).value * factor;
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::kSigmoid;
  n.lhs = a.id;
  n.value = node(a).value.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::kTanh;
  n.lhs = a.id;
  n.value = node(a).value.array().tanh().matrix();
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.op = Op::kRelu;
  n.lhs = a.id;
  n.value = node(a).value.cwiseMax(0.0);
  return push(std::move(n));
}

Var Tape::log1p(Var a) {
  Node n;
  n.op = Op::kLog1p;
  n.lhs = a.id;
  n.value = node(a).value.unaryExpr([](double x) { return std::log1p(x); });
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  const Matrix& va = node(a).value;
  const Matrix& vb = node(b).value;
  if (va.rows() != vb.rows()) {
    throw std::invalid_argument("concat_cols: row counts differ: " + shape_of(va) + " vs " +
                                shape_of(vb));
  }
  Node n;
  n.op = Op::kConcatCols;
  n.lhs = a.id;
  n.rhs = b.id;
  n.aux = static_cast<double>(va.cols());
  n.value.resize(va.rows(), va.cols() + vb.cols());
  n.value << va, vb;
  return push(std::move(n));
}

Var Tape::row_sum(Var a) {
  Node n;
  n.op = Op::kRowSum;
  n.lhs = a.id;
  n.value = node(a).value.colwise().sum();
  return push(std::move(n));
}

Var Tape::neighbor_max(Var a, const Matrix& adjacency) {
  const Matrix& h = node(a).value;
  if (adjacency.cols() != h.rows()) {
    throw std::invalid_argument("neighbor_max: adjacency columns (" +
                                std::to_string(adjacency.cols()) + ") must match value rows (" +
                                std::to_string(h.rows()) + ")");
  }
  Node n;
  n.op = Op::kNeighborMax;
  n.lhs = a.id;
  n.value = Matrix::Zero(adjacency.rows(), h.cols());
  n.extra = Matrix::Constant(adjacency.rows(), h.cols(), -1.0);
  for (Eigen::Index v = 0; v < adjacency.rows(); ++v) {
    bool any = false;
    for (Eigen::Index u = 0; u < adjacency.cols(); ++u) {
      if (adjacency(v, u) == 0.0) continue;
      for (Eigen::Index d = 0; d < h.cols(); ++d) {
        if (!any || h(u, d) > n.value(v, d)) {
          n.value(v, d) = h(u, d);
          n.extra(v, d) = static_cast<double>(u);
        }
      }
      any = true;
    }
  }
  return push(std::move(n));
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

std::vector<Matrix> Tape::backward(Var loss) const {
  const Node& loss_node = node(loss);
  if (loss_node.value.rows() != 1 || loss_node.value.cols() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                shape_of(loss_node.value));
  }

  std::vector<Matrix> adj(nodes_.size());
  std::vector<bool> live(nodes_.size(), false);
  auto touch = [&](std::int32_t id) -> Matrix& {
    if (!live[static_cast<std::size_t>(id)]) {
      adj[static_cast<std::size_t>(id)] =
          Matrix::Zero(nodes_[static_cast<std::size_t>(id)].value.rows(),
                       nodes_[static_cast<std::size_t>(id)].value.cols());
      live[static_cast<std::size_t>(id)] = true;
    }
    return adj[static_cast<std::size_t>(id)];
  };

  touch(loss.id)(0, 0) = 1.0;

  // Operands precede results, so a reverse scan from the loss id is a valid
  // topological order; nodes the loss never reached stay dead.
  for (std::int32_t i = loss.id; i >= 0; --i) {
    const auto idx = static_cast<std::size_t>(i);
    if (!live[idx]) continue;
    const Node& n = nodes_[idx];
    const Matrix& g = adj[idx];
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul:
        touch(n.lhs) += g * nodes_[static_cast<std::size_t>(n.rhs)].value.transpose();
        touch(n.rhs) += nodes_[static_cast<std::size_t>(n.lhs)].value.transpose() * g;
        break;
      case Op::kTranspose:
        touch(n.lhs) += g.transpose();
        break;
      case Op::kAdd:
        touch(n.lhs) += g;
        touch(n.rhs) += g;
        break;
      case Op::kSub:
        touch(n.lhs) += g;
        touch(n.rhs) -= g;
        break;
      case Op::kMul:
        touch(n.lhs) += g.cwiseProduct(nodes_[static_cast<std::size_t>(n.rhs)].value);
        touch(n.rhs) += g.cwiseProduct(nodes_[static_cast<std::size_t>(n.lhs)].value);
        break;
      case Op::kScale:
        touch(n.lhs) += g * n.aux;
        break;
      case Op::kSigmoid:
        touch(n.lhs) += g.cwiseProduct(
            n.value.unaryExpr([](double y) { return y * (1.0 - y); }));
        break;
      case Op::kTanh:
        touch(n.lhs) += g.cwiseProduct(
            n.value.unaryExpr([](double y) { return 1.0 - y * y; }));
        break;
      case Op::kRelu: {
        const Matrix& x = nodes_[static_cast<std::size_t>(n.lhs)].value;
        touch(n.lhs) += g.cwiseProduct(
            x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
        break;
      }
      case Op::kLog1p: {
        const Matrix& x = nodes_[static_cast<std::size_t>(n.lhs)].value;
        touch(n.lhs) += g.cwiseQuotient(
            x.unaryExpr([](double v) { return 1.0 + v; }));
        break;
      }
      case Op::kConcatCols: {
        const auto left_cols = static_cast<Eigen::Index>(n.aux);
        touch(n.lhs) += g.leftCols(left_cols);
        touch(n.rhs) += g.rightCols(g.cols() - left_cols);
        break;
      }
      case Op::kRowSum: {
        Matrix& dst = touch(n.lhs);
        dst.rowwise() += g.row(0);
        break;
      }
      case Op::kNeighborMax: {
        Matrix& dst = touch(n.lhs);
        for (Eigen::Index v = 0; v < n.extra.rows(); ++v) {
          for (Eigen::Index d = 0; d < n.extra.cols(); ++d) {
            const auto u = static_cast<Eigen::Index>(n.extra(v, d));
            if (u >= 0) dst(u, d) += g(v, d);
          }
        }
        break;
      }
    }
  }

  // Untouched nodes report zero gradients.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!live[i]) adj[i] = Matrix::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
  }
  return adj;
}

Matrix& ParamStore::add(const std::string& name, Matrix value) {
  if (has(name)) throw std::invalid_argument("param store: duplicate name: " + name);
  names_.push_back(name);
  values_.push_back(std::move(value));
  return values_.back();
}

bool ParamStore::has(const std::string& name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

Matrix& ParamStore::at(const std::string& name) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return values_[i];
  }
  throw std::out_of_range("param store: no parameter named " + name);
}

const Matrix& ParamStore::at(const std::string& name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

const Matrix& GradientMap::at(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return grads[i];
  }
  throw std::out_of_range("gradient map: no parameter named " + name);
}

bool GradientMap::all_finite() const {
  for (const auto& g : grads) {
    if (!g.allFinite()) return false;
  }
  return true;
}

void GradientMap::accumulate(const GradientMap& other) {
  if (other.grads.size() != grads.size()) {
    throw std::invalid_argument("gradient map: size mismatch in accumulate");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += other.grads[i];
}

void GradientMap::scale(double factor) {
  for (auto& g : grads) g *= factor;
}

GradientMap zero_gradients(const ParamStore& params) {
  GradientMap map;
  map.names.reserve(params.size());
  map.grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    map.names.push_back(params.name(i));
    map.grads.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
  }
  return map;
}

BoundParams bind_params(Tape& tape, const ParamStore& params) {
  BoundParams bound;
  bound.vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    bound.vars.push_back(tape.leaf(params.value(i)));
  }
  return bound;
}

GradientMap param_gradients(const Tape& tape, Var loss, const BoundParams& bound,
                            const ParamStore& params) {
  auto adjoints = tape.backward(loss);
  GradientMap map;
  map.names.reserve(params.size());
  map.grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    map.names.push_back(params.name(i));
    map.grads.push_back(std::move(adjoints[static_cast<std::size_t>(bound.vars[i].id)]));
  }
  return map;
}

double grad_check(const TapedScalarFn& f, const ParamStore& params, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("grad_check: epsilon must be positive");

  auto evaluate = [&f](const ParamStore& p) {
    Tape tape;
    auto bound = bind_params(tape, p);
    Var loss = f(tape, bound.vars);
    return tape.value(loss)(0, 0);
  };

  Tape tape;
  auto bound = bind_params(tape, params);
  Var loss = f(tape, bound.vars);
  GradientMap analytic = param_gradients(tape, loss, bound, params);

  double worst = 0.0;
  ParamStore work;
  for (std::size_t i = 0; i < params.size(); ++i) work.add(params.name(i), params.value(i));

  for (std::size_t p = 0; p < work.size(); ++p) {
    Matrix& m = work.value(p);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double saved = m(r, c);
        m(r, c) = saved + epsilon;
        const double up = evaluate(work);
        m(r, c) = saved - epsilon;
        const double down = evaluate(work);
        m(r, c) = saved;

        const double numeric = (up - down) / (2.0 * epsilon);
        const double exact = analytic.grads[p](r, c);
        if (!std::isfinite(numeric) || !std::isfinite(exact)) {
          std::ostringstream os;
          os << "grad_check: non-finite value at " << work.name(p) << "(" << r << "," << c
             << "): analytic=" << exact << " numeric=" << numeric;
          throw std::runtime_error(os.str());
        }
        const double err = std::abs(exact - numeric) / std::max(1.0, std::abs(exact));
        worst = std::max(worst, err);
      }
    }
  }
  return worst;
}

}  // namespace casgcn::ad
