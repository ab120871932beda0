#include "rgan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rgan/errors.hpp"

namespace rgan::ad {

const Tensor& Var::value() const {
  if (!tape) throw ContractError("Var is not bound to a tape");
  return tape->value(id);
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<NodeId> parents, BackwardFn backward) {
  bool needs = false;
  for (auto p : parents) {
    if (p >= nodes_.size()) throw ContractError("parent node does not exist on this tape");
    needs = needs || nodes_[p].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), std::move(parents), needs, needs ? std::move(backward) : nullptr});
  return Var{this, nodes_.size() - 1};
}

Gradients Tape::backward(Var root) const {
  if (root.tape != this) throw ContractError("backward root belongs to another tape");
  const auto& root_value = value(root.id);
  if (root_value.size() != 1) {
    throw ContractError("backward root must be scalar, got shape " + shape_string(root_value.shape()));
  }
  Gradients out;
  out.tape_ = this;
  out.grads_.resize(nodes_.size());
  out.zeros_.resize(nodes_.size());
  out.grads_[root.id] = Tensor::filled(root_value.shape(), 1.0);
  GradientSink sink(*this, out.grads_);
  for (NodeId id = root.id + 1; id-- > 0;) {
    const auto& node = nodes_[id];
    if (!node.backward || !out.grads_[id]) continue;
    node.backward(*this, id, *out.grads_[id], sink);
  }
  return out;
}

bool GradientSink::wants(NodeId id) const { return tape_.requires_grad(id); }

void GradientSink::add(NodeId id, Tensor&& contribution) {
  if (!tape_.requires_grad(id)) return;
  auto& slot = grads_[id];
  if (!slot) {
    slot = std::move(contribution);
    return;
  }
  auto dst = slot->mutable_data();
  auto src = contribution.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

const Tensor& Gradients::of(Var v) const {
  if (!tape_ || v.tape != tape_) throw ContractError("gradient requested for a Var from another tape");
  if (!tape_->requires_grad(v.id)) throw ContractError("gradient requested for a constant node");
  if (grads_[v.id]) return *grads_[v.id];
  auto& z = zeros_[v.id];
  if (!z) z = Tensor::zeros(tape_->value(v.id).shape());
  return *z;
}

bool Gradients::reached(Var v) const { return v.id < grads_.size() && grads_[v.id].has_value(); }

// ---------------------------------------------------------------------------
// Kernels

namespace kernel {

// C = A * B with A m x k, B k x n. Every output element is accumulated
// over p = 0..k-1 in order starting from zero, whichever path computes it,
// so a row's result never depends on the other rows of the batch.
template <std::size_t J>
static void row_tile(const double* __restrict arow, const double* __restrict b, double* __restrict crow,
                     std::size_t k, std::size_t n, std::size_t j0) {
  double acc[J] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const double av = arow[p];
    const double* brow = b + p * n + j0;
    for (std::size_t j = 0; j < J; ++j) acc[j] += av * brow[j];
  }
  for (std::size_t j = 0; j < J; ++j) crow[j0 + j] = acc[j];
}

static void matmul_into(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 32 <= n; j += 32) row_tile<32>(arow, b, crow, k, n, j);
    for (; j + 8 <= n; j += 8) row_tile<8>(arow, b, crow, k, n, j);
    for (; j < n; ++j) row_tile<1>(arow, b, crow, k, n, j);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
  }
  auto out = Tensor::zeros({a.rows(), b.cols()});
  matmul_into(a.data().data(), b.data().data(), out.mutable_data().data(), a.rows(), a.cols(), b.cols());
  return out;
}

Tensor transpose(const Tensor& a) {
  const auto r = a.rows(), c = a.cols();
  auto out = Tensor::zeros({c, r});
  auto src = a.data();
  auto dst = out.mutable_data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) dst[j * r + i] = src[i * c + j];
  return out;
}

double sigmoid(double x) {
  double s;
  if (x >= 0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  // Keep the output strictly inside (0, 1).
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  return std::clamp(s, lo, hi);
}

double log_floored(double u) {
  if (u < 0.0) throw DomainError("log of negative value " + std::to_string(u));
  return std::log(std::max(u, kLogFloor));
}

}  // namespace kernel

// ---------------------------------------------------------------------------
// Ops

namespace {

Tape& same_tape(Var a, Var b) {
  if (!a.tape || a.tape != b.tape) throw ContractError("operands live on different tapes");
  return *a.tape;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// Element-wise unary op whose derivative is expressed through the input x
// and output y.
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  const auto& x = a.value();
  auto y = Tensor::zeros(x.shape());
  auto yd = y.mutable_data();
  auto xd = x.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] = f(xd[i]);
  const NodeId in = a.id;
  return a.tape->record(std::move(y), {in}, [in, df](const Tape& t, NodeId self, const Tensor& g, GradientSink& sink) {
    const auto& xv = t.value(in);
    const auto& yv = t.value(self);
    auto dx = Tensor::zeros(xv.shape());
    auto d = dx.mutable_data();
    auto gd = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = gd[i] * df(xv[i], yv[i]);
    sink.add(in, std::move(dx));
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  auto& tape = same_tape(a, b);
  auto out = kernel::matmul(a.value(), b.value());
  const NodeId ia = a.id, ib = b.id;
  return tape.record(std::move(out), {ia, ib}, [ia, ib](const Tape& t, NodeId, const Tensor& g, GradientSink& sink) {
    const auto& av = t.value(ia);
    const auto& bv = t.value(ib);
    if (sink.wants(ia)) {
      // dA = dC * B^T
      sink.add(ia, kernel::matmul(g, kernel::transpose(bv)));
    }
    if (sink.wants(ib)) {
      // dB = A^T * dC
      auto db = kernel::matmul(kernel::transpose(av), g);
      sink.add(ib, std::move(db));
    }
  });
}

Var add_bias(Var a, Var bias) {
  auto& tape = same_tape(a, bias);
  const auto& x = a.value();
  const auto& b = bias.value();
  if (x.rank() != 2 || b.rank() != 1 || b.size() != x.cols()) {
    throw DimensionError("add_bias shape mismatch " + shape_string(x.shape()) + " + " + shape_string(b.shape()));
  }
  Tensor out = x;
  const auto n = x.cols();
  auto od = out.mutable_data();
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) od[i * n + j] += b[j];
  const NodeId ia = a.id, ib = bias.id;
  return tape.record(std::move(out), {ia, ib}, [ia, ib](const Tape& t, NodeId, const Tensor& g, GradientSink& sink) {
    if (sink.wants(ia)) sink.add(ia, Tensor(g));
    if (sink.wants(ib)) {
      const auto m = g.rows(), n = g.cols();
      auto db = Tensor::zeros({n});
      auto d = db.mutable_data();
      auto gd = g.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d[j] += gd[i * n + j];
      sink.add(ib, std::move(db));
    }
    (void)t;
  });
}

Var add(Var a, Var b) {
  auto& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  auto od = out.mutable_data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  const NodeId ia = a.id, ib = b.id;
  return tape.record(std::move(out), {ia, ib}, [ia, ib](const Tape&, NodeId, const Tensor& g, GradientSink& sink) {
    if (sink.wants(ia)) sink.add(ia, Tensor(g));
    if (sink.wants(ib)) sink.add(ib, Tensor(g));
  });
}

Var sub(Var a, Var b) {
  auto& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  auto od = out.mutable_data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  const NodeId ia = a.id, ib = b.id;
  return tape.record(std::move(out), {ia, ib}, [ia, ib](const Tape&, NodeId, const Tensor& g, GradientSink& sink) {
    if (sink.wants(ia)) sink.add(ia, Tensor(g));
    if (sink.wants(ib)) {
      Tensor d = g;
      for (auto& v : d.mutable_data()) v = -v;
      sink.add(ib, std::move(d));
    }
  });
}

Var mul(Var a, Var b) {
  auto& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  auto od = out.mutable_data();
  auto bd = b.value().data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  const NodeId ia = a.id, ib = b.id;
  return tape.record(std::move(out), {ia, ib}, [ia, ib](const Tape& t, NodeId, const Tensor& g, GradientSink& sink) {
    if (sink.wants(ia)) {
      Tensor d = g;
      auto dd = d.mutable_data();
      auto other = t.value(ib).data();
      for (std::size_t i = 0; i < dd.size(); ++i) dd[i] *= other[i];
      sink.add(ia, std::move(d));
    }
    if (sink.wants(ib)) {
      Tensor d = g;
      auto dd = d.mutable_data();
      auto other = t.value(ia).data();
      for (std::size_t i = 0; i < dd.size(); ++i) dd[i] *= other[i];
      sink.add(ib, std::move(d));
    }
  });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0 ? x : slope * x; },
      [slope](double x, double) { return x > 0 ? 1.0 : slope; });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(a, kernel::sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var log(Var a) {
  return unary(
      a, kernel::log_floored,
      [](double x, double) { return x > kLogFloor ? 1.0 / x : 0.0; });
}

Var exp(Var a) {
  for (double v : a.value().data()) {
    if (!std::isfinite(std::exp(v))) throw DomainError("exp overflow at " + std::to_string(v));
  }
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var neg(Var a) {
  return unary(
      a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var scale(Var a, double c) {
  if (!std::isfinite(c)) throw DomainError("scale factor must be finite");
  return unary(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c) {
  if (!std::isfinite(c)) throw DomainError("shift must be finite");
  return unary(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var apply(Unary kind, Var a) {
  switch (kind) {
    case Unary::relu: return relu(a);
    case Unary::leaky_relu: return leaky_relu(a);
    case Unary::tanh: return tanh(a);
    case Unary::sigmoid: return sigmoid(a);
    case Unary::log: return log(a);
    case Unary::exp: return exp(a);
    case Unary::neg: return neg(a);
  }
  throw ContractError("unknown unary op");
}

namespace {

// Reductions share one shape rule: `weight(x)` is the per-entry term and
// `dweight(x)` its derivative; `average` divides by the group size.
template <typename W, typename DW>
Var reduce(Var a, Axis axis, bool average, W weight, DW dweight) {
  const auto& x = a.value();
  const auto xd = x.data();
  Tensor out;
  std::size_t group = 0;
  if (axis == Axis::all) {
    double acc = 0.0;
    for (double v : xd) acc += weight(v);
    group = x.size();
    out = Tensor::scalar(average ? acc / static_cast<double>(group) : acc);
  } else {
    const auto m = x.rows(), n = x.cols();
    out = Tensor::zeros({m});
    auto od = out.mutable_data();
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += weight(xd[i * n + j]);
      od[i] = average ? acc / static_cast<double>(n) : acc;
    }
    group = n;
  }
  const NodeId in = a.id;
  const double inv = average ? 1.0 / static_cast<double>(group) : 1.0;
  return a.tape->record(std::move(out), {in},
                        [in, axis, group, inv, dweight](const Tape& t, NodeId, const Tensor& g, GradientSink& sink) {
                          const auto& xv = t.value(in);
                          auto dx = Tensor::zeros(xv.shape());
                          auto d = dx.mutable_data();
                          auto gd = g.data();
                          for (std::size_t i = 0; i < d.size(); ++i) {
                            const double upstream = axis == Axis::all ? gd[0] : gd[i / group];
                            d[i] = upstream * inv * dweight(xv[i]);
                          }
                          sink.add(in, std::move(dx));
                        });
}

}  // namespace

Var sum(Var a, Axis axis) {
  return reduce(a, axis, false, [](double v) { return v; }, [](double) { return 1.0; });
}

Var mean(Var a, Axis axis) {
  return reduce(a, axis, true, [](double v) { return v; }, [](double) { return 1.0; });
}

Var l2_norm_sq(Var a, Axis axis) {
  return reduce(a, axis, false, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

}  // namespace rgan::ad
