#include "pivae/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace pivae {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

thread_local Tape* g_active_tape = nullptr;

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::pair<std::size_t, std::size_t> as_2d(const Shape& s) {
  if (s.empty()) return {1, 1};
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  // Higher ranks collapse leading dims; nothing in this project needs them
  // individually.
  std::size_t lead = 1;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) lead *= s[i];
  return {lead, s.back()};
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) +
                   " and " + shape_str(b));
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

void Node::accumulate(const std::vector<double>& g) {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
}

void Node::accumulate_at(std::size_t i, double g) {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  grad[i] += g;
}

Tensor Tensor::scalar(double v) { return from({1, 1}, {v}); }

Tensor Tensor::zeros(Shape shape) {
  auto n = std::make_shared<Node>();
  n->value.assign(shape_numel(shape), 0.0);
  n->shape = std::move(shape);
  return Tensor(std::move(n));
}

Tensor Tensor::full(Shape shape, double v) {
  auto n = std::make_shared<Node>();
  n->value.assign(shape_numel(shape), v);
  n->shape = std::move(shape);
  return Tensor(std::move(n));
}

Tensor Tensor::from(Shape shape, std::vector<double> data) {
  if (shape_numel(shape) != data.size())
    throw ShapeError("Tensor::from: shape " + shape_str(shape) +
                     " does not match buffer of length " +
                     std::to_string(data.size()));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  return Tensor(std::move(n));
}

Tensor Tensor::leaf(Shape shape, std::vector<double> data) {
  Tensor t = from(std::move(shape), std::move(data));
  t.node()->requires_grad = true;
  return t;
}

std::size_t Tensor::rows() const { return as_2d(node_->shape).first; }
std::size_t Tensor::cols() const { return as_2d(node_->shape).second; }

double Tensor::item() const {
  if (!is_scalar())
    throw ShapeError("Tensor::item: tensor of shape " + shape_str(shape()) +
                     " is not scalar");
  return node_->value[0];
}

const std::vector<double>& Tensor::grad() const {
  static const std::vector<double> kEmpty;
  return node_->grad.empty() ? kEmpty : node_->grad;
}

Tape::Tape() : prev_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::current() { return g_active_tape; }

void Tape::record(std::shared_ptr<Node> n) { nodes_.push_back(std::move(n)); }

void Tape::backward(const Tensor& root) {
  if (!root.is_scalar())
    throw ShapeError("backward: root of shape " + shape_str(root.shape()) +
                     " is not scalar");
  if (root.node()->tape != this)
    throw TensorError("backward: root was not recorded on this tape");
  root.node()->accumulate_at(0, 1.0);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.has_grad() && n.backprop) n.backprop();
  }
}

TapePause::TapePause() : saved_(g_active_tape) { g_active_tape = nullptr; }

TapePause::~TapePause() { g_active_tape = saved_; }

namespace {

Tensor make_node(Shape shape, std::vector<double> value,
                 std::vector<std::shared_ptr<Node>> parents,
                 std::function<void(Node&)> back) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  Tape* tape = Tape::current();
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  if (tape && rg) {
    n->requires_grad = true;
    n->tape = tape;
    Node* raw = n.get();
    n->backprop = [raw, back = std::move(back),
                   parents = std::move(parents)]() { back(*raw); };
    tape->record(n);
  }
  return Tensor(n);
}

// Read-only view with scalar / row / column broadcasting against (rows,cols).
struct BView {
  const std::vector<double>* data;
  std::size_t r, c;  // native dims
  double at(std::size_t i, std::size_t j) const {
    std::size_t ii = (r == 1) ? 0 : i;
    std::size_t jj = (c == 1) ? 0 : j;
    return (*data)[ii * c + jj];
  }
  std::size_t idx(std::size_t i, std::size_t j) const {
    std::size_t ii = (r == 1) ? 0 : i;
    std::size_t jj = (c == 1) ? 0 : j;
    return ii * c + jj;
  }
};

Tensor binary_op(const char* name, const Tensor& a, const Tensor& b,
                 double (*fwd)(double, double),
                 void (*bwd)(double g, double av, double bv, double& da,
                             double& db)) {
  auto [ar, ac] = std::pair{a.rows(), a.cols()};
  auto [br, bc] = std::pair{b.rows(), b.cols()};
  std::size_t m = std::max(ar, br), n = std::max(ac, bc);
  auto ok = [&](std::size_t native, std::size_t out) {
    return native == out || native == 1;
  };
  if (!ok(ar, m) || !ok(ac, n) || !ok(br, m) || !ok(bc, n))
    shape_fail(name, a.shape(), b.shape());

  BView va{&a.data(), ar, ac}, vb{&b.data(), br, bc};
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = fwd(va.at(i, j), vb.at(i, j));

  auto an = a.node(), bn = b.node();
  return make_node(
      {m, n}, std::move(out), {an, bn}, [=](Node& o) {
        BView wa{&an->value, ar, ac}, wb{&bn->value, br, bc};
        const bool ga = an->requires_grad, gb = bn->requires_grad;
        if (ga && an->grad.empty()) an->grad.assign(an->value.size(), 0.0);
        if (gb && bn->grad.empty()) bn->grad.assign(bn->value.size(), 0.0);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            double da = 0.0, db = 0.0;
            bwd(o.grad[i * n + j], wa.at(i, j), wb.at(i, j), da, db);
            if (ga) an->grad[wa.idx(i, j)] += da;
            if (gb) bn->grad[wb.idx(i, j)] += db;
          }
      });
}

Tensor unary_op(const Tensor& a, std::vector<double> out,
                std::function<double(double g, double x, double y)> dfn) {
  auto an = a.node();
  Shape shape = a.shape();
  return make_node(std::move(shape), std::move(out), {an},
                   [an, dfn = std::move(dfn)](Node& o) {
                     std::vector<double> g(o.value.size());
                     for (std::size_t i = 0; i < g.size(); ++i)
                       g[i] = dfn(o.grad[i], an->value[i], o.value[i]);
                     an->accumulate(g);
                   });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double, double& da, double& db) {
        da = g;
        db = g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double, double& da, double& db) {
        da = g;
        db = -g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double x, double y, double& da, double& db) {
        da = g * y;
        db = g * x;
      });
}

Tensor scalar_mul(const Tensor& a, double c) {
  std::vector<double> out(a.data());
  for (auto& v : out) v *= c;
  return unary_op(a, std::move(out),
                  [c](double g, double, double) { return g * c; });
}

Tensor scalar_add(const Tensor& a, double c) {
  std::vector<double> out(a.data());
  for (auto& v : out) v += c;
  return unary_op(a, std::move(out),
                  [](double g, double, double) { return g; });
}

Tensor neg(const Tensor& a) { return scalar_mul(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2) shape_fail("matmul", a.shape(), b.shape());
  std::vector<double> out(m * n);
  {
    CMap ma(a.data().data(), m, k), mb(b.data().data(), k, n);
    MMap mo(out.data(), m, n);
    mo.noalias() = ma * mb;
  }
  auto an = a.node(), bn = b.node();
  return make_node({m, n}, std::move(out), {an, bn}, [=](Node& o) {
    CMap g(o.grad.data(), m, n);
    CMap ma(an->value.data(), m, k), mb(bn->value.data(), k, n);
    if (an->requires_grad) {
      if (an->grad.empty()) an->grad.assign(m * k, 0.0);
      MMap da(an->grad.data(), m, k);
      da.noalias() += g * mb.transpose();
    }
    if (bn->requires_grad) {
      if (bn->grad.empty()) bn->grad.assign(k * n, 0.0);
      MMap db(bn->grad.data(), k, n);
      db.noalias() += ma.transpose() * g;
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  std::size_t m = a.rows(), k = a.cols(), n = b.rows(), k2 = b.cols();
  if (k != k2) shape_fail("matmul_nt", a.shape(), b.shape());
  std::vector<double> out(m * n);
  {
    CMap ma(a.data().data(), m, k), mb(b.data().data(), n, k);
    MMap mo(out.data(), m, n);
    mo.noalias() = ma * mb.transpose();
  }
  auto an = a.node(), bn = b.node();
  return make_node({m, n}, std::move(out), {an, bn}, [=](Node& o) {
    CMap g(o.grad.data(), m, n);
    CMap ma(an->value.data(), m, k), mb(bn->value.data(), n, k);
    if (an->requires_grad) {
      if (an->grad.empty()) an->grad.assign(m * k, 0.0);
      MMap da(an->grad.data(), m, k);
      da.noalias() += g * mb;
    }
    if (bn->requires_grad) {
      if (bn->grad.empty()) bn->grad.assign(n * k, 0.0);
      MMap db(bn->grad.data(), n, k);
      db.noalias() += g.transpose() * ma;
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = std::accumulate(a.data().begin(), a.data().end(), 0.0);
  auto an = a.node();
  return make_node({1, 1}, {s}, {an}, [an](Node& o) {
    if (an->grad.empty()) an->grad.assign(an->value.size(), 0.0);
    for (auto& g : an->grad) g += o.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  double s = std::accumulate(a.data().begin(), a.data().end(), 0.0);
  double inv = 1.0 / static_cast<double>(a.size());
  auto an = a.node();
  return make_node({1, 1}, {s * inv}, {an}, [an, inv](Node& o) {
    if (an->grad.empty()) an->grad.assign(an->value.size(), 0.0);
    for (auto& g : an->grad) g += o.grad[0] * inv;
  });
}

Tensor sum_rows(const Tensor& a) {
  std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += a.data()[i * n + j];
  auto an = a.node();
  return make_node({m, 1}, std::move(out), {an}, [an, m, n](Node& o) {
    if (an->grad.empty()) an->grad.assign(an->value.size(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) an->grad[i * n + j] += o.grad[i];
  });
}

Tensor square(const Tensor& a) {
  std::vector<double> out(a.data());
  for (auto& v : out) v *= v;
  return unary_op(a, std::move(out),
                  [](double g, double x, double) { return 2.0 * g * x; });
}

Tensor sqrt_(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a.data()[i];
    if (x < 0.0) throw DomainError("sqrt: negative input " + std::to_string(x));
    out[i] = std::sqrt(x);
  }
  return unary_op(a, std::move(out), [](double g, double, double y) {
    return 0.5 * g / y;
  });
}

Tensor exp_(const Tensor& a) {
  std::vector<double> out(a.data());
  for (auto& v : out) v = std::exp(v);
  return unary_op(a, std::move(out),
                  [](double g, double, double y) { return g * y; });
}

Tensor log_(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a.data()[i];
    if (x <= 0.0)
      throw DomainError("log: non-positive input " + std::to_string(x));
    out[i] = std::log(x);
  }
  return unary_op(a, std::move(out),
                  [](double g, double x, double) { return g / x; });
}

Tensor sin_(const Tensor& a) {
  std::vector<double> out(a.data());
  for (auto& v : out) v = std::sin(v);
  return unary_op(a, std::move(out), [](double g, double x, double) {
    return g * std::cos(x);
  });
}

Tensor cos_(const Tensor& a) {
  std::vector<double> out(a.data());
  for (auto& v : out) v = std::cos(v);
  return unary_op(a, std::move(out), [](double g, double x, double) {
    return -g * std::sin(x);
  });
}

Tensor elu(const Tensor& a) {
  std::vector<double> out(a.data());
  for (auto& v : out) v = v > 0.0 ? v : std::expm1(v);
  return unary_op(a, std::move(out), [](double g, double x, double y) {
    return x > 0.0 ? g : g * (y + 1.0);
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.data());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return unary_op(a, std::move(out), [](double g, double x, double) {
    return x > 0.0 ? g : 0.0;
  });
}

Tensor softplus(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double x = a.data()[i];
    out[i] = x > 30.0 ? x : std::log1p(std::exp(x));
  }
  return unary_op(a, std::move(out), [](double g, double x, double) {
    return g / (1.0 + std::exp(-x));
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: empty input");
  std::size_t m = parts[0].rows(), n = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) shape_fail("concat_cols", parts[0].shape(), p.shape());
    n += p.cols();
  }
  std::vector<double> out(m * n);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::size_t c = p.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < c; ++j)
        out[i * n + off + j] = p.data()[i * c + j];
    off += c;
  }
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) parents.push_back(p.node());
  return make_node({m, n}, std::move(out), parents, [parents, m, n](Node& o) {
    std::size_t off = 0;
    for (const auto& p : parents) {
      std::size_t c = p->value.size() / m;
      if (p->requires_grad) {
        if (p->grad.empty()) p->grad.assign(p->value.size(), 0.0);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < c; ++j)
            p->grad[i * c + j] += o.grad[i * n + off + j];
      }
      off += c;
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: empty input");
  std::size_t n = parts[0].cols(), m = 0;
  for (const auto& p : parts) {
    if (p.cols() != n) shape_fail("concat_rows", parts[0].shape(), p.shape());
    m += p.rows();
  }
  std::vector<double> out;
  out.reserve(m * n);
  for (const auto& p : parts)
    out.insert(out.end(), p.data().begin(), p.data().end());
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) parents.push_back(p.node());
  return make_node({m, n}, std::move(out), parents, [parents](Node& o) {
    std::size_t off = 0;
    for (const auto& p : parents) {
      if (p->requires_grad) {
        if (p->grad.empty()) p->grad.assign(p->value.size(), 0.0);
        for (std::size_t i = 0; i < p->value.size(); ++i)
          p->grad[i] += o.grad[off + i];
      }
      off += p->value.size();
    }
  });
}

Tensor stack(const std::vector<Tensor>& parts) { return concat_rows(parts); }

Tensor slice_cols(const Tensor& a, std::size_t lo, std::size_t hi) {
  std::size_t m = a.rows(), n = a.cols();
  if (lo > hi || hi > n)
    throw ShapeError("slice_cols: range [" + std::to_string(lo) + "," +
                     std::to_string(hi) + ") out of bounds for " +
                     shape_str(a.shape()));
  std::size_t c = hi - lo;
  std::vector<double> out(m * c);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] = a.data()[i * n + lo + j];
  auto an = a.node();
  return make_node({m, c}, std::move(out), {an}, [an, m, n, lo, c](Node& o) {
    if (an->grad.empty()) an->grad.assign(an->value.size(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < c; ++j)
        an->grad[i * n + lo + j] += o.grad[i * c + j];
  });
}

Tensor slice_rows(const Tensor& a, std::size_t lo, std::size_t hi) {
  std::size_t m = a.rows(), n = a.cols();
  if (lo > hi || hi > m)
    throw ShapeError("slice_rows: range [" + std::to_string(lo) + "," +
                     std::to_string(hi) + ") out of bounds for " +
                     shape_str(a.shape()));
  std::size_t r = hi - lo;
  std::vector<double> out(a.data().begin() + lo * n,
                          a.data().begin() + hi * n);
  auto an = a.node();
  return make_node({r, n}, std::move(out), {an}, [an, n, lo, r](Node& o) {
    if (an->grad.empty()) an->grad.assign(an->value.size(), 0.0);
    for (std::size_t i = 0; i < r * n; ++i) an->grad[lo * n + i] += o.grad[i];
  });
}

Tensor broadcast_to(const Tensor& a, std::size_t m, std::size_t n) {
  std::size_t ar = a.rows(), ac = a.cols();
  if ((ar != m && ar != 1) || (ac != n && ac != 1))
    throw ShapeError("broadcast_to: cannot broadcast " + shape_str(a.shape()) +
                     " to (" + std::to_string(m) + "," + std::to_string(n) +
                     ")");
  BView v{&a.data(), ar, ac};
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = v.at(i, j);
  auto an = a.node();
  return make_node({m, n}, std::move(out), {an}, [an, ar, ac, m, n](Node& o) {
    if (an->grad.empty()) an->grad.assign(an->value.size(), 0.0);
    BView v{&an->value, ar, ac};
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        an->grad[v.idx(i, j)] += o.grad[i * n + j];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.size())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  auto an = a.node();
  return make_node(std::move(shape), a.data(), {an},
                   [an](Node& o) { an->accumulate(o.grad); });
}

Tensor repeat_rows(const Tensor& a, std::size_t k) {
  std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * k * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t j = 0; j < n; ++j)
        out[(i * k + r) * n + j] = a.data()[i * n + j];
  auto an = a.node();
  return make_node({m * k, n}, std::move(out), {an}, [an, m, n, k](Node& o) {
    if (an->grad.empty()) an->grad.assign(an->value.size(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t j = 0; j < n; ++j)
          an->grad[i * n + j] += o.grad[(i * k + r) * n + j];
  });
}

Tensor stop_gradient(const Tensor& x) {
  auto n = std::make_shared<Node>();
  n->shape = x.shape();
  n->value = x.data();
  return Tensor(std::move(n));
}

bool all_finite(const Tensor& a) {
  for (double v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace pivae
