#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace pivae {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

struct TensorError : std::runtime_error {
  explicit TensorError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : TensorError {
  using TensorError::TensorError;
};

struct DomainError : TensorError {
  using TensorError::TensorError;
};

// Thrown by unrolled solvers when the state stops being finite; carries the
// step index at which the blow-up was detected.
struct NonFiniteError : TensorError {
  std::size_t step;
  NonFiniteError(const std::string& msg, std::size_t step_idx)
      : TensorError(msg), step(step_idx) {}
};

class Tape;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  const Tape* tape = nullptr;  // tape that recorded this node; null for leaves
  std::function<void()> backprop;

  std::size_t size() const { return value.size(); }
  void accumulate(const std::vector<double>& g);
  void accumulate_at(std::size_t i, double g);
  bool has_grad() const { return !grad.empty(); }
};

// Value-semantic handle to a node in the computation graph. All data is f64,
// row-major. Rank is at most 2 in practice; rank-1 tensors behave as 1 x n.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor scalar(double v);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor from(Shape shape, std::vector<double> data);
  // A trainable leaf: gradient accumulates across backward passes until
  // cleared by the owning ParamStore.
  static Tensor leaf(Shape shape, std::vector<double> data);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool is_scalar() const { return size() == 1; }
  double item() const;
  const std::vector<double>& data() const { return node_->value; }
  bool requires_grad() const { return node_->requires_grad; }
  const std::vector<double>& grad() const;

  std::shared_ptr<Node>& node() { return node_; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Define-by-run tape. Constructing a Tape makes it the active recording
// context for the current thread; destruction restores the previous one.
// Nodes are appended in execution order, which is a topological order.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current();
  void record(std::shared_ptr<Node> n);
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep from a scalar root recorded on this tape. Visits each node
  // exactly once; leaf gradients are accumulated into their persistent
  // buffers.
  void backward(const Tensor& root);

 private:
  std::vector<std::shared_ptr<Node>> nodes_;
  Tape* prev_ = nullptr;
};

// Temporarily disables tape recording (forward-only evaluation).
class TapePause {
 public:
  TapePause();
  ~TapePause();
  TapePause(const TapePause&) = delete;
  TapePause& operator=(const TapePause&) = delete;

 private:
  Tape* saved_;
};

// ---- primitives ----
// Elementwise binary ops broadcast a scalar, a 1 x n row vector against an
// m x n matrix, or an m x 1 column vector against an m x n matrix.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double c);
Tensor scalar_add(const Tensor& a, double c);
Tensor neg(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
// a (m x k) times transpose of b (n x k) -> m x n; the layout used by linear
// layers whose weights are stored out x in.
Tensor matmul_nt(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_rows(const Tensor& a);  // m x n -> m x 1

Tensor square(const Tensor& a);
Tensor sqrt_(const Tensor& a);
Tensor exp_(const Tensor& a);
Tensor log_(const Tensor& a);
Tensor sin_(const Tensor& a);
Tensor cos_(const Tensor& a);
Tensor elu(const Tensor& a);       // alpha = 1
Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t lo, std::size_t hi);
Tensor slice_rows(const Tensor& a, std::size_t lo, std::size_t hi);
// Stack n tensors of shape 1 x c into n x c.
Tensor stack(const std::vector<Tensor>& parts);
// Explicit broadcast of a 1 x n or m x 1 tensor to m x n.
Tensor broadcast_to(const Tensor& a, std::size_t m, std::size_t n);
// Same buffer, new shape (sizes must agree).
Tensor reshape(const Tensor& a, Shape shape);
// Each row repeated k times in place: m x n -> (m*k) x n.
Tensor repeat_rows(const Tensor& a, std::size_t k);

// Identity forward, zero backward.
Tensor stop_gradient(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double c) { return scalar_mul(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return scalar_mul(a, c); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

bool all_finite(const Tensor& a);

}  // namespace pivae
