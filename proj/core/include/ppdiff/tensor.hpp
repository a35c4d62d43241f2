#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace ppdiff::nn {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Per-backward-call gradient buffers, keyed by node. Backward never mutates
// node state except for copying leaf gradients out at the end, so several
// graphs sharing the same parameter leaves can run backward concurrently.
class GradBuffers {
 public:
  std::vector<double>& at(const Node* n);
  const std::vector<double>* find(const Node* n) const;

 private:
  std::unordered_map<const Node*, std::vector<double>> map_;
};

using BackFn = std::function<void(const Node&, const std::vector<double>&, GradBuffers&)>;

struct Node {
  int rows = 0, cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // filled by backward() for requires_grad leaves
  bool requires_grad = false;
  std::string name;  // nonempty for named parameters
  std::vector<NodePtr> parents;
  BackFn backprop;

  std::size_t size() const { return value.size(); }
};

// Named-parameter gradient accumulator (used for minibatch reduction).
using GradMap = std::map<std::string, std::vector<double>>;

// Row-major matrix handle into a dynamically built reverse-mode graph.
// Scalars are 1x1, row vectors 1xc. All arithmetic is double precision.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor constant(int rows, int cols, std::vector<double> values);
  static Tensor zeros(int rows, int cols);
  static Tensor scalar(double v);
  // Trainable leaf. Named leaves report their gradient under that name.
  static Tensor leaf(int rows, int cols, std::vector<double> values, std::string name = {});

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  double at(int r, int c) const { return node_->value[static_cast<std::size_t>(r) * node_->cols + c]; }
  double scalar_value() const;
  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& mutable_values() { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  const std::string& name() const { return node_->name; }
  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

// While alive, newly built ops record no graph structure (pure forward eval).
// Thread-local, nestable.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};
bool grad_enabled();

// Reverse-mode sweep from a scalar loss. Gradients of requires_grad leaves are
// written to their node's grad field, and additionally accumulated (+=) into
// *sink under the leaf's name when sink is nonnull and the leaf is named.
void backward(const Tensor& loss, GradMap* sink = nullptr);

// ---- ops ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
// mat [r x c] + row [1 x c], broadcast over rows.
Tensor add_rowvec(const Tensor& mat, const Tensor& row);
// a + s where s is a 1x1 graph scalar, broadcast to every element.
Tensor add_scalar_t(const Tensor& a, const Tensor& s);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor softplus(const Tensor& a);
// Numerically stable softmax along each row.
Tensor row_softmax(const Tensor& a);
// Numerically stable log(sum(exp(all elements))), 1x1.
Tensor logsumexp_all(const Tensor& a);
Tensor sum_all(const Tensor& a);
Tensor row_sum(const Tensor& a);   // [r x c] -> [r x 1]
Tensor col_mean(const Tensor& a);  // [r x c] -> [1 x c], r >= 1
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, int c0, int c1);  // half-open
Tensor repeat_rows(const Tensor& row, int n);        // [1 x c] -> [n x c]
Tensor reshape(const Tensor& a, int rows, int cols);
// Per-row layer normalization with learnable gain/bias (both 1xc).
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       double eps = 1e-5);

}  // namespace ppdiff::nn
