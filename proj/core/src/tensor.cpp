#include "ppdiff/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "ppdiff/errors.hpp"

namespace ppdiff::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using MMap = Eigen::Map<RowMat>;

thread_local int no_grad_depth = 0;

NodePtr make_node(int rows, int cols) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  return n;
}

bool track(std::initializer_list<const Tensor*> inputs) {
  if (no_grad_depth > 0) return false;
  for (const Tensor* t : inputs) {
    if (t->node()->requires_grad) return true;
  }
  return false;
}

void attach(const NodePtr& out, std::initializer_list<const Tensor*> inputs, BackFn fn) {
  out->requires_grad = true;
  for (const Tensor* t : inputs) out->parents.push_back(t->node());
  out->backprop = std::move(fn);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw UsageError(std::string(op) + ": shape mismatch");
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Elementwise op helper: forward f, backward scales upstream grad by df(cached).
Tensor elementwise(const Tensor& a, double (*f)(double), double (*df)(double),
                   const char* /*op*/) {
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = f(a.values()[i]);
  if (track({&a})) {
    NodePtr an = a.node();
    std::vector<double> dcache(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) dcache[i] = df(an->value[i]);
    attach(out, {&a},
           [an, dcache = std::move(dcache)](const Node&, const std::vector<double>& g,
                                            GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * dcache[i];
           });
  }
  return Tensor(out);
}

}  // namespace

std::vector<double>& GradBuffers::at(const Node* n) {
  auto it = map_.find(n);
  if (it == map_.end()) {
    it = map_.emplace(n, std::vector<double>(n->size(), 0.0)).first;
  }
  return it->second;
}

const std::vector<double>* GradBuffers::find(const Node* n) const {
  auto it = map_.find(n);
  return it == map_.end() ? nullptr : &it->second;
}

NoGradGuard::NoGradGuard() { ++no_grad_depth; }
NoGradGuard::~NoGradGuard() { --no_grad_depth; }
bool grad_enabled() { return no_grad_depth == 0; }

Tensor Tensor::constant(int rows, int cols, std::vector<double> values) {
  if (rows < 0 || cols < 0 ||
      values.size() != static_cast<std::size_t>(rows) * cols) {
    throw UsageError("Tensor::constant: size mismatch");
  }
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(values);
  return Tensor(n);
}

Tensor Tensor::zeros(int rows, int cols) { return Tensor(make_node(rows, cols)); }

Tensor Tensor::scalar(double v) { return constant(1, 1, {v}); }

Tensor Tensor::leaf(int rows, int cols, std::vector<double> values, std::string name) {
  Tensor t = constant(rows, cols, std::move(values));
  t.node()->requires_grad = true;
  t.node()->name = std::move(name);
  return t;
}

double Tensor::scalar_value() const {
  if (size() != 1) throw UsageError("Tensor::scalar_value: not a scalar");
  return node_->value[0];
}

void backward(const Tensor& loss, GradMap* sink) {
  if (!loss.defined() || loss.size() != 1) {
    throw UsageError("backward: loss must be a defined scalar");
  }
  // Iterative post-order DFS for topological order.
  std::vector<Node*> order;
  std::unordered_map<Node*, int> state;  // 0 new, 1 open, 2 done
  std::vector<Node*> stack{loss.node().get()};
  while (!stack.empty()) {
    Node* n = stack.back();
    int& st = state[n];
    if (st == 0) {
      st = 1;
      for (const auto& p : n->parents) {
        if (p->requires_grad && state[p.get()] == 0) stack.push_back(p.get());
      }
    } else {
      if (st == 1) {
        st = 2;
        order.push_back(n);
      }
      stack.pop_back();
    }
  }

  GradBuffers bufs;
  bufs.at(loss.node().get())[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backprop) continue;
    const std::vector<double>* g = bufs.find(n);
    if (!g) continue;
    n->backprop(*n, *g, bufs);
  }
  // Copy leaf gradients out. In sink mode, named leaves go only to the sink
  // and their node state stays untouched, so concurrent backward passes over
  // graphs sharing parameters are safe.
  for (Node* n : order) {
    if (!n->requires_grad || n->backprop) continue;  // leaves only
    const std::vector<double>* g = bufs.find(n);
    if (sink && !n->name.empty()) {
      auto& acc = (*sink)[n->name];
      if (acc.empty()) acc.assign(n->size(), 0.0);
      if (g) {
        for (std::size_t i = 0; i < n->size(); ++i) acc[i] += (*g)[i];
      }
    } else {
      n->grad.assign(n->size(), 0.0);
      if (g) n->grad = *g;
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw UsageError("matmul: inner dimension mismatch");
  auto out = make_node(a.rows(), b.cols());
  if (a.rows() > 0 && b.cols() > 0 && a.cols() > 0) {
    CMap A(a.values().data(), a.rows(), a.cols());
    CMap B(b.values().data(), b.rows(), b.cols());
    MMap C(out->value.data(), out->rows, out->cols);
    C.noalias() = A * B;
  }
  if (track({&a, &b})) {
    NodePtr an = a.node(), bn = b.node();
    attach(out, {&a, &b},
           [an, bn](const Node& self, const std::vector<double>& g, GradBuffers& bufs) {
             if (self.rows == 0 || self.cols == 0) return;
             CMap G(g.data(), self.rows, self.cols);
             if (an->requires_grad && an->size() > 0) {
               CMap B(bn->value.data(), bn->rows, bn->cols);
               MMap dA(bufs.at(an.get()).data(), an->rows, an->cols);
               dA.noalias() += G * B.transpose();
             }
             if (bn->requires_grad && bn->size() > 0) {
               CMap A(an->value.data(), an->rows, an->cols);
               MMap dB(bufs.at(bn.get()).data(), bn->rows, bn->cols);
               dB.noalias() += A.transpose() * G;
             }
           });
  }
  return Tensor(out);
}

Tensor transpose(const Tensor& a) {
  auto out = make_node(a.cols(), a.rows());
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) {
      out->value[static_cast<std::size_t>(c) * a.rows() + r] =
          a.values()[static_cast<std::size_t>(r) * a.cols() + c];
    }
  }
  if (track({&a})) {
    NodePtr an = a.node();
    attach(out, {&a},
           [an](const Node& self, const std::vector<double>& g, GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             for (int r = 0; r < self.rows; ++r) {
               for (int c = 0; c < self.cols; ++c) {
                 da[static_cast<std::size_t>(c) * self.rows + r] +=
                     g[static_cast<std::size_t>(r) * self.cols + c];
               }
             }
           });
  }
  return Tensor(out);
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = a.values()[i] + b.values()[i];
  if (track({&a, &b})) {
    NodePtr an = a.node(), bn = b.node();
    attach(out, {&a, &b},
           [an, bn](const Node&, const std::vector<double>& g, GradBuffers& bufs) {
             if (an->requires_grad) {
               auto& da = bufs.at(an.get());
               for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
             }
             if (bn->requires_grad) {
               auto& db = bufs.at(bn.get());
               for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
             }
           });
  }
  return Tensor(out);
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = a.values()[i] - b.values()[i];
  if (track({&a, &b})) {
    NodePtr an = a.node(), bn = b.node();
    attach(out, {&a, &b},
           [an, bn](const Node&, const std::vector<double>& g, GradBuffers& bufs) {
             if (an->requires_grad) {
               auto& da = bufs.at(an.get());
               for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
             }
             if (bn->requires_grad) {
               auto& db = bufs.at(bn.get());
               for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
             }
           });
  }
  return Tensor(out);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = a.values()[i] * b.values()[i];
  if (track({&a, &b})) {
    NodePtr an = a.node(), bn = b.node();
    attach(out, {&a, &b},
           [an, bn](const Node&, const std::vector<double>& g, GradBuffers& bufs) {
             if (an->requires_grad) {
               auto& da = bufs.at(an.get());
               for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bn->value[i];
             }
             if (bn->requires_grad) {
               auto& db = bufs.at(bn.get());
               for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * an->value[i];
             }
           });
  }
  return Tensor(out);
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = a.values()[i] / b.values()[i];
  if (track({&a, &b})) {
    NodePtr an = a.node(), bn = b.node();
    attach(out, {&a, &b},
           [an, bn](const Node&, const std::vector<double>& g, GradBuffers& bufs) {
             if (an->requires_grad) {
               auto& da = bufs.at(an.get());
               for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / bn->value[i];
             }
             if (bn->requires_grad) {
               auto& db = bufs.at(bn.get());
               for (std::size_t i = 0; i < g.size(); ++i) {
                 db[i] -= g[i] * an->value[i] / (bn->value[i] * bn->value[i]);
               }
             }
           });
  }
  return Tensor(out);
}

Tensor add_rowvec(const Tensor& mat, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != mat.cols()) {
    throw UsageError("add_rowvec: row must be 1 x cols(mat)");
  }
  auto out = make_node(mat.rows(), mat.cols());
  const int c = mat.cols();
  for (int r = 0; r < mat.rows(); ++r) {
    for (int j = 0; j < c; ++j) {
      out->value[static_cast<std::size_t>(r) * c + j] =
          mat.values()[static_cast<std::size_t>(r) * c + j] + row.values()[j];
    }
  }
  if (track({&mat, &row})) {
    NodePtr mn = mat.node(), rn = row.node();
    attach(out, {&mat, &row},
           [mn, rn](const Node& self, const std::vector<double>& g, GradBuffers& bufs) {
             if (mn->requires_grad) {
               auto& dm = bufs.at(mn.get());
               for (std::size_t i = 0; i < g.size(); ++i) dm[i] += g[i];
             }
             if (rn->requires_grad) {
               auto& dr = bufs.at(rn.get());
               for (int r = 0; r < self.rows; ++r) {
                 for (int j = 0; j < self.cols; ++j) {
                   dr[j] += g[static_cast<std::size_t>(r) * self.cols + j];
                 }
               }
             }
           });
  }
  return Tensor(out);
}

Tensor add_scalar_t(const Tensor& a, const Tensor& s) {
  if (s.size() != 1) throw UsageError("add_scalar_t: s must be 1x1");
  auto out = make_node(a.rows(), a.cols());
  const double sv = s.values()[0];
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = a.values()[i] + sv;
  if (track({&a, &s})) {
    NodePtr an = a.node(), sn = s.node();
    attach(out, {&a, &s},
           [an, sn](const Node&, const std::vector<double>& g, GradBuffers& bufs) {
             if (an->requires_grad) {
               auto& da = bufs.at(an.get());
               for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
             }
             if (sn->requires_grad) {
               auto& ds = bufs.at(sn.get());
               for (double v : g) ds[0] += v;
             }
           });
  }
  return Tensor(out);
}

Tensor scale(const Tensor& a, double s) {
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = a.values()[i] * s;
  if (track({&a})) {
    NodePtr an = a.node();
    attach(out, {&a},
           [an, s](const Node&, const std::vector<double>& g, GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * s;
           });
  }
  return Tensor(out);
}

Tensor add_scalar(const Tensor& a, double s) {
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out->value[i] = a.values()[i] + s;
  if (track({&a})) {
    NodePtr an = a.node();
    attach(out, {&a},
           [an](const Node&, const std::vector<double>& g, GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
           });
  }
  return Tensor(out);
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor relu(const Tensor& a) {
  return elementwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x) { return x > 0.0 ? 1.0 : 0.0; }, "relu");
}

Tensor sigmoid(const Tensor& a) {
  return elementwise(
      a, [](double x) { return stable_sigmoid(x); },
      [](double x) {
        const double y = stable_sigmoid(x);
        return y * (1.0 - y);
      },
      "sigmoid");
}

Tensor exp(const Tensor& a) {
  return elementwise(
      a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); }, "exp");
}

Tensor log(const Tensor& a) {
  return elementwise(
      a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; }, "log");
}

Tensor softplus(const Tensor& a) {
  return elementwise(
      a, [](double x) { return stable_softplus(x); },
      [](double x) { return stable_sigmoid(x); }, "softplus");
}

Tensor row_softmax(const Tensor& a) {
  auto out = make_node(a.rows(), a.cols());
  const int c = a.cols();
  if (c == 0) return Tensor(out);
  for (int r = 0; r < a.rows(); ++r) {
    const double* x = a.values().data() + static_cast<std::size_t>(r) * c;
    double* y = out->value.data() + static_cast<std::size_t>(r) * c;
    double m = x[0];
    for (int j = 1; j < c; ++j) m = std::max(m, x[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      y[j] = std::exp(x[j] - m);
      sum += y[j];
    }
    for (int j = 0; j < c; ++j) y[j] /= sum;
  }
  if (track({&a})) {
    NodePtr an = a.node();
    NodePtr on = out;
    attach(out, {&a},
           [an, on](const Node& self, const std::vector<double>& g, GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             const int c = self.cols;
             for (int r = 0; r < self.rows; ++r) {
               const double* y = on->value.data() + static_cast<std::size_t>(r) * c;
               const double* gr = g.data() + static_cast<std::size_t>(r) * c;
               double dot = 0.0;
               for (int j = 0; j < c; ++j) dot += gr[j] * y[j];
               double* dr = da.data() + static_cast<std::size_t>(r) * c;
               for (int j = 0; j < c; ++j) dr[j] += y[j] * (gr[j] - dot);
             }
           });
  }
  return Tensor(out);
}

Tensor logsumexp_all(const Tensor& a) {
  if (a.size() == 0) throw UsageError("logsumexp_all: empty tensor");
  auto out = make_node(1, 1);
  double m = a.values()[0];
  for (double v : a.values()) m = std::max(m, v);
  double sum = 0.0;
  for (double v : a.values()) sum += std::exp(v - m);
  out->value[0] = m + std::log(sum);
  if (track({&a})) {
    NodePtr an = a.node();
    std::vector<double> soft(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) soft[i] = std::exp(a.values()[i] - m) / sum;
    attach(out, {&a},
           [an, soft = std::move(soft)](const Node&, const std::vector<double>& g,
                                        GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[0] * soft[i];
           });
  }
  return Tensor(out);
}

Tensor sum_all(const Tensor& a) {
  auto out = make_node(1, 1);
  double s = 0.0;
  for (double v : a.values()) s += v;
  out->value[0] = s;
  if (track({&a})) {
    NodePtr an = a.node();
    attach(out, {&a},
           [an](const Node&, const std::vector<double>& g, GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             for (double& v : da) v += g[0];
           });
  }
  return Tensor(out);
}

Tensor row_sum(const Tensor& a) {
  auto out = make_node(a.rows(), 1);
  for (int r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (int j = 0; j < a.cols(); ++j) {
      s += a.values()[static_cast<std::size_t>(r) * a.cols() + j];
    }
    out->value[r] = s;
  }
  if (track({&a})) {
    NodePtr an = a.node();
    attach(out, {&a},
           [an](const Node& self, const std::vector<double>& g, GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             const int c = an->cols;
             for (int r = 0; r < self.rows; ++r) {
               for (int j = 0; j < c; ++j) da[static_cast<std::size_t>(r) * c + j] += g[r];
             }
           });
  }
  return Tensor(out);
}

Tensor col_mean(const Tensor& a) {
  if (a.rows() < 1) throw UsageError("col_mean: need at least one row");
  auto out = make_node(1, a.cols());
  const double inv = 1.0 / a.rows();
  for (int j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (int r = 0; r < a.rows(); ++r) {
      s += a.values()[static_cast<std::size_t>(r) * a.cols() + j];
    }
    out->value[j] = s * inv;
  }
  if (track({&a})) {
    NodePtr an = a.node();
    attach(out, {&a},
           [an, inv](const Node&, const std::vector<double>& g, GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             const int c = an->cols;
             for (int r = 0; r < an->rows; ++r) {
               for (int j = 0; j < c; ++j) da[static_cast<std::size_t>(r) * c + j] += g[j] * inv;
             }
           });
  }
  return Tensor(out);
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) throw UsageError("concat_cols: row count mismatch");
  const int ca = a.cols(), cb = b.cols();
  auto out = make_node(a.rows(), ca + cb);
  for (int r = 0; r < a.rows(); ++r) {
    std::copy_n(a.values().data() + static_cast<std::size_t>(r) * ca, ca,
                out->value.data() + static_cast<std::size_t>(r) * (ca + cb));
    std::copy_n(b.values().data() + static_cast<std::size_t>(r) * cb, cb,
                out->value.data() + static_cast<std::size_t>(r) * (ca + cb) + ca);
  }
  if (track({&a, &b})) {
    NodePtr an = a.node(), bn = b.node();
    attach(out, {&a, &b},
           [an, bn, ca, cb](const Node& self, const std::vector<double>& g, GradBuffers& bufs) {
             for (int r = 0; r < self.rows; ++r) {
               const double* gr = g.data() + static_cast<std::size_t>(r) * (ca + cb);
               if (an->requires_grad) {
                 auto& da = bufs.at(an.get());
                 for (int j = 0; j < ca; ++j) da[static_cast<std::size_t>(r) * ca + j] += gr[j];
               }
               if (bn->requires_grad) {
                 auto& db = bufs.at(bn.get());
                 for (int j = 0; j < cb; ++j) {
                   db[static_cast<std::size_t>(r) * cb + j] += gr[ca + j];
                 }
               }
             }
           });
  }
  return Tensor(out);
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
  if (c0 < 0 || c1 > a.cols() || c0 >= c1) throw UsageError("slice_cols: bad range");
  const int w = c1 - c0;
  auto out = make_node(a.rows(), w);
  for (int r = 0; r < a.rows(); ++r) {
    std::copy_n(a.values().data() + static_cast<std::size_t>(r) * a.cols() + c0, w,
                out->value.data() + static_cast<std::size_t>(r) * w);
  }
  if (track({&a})) {
    NodePtr an = a.node();
    attach(out, {&a},
           [an, c0, w](const Node& self, const std::vector<double>& g, GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             const int c = an->cols;
             for (int r = 0; r < self.rows; ++r) {
               for (int j = 0; j < w; ++j) {
                 da[static_cast<std::size_t>(r) * c + c0 + j] +=
                     g[static_cast<std::size_t>(r) * w + j];
               }
             }
           });
  }
  return Tensor(out);
}

Tensor repeat_rows(const Tensor& row, int n) {
  if (row.rows() != 1) throw UsageError("repeat_rows: input must have one row");
  if (n < 0) throw UsageError("repeat_rows: negative count");
  const int c = row.cols();
  auto out = make_node(n, c);
  for (int r = 0; r < n; ++r) {
    std::copy_n(row.values().data(), c, out->value.data() + static_cast<std::size_t>(r) * c);
  }
  if (track({&row})) {
    NodePtr rn = row.node();
    attach(out, {&row},
           [rn](const Node& self, const std::vector<double>& g, GradBuffers& bufs) {
             auto& dr = bufs.at(rn.get());
             for (int r = 0; r < self.rows; ++r) {
               for (int j = 0; j < self.cols; ++j) {
                 dr[j] += g[static_cast<std::size_t>(r) * self.cols + j];
               }
             }
           });
  }
  return Tensor(out);
}

Tensor reshape(const Tensor& a, int rows, int cols) {
  if (static_cast<std::size_t>(rows) * cols != a.size()) {
    throw UsageError("reshape: element count mismatch");
  }
  auto out = make_node(rows, cols);
  out->value = a.values();
  if (track({&a})) {
    NodePtr an = a.node();
    attach(out, {&a},
           [an](const Node&, const std::vector<double>& g, GradBuffers& bufs) {
             auto& da = bufs.at(an.get());
             for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
           });
  }
  return Tensor(out);
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const int c = x.cols();
  if (gain.rows() != 1 || gain.cols() != c || bias.rows() != 1 || bias.cols() != c) {
    throw UsageError("layer_norm_rows: gain/bias must be 1 x cols(x)");
  }
  auto out = make_node(x.rows(), c);
  std::vector<double> ys(x.size());
  std::vector<double> inv_sigma(x.rows());
  for (int r = 0; r < x.rows(); ++r) {
    const double* xr = x.values().data() + static_cast<std::size_t>(r) * c;
    double mu = 0.0;
    for (int j = 0; j < c; ++j) mu += xr[j];
    mu /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= c;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = is;
    for (int j = 0; j < c; ++j) {
      const double y = (xr[j] - mu) * is;
      ys[static_cast<std::size_t>(r) * c + j] = y;
      out->value[static_cast<std::size_t>(r) * c + j] = y * gain.values()[j] + bias.values()[j];
    }
  }
  if (track({&x, &gain, &bias})) {
    NodePtr xn = x.node(), gn = gain.node(), bn = bias.node();
    attach(out, {&x, &gain, &bias},
           [xn, gn, bn, ys = std::move(ys), inv_sigma = std::move(inv_sigma)](
               const Node& self, const std::vector<double>& g, GradBuffers& bufs) {
             const int c = self.cols;
             for (int r = 0; r < self.rows; ++r) {
               const double* gr = g.data() + static_cast<std::size_t>(r) * c;
               const double* yr = ys.data() + static_cast<std::size_t>(r) * c;
               if (gn->requires_grad) {
                 auto& dg = bufs.at(gn.get());
                 for (int j = 0; j < c; ++j) dg[j] += gr[j] * yr[j];
               }
               if (bn->requires_grad) {
                 auto& db = bufs.at(bn.get());
                 for (int j = 0; j < c; ++j) db[j] += gr[j];
               }
               if (xn->requires_grad) {
                 auto& dx = bufs.at(xn.get());
                 double mean_h = 0.0, mean_hy = 0.0;
                 for (int j = 0; j < c; ++j) {
                   const double h = gr[j] * gn->value[j];
                   mean_h += h;
                   mean_hy += h * yr[j];
                 }
                 mean_h /= c;
                 mean_hy /= c;
                 double* dxr = dx.data() + static_cast<std::size_t>(r) * c;
                 for (int j = 0; j < c; ++j) {
                   const double h = gr[j] * gn->value[j];
                   dxr[j] += inv_sigma[r] * (h - mean_h - yr[j] * mean_hy);
                 }
               }
             }
           });
  }
  return Tensor(out);
}

}  // namespace ppdiff::nn
