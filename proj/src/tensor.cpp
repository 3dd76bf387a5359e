#include "tsbench/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <unordered_set>

#include "tsbench/errors.hpp"
#include "tsbench/kernels.hpp"

namespace tsbench {

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace {

using ImplPtr = std::shared_ptr<TensorImpl>;

// Scratch buffers for im2col and similar transient layouts; valid only within
// a single op's forward or backward body.
std::vector<double>& scratch(int slot) {
  thread_local std::vector<double> bufs[4];
  return bufs[slot];
}

thread_local bool g_grad_enabled = true;

Tensor make_op(Shape shape, std::vector<double> data,
               std::vector<ImplPtr> parents,
               std::function<void(TensorImpl&)> backward_fn) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  bool rg = false;
  if (g_grad_enabled)
    for (const auto& p : parents) rg = rg || p->requires_grad;
  impl->requires_grad = rg;
  if (rg) {
    impl->parents = std::move(parents);
    impl->backward_fn = std::move(backward_fn);
  }
  return Tensor(impl);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
}

void accumulate(ImplPtr& p, const double* g, std::size_t n) {
  if (!p->requires_grad) return;
  p->ensure_grad();
  kernels::add(p->grad.data(), g, p->grad.data(), n);
}

}  // namespace

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

// ---------------------------------------------------------------------------
// Tensor basics
// ---------------------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(static_cast<std::size_t>(shape_numel(shape)), 0.0);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(impl);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.vec().begin(), t.vec().end(), value);
  return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<std::int64_t>(data.size()))
    throw ShapeError("from_data: data length does not match shape " + shape_str(shape));
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(impl);
}

Tensor Tensor::scalar(double value) { return from_data({1}, {value}); }

Tensor Tensor::uniform(Shape shape, double bound, Rng& rng, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (auto& v : t.vec()) v = rng.uniform(-bound, bound);
  return t;
}

double Tensor::item() const {
  if (!impl_ || impl_->data.size() != 1)
    throw UsageError("item: tensor is not a scalar");
  return impl_->data[0];
}

double& Tensor::at(std::initializer_list<std::int64_t> idx) {
  const Shape& s = impl_->shape;
  if (idx.size() != s.size()) throw UsageError("at: wrong index rank");
  std::int64_t flat = 0;
  std::size_t i = 0;
  for (auto v : idx) {
    if (v < 0 || v >= s[i]) throw UsageError("at: index out of range");
    flat = flat * s[i] + v;
    ++i;
  }
  return impl_->data[static_cast<std::size_t>(flat)];
}

double Tensor::at(std::initializer_list<std::int64_t> idx) const {
  return const_cast<Tensor*>(this)->at(idx);
}

void Tensor::backward() {
  if (!impl_ || impl_->data.size() != 1)
    throw UsageError("backward: loss must be a scalar tensor");
  // Post-order DFS restricted to grad-requiring nodes.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> visited;
  struct Frame {
    TensorImpl* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({impl_.get(), 0});
  visited.insert(impl_.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TensorImpl* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
  // Interior node grads are transient per sweep; only leaves accumulate
  // across repeated backward calls.
  for (TensorImpl* n : order) {
    if (n->backward_fn) {
      n->ensure_grad();
      std::fill(n->grad.begin(), n->grad.end(), 0.0);
    }
  }
  impl_->ensure_grad();
  impl_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  const std::size_t n = a.vec().size();
  std::vector<double> out(n);
  kernels::add(a.data(), b.data(), out.data(), n);
  auto pa = a.impl(), pb = b.impl();
  return make_op(a.shape(), std::move(out), {pa, pb}, [pa, pb, n](TensorImpl& self) mutable {
    accumulate(pa, self.grad.data(), n);
    accumulate(pb, self.grad.data(), n);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  const std::size_t n = a.vec().size();
  std::vector<double> out(n);
  kernels::sub(a.data(), b.data(), out.data(), n);
  auto pa = a.impl(), pb = b.impl();
  return make_op(a.shape(), std::move(out), {pa, pb}, [pa, pb, n](TensorImpl& self) mutable {
    accumulate(pa, self.grad.data(), n);
    if (pb->requires_grad) {
      pb->ensure_grad();
      kernels::axpy(-1.0, self.grad.data(), pb->grad.data(), n);
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  const std::size_t n = a.vec().size();
  std::vector<double> out(n);
  kernels::mul(a.data(), b.data(), out.data(), n);
  auto pa = a.impl(), pb = b.impl();
  return make_op(a.shape(), std::move(out), {pa, pb}, [pa, pb, n](TensorImpl& self) mutable {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) pa->grad[i] += self.grad[i] * pb->data[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) pb->grad[i] += self.grad[i] * pa->data[i];
    }
  });
}

Tensor add_scalar(const Tensor& a, double c) {
  const std::size_t n = a.vec().size();
  std::vector<double> out(a.vec());
  for (auto& v : out) v += c;
  auto pa = a.impl();
  return make_op(a.shape(), std::move(out), {pa}, [pa, n](TensorImpl& self) mutable {
    accumulate(pa, self.grad.data(), n);
  });
}

Tensor mul_scalar(const Tensor& a, double c) {
  const std::size_t n = a.vec().size();
  std::vector<double> out(a.vec());
  kernels::scale(c, out.data(), n);
  auto pa = a.impl();
  return make_op(a.shape(), std::move(out), {pa}, [pa, c, n](TensorImpl& self) mutable {
    if (pa->requires_grad) {
      pa->ensure_grad();
      kernels::axpy(c, self.grad.data(), pa->grad.data(), n);
    }
  });
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor relu(const Tensor& a) {
  const std::size_t n = a.vec().size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
  auto pa = a.impl();
  return make_op(a.shape(), std::move(out), {pa}, [pa, n](TensorImpl& self) mutable {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      if (pa->data[i] > 0.0) pa->grad[i] += self.grad[i];
  });
}

Tensor exp_elem(const Tensor& a) {
  const std::size_t n = a.vec().size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a.data()[i]);
  auto pa = a.impl();
  return make_op(a.shape(), std::move(out), {pa}, [pa, n](TensorImpl& self) mutable {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) pa->grad[i] += self.grad[i] * self.data[i];
  });
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape new_shape) {
  if (shape_numel(new_shape) != a.numel())
    throw ShapeError("reshape: element count mismatch " + shape_str(a.shape()) +
                     " -> " + shape_str(new_shape));
  const std::size_t n = a.vec().size();
  auto pa = a.impl();
  return make_op(std::move(new_shape), a.vec(), {pa}, [pa, n](TensorImpl& self) mutable {
    accumulate(pa, self.grad.data(), n);
  });
}

Tensor transpose_cl(const Tensor& a) {
  if (a.ndim() != 3) throw ShapeError("transpose_cl: expected [B,C,L]");
  const std::int64_t B = a.dim(0), C = a.dim(1), L = a.dim(2);
  std::vector<double> out(a.vec().size());
  const double* src = a.data();
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t c = 0; c < C; ++c)
      for (std::int64_t l = 0; l < L; ++l)
        out[(b * L + l) * C + c] = src[(b * C + c) * L + l];
  auto pa = a.impl();
  return make_op({B, L, C}, std::move(out), {pa}, [pa, B, C, L](TensorImpl& self) mutable {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t c = 0; c < C; ++c)
        for (std::int64_t l = 0; l < L; ++l)
          pa->grad[(b * C + c) * L + l] += self.grad[(b * L + l) * C + c];
  });
}

Tensor permute_0213(const Tensor& a) {
  if (a.ndim() != 4) throw ShapeError("permute_0213: expected rank-4 tensor");
  const std::int64_t D0 = a.dim(0), D1 = a.dim(1), D2 = a.dim(2), D3 = a.dim(3);
  std::vector<double> out(a.vec().size());
  const double* src = a.data();
  for (std::int64_t i = 0; i < D0; ++i)
    for (std::int64_t j = 0; j < D1; ++j)
      for (std::int64_t k = 0; k < D2; ++k) {
        const double* s = src + ((i * D1 + j) * D2 + k) * D3;
        double* d = out.data() + ((i * D2 + k) * D1 + j) * D3;
        std::memcpy(d, s, D3 * sizeof(double));
      }
  auto pa = a.impl();
  return make_op({D0, D2, D1, D3}, std::move(out), {pa},
                 [pa, D0, D1, D2, D3](TensorImpl& self) mutable {
                   if (!pa->requires_grad) return;
                   pa->ensure_grad();
                   for (std::int64_t i = 0; i < D0; ++i)
                     for (std::int64_t j = 0; j < D1; ++j)
                       for (std::int64_t k = 0; k < D2; ++k) {
                         const double* g = self.grad.data() + ((i * D2 + k) * D1 + j) * D3;
                         double* d = pa->grad.data() + ((i * D1 + j) * D2 + k) * D3;
                         for (std::int64_t l = 0; l < D3; ++l) d[l] += g[l];
                       }
                 });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(1))
    throw ShapeError("concat_rows: expected [N,d],[M,d]");
  const std::int64_t N = a.dim(0), M = b.dim(0), D = a.dim(1);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>((N + M) * D));
  out.insert(out.end(), a.vec().begin(), a.vec().end());
  out.insert(out.end(), b.vec().begin(), b.vec().end());
  auto pa = a.impl(), pb = b.impl();
  return make_op({N + M, D}, std::move(out), {pa, pb},
                 [pa, pb, N, M, D](TensorImpl& self) mutable {
                   if (pa->requires_grad) {
                     pa->ensure_grad();
                     kernels::add(pa->grad.data(), self.grad.data(), pa->grad.data(),
                                  static_cast<std::size_t>(N * D));
                   }
                   if (pb->requires_grad) {
                     pb->ensure_grad();
                     kernels::add(pb->grad.data(), self.grad.data() + N * D,
                                  pb->grad.data(), static_cast<std::size_t>(M * D));
                   }
                 });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(0) != b.dim(0))
    throw ShapeError("concat_cols: expected [N,p],[N,q]");
  const std::int64_t N = a.dim(0), P = a.dim(1), Q = b.dim(1);
  std::vector<double> out(static_cast<std::size_t>(N * (P + Q)));
  for (std::int64_t i = 0; i < N; ++i) {
    std::memcpy(out.data() + i * (P + Q), a.data() + i * P, P * sizeof(double));
    std::memcpy(out.data() + i * (P + Q) + P, b.data() + i * Q, Q * sizeof(double));
  }
  auto pa = a.impl(), pb = b.impl();
  return make_op({N, P + Q}, std::move(out), {pa, pb},
                 [pa, pb, N, P, Q](TensorImpl& self) mutable {
                   for (std::int64_t i = 0; i < N; ++i) {
                     if (pa->requires_grad) {
                       pa->ensure_grad();
                       for (std::int64_t j = 0; j < P; ++j)
                         pa->grad[i * P + j] += self.grad[i * (P + Q) + j];
                     }
                     if (pb->requires_grad) {
                       pb->ensure_grad();
                       for (std::int64_t j = 0; j < Q; ++j)
                         pb->grad[i * Q + j] += self.grad[i * (P + Q) + P + j];
                     }
                   }
                 });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 3 || b.ndim() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2))
    throw ShapeError("concat_channels: expected [B,C1,L],[B,C2,L]");
  const std::int64_t B = a.dim(0), C1 = a.dim(1), C2 = b.dim(1), L = a.dim(2);
  std::vector<double> out(static_cast<std::size_t>(B * (C1 + C2) * L));
  for (std::int64_t i = 0; i < B; ++i) {
    std::memcpy(out.data() + i * (C1 + C2) * L, a.data() + i * C1 * L,
                C1 * L * sizeof(double));
    std::memcpy(out.data() + i * (C1 + C2) * L + C1 * L, b.data() + i * C2 * L,
                C2 * L * sizeof(double));
  }
  auto pa = a.impl(), pb = b.impl();
  return make_op({B, C1 + C2, L}, std::move(out), {pa, pb},
                 [pa, pb, B, C1, C2, L](TensorImpl& self) mutable {
                   for (std::int64_t i = 0; i < B; ++i) {
                     if (pa->requires_grad) {
                       pa->ensure_grad();
                       kernels::add(pa->grad.data() + i * C1 * L,
                                    self.grad.data() + i * (C1 + C2) * L,
                                    pa->grad.data() + i * C1 * L,
                                    static_cast<std::size_t>(C1 * L));
                     }
                     if (pb->requires_grad) {
                       pb->ensure_grad();
                       kernels::add(pb->grad.data() + i * C2 * L,
                                    self.grad.data() + (i * (C1 + C2) + C1) * L,
                                    pb->grad.data() + i * C2 * L,
                                    static_cast<std::size_t>(C2 * L));
                     }
                   }
                 });
}

Tensor select_time(const Tensor& a, std::int64_t t) {
  if (a.ndim() != 3) throw ShapeError("select_time: expected [B,T,D]");
  const std::int64_t B = a.dim(0), T = a.dim(1), D = a.dim(2);
  if (t < 0 || t >= T) throw UsageError("select_time: index out of range");
  std::vector<double> out(static_cast<std::size_t>(B * D));
  for (std::int64_t b = 0; b < B; ++b)
    std::memcpy(out.data() + b * D, a.data() + (b * T + t) * D, D * sizeof(double));
  auto pa = a.impl();
  return make_op({B, D}, std::move(out), {pa}, [pa, B, T, D, t](TensorImpl& self) mutable {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (std::int64_t b = 0; b < B; ++b)
      for (std::int64_t d = 0; d < D; ++d)
        pa->grad[(b * T + t) * D + d] += self.grad[b * D + d];
  });
}

Tensor slice_time(const Tensor& a, std::int64_t t0, std::int64_t t1) {
  if (a.ndim() != 3) throw ShapeError("slice_time: expected [B,T,D]");
  const std::int64_t B = a.dim(0), T = a.dim(1), D = a.dim(2);
  if (t0 < 0 || t1 > T || t0 >= t1) throw UsageError("slice_time: bad range");
  const std::int64_t To = t1 - t0;
  std::vector<double> out(static_cast<std::size_t>(B * To * D));
  for (std::int64_t b = 0; b < B; ++b)
    std::memcpy(out.data() + b * To * D, a.data() + (b * T + t0) * D,
                To * D * sizeof(double));
  auto pa = a.impl();
  return make_op({B, To, D}, std::move(out), {pa},
                 [pa, B, T, D, t0, To](TensorImpl& self) mutable {
                   if (!pa->requires_grad) return;
                   pa->ensure_grad();
                   for (std::int64_t b = 0; b < B; ++b)
                     kernels::add(pa->grad.data() + (b * T + t0) * D,
                                  self.grad.data() + b * To * D,
                                  pa->grad.data() + (b * T + t0) * D,
                                  static_cast<std::size_t>(To * D));
                 });
}

Tensor prepend_token(const Tensor& a, const Tensor& token) {
  if (a.ndim() != 3 || token.ndim() != 1 || token.dim(0) != a.dim(2))
    throw ShapeError("prepend_token: expected [B,T,D] and [D]");
  const std::int64_t B = a.dim(0), T = a.dim(1), D = a.dim(2);
  std::vector<double> out(static_cast<std::size_t>(B * (T + 1) * D));
  for (std::int64_t b = 0; b < B; ++b) {
    std::memcpy(out.data() + b * (T + 1) * D, token.data(), D * sizeof(double));
    std::memcpy(out.data() + (b * (T + 1) + 1) * D, a.data() + b * T * D,
                T * D * sizeof(double));
  }
  auto pa = a.impl(), pt = token.impl();
  return make_op({B, T + 1, D}, std::move(out), {pa, pt},
                 [pa, pt, B, T, D](TensorImpl& self) mutable {
                   for (std::int64_t b = 0; b < B; ++b) {
                     if (pt->requires_grad) {
                       pt->ensure_grad();
                       for (std::int64_t d = 0; d < D; ++d)
                         pt->grad[d] += self.grad[b * (T + 1) * D + d];
                     }
                     if (pa->requires_grad) {
                       pa->ensure_grad();
                       kernels::add(pa->grad.data() + b * T * D,
                                    self.grad.data() + (b * (T + 1) + 1) * D,
                                    pa->grad.data() + b * T * D,
                                    static_cast<std::size_t>(T * D));
                     }
                   }
                 });
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<std::size_t>(m * n));
  kernels::gemm(false, false, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0,
                out.data(), n);
  auto pa = a.impl(), pb = b.impl();
  return make_op({m, n}, std::move(out), {pa, pb}, [pa, pb, m, n, k](TensorImpl& self) mutable {
    if (pa->requires_grad) {
      pa->ensure_grad();
      kernels::gemm(false, true, m, k, n, 1.0, self.grad.data(), n, pb->data.data(),
                    n, 1.0, pa->grad.data(), k);
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      kernels::gemm(true, false, k, n, m, 1.0, pa->data.data(), k, self.grad.data(),
                    n, 1.0, pb->grad.data(), n);
    }
  });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool trans_b) {
  if (a.ndim() != 3 || b.ndim() != 3 || a.dim(0) != b.dim(0))
    throw ShapeError("bmm: expected [G,m,k] and [G,*,*]");
  const std::int64_t G = a.dim(0), m = a.dim(1), k = a.dim(2);
  const std::int64_t n = trans_b ? b.dim(1) : b.dim(2);
  const std::int64_t bk = trans_b ? b.dim(2) : b.dim(1);
  if (bk != k) throw ShapeError("bmm: inner dimension mismatch");
  std::vector<double> out(static_cast<std::size_t>(G * m * n));
  for (std::int64_t g = 0; g < G; ++g) {
    kernels::gemm(false, trans_b, m, n, k, 1.0, a.data() + g * m * k, k,
                  b.data() + g * (trans_b ? n * k : k * n), trans_b ? k : n, 0.0,
                  out.data() + g * m * n, n);
  }
  auto pa = a.impl(), pb = b.impl();
  return make_op({G, m, n}, std::move(out), {pa, pb},
                 [pa, pb, G, m, n, k, trans_b](TensorImpl& self) mutable {
                   for (std::int64_t g = 0; g < G; ++g) {
                     const double* gslice = self.grad.data() + g * m * n;
                     const double* aslice = pa->data.data() + g * m * k;
                     const double* bslice =
                         pb->data.data() + g * (trans_b ? n * k : k * n);
                     if (pa->requires_grad) {
                       pa->ensure_grad();
                       // dA = dC * op(B)^T
                       kernels::gemm(false, !trans_b, m, k, n, 1.0, gslice, n, bslice,
                                     trans_b ? k : n, 1.0, pa->grad.data() + g * m * k, k);
                     }
                     if (pb->requires_grad) {
                       pb->ensure_grad();
                       double* bgrad = pb->grad.data() + g * (trans_b ? n * k : k * n);
                       if (trans_b) {
                         // dB = dC^T * A, B:[n,k]
                         kernels::gemm(true, false, n, k, m, 1.0, gslice, n, aslice, k,
                                       1.0, bgrad, k);
                       } else {
                         // dB = A^T * dC, B:[k,n]
                         kernels::gemm(true, false, k, n, m, 1.0, aslice, k, gslice, n,
                                       1.0, bgrad, n);
                       }
                     }
                   }
                 });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1 || x.dim(1) != w.dim(1) ||
      w.dim(0) != b.dim(0))
    throw ShapeError("linear: expected x[N,in], w[out,in], b[out], got " +
                     shape_str(x.shape()) + " " + shape_str(w.shape()));
  const std::int64_t N = x.dim(0), in = x.dim(1), out_w = w.dim(0);
  std::vector<double> out(static_cast<std::size_t>(N * out_w));
  kernels::gemm(false, true, N, out_w, in, 1.0, x.data(), in, w.data(), in, 0.0,
                out.data(), out_w);
  for (std::int64_t i = 0; i < N; ++i)
    kernels::add(out.data() + i * out_w, b.data(), out.data() + i * out_w,
                 static_cast<std::size_t>(out_w));
  auto px = x.impl(), pw = w.impl(), pb = b.impl();
  return make_op({N, out_w}, std::move(out), {px, pw, pb},
                 [px, pw, pb, N, in, out_w](TensorImpl& self) mutable {
                   if (px->requires_grad) {
                     px->ensure_grad();
                     kernels::gemm(false, false, N, in, out_w, 1.0, self.grad.data(),
                                   out_w, pw->data.data(), in, 1.0, px->grad.data(), in);
                   }
                   if (pw->requires_grad) {
                     pw->ensure_grad();
                     kernels::gemm(true, false, out_w, in, N, 1.0, self.grad.data(),
                                   out_w, px->data.data(), in, 1.0, pw->grad.data(), in);
                   }
                   if (pb->requires_grad) {
                     pb->ensure_grad();
                     for (std::int64_t i = 0; i < N; ++i)
                       kernels::add(pb->grad.data(), self.grad.data() + i * out_w,
                                    pb->grad.data(), static_cast<std::size_t>(out_w));
                   }
                 });
}

// ---------------------------------------------------------------------------
// conv1d via im2col + gemm
// ---------------------------------------------------------------------------

namespace {

void im2col(const double* x, std::int64_t B, std::int64_t Ci, std::int64_t L,
            std::int64_t K, std::int64_t stride, std::int64_t pad,
            std::int64_t Lp, double* cols) {
  const std::int64_t BLp = B * Lp;
  for (std::int64_t ci = 0; ci < Ci; ++ci) {
    for (std::int64_t kk = 0; kk < K; ++kk) {
      double* row = cols + (ci * K + kk) * BLp;
      for (std::int64_t b = 0; b < B; ++b) {
        const double* src = x + (b * Ci + ci) * L;
        double* dst = row + b * Lp;
        for (std::int64_t lp = 0; lp < Lp; ++lp) {
          const std::int64_t pos = lp * stride + kk - pad;
          dst[lp] = (pos >= 0 && pos < L) ? src[pos] : 0.0;
        }
      }
    }
  }
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::int64_t stride,
              std::int64_t padding) {
  if (x.ndim() != 3 || w.ndim() != 3 || b.ndim() != 1)
    throw ShapeError("conv1d: expected x[B,Cin,L], w[Cout,Cin,K], b[Cout]");
  const std::int64_t B = x.dim(0), Ci = x.dim(1), L = x.dim(2);
  const std::int64_t Co = w.dim(0), K = w.dim(2);
  if (w.dim(1) != Ci)
    throw ShapeError("conv1d: input channels " + std::to_string(Ci) +
                     " do not match weight channels " + std::to_string(w.dim(1)));
  if (b.dim(0) != Co) throw ShapeError("conv1d: bias size mismatch");
  if (stride < 1) throw UsageError("conv1d: stride must be >= 1");
  if (padding < 0) throw UsageError("conv1d: padding must be >= 0");
  if (K > L + 2 * padding)
    throw UsageError("conv1d: kernel longer than padded input");
  const std::int64_t Lp = (L + 2 * padding - K) / stride + 1;
  const std::int64_t BLp = B * Lp, CiK = Ci * K;

  std::vector<double>& cols = scratch(0);
  cols.resize(static_cast<std::size_t>(CiK * BLp));
  im2col(x.data(), B, Ci, L, K, stride, padding, Lp, cols.data());

  std::vector<double>& ymat = scratch(1);
  ymat.resize(static_cast<std::size_t>(Co * BLp));
  kernels::gemm(false, false, Co, BLp, CiK, 1.0, w.data(), CiK, cols.data(), BLp,
                0.0, ymat.data(), BLp);

  std::vector<double> out(static_cast<std::size_t>(B * Co * Lp));
  for (std::int64_t bb = 0; bb < B; ++bb)
    for (std::int64_t co = 0; co < Co; ++co) {
      const double* src = ymat.data() + co * BLp + bb * Lp;
      double* dst = out.data() + (bb * Co + co) * Lp;
      const double bias = b.data()[co];
      for (std::int64_t lp = 0; lp < Lp; ++lp) dst[lp] = src[lp] + bias;
    }

  auto px = x.impl(), pw = w.impl(), pbias = b.impl();
  return make_op(
      {B, Co, Lp}, std::move(out), {px, pw, pbias},
      [px, pw, pbias, B, Ci, L, Co, K, stride, padding, Lp](TensorImpl& self) mutable {
        const std::int64_t BLp = B * Lp, CiK = Ci * K;
        // Regroup the output grad as [Co, B*Lp].
        std::vector<double>& gmat = scratch(1);
        gmat.resize(static_cast<std::size_t>(Co * BLp));
        for (std::int64_t bb = 0; bb < B; ++bb)
          for (std::int64_t co = 0; co < Co; ++co)
            std::memcpy(gmat.data() + co * BLp + bb * Lp,
                        self.grad.data() + (bb * Co + co) * Lp, Lp * sizeof(double));
        if (pbias->requires_grad) {
          pbias->ensure_grad();
          for (std::int64_t co = 0; co < Co; ++co)
            pbias->grad[co] += kernels::sum(gmat.data() + co * BLp,
                                            static_cast<std::size_t>(BLp));
        }
        if (pw->requires_grad) {
          pw->ensure_grad();
          std::vector<double>& cols = scratch(0);
          cols.resize(static_cast<std::size_t>(CiK * BLp));
          im2col(px->data.data(), B, Ci, L, K, stride, padding, Lp, cols.data());
          kernels::gemm(false, true, Co, CiK, BLp, 1.0, gmat.data(), BLp, cols.data(),
                        BLp, 1.0, pw->grad.data(), CiK);
        }
        if (px->requires_grad) {
          px->ensure_grad();
          std::vector<double>& dcols = scratch(2);
          dcols.resize(static_cast<std::size_t>(CiK * BLp));
          kernels::gemm(true, false, CiK, BLp, Co, 1.0, pw->data.data(), CiK,
                        gmat.data(), BLp, 0.0, dcols.data(), BLp);
          for (std::int64_t ci = 0; ci < Ci; ++ci)
            for (std::int64_t kk = 0; kk < K; ++kk) {
              const double* row = dcols.data() + (ci * K + kk) * BLp;
              for (std::int64_t bb = 0; bb < B; ++bb) {
                double* dst = px->grad.data() + (bb * Ci + ci) * L;
                const double* src = row + bb * Lp;
                for (std::int64_t lp = 0; lp < Lp; ++lp) {
                  const std::int64_t pos = lp * stride + kk - padding;
                  if (pos >= 0 && pos < L) dst[pos] += src[lp];
                }
              }
            }
        }
      });
}

// ---------------------------------------------------------------------------
// Row-wise normalization and softmax
// ---------------------------------------------------------------------------

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.ndim() < 1 || gamma.ndim() != 1 || beta.ndim() != 1)
    throw ShapeError("layer_norm: expected x[...,D], gamma[D], beta[D]");
  const std::int64_t D = x.dim(x.ndim() - 1);
  if (gamma.dim(0) != D || beta.dim(0) != D)
    throw ShapeError("layer_norm: affine parameter size mismatch");
  if (D < 1) throw UsageError("layer_norm: trailing dimension must be >= 1");
  const std::int64_t rows = x.numel() / D;

  std::vector<double> out(x.vec().size());
  std::vector<double> xhat(x.vec().size());
  std::vector<double> inv_std(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * D;
    double mean = kernels::sum(xr, D) / static_cast<double>(D);
    double var = 0.0;
    for (std::int64_t j = 0; j < D; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(D);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::int64_t j = 0; j < D; ++j) {
      const double xh = (xr[j] - mean) * is;
      xhat[r * D + j] = xh;
      out[r * D + j] = gamma.data()[j] * xh + beta.data()[j];
    }
  }
  auto px = x.impl(), pg = gamma.impl(), pb = beta.impl();
  return make_op(
      x.shape(), std::move(out), {px, pg, pb},
      [px, pg, pb, rows, D, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](TensorImpl& self) mutable {
        if (pg->requires_grad) pg->ensure_grad();
        if (pb->requires_grad) pb->ensure_grad();
        if (px->requires_grad) px->ensure_grad();
        for (std::int64_t r = 0; r < rows; ++r) {
          const double* g = self.grad.data() + r * D;
          const double* xh = xhat.data() + r * D;
          if (pg->requires_grad)
            for (std::int64_t j = 0; j < D; ++j) pg->grad[j] += g[j] * xh[j];
          if (pb->requires_grad)
            for (std::int64_t j = 0; j < D; ++j) pb->grad[j] += g[j];
          if (px->requires_grad) {
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (std::int64_t j = 0; j < D; ++j) {
              const double dxh = g[j] * pg->data[j];
              mean_dxhat += dxh;
              mean_dxhat_xhat += dxh * xh[j];
            }
            mean_dxhat /= static_cast<double>(D);
            mean_dxhat_xhat /= static_cast<double>(D);
            double* xg = px->grad.data() + r * D;
            for (std::int64_t j = 0; j < D; ++j) {
              const double dxh = g[j] * pg->data[j];
              xg[j] += inv_std[r] * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
            }
          }
        }
      });
}

Tensor softmax_rows(const Tensor& x) {
  const std::int64_t D = x.dim(x.ndim() - 1);
  const std::int64_t rows = x.numel() / D;
  std::vector<double> out(x.vec().size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * D;
    double m = xr[0];
    for (std::int64_t j = 1; j < D; ++j) m = std::max(m, xr[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < D; ++j) {
      out[r * D + j] = std::exp(xr[j] - m);
      z += out[r * D + j];
    }
    const double inv_z = 1.0 / z;
    for (std::int64_t j = 0; j < D; ++j) out[r * D + j] *= inv_z;
  }
  auto px = x.impl();
  return make_op(x.shape(), std::move(out), {px}, [px, rows, D](TensorImpl& self) mutable {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* p = self.data.data() + r * D;
      const double* g = self.grad.data() + r * D;
      const double dotgp = kernels::dot(g, p, static_cast<std::size_t>(D));
      double* xg = px->grad.data() + r * D;
      for (std::int64_t j = 0; j < D; ++j) xg[j] += p[j] * (g[j] - dotgp);
    }
  });
}

Tensor logsumexp_rows(const Tensor& x) {
  if (x.ndim() < 2) throw ShapeError("logsumexp_rows: need at least 2 dims");
  const std::int64_t D = x.dim(x.ndim() - 1);
  const std::int64_t rows = x.numel() / D;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  std::vector<double> out(static_cast<std::size_t>(rows));
  std::vector<double> probs(x.vec().size());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * D;
    double m = xr[0];
    for (std::int64_t j = 1; j < D; ++j) m = std::max(m, xr[j]);
    double z = 0.0;
    for (std::int64_t j = 0; j < D; ++j) {
      probs[r * D + j] = std::exp(xr[j] - m);
      z += probs[r * D + j];
    }
    out[r] = m + std::log(z);
    const double inv_z = 1.0 / z;
    for (std::int64_t j = 0; j < D; ++j) probs[r * D + j] *= inv_z;
  }
  auto px = x.impl();
  return make_op(std::move(out_shape), std::move(out), {px},
                 [px, rows, D, probs = std::move(probs)](TensorImpl& self) mutable {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   for (std::int64_t r = 0; r < rows; ++r) {
                     const double g = self.grad[r];
                     double* xg = px->grad.data() + r * D;
                     const double* p = probs.data() + r * D;
                     for (std::int64_t j = 0; j < D; ++j) xg[j] += g * p[j];
                   }
                 });
}

Tensor l2_normalize_rows(const Tensor& x, double eps) {
  if (x.ndim() != 2) throw ShapeError("l2_normalize_rows: expected [N,D]");
  const std::int64_t N = x.dim(0), D = x.dim(1);
  std::vector<double> out(x.vec().size());
  std::vector<double> inv_norm(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) {
    const double* xr = x.data() + i * D;
    const double norm = std::sqrt(kernels::dot(xr, xr, static_cast<std::size_t>(D)));
    const double inv = 1.0 / std::max(norm, eps);
    inv_norm[i] = inv;
    for (std::int64_t j = 0; j < D; ++j) out[i * D + j] = xr[j] * inv;
  }
  auto px = x.impl();
  return make_op(x.shape(), std::move(out), {px},
                 [px, N, D, inv_norm = std::move(inv_norm)](TensorImpl& self) mutable {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   for (std::int64_t i = 0; i < N; ++i) {
                     const double* y = self.data.data() + i * D;
                     const double* g = self.grad.data() + i * D;
                     const double gy = kernels::dot(g, y, static_cast<std::size_t>(D));
                     double* xg = px->grad.data() + i * D;
                     for (std::int64_t j = 0; j < D; ++j)
                       xg[j] += inv_norm[i] * (g[j] - y[j] * gy);
                   }
                 });
}

Tensor gather_cols(const Tensor& x, const std::vector<std::int64_t>& idx) {
  if (x.ndim() != 2) throw ShapeError("gather_cols: expected [N,D]");
  const std::int64_t N = x.dim(0), D = x.dim(1);
  if (static_cast<std::int64_t>(idx.size()) != N)
    throw ShapeError("gather_cols: index count mismatch");
  std::vector<double> out(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) {
    if (idx[i] < 0 || idx[i] >= D) throw UsageError("gather_cols: index out of range");
    out[i] = x.data()[i * D + idx[i]];
  }
  auto px = x.impl();
  return make_op({N}, std::move(out), {px}, [px, N, D, idx](TensorImpl& self) mutable {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (std::int64_t i = 0; i < N; ++i)
      px->grad[i * D + idx[i]] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Reductions and pooling
// ---------------------------------------------------------------------------

Tensor sum_all(const Tensor& x) {
  const std::size_t n = x.vec().size();
  auto px = x.impl();
  return make_op({1}, {kernels::sum(x.data(), n)}, {px}, [px, n](TensorImpl& self) mutable {
    if (!px->requires_grad) return;
    px->ensure_grad();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < n; ++i) px->grad[i] += g;
  });
}

Tensor mean_all(const Tensor& x) {
  const std::size_t n = x.vec().size();
  if (n == 0) throw UsageError("mean_all: empty tensor");
  auto px = x.impl();
  const double inv = 1.0 / static_cast<double>(n);
  return make_op({1}, {kernels::sum(x.data(), n) * inv}, {px},
                 [px, n, inv](TensorImpl& self) mutable {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   const double g = self.grad[0] * inv;
                   for (std::size_t i = 0; i < n; ++i) px->grad[i] += g;
                 });
}

Tensor mean_time(const Tensor& x) {
  if (x.ndim() != 3) throw ShapeError("mean_time: expected [B,C,L]");
  const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  std::vector<double> out(static_cast<std::size_t>(B * C));
  const double inv = 1.0 / static_cast<double>(L);
  for (std::int64_t i = 0; i < B * C; ++i)
    out[i] = kernels::sum(x.data() + i * L, static_cast<std::size_t>(L)) * inv;
  auto px = x.impl();
  return make_op({B, C}, std::move(out), {px}, [px, B, C, L, inv](TensorImpl& self) mutable {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (std::int64_t i = 0; i < B * C; ++i) {
      const double g = self.grad[i] * inv;
      double* xg = px->grad.data() + i * L;
      for (std::int64_t l = 0; l < L; ++l) xg[l] += g;
    }
  });
}

Tensor max_pool_time(const Tensor& x) {
  if (x.ndim() != 3) throw ShapeError("max_pool_time: expected [N,T,D]");
  const std::int64_t N = x.dim(0), T = x.dim(1), D = x.dim(2);
  const std::int64_t To = (T + 1) / 2;
  std::vector<double> out(static_cast<std::size_t>(N * To * D));
  std::vector<std::int64_t> argmax(out.size());
  for (std::int64_t i = 0; i < N; ++i)
    for (std::int64_t t = 0; t < To; ++t)
      for (std::int64_t d = 0; d < D; ++d) {
        const std::int64_t t0 = 2 * t, t1 = 2 * t + 1;
        const double v0 = x.data()[(i * T + t0) * D + d];
        if (t1 < T) {
          const double v1 = x.data()[(i * T + t1) * D + d];
          const bool second = v1 > v0;
          out[(i * To + t) * D + d] = second ? v1 : v0;
          argmax[(i * To + t) * D + d] = (i * T + (second ? t1 : t0)) * D + d;
        } else {
          out[(i * To + t) * D + d] = v0;
          argmax[(i * To + t) * D + d] = (i * T + t0) * D + d;
        }
      }
  auto px = x.impl();
  return make_op({N, To, D}, std::move(out), {px},
                 [px, argmax = std::move(argmax)](TensorImpl& self) mutable {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   for (std::size_t i = 0; i < argmax.size(); ++i)
                     px->grad[argmax[i]] += self.grad[i];
                 });
}

Tensor upsample2_nearest(const Tensor& x) {
  if (x.ndim() != 3) throw ShapeError("upsample2_nearest: expected [B,C,L]");
  const std::int64_t BC = x.dim(0) * x.dim(1), L = x.dim(2);
  std::vector<double> out(static_cast<std::size_t>(BC * 2 * L));
  for (std::int64_t i = 0; i < BC; ++i)
    for (std::int64_t l = 0; l < L; ++l) {
      const double v = x.data()[i * L + l];
      out[i * 2 * L + 2 * l] = v;
      out[i * 2 * L + 2 * l + 1] = v;
    }
  auto px = x.impl();
  return make_op({x.dim(0), x.dim(1), 2 * L}, std::move(out), {px},
                 [px, BC, L](TensorImpl& self) mutable {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   for (std::int64_t i = 0; i < BC; ++i)
                     for (std::int64_t l = 0; l < L; ++l)
                       px->grad[i * L + l] += self.grad[i * 2 * L + 2 * l] +
                                              self.grad[i * 2 * L + 2 * l + 1];
                 });
}

Tensor downsample2_time(const Tensor& x) {
  if (x.ndim() != 3) throw ShapeError("downsample2_time: expected [B,C,L]");
  const std::int64_t BC = x.dim(0) * x.dim(1), L = x.dim(2);
  const std::int64_t Lo = (L + 1) / 2;
  std::vector<double> out(static_cast<std::size_t>(BC * Lo));
  for (std::int64_t i = 0; i < BC; ++i)
    for (std::int64_t l = 0; l < Lo; ++l) out[i * Lo + l] = x.data()[i * L + 2 * l];
  auto px = x.impl();
  return make_op({x.dim(0), x.dim(1), Lo}, std::move(out), {px},
                 [px, BC, L, Lo](TensorImpl& self) mutable {
                   if (!px->requires_grad) return;
                   px->ensure_grad();
                   for (std::int64_t i = 0; i < BC; ++i)
                     for (std::int64_t l = 0; l < Lo; ++l)
                       px->grad[i * L + 2 * l] += self.grad[i * Lo + l];
                 });
}

// ---------------------------------------------------------------------------
// Broadcast adds
// ---------------------------------------------------------------------------

Tensor add_bias_channels(const Tensor& x, const Tensor& bias) {
  if (x.ndim() != 3 || bias.ndim() != 1 || bias.dim(0) != x.dim(1))
    throw ShapeError("add_bias_channels: expected [B,C,L] and [C]");
  const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  std::vector<double> out(x.vec());
  for (std::int64_t b = 0; b < B; ++b)
    for (std::int64_t c = 0; c < C; ++c) {
      double* row = out.data() + (b * C + c) * L;
      const double v = bias.data()[c];
      for (std::int64_t l = 0; l < L; ++l) row[l] += v;
    }
  auto px = x.impl(), pb = bias.impl();
  return make_op(x.shape(), std::move(out), {px, pb}, [px, pb, B, C, L](TensorImpl& self) mutable {
    if (px->requires_grad) {
      px->ensure_grad();
      kernels::add(px->grad.data(), self.grad.data(), px->grad.data(), self.grad.size());
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 0; c < C; ++c)
          pb->grad[c] += kernels::sum(self.grad.data() + (b * C + c) * L,
                                      static_cast<std::size_t>(L));
    }
  });
}

Tensor add_bias_bc(const Tensor& x, const Tensor& bias) {
  if (x.ndim() != 3 || bias.ndim() != 2 || bias.dim(0) != x.dim(0) ||
      bias.dim(1) != x.dim(1))
    throw ShapeError("add_bias_bc: expected [B,C,L] and [B,C]");
  const std::int64_t BC = x.dim(0) * x.dim(1), L = x.dim(2);
  std::vector<double> out(x.vec());
  for (std::int64_t i = 0; i < BC; ++i) {
    double* row = out.data() + i * L;
    const double v = bias.data()[i];
    for (std::int64_t l = 0; l < L; ++l) row[l] += v;
  }
  auto px = x.impl(), pb = bias.impl();
  return make_op(x.shape(), std::move(out), {px, pb}, [px, pb, BC, L](TensorImpl& self) mutable {
    if (px->requires_grad) {
      px->ensure_grad();
      kernels::add(px->grad.data(), self.grad.data(), px->grad.data(), self.grad.size());
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::int64_t i = 0; i < BC; ++i)
        pb->grad[i] += kernels::sum(self.grad.data() + i * L,
                                    static_cast<std::size_t>(L));
    }
  });
}

// ---------------------------------------------------------------------------
// Composites
// ---------------------------------------------------------------------------

Tensor mse(const Tensor& a, const Tensor& b) {
  Tensor d = sub(a, b);
  return mean_all(mul(d, d));
}

Tensor cross_entropy(const Tensor& logits, const std::vector<std::int64_t>& labels) {
  if (logits.ndim() != 2) throw ShapeError("cross_entropy: expected [N,K] logits");
  Tensor lse = logsumexp_rows(logits);
  Tensor pos = gather_cols(logits, labels);
  return mean_all(sub(lse, pos));
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw ShapeError("cosine_similarity: size mismatch");
  const double na = std::sqrt(kernels::dot(a.data(), a.data(), a.size()));
  const double nb = std::sqrt(kernels::dot(b.data(), b.data(), b.size()));
  if (na == 0.0 || nb == 0.0)
    throw DomainError("cosine_similarity: zero-norm input");
  const double s = kernels::dot(a.data(), b.data(), a.size()) / (na * nb);
  return std::clamp(s, -1.0, 1.0);
}

}  // namespace tsbench
