#pragma once
// Dense f64 tensors with reverse-mode automatic differentiation.
//
// Ops build a graph of shared TensorImpl nodes; Tensor::backward() on a
// scalar loss runs the recorded closures in reverse topological order and
// accumulates into .grad buffers. The graph for one training step dies with
// the loss tensor, so each step effectively gets a fresh tape.
//
// All math is double precision throughout; the inner loops dispatch through
// tsbench::kernels.

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "tsbench/rng.hpp"

namespace tsbench {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily, same length as data
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  // Propagates this node's grad into its parents' grads.
  std::function<void(TensorImpl&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

// Disables graph recording for its scope (inference / sampling paths).
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value);
  // i.i.d. U(-bound, bound) entries.
  static Tensor uniform(Shape shape, double bound, Rng& rng,
                        bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::int64_t dim(std::size_t i) const { return impl_->shape[i]; }
  std::size_t ndim() const { return impl_->shape.size(); }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  double* data() { return impl_->data.data(); }
  const double* data() const { return impl_->data.data(); }
  std::vector<double>& vec() { return impl_->data; }
  const std::vector<double>& vec() const { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  std::vector<double>& grad() {
    impl_->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() {
    impl_->ensure_grad();
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
  }

  // Scalar value of a 1-element tensor.
  double item() const;

  // Element access by multi-index (test/debug convenience, row-major).
  double& at(std::initializer_list<std::int64_t> idx);
  double at(std::initializer_list<std::int64_t> idx) const;

  // Reverse-mode sweep from a scalar loss. Grad buffers accumulate; call
  // zero_grad on parameters between steps.
  void backward();

  std::shared_ptr<TensorImpl>& impl() { return impl_; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// --- elementwise -----------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor exp_elem(const Tensor& a);

// --- shape ------------------------------------------------------------------
Tensor reshape(const Tensor& a, Shape new_shape);
// [B,C,L] -> [B,L,C]
Tensor transpose_cl(const Tensor& a);
// [A,B,C,D] -> [A,C,B,D] (self-inverse)
Tensor permute_0213(const Tensor& a);
Tensor concat_rows(const Tensor& a, const Tensor& b);        // [N,d],[M,d] -> [N+M,d]
Tensor concat_cols(const Tensor& a, const Tensor& b);        // [N,p],[N,q] -> [N,p+q]
Tensor concat_channels(const Tensor& a, const Tensor& b);    // [B,C1,L],[B,C2,L]
Tensor select_time(const Tensor& a, std::int64_t t);         // [B,T,D] -> [B,D]
Tensor slice_time(const Tensor& a, std::int64_t t0, std::int64_t t1);  // [B,T,D] -> [B,t1-t0,D]
Tensor prepend_token(const Tensor& a, const Tensor& token);  // [B,T,D],[D] -> [B,T+1,D]

// --- linear algebra ---------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k]x[k,n]
// Batched matmul over the leading dim: [G,m,k] x [G,k,n] (or [G,n,k] when
// trans_b) -> [G,m,n].
Tensor bmm(const Tensor& a, const Tensor& b, bool trans_b = false);
// y = x W^T + b with x:[N,in], w:[out,in], b:[out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// --- convolution ------------------------------------------------------------
// x:[B,Cin,L], w:[Cout,Cin,K], b:[Cout]; cross-correlation semantics.
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::int64_t stride, std::int64_t padding);

// --- normalization / rows ---------------------------------------------------
// Normalizes over the trailing dimension.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
Tensor softmax_rows(const Tensor& x);
Tensor logsumexp_rows(const Tensor& x);  // [..., D] -> [...]
// Unit L2 rows: x / max(||x||, eps).
Tensor l2_normalize_rows(const Tensor& x, double eps = 1e-12);
// y[i] = x[i, idx[i]]
Tensor gather_cols(const Tensor& x, const std::vector<std::int64_t>& idx);

// --- reductions / pooling ---------------------------------------------------
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor mean_time(const Tensor& x);  // [B,C,L] -> [B,C] (global average pool)
// [N,T,D] -> [N,ceil(T/2),D], stride-2 max over pairs (odd tail kept as-is).
Tensor max_pool_time(const Tensor& x);
Tensor upsample2_nearest(const Tensor& x);  // [B,C,L] -> [B,C,2L]
Tensor downsample2_time(const Tensor& x);   // [B,C,L] -> [B,C,ceil(L/2)], keeps even steps

// --- broadcast adds ---------------------------------------------------------
Tensor add_bias_channels(const Tensor& x, const Tensor& bias);  // [B,C,L]+[C]
Tensor add_bias_bc(const Tensor& x, const Tensor& bias);        // [B,C,L]+[B,C]

// --- composites -------------------------------------------------------------
Tensor mse(const Tensor& a, const Tensor& b);
Tensor cross_entropy(const Tensor& logits, const std::vector<std::int64_t>& labels);

// Plain-value cosine similarity (module op, not differentiable).
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tsbench
