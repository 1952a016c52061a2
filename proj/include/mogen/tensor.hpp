// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mogen/common.hpp"

namespace mogen {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);

struct TensorData {
  Shape shape;
  std::vector<double> v;
  bool requires_grad = false;
  std::string name;
};

// Dense double tensor with shared storage. Copying a Tensor copies the
// handle, not the data; clone() makes a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorData> d) : d_(std::move(d)) {}

  static Tensor zeros(Shape s, bool requires_grad = false);
  static Tensor full(Shape s, double value, bool requires_grad = false);
  static Tensor from(Shape s, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(d_); }
  const Shape& shape() const { return d_->shape; }
  int rank() const { return static_cast<int>(d_->shape.size()); }
  int64_t dim(int i) const { return d_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(d_->v.size()); }
  double* data() { return d_->v.data(); }
  const double* data() const { return d_->v.data(); }
  const std::vector<double>& values() const { return d_->v; }
  // Value of a single-element tensor.
  double item() const;

  bool requires_grad() const { return d_ && d_->requires_grad; }
  Tensor& set_requires_grad(bool rg) {
    d_->requires_grad = rg;
    return *this;
  }
  Tensor& set_name(std::string n) {
    d_->name = std::move(n);
    return *this;
  }
  const std::string& name() const { return d_->name; }

  TensorData* node() const { return d_.get(); }
  std::shared_ptr<TensorData> ptr() const { return d_; }
  Tensor clone() const;

 private:
  std::shared_ptr<TensorData> d_;
};

// Gradients produced by backward(); keyed by tensor identity. Parameters
// are never mutated by the reverse pass, which keeps concurrent backward
// passes over shared parameters race-free.
class GradMap {
 public:
  std::vector<double>& at_or_create(TensorData* n, int64_t numel);
  const std::vector<double>* find(TensorData* n) const;
  // Gradient for `t`, zeros if none was accumulated.
  Tensor grad(const Tensor& t) const;
  bool contains(const Tensor& t) const { return find(t.node()) != nullptr; }

  std::unordered_map<TensorData*, std::vector<double>> slots;
};

struct TapeRecord {
  const char* op;
  std::vector<std::shared_ptr<TensorData>> inputs;
  std::shared_ptr<TensorData> output;
  // Reads the output slot of `gm` and accumulates into input slots.
  std::function<void(GradMap& gm)> backward;
};

// Reverse-mode tape. One tape per forward pass; backward() leaves the tape
// intact, the owner clears or destroys it afterwards.
class Tape {
 public:
  std::vector<TapeRecord> records;
  void clear() { records.clear(); }
  size_t size() const { return records.size(); }
  void dump(std::ostream& os) const;
};

// Installs a thread-local active tape for the lifetime of the scope.
// Ops record onto the active tape when any input requires grad. Without an
// active tape nothing is recorded and outputs do not require grad.
class TapeScope {
 public:
  explicit TapeScope(Tape& t);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

// Temporarily disables recording within an active tape scope.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* prev_;
};

Tape* active_tape();

// Reverse pass from scalar `loss` over `tape`. Gradients of leaves have the
// shape of the leaf. Calling twice on the same tape recomputes from scratch.
GradMap backward(const Tensor& loss, const Tape& tape);

// --- Operations -----------------------------------------------------------
// Every op validates shapes, computes forward via the kernel layer and scans
// the output for non-finite values (masked_fill is the documented exception;
// it intentionally writes -inf / +inf fill values).

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false, bool trans_b = false);
// Elementwise; b may be same-shape, a trailing-axis suffix of a's shape, or
// a single-element tensor.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// out[r, :] = x[r, :] * s[r]; x is (rows, cols), s is (rows).
Tensor row_scale(const Tensor& x, const Tensor& s);
// Softmax / layer norm over the last axis.
Tensor softmax(const Tensor& x);
Tensor layer_norm(const Tensor& x, double eps = 1e-8);
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& x, int axis, int64_t start, int64_t stop);
// mask is 0/1, same shape as x; out = mask ? value : x.
Tensor masked_fill(const Tensor& x, const Tensor& mask, double value);
Tensor embedding_lookup(const Tensor& table, const std::vector<int64_t>& ids);
Tensor mean_all(const Tensor& x);
Tensor sum_all(const Tensor& x);
// Elementwise binary cross entropy; prob clamped to [eps, 1-eps]. The target
// carries no gradient.
Tensor bce(const Tensor& prob, const Tensor& target, double eps = 1e-12);
// Rotary position embedding over rows; x is (N, heads * head_dim).
Tensor rope(const Tensor& x, int64_t heads, double base = 10000.0, int64_t pos0 = 0);
Tensor reshape(const Tensor& x, Shape new_shape);

// Batched geometry ops.
// (n, 6) -> (n, 9) row-major rotation matrices; throws on degenerate input.
Tensor rot6d_decode(const Tensor& r6, double tol = 1e-8);
// (n, 9) x (n, 9) -> (n, 9) with optional per-operand transpose.
Tensor mat3_mul(const Tensor& a, const Tensor& b, bool ta = false, bool tb = false);
// (n, 9), (n, 3) -> (n, 3): out = op(A) * v.
Tensor mat3_apply(const Tensor& a, const Tensor& v, bool ta = false);
// (n, 9), (n, 3) -> (n, 3): T[0] = 0, T[i] = T[i-1] + R[i-1] v[i-1].
Tensor rollout_scan(const Tensor& rot, const Tensor& vel);
// (p, 3) camera-space points -> (p, 2) pixels; validity (p) written to
// `valid_out` when non-null (1 = projected, 0 = behind z_near, zero grad).
Tensor project_pinhole(const Tensor& pts, double f, double cx, double cy, double z_near,
                       Tensor* valid_out = nullptr);

}  // namespace mogen
