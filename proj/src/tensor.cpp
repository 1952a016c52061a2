// SPDX-License-Identifier: Apache-2.0
#include "mogen/tensor.hpp"

#include <cmath>
#include <cstring>

#include "mogen/kernels.hpp"

namespace mogen {

namespace {
thread_local Tape* g_active_tape = nullptr;

bool want_record(const std::vector<Tensor>& inputs) {
  if (!g_active_tape) return false;
  for (const auto& t : inputs) {
    if (t.requires_grad()) return true;
  }
  return false;
}

void push_record(const char* op, const std::vector<Tensor>& inputs, const Tensor& out,
                 std::function<void(GradMap&)> bwd) {
  out.node()->requires_grad = true;
  TapeRecord rec;
  rec.op = op;
  rec.inputs.reserve(inputs.size());
  for (const auto& t : inputs) rec.inputs.push_back(t.ptr());
  rec.output = out.ptr();
  rec.backward = std::move(bwd);
  g_active_tape->records.push_back(std::move(rec));
}

void ensure_finite(const Tensor& t, const char* op) {
  const double* p = t.data();
  const int64_t n = t.numel();
  for (int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) {
      fail_numeric("op '", op, "' produced non-finite value at flat index ", i);
    }
  }
}

void add_into(std::vector<double>& dst, const double* src, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

enum class Bcast { same, suffix, scalar };

// b must be same-shape, a trailing suffix of a's shape, or single-element.
Bcast broadcast_kind(const char* op, const Shape& a, const Shape& b, int64_t b_numel,
                     int64_t* outer, int64_t* inner) {
  if (a == b) {
    *outer = 1;
    *inner = shape_numel(a);
    return Bcast::same;
  }
  if (b_numel == 1) {
    *outer = shape_numel(a);
    *inner = 1;
    return Bcast::scalar;
  }
  if (b.size() < a.size()) {
    const size_t off = a.size() - b.size();
    bool suffix = true;
    for (size_t i = 0; i < b.size(); ++i) {
      if (a[off + i] != b[i]) suffix = false;
    }
    if (suffix) {
      *inner = shape_numel(b);
      *outer = shape_numel(a) / *inner;
      return Bcast::suffix;
    }
  }
  fail_shape("op '", op, "': shape mismatch lhs=", shape_str(a), " rhs=", shape_str(b));
}
}  // namespace

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

Tensor Tensor::zeros(Shape s, bool requires_grad) {
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(s);
  d->v.assign(static_cast<size_t>(shape_numel(d->shape)), 0.0);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::full(Shape s, double value, bool requires_grad) {
  Tensor t = zeros(std::move(s), requires_grad);
  for (auto& x : t.d_->v) x = value;
  return t;
}

Tensor Tensor::from(Shape s, std::vector<double> values, bool requires_grad) {
  if (static_cast<int64_t>(values.size()) != shape_numel(s)) {
    fail_shape("tensor init: ", values.size(), " values for shape ", shape_str(s));
  }
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(s);
  d->v = std::move(values);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) fail_shape("item() on tensor of shape ", shape_str(shape()));
  return d_->v[0];
}

Tensor Tensor::clone() const {
  auto d = std::make_shared<TensorData>(*d_);
  d->requires_grad = false;
  return Tensor(std::move(d));
}

std::vector<double>& GradMap::at_or_create(TensorData* n, int64_t numel) {
  auto it = slots.find(n);
  if (it == slots.end()) {
    it = slots.emplace(n, std::vector<double>(static_cast<size_t>(numel), 0.0)).first;
  }
  return it->second;
}

const std::vector<double>* GradMap::find(TensorData* n) const {
  auto it = slots.find(n);
  return it == slots.end() ? nullptr : &it->second;
}

Tensor GradMap::grad(const Tensor& t) const {
  const auto* g = find(t.node());
  if (!g) return Tensor::zeros(t.shape());
  return Tensor::from(t.shape(), *g);
}

void Tape::dump(std::ostream& os) const {
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    os << i << ": " << r.op << "(";
    for (size_t j = 0; j < r.inputs.size(); ++j) {
      if (j) os << ", ";
      os << shape_str(r.inputs[j]->shape);
      if (!r.inputs[j]->name.empty()) os << ":" << r.inputs[j]->name;
    }
    os << ") -> " << shape_str(r.output->shape) << "\n";
  }
}

TapeScope::TapeScope(Tape& t) : prev_(g_active_tape) { g_active_tape = &t; }
TapeScope::~TapeScope() { g_active_tape = prev_; }

NoGradScope::NoGradScope() : prev_(g_active_tape) { g_active_tape = nullptr; }
NoGradScope::~NoGradScope() { g_active_tape = prev_; }

Tape* active_tape() { return g_active_tape; }

GradMap backward(const Tensor& loss, const Tape& tape) {
  if (loss.numel() != 1) fail_shape("backward: loss must be scalar, got ", shape_str(loss.shape()));
  if (!loss.requires_grad()) {
    fail_value("backward: loss does not require grad (no-op forward or missing tape scope)");
  }
  GradMap gm;
  gm.at_or_create(loss.node(), 1)[0] = 1.0;
  for (auto it = tape.records.rbegin(); it != tape.records.rend(); ++it) {
    if (it->backward) it->backward(gm);
  }
  return gm;
}

// ---------------------------------------------------------------------------
// matmul

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  if (a.rank() != 2 || b.rank() != 2) {
    fail_shape("matmul: rank-2 operands required, got ", shape_str(a.shape()), " and ",
               shape_str(b.shape()));
  }
  const int64_t m = trans_a ? a.dim(1) : a.dim(0);
  const int64_t k = trans_a ? a.dim(0) : a.dim(1);
  const int64_t kb = trans_b ? b.dim(1) : b.dim(0);
  const int64_t n = trans_b ? b.dim(0) : b.dim(1);
  if (k != kb) {
    fail_shape("matmul: shape mismatch lhs=", shape_str(a.shape()), " rhs=", shape_str(b.shape()),
               trans_a ? " (lhs transposed)" : "", trans_b ? " (rhs transposed)" : "");
  }
  Tensor out = Tensor::zeros({m, n});
  kernels::gemm(trans_a, trans_b, m, n, k, a.data(), b.data(), out.data());
  ensure_finite(out, "matmul");
  if (want_record({a, b})) {
    auto an = a.ptr();
    auto bn = b.ptr();
    auto on = out.ptr();
    const bool ga_wanted = a.requires_grad();
    const bool gb_wanted = b.requires_grad();
    push_record("matmul", {a, b}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      const double* gc = go->data();
      std::vector<double> tmp;
      if (ga_wanted) {
        tmp.assign(an->v.size(), 0.0);
        if (!trans_a && !trans_b) {
          kernels::gemm(false, true, m, k, n, gc, bn->v.data(), tmp.data());
        } else if (trans_a && !trans_b) {
          kernels::gemm(false, true, k, m, n, bn->v.data(), gc, tmp.data());
        } else if (!trans_a && trans_b) {
          kernels::gemm(false, false, m, k, n, gc, bn->v.data(), tmp.data());
        } else {
          kernels::gemm(true, true, k, m, n, bn->v.data(), gc, tmp.data());
        }
        add_into(gm.at_or_create(an.get(), static_cast<int64_t>(an->v.size())), tmp.data(),
                 static_cast<int64_t>(an->v.size()));
      }
      if (gb_wanted) {
        tmp.assign(bn->v.size(), 0.0);
        if (!trans_a && !trans_b) {
          kernels::gemm(true, false, k, n, m, an->v.data(), gc, tmp.data());
        } else if (trans_a && !trans_b) {
          kernels::gemm(false, false, k, n, m, an->v.data(), gc, tmp.data());
        } else if (!trans_a && trans_b) {
          kernels::gemm(true, false, n, k, m, gc, an->v.data(), tmp.data());
        } else {
          kernels::gemm(true, true, n, k, m, gc, an->v.data(), tmp.data());
        }
        add_into(gm.at_or_create(bn.get(), static_cast<int64_t>(bn->v.size())), tmp.data(),
                 static_cast<int64_t>(bn->v.size()));
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise add / sub / mul / scale

namespace {
enum class EwKind { add, sub, mul };

Tensor ew_binary(const char* name, EwKind kind, const Tensor& a, const Tensor& b) {
  int64_t outer = 0, inner = 0;
  const Bcast bc = broadcast_kind(name, a.shape(), b.shape(), b.numel(), &outer, &inner);
  Tensor out = Tensor::zeros(a.shape());
  const int64_t n = a.numel();
  switch (bc) {
    case Bcast::same:
      if (kind == EwKind::add) kernels::ew_add(n, a.data(), b.data(), out.data());
      if (kind == EwKind::sub) kernels::ew_sub(n, a.data(), b.data(), out.data());
      if (kind == EwKind::mul) kernels::ew_mul(n, a.data(), b.data(), out.data());
      break;
    case Bcast::scalar: {
      const double c = b.data()[0];
      if (kind == EwKind::add) {
        for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + c;
      } else if (kind == EwKind::sub) {
        for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] - c;
      } else {
        kernels::ew_scale(n, a.data(), c, out.data());
      }
      break;
    }
    case Bcast::suffix:
      if (kind == EwKind::mul) {
        kernels::ew_mul_bcast(outer, inner, a.data(), b.data(), out.data());
      } else if (kind == EwKind::add) {
        kernels::ew_add_bcast(outer, inner, a.data(), b.data(), out.data());
      } else {
        for (int64_t o = 0; o < outer; ++o) {
          for (int64_t i = 0; i < inner; ++i) {
            out.data()[o * inner + i] = a.data()[o * inner + i] - b.data()[i];
          }
        }
      }
      break;
  }
  ensure_finite(out, name);
  if (want_record({a, b})) {
    auto an = a.ptr();
    auto bn = b.ptr();
    auto on = out.ptr();
    const bool ga_wanted = a.requires_grad();
    const bool gb_wanted = b.requires_grad();
    push_record(name, {a, b}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      const double* g = go->data();
      const int64_t total = static_cast<int64_t>(on->v.size());
      if (ga_wanted) {
        auto& ga = gm.at_or_create(an.get(), total);
        if (kind == EwKind::mul) {
          if (bc == Bcast::same) {
            for (int64_t i = 0; i < total; ++i) ga[i] += g[i] * bn->v[i];
          } else if (bc == Bcast::scalar) {
            const double c = bn->v[0];
            for (int64_t i = 0; i < total; ++i) ga[i] += g[i] * c;
          } else {
            for (int64_t o = 0; o < outer; ++o) {
              for (int64_t i = 0; i < inner; ++i) ga[o * inner + i] += g[o * inner + i] * bn->v[i];
            }
          }
        } else {
          for (int64_t i = 0; i < total; ++i) ga[i] += g[i];
        }
      }
      if (gb_wanted) {
        auto& gb = gm.at_or_create(bn.get(), static_cast<int64_t>(bn->v.size()));
        const double sgn = (kind == EwKind::sub) ? -1.0 : 1.0;
        if (kind == EwKind::mul) {
          if (bc == Bcast::same) {
            for (int64_t i = 0; i < total; ++i) gb[i] += g[i] * an->v[i];
          } else if (bc == Bcast::scalar) {
            double acc = 0.0;
            for (int64_t i = 0; i < total; ++i) acc += g[i] * an->v[i];
            gb[0] += acc;
          } else {
            for (int64_t o = 0; o < outer; ++o) {
              for (int64_t i = 0; i < inner; ++i) gb[i] += g[o * inner + i] * an->v[o * inner + i];
            }
          }
        } else {
          if (bc == Bcast::same) {
            for (int64_t i = 0; i < total; ++i) gb[i] += sgn * g[i];
          } else if (bc == Bcast::scalar) {
            double acc = 0.0;
            for (int64_t i = 0; i < total; ++i) acc += g[i];
            gb[0] += sgn * acc;
          } else {
            for (int64_t o = 0; o < outer; ++o) {
              for (int64_t i = 0; i < inner; ++i) gb[i] += sgn * g[o * inner + i];
            }
          }
        }
      }
    });
  }
  return out;
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return ew_binary("add", EwKind::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return ew_binary("sub", EwKind::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return ew_binary("mul", EwKind::mul, a, b); }

Tensor scale(const Tensor& a, double c) {
  if (!std::isfinite(c)) fail_value("scale: non-finite factor");
  Tensor out = Tensor::zeros(a.shape());
  kernels::ew_scale(a.numel(), a.data(), c, out.data());
  ensure_finite(out, "scale");
  if (want_record({a})) {
    auto an = a.ptr();
    auto on = out.ptr();
    push_record("scale", {a}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& ga = gm.at_or_create(an.get(), static_cast<int64_t>(an->v.size()));
      for (size_t i = 0; i < ga.size(); ++i) ga[i] += c * (*go)[i];
    });
  }
  return out;
}

Tensor row_scale(const Tensor& x, const Tensor& s) {
  if (x.rank() != 2 || s.rank() != 1 || s.dim(0) != x.dim(0)) {
    fail_shape("row_scale: x=", shape_str(x.shape()), " s=", shape_str(s.shape()));
  }
  const int64_t rows = x.dim(0), cols = x.dim(1);
  Tensor out = Tensor::zeros(x.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const double c = s.data()[r];
    for (int64_t j = 0; j < cols; ++j) out.data()[r * cols + j] = x.data()[r * cols + j] * c;
  }
  ensure_finite(out, "row_scale");
  if (want_record({x, s})) {
    auto xn = x.ptr();
    auto sn = s.ptr();
    auto on = out.ptr();
    const bool gx_wanted = x.requires_grad();
    const bool gs_wanted = s.requires_grad();
    push_record("row_scale", {x, s}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      const double* g = go->data();
      if (gx_wanted) {
        auto& gx = gm.at_or_create(xn.get(), rows * cols);
        for (int64_t r = 0; r < rows; ++r) {
          const double c = sn->v[static_cast<size_t>(r)];
          for (int64_t j = 0; j < cols; ++j) gx[r * cols + j] += g[r * cols + j] * c;
        }
      }
      if (gs_wanted) {
        auto& gs = gm.at_or_create(sn.get(), rows);
        for (int64_t r = 0; r < rows; ++r) {
          double acc = 0.0;
          for (int64_t j = 0; j < cols; ++j) acc += g[r * cols + j] * xn->v[r * cols + j];
          gs[r] += acc;
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// softmax / layer_norm / gelu

Tensor softmax(const Tensor& x) {
  if (x.rank() < 1) fail_shape("softmax: rank >= 1 required");
  const int64_t cols = x.dim(x.rank() - 1);
  const int64_t rows = x.numel() / cols;
  Tensor out = Tensor::zeros(x.shape());
  const int64_t bad = kernels::softmax_rows(rows, cols, x.data(), out.data());
  if (bad >= 0) fail_numeric("softmax: fully masked row ", bad, " (all -inf)");
  ensure_finite(out, "softmax");
  if (want_record({x})) {
    auto xn = x.ptr();
    auto on = out.ptr();
    push_record("softmax", {x}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gx = gm.at_or_create(xn.get(), rows * cols);
      const double* p = on->v.data();
      const double* g = go->data();
      for (int64_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (int64_t j = 0; j < cols; ++j) dot += g[r * cols + j] * p[r * cols + j];
        for (int64_t j = 0; j < cols; ++j) {
          gx[r * cols + j] += p[r * cols + j] * (g[r * cols + j] - dot);
        }
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, double eps) {
  if (x.rank() < 1) fail_shape("layer_norm: rank >= 1 required");
  const int64_t cols = x.dim(x.rank() - 1);
  const int64_t rows = x.numel() / cols;
  Tensor out = Tensor::zeros(x.shape());
  auto mean = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
  auto rstd = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
  kernels::layer_norm_rows(rows, cols, x.data(), eps, out.data(), mean->data(), rstd->data());
  ensure_finite(out, "layer_norm");
  if (want_record({x})) {
    auto xn = x.ptr();
    auto on = out.ptr();
    push_record("layer_norm", {x}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gx = gm.at_or_create(xn.get(), rows * cols);
      kernels::layer_norm_grad_rows(rows, cols, xn->v.data(), mean->data(), rstd->data(),
                                    go->data(), gx.data());
    });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  kernels::gelu(x.numel(), x.data(), out.data());
  ensure_finite(out, "gelu");
  if (want_record({x})) {
    auto xn = x.ptr();
    auto on = out.ptr();
    push_record("gelu", {x}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gx = gm.at_or_create(xn.get(), static_cast<int64_t>(xn->v.size()));
      kernels::gelu_grad(static_cast<int64_t>(xn->v.size()), xn->v.data(), go->data(), gx.data());
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  kernels::sigmoid(x.numel(), x.data(), out.data());
  ensure_finite(out, "sigmoid");
  if (want_record({x})) {
    auto xn = x.ptr();
    auto on = out.ptr();
    push_record("sigmoid", {x}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gx = gm.at_or_create(xn.get(), static_cast<int64_t>(xn->v.size()));
      kernels::sigmoid_grad(static_cast<int64_t>(on->v.size()), on->v.data(), go->data(),
                            gx.data());
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// concat / slice / reshape

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) fail_shape("concat: no inputs");
  const int rank = parts[0].rank();
  if (axis < 0 || axis >= rank) fail_shape("concat: axis ", axis, " out of range");
  Shape out_shape = parts[0].shape();
  int64_t axis_total = 0;
  for (const auto& p : parts) {
    if (p.rank() != rank) fail_shape("concat: rank mismatch");
    for (int d = 0; d < rank; ++d) {
      if (d != axis && p.dim(d) != out_shape[static_cast<size_t>(d)]) {
        fail_shape("concat: shape mismatch ", shape_str(p.shape()), " vs ",
                   shape_str(parts[0].shape()));
      }
    }
    axis_total += p.dim(axis);
  }
  out_shape[static_cast<size_t>(axis)] = axis_total;
  Tensor out = Tensor::zeros(out_shape);
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= out_shape[static_cast<size_t>(d)];
  for (int d = axis + 1; d < rank; ++d) inner *= out_shape[static_cast<size_t>(d)];
  int64_t offset = 0;
  for (const auto& p : parts) {
    const int64_t len = p.dim(axis) * inner;
    for (int64_t o = 0; o < outer; ++o) {
      std::memcpy(out.data() + o * axis_total * inner + offset, p.data() + o * len,
                  static_cast<size_t>(len) * sizeof(double));
    }
    offset += len;
  }
  ensure_finite(out, "concat");
  if (want_record(parts)) {
    auto on = out.ptr();
    std::vector<std::shared_ptr<TensorData>> ins;
    std::vector<int64_t> lens;
    std::vector<bool> wanted;
    for (const auto& p : parts) {
      ins.push_back(p.ptr());
      lens.push_back(p.dim(axis) * inner);
      wanted.push_back(p.requires_grad());
    }
    push_record("concat", parts, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      const double* g = go->data();
      int64_t off = 0;
      for (size_t k = 0; k < ins.size(); ++k) {
        if (wanted[k]) {
          auto& gi = gm.at_or_create(ins[k].get(), static_cast<int64_t>(ins[k]->v.size()));
          for (int64_t o = 0; o < outer; ++o) {
            const double* src = g + o * axis_total * inner + off;
            double* dst = gi.data() + o * lens[k];
            for (int64_t i = 0; i < lens[k]; ++i) dst[i] += src[i];
          }
        }
        off += lens[k];
      }
    });
  }
  return out;
}

Tensor slice(const Tensor& x, int axis, int64_t start, int64_t stop) {
  const int rank = x.rank();
  if (axis < 0 || axis >= rank) fail_shape("slice: axis ", axis, " out of range");
  const int64_t dim = x.dim(axis);
  if (start < 0 || stop > dim || start >= stop) {
    fail_shape("slice: range [", start, ",", stop, ") invalid for axis size ", dim);
  }
  Shape out_shape = x.shape();
  out_shape[static_cast<size_t>(axis)] = stop - start;
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= x.dim(d);
  for (int d = axis + 1; d < rank; ++d) inner *= x.dim(d);
  Tensor out = Tensor::zeros(out_shape);
  const int64_t len = (stop - start) * inner;
  for (int64_t o = 0; o < outer; ++o) {
    std::memcpy(out.data() + o * len, x.data() + (o * dim + start) * inner,
                static_cast<size_t>(len) * sizeof(double));
  }
  // Values are copied verbatim; a -inf that survived masked_fill stays
  // representable, so no finiteness scan here would ever fire for clean
  // inputs. Scan anyway to localize errors early.
  if (want_record({x})) {
    auto xn = x.ptr();
    auto on = out.ptr();
    push_record("slice", {x}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gx = gm.at_or_create(xn.get(), static_cast<int64_t>(xn->v.size()));
      const double* g = go->data();
      for (int64_t o = 0; o < outer; ++o) {
        double* dst = gx.data() + (o * dim + start) * inner;
        const double* src = g + o * len;
        for (int64_t i = 0; i < len; ++i) dst[i] += src[i];
      }
    });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape new_shape) {
  if (shape_numel(new_shape) != x.numel()) {
    fail_shape("reshape: cannot view ", shape_str(x.shape()), " as ", shape_str(new_shape));
  }
  Tensor out = Tensor::from(new_shape, x.values());
  if (want_record({x})) {
    auto xn = x.ptr();
    auto on = out.ptr();
    push_record("reshape", {x}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gx = gm.at_or_create(xn.get(), static_cast<int64_t>(xn->v.size()));
      add_into(gx, go->data(), static_cast<int64_t>(gx.size()));
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// masked_fill / embedding / reductions / bce

Tensor masked_fill(const Tensor& x, const Tensor& mask, double value) {
  if (x.shape() != mask.shape()) {
    fail_shape("masked_fill: mask shape ", shape_str(mask.shape()), " != input ",
               shape_str(x.shape()));
  }
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) {
    const double m = mask.data()[i];
    if (m != 0.0 && m != 1.0) fail_value("masked_fill: mask must be 0/1, got ", m);
  }
  Tensor out = Tensor::zeros(x.shape());
  for (int64_t i = 0; i < n; ++i) {
    out.data()[i] = mask.data()[i] == 1.0 ? value : x.data()[i];
  }
  // No finiteness scan: the fill value is allowed to be +-inf by design.
  if (want_record({x})) {
    auto xn = x.ptr();
    auto mn = mask.ptr();
    auto on = out.ptr();
    push_record("masked_fill", {x, mask}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gx = gm.at_or_create(xn.get(), n);
      for (int64_t i = 0; i < n; ++i) {
        if (mn->v[static_cast<size_t>(i)] == 0.0) gx[i] += (*go)[static_cast<size_t>(i)];
      }
    });
  }
  return out;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int64_t>& ids) {
  if (table.rank() != 2) fail_shape("embedding_lookup: table must be rank 2");
  const int64_t vocab = table.dim(0), d = table.dim(1);
  for (int64_t id : ids) {
    if (id < 0 || id >= vocab) fail_value("embedding_lookup: id ", id, " out of range [0,", vocab, ")");
  }
  const int64_t m = static_cast<int64_t>(ids.size());
  Tensor out = Tensor::zeros({m, d});
  for (int64_t i = 0; i < m; ++i) {
    std::memcpy(out.data() + i * d, table.data() + ids[static_cast<size_t>(i)] * d,
                static_cast<size_t>(d) * sizeof(double));
  }
  ensure_finite(out, "embedding_lookup");
  if (want_record({table})) {
    auto tn = table.ptr();
    auto on = out.ptr();
    auto ids_copy = ids;
    push_record("embedding_lookup", {table}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gt = gm.at_or_create(tn.get(), vocab * d);
      for (int64_t i = 0; i < m; ++i) {
        const double* src = go->data() + i * d;
        double* dst = gt.data() + ids_copy[static_cast<size_t>(i)] * d;
        for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    });
  }
  return out;
}

namespace {
Tensor reduce_all(const char* name, const Tensor& x, bool mean) {
  const int64_t n = x.numel();
  if (n == 0) fail_shape(name, ": empty input");
  const double s = kernels::sum(n, x.data());
  const double val = mean ? s / static_cast<double>(n) : s;
  Tensor out = Tensor::scalar(val);
  ensure_finite(out, name);
  if (want_record({x})) {
    auto xn = x.ptr();
    auto on = out.ptr();
    const double w = mean ? 1.0 / static_cast<double>(n) : 1.0;
    push_record(name, {x}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      const double g = (*go)[0] * w;
      auto& gx = gm.at_or_create(xn.get(), n);
      for (int64_t i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return out;
}
}  // namespace

Tensor mean_all(const Tensor& x) { return reduce_all("mean", x, true); }
Tensor sum_all(const Tensor& x) { return reduce_all("sum", x, false); }

Tensor bce(const Tensor& prob, const Tensor& target, double eps) {
  if (prob.shape() != target.shape()) {
    fail_shape("bce: prob ", shape_str(prob.shape()), " != target ", shape_str(target.shape()));
  }
  if (target.requires_grad()) fail_value("bce: target must not require grad");
  const int64_t n = prob.numel();
  for (int64_t i = 0; i < n; ++i) {
    const double t = target.data()[i];
    if (t < 0.0 || t > 1.0) fail_value("bce: target out of [0,1]: ", t);
  }
  Tensor out = Tensor::zeros(prob.shape());
  kernels::bce(n, prob.data(), target.data(), eps, out.data());
  ensure_finite(out, "bce");
  if (want_record({prob})) {
    auto pn = prob.ptr();
    auto tn = target.ptr();
    auto on = out.ptr();
    push_record("bce", {prob, target}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gp = gm.at_or_create(pn.get(), n);
      kernels::bce_grad(n, pn->v.data(), tn->v.data(), eps, go->data(), gp.data());
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// rope

Tensor rope(const Tensor& x, int64_t heads, double base, int64_t pos0) {
  if (x.rank() != 2) fail_shape("rope: rank-2 input required");
  if (heads < 1 || x.dim(1) % heads != 0) {
    fail_shape("rope: width ", x.dim(1), " not divisible by ", heads, " heads");
  }
  const int64_t head_dim = x.dim(1) / heads;
  if (head_dim % 2 != 0) fail_shape("rope: head_dim ", head_dim, " must be even");
  const int64_t rows = x.dim(0);
  Tensor out = Tensor::zeros(x.shape());
  kernels::rope_rows(rows, heads, head_dim, base, pos0, x.data(), out.data());
  ensure_finite(out, "rope");
  if (want_record({x})) {
    auto xn = x.ptr();
    auto on = out.ptr();
    push_record("rope", {x}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gx = gm.at_or_create(xn.get(), static_cast<int64_t>(xn->v.size()));
      kernels::rope_grad_rows(rows, heads, head_dim, base, pos0, go->data(), gx.data());
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Geometry ops

Tensor rot6d_decode(const Tensor& r6, double tol) {
  if (r6.rank() != 2 || r6.dim(1) != 6) {
    fail_shape("rot6d_decode: (n,6) input required, got ", shape_str(r6.shape()));
  }
  const int64_t n = r6.dim(0);
  Tensor out = Tensor::zeros({n, 9});
  const int64_t bad = kernels::rot6d_decode_rows(n, r6.data(), out.data(), tol);
  if (bad >= 0) fail_numeric("rot6d_decode: degenerate 6D rotation at row ", bad);
  ensure_finite(out, "rot6d_decode");
  if (want_record({r6})) {
    auto xn = r6.ptr();
    auto on = out.ptr();
    push_record("rot6d_decode", {r6}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gx = gm.at_or_create(xn.get(), n * 6);
      kernels::rot6d_decode_grad_rows(n, xn->v.data(), go->data(), gx.data(), tol);
    });
  }
  return out;
}

Tensor mat3_mul(const Tensor& a, const Tensor& b, bool ta, bool tb) {
  if (a.rank() != 2 || a.dim(1) != 9 || b.rank() != 2 || b.dim(1) != 9 || a.dim(0) != b.dim(0)) {
    fail_shape("mat3_mul: (n,9) x (n,9) required, got ", shape_str(a.shape()), " and ",
               shape_str(b.shape()));
  }
  const int64_t n = a.dim(0);
  Tensor out = Tensor::zeros({n, 9});
  kernels::mat3_mul_rows(n, ta, tb, a.data(), b.data(), out.data());
  ensure_finite(out, "mat3_mul");
  if (want_record({a, b})) {
    auto an = a.ptr();
    auto bn = b.ptr();
    auto on = out.ptr();
    const bool ga_wanted = a.requires_grad();
    const bool gb_wanted = b.requires_grad();
    push_record("mat3_mul", {a, b}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      const double* gc = go->data();
      std::vector<double> tmp(static_cast<size_t>(n) * 9);
      if (ga_wanted) {
        if (!ta && !tb) kernels::mat3_mul_rows(n, false, true, gc, bn->v.data(), tmp.data());
        else if (ta && !tb) kernels::mat3_mul_rows(n, false, true, bn->v.data(), gc, tmp.data());
        else if (!ta && tb) kernels::mat3_mul_rows(n, false, false, gc, bn->v.data(), tmp.data());
        else kernels::mat3_mul_rows(n, true, true, bn->v.data(), gc, tmp.data());
        add_into(gm.at_or_create(an.get(), n * 9), tmp.data(), n * 9);
      }
      if (gb_wanted) {
        if (!ta && !tb) kernels::mat3_mul_rows(n, true, false, an->v.data(), gc, tmp.data());
        else if (ta && !tb) kernels::mat3_mul_rows(n, false, false, an->v.data(), gc, tmp.data());
        else if (!ta && tb) kernels::mat3_mul_rows(n, true, false, gc, an->v.data(), tmp.data());
        else kernels::mat3_mul_rows(n, true, true, gc, an->v.data(), tmp.data());
        add_into(gm.at_or_create(bn.get(), n * 9), tmp.data(), n * 9);
      }
    });
  }
  return out;
}

Tensor mat3_apply(const Tensor& a, const Tensor& v, bool ta) {
  if (a.rank() != 2 || a.dim(1) != 9 || v.rank() != 2 || v.dim(1) != 3 || a.dim(0) != v.dim(0)) {
    fail_shape("mat3_apply: (n,9) x (n,3) required, got ", shape_str(a.shape()), " and ",
               shape_str(v.shape()));
  }
  const int64_t n = a.dim(0);
  Tensor out = Tensor::zeros({n, 3});
  kernels::mat3_apply_rows(n, ta, a.data(), v.data(), out.data());
  ensure_finite(out, "mat3_apply");
  if (want_record({a, v})) {
    auto an = a.ptr();
    auto vn = v.ptr();
    auto on = out.ptr();
    const bool ga_wanted = a.requires_grad();
    const bool gv_wanted = v.requires_grad();
    push_record("mat3_apply", {a, v}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      const double* g = go->data();
      if (gv_wanted) {
        auto& gv = gm.at_or_create(vn.get(), n * 3);
        // d(op(A) v)/dv = op(A)^T.
        std::vector<double> tmp(static_cast<size_t>(n) * 3);
        kernels::mat3_apply_rows(n, !ta, an->v.data(), g, tmp.data());
        add_into(gv, tmp.data(), n * 3);
      }
      if (ga_wanted) {
        auto& ga = gm.at_or_create(an.get(), n * 9);
        for (int64_t i = 0; i < n; ++i) {
          const double* gi = g + i * 3;
          const double* xi = vn->v.data() + i * 3;
          double* gai = ga.data() + i * 9;
          for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
              // out_r = sum_c op(A)_{rc} x_c; map back through the transpose.
              if (!ta) gai[r * 3 + c] += gi[r] * xi[c];
              else gai[c * 3 + r] += gi[r] * xi[c];
            }
          }
        }
      }
    });
  }
  return out;
}

Tensor rollout_scan(const Tensor& rot, const Tensor& vel) {
  if (rot.rank() != 2 || rot.dim(1) != 9 || vel.rank() != 2 || vel.dim(1) != 3 ||
      rot.dim(0) != vel.dim(0)) {
    fail_shape("rollout_scan: (n,9) x (n,3) required, got ", shape_str(rot.shape()), " and ",
               shape_str(vel.shape()));
  }
  const int64_t n = rot.dim(0);
  if (n < 1) fail_shape("rollout_scan: empty sequence");
  Tensor out = Tensor::zeros({n, 3});
  kernels::rollout_scan(n, rot.data(), vel.data(), out.data());
  ensure_finite(out, "rollout_scan");
  if (want_record({rot, vel})) {
    auto rn = rot.ptr();
    auto vn = vel.ptr();
    auto on = out.ptr();
    const bool gr_wanted = rot.requires_grad();
    const bool gv_wanted = vel.requires_grad();
    push_record("rollout_scan", {rot, vel}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      std::vector<double> gR(static_cast<size_t>(n) * 9, 0.0);
      std::vector<double> gv(static_cast<size_t>(n) * 3, 0.0);
      kernels::rollout_scan_grad(n, rn->v.data(), vn->v.data(), go->data(), gR.data(), gv.data());
      if (gr_wanted) add_into(gm.at_or_create(rn.get(), n * 9), gR.data(), n * 9);
      if (gv_wanted) add_into(gm.at_or_create(vn.get(), n * 3), gv.data(), n * 3);
    });
  }
  return out;
}

Tensor project_pinhole(const Tensor& pts, double f, double cx, double cy, double z_near,
                       Tensor* valid_out) {
  if (pts.rank() != 2 || pts.dim(1) != 3) {
    fail_shape("project_pinhole: (p,3) input required, got ", shape_str(pts.shape()));
  }
  if (f <= 0.0) fail_value("project_pinhole: focal length must be positive");
  const int64_t p = pts.dim(0);
  Tensor out = Tensor::zeros({p, 2});
  Tensor valid = Tensor::zeros({p});
  kernels::project_rows(p, pts.data(), f, cx, cy, z_near, out.data(), valid.data());
  ensure_finite(out, "project_pinhole");
  if (valid_out) *valid_out = valid;
  if (want_record({pts})) {
    auto xn = pts.ptr();
    auto on = out.ptr();
    push_record("project_pinhole", {pts}, out, [=](GradMap& gm) {
      const auto* go = gm.find(on.get());
      if (!go) return;
      auto& gx = gm.at_or_create(xn.get(), p * 3);
      kernels::project_grad_rows(p, xn->v.data(), f, z_near, go->data(), gx.data());
    });
  }
  return out;
}

}  // namespace mogen
