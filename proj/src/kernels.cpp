// SPDX-License-Identifier: Apache-2.0
#include "mogen/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mogen::kernels {

namespace {

std::atomic<int> g_threads{
#ifdef _OPENMP
    0  // 0 = not yet initialized, resolved lazily from omp_get_max_threads()
#else
    1
#endif
};

int resolve_threads() {
  int t = g_threads.load(std::memory_order_relaxed);
  if (t == 0) {
#ifdef _OPENMP
    t = omp_get_max_threads();
#else
    t = 1;
#endif
    g_threads.store(t, std::memory_order_relaxed);
  }
  return t;
}

// Runs f(i) for i in [0, n). The parallel and serial paths execute the same
// per-index body, so results are bitwise identical for any thread count.
template <class F>
void par_for(int64_t n, const F& f) {
#ifdef _OPENMP
  int t = resolve_threads();
  if (t > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(t)
    for (int64_t i = 0; i < n; ++i) f(i);
    return;
  }
#endif
  for (int64_t i = 0; i < n; ++i) f(i);
}

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

}  // namespace

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed); }
int num_threads() { return resolve_threads(); }

// ---------------------------------------------------------------------------
// GEMM

namespace {

// One output row of C; accumulation over k ascending for every element.
inline void gemm_row(bool ta, bool tb, int64_t i, int64_t n, int64_t k, int64_t m,
                     const double* A, const double* B, double* C) {
  double* c = C + i * n;
  if (!tb) {
    for (int64_t j = 0; j < n; ++j) c[j] = 0.0;
    for (int64_t l = 0; l < k; ++l) {
      const double a = ta ? A[l * m + i] : A[i * k + l];
      const double* b = B + l * n;
      for (int64_t j = 0; j < n; ++j) c[j] += a * b[j];
    }
  } else {
    for (int64_t j = 0; j < n; ++j) {
      const double* b = B + j * k;
      double acc = 0.0;
      for (int64_t l = 0; l < k; ++l) {
        const double a = ta ? A[l * m + i] : A[i * k + l];
        acc += a * b[l];
      }
      c[j] = acc;
    }
  }
}

}  // namespace

void gemm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, const double* A, const double* B,
          double* C) {
  par_for(m, [&](int64_t i) { gemm_row(ta, tb, i, n, k, m, A, B, C); });
}

namespace ref {
void gemm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, const double* A, const double* B,
          double* C) {
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int64_t l = 0; l < k; ++l) {
        const double a = ta ? A[l * m + i] : A[i * k + l];
        const double b = tb ? B[j * k + l] : B[l * n + j];
        acc += a * b;
      }
      C[i * n + j] = acc;
    }
  }
}
}  // namespace ref

// ---------------------------------------------------------------------------
// Elementwise

void ew_add(int64_t n, const double* a, const double* b, double* out) {
  par_for(n, [&](int64_t i) { out[i] = a[i] + b[i]; });
}
void ew_sub(int64_t n, const double* a, const double* b, double* out) {
  par_for(n, [&](int64_t i) { out[i] = a[i] - b[i]; });
}
void ew_mul(int64_t n, const double* a, const double* b, double* out) {
  par_for(n, [&](int64_t i) { out[i] = a[i] * b[i]; });
}
void ew_scale(int64_t n, const double* a, double c, double* out) {
  par_for(n, [&](int64_t i) { out[i] = a[i] * c; });
}
void ew_add_bcast(int64_t outer, int64_t inner, const double* a, const double* b, double* out) {
  par_for(outer, [&](int64_t o) {
    const double* ao = a + o * inner;
    double* oo = out + o * inner;
    for (int64_t i = 0; i < inner; ++i) oo[i] = ao[i] + b[i];
  });
}
void ew_mul_bcast(int64_t outer, int64_t inner, const double* a, const double* b, double* out) {
  par_for(outer, [&](int64_t o) {
    const double* ao = a + o * inner;
    double* oo = out + o * inner;
    for (int64_t i = 0; i < inner; ++i) oo[i] = ao[i] * b[i];
  });
}

namespace ref {
void ew_add(int64_t n, const double* a, const double* b, double* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}
void ew_mul(int64_t n, const double* a, const double* b, double* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}
}  // namespace ref

// ---------------------------------------------------------------------------
// GELU (exact erf form)

void gelu(int64_t n, const double* x, double* out) {
  par_for(n, [&](int64_t i) {
    out[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * kInvSqrt2));
  });
}
void gelu_grad(int64_t n, const double* x, const double* gout, double* gx) {
  par_for(n, [&](int64_t i) {
    const double cdf = 0.5 * (1.0 + std::erf(x[i] * kInvSqrt2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x[i] * x[i]);
    gx[i] += gout[i] * (cdf + x[i] * pdf);
  });
}

void sigmoid(int64_t n, const double* x, double* out) {
  par_for(n, [&](int64_t i) { out[i] = 1.0 / (1.0 + std::exp(-x[i])); });
}
void sigmoid_grad(int64_t n, const double* s, const double* gout, double* gx) {
  par_for(n, [&](int64_t i) { gx[i] += gout[i] * s[i] * (1.0 - s[i]); });
}

namespace ref {
void gelu(int64_t n, const double* x, double* out) {
  for (int64_t i = 0; i < n; ++i) out[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] * kInvSqrt2));
}
}  // namespace ref

// ---------------------------------------------------------------------------
// Softmax

namespace {
// Returns true if the row was all -inf (left as NaN-free zeros is NOT done;
// caller treats it as an error).
inline bool softmax_row(int64_t cols, const double* x, double* out) {
  double mx = -INFINITY;
  for (int64_t j = 0; j < cols; ++j) mx = x[j] > mx ? x[j] : mx;
  if (mx == -INFINITY) return true;
  double denom = 0.0;
  for (int64_t j = 0; j < cols; ++j) {
    const double e = std::exp(x[j] - mx);
    out[j] = e;
    denom += e;
  }
  const double inv = 1.0 / denom;
  for (int64_t j = 0; j < cols; ++j) out[j] *= inv;
  return false;
}
}  // namespace

int64_t softmax_rows(int64_t rows, int64_t cols, const double* x, double* out) {
  std::atomic<int64_t> bad{-1};
  par_for(rows, [&](int64_t r) {
    if (softmax_row(cols, x + r * cols, out + r * cols)) {
      int64_t expected = -1;
      bad.compare_exchange_strong(expected, r, std::memory_order_relaxed);
    }
  });
  return bad.load(std::memory_order_relaxed);
}

namespace ref {
int64_t softmax_rows(int64_t rows, int64_t cols, const double* x, double* out) {
  for (int64_t r = 0; r < rows; ++r) {
    if (softmax_row(cols, x + r * cols, out + r * cols)) return r;
  }
  return -1;
}
}  // namespace ref

// ---------------------------------------------------------------------------
// Layer norm

namespace {
inline void layer_norm_row(int64_t cols, const double* x, double eps, double* out, double* mean,
                           double* rstd) {
  double mu = 0.0;
  for (int64_t j = 0; j < cols; ++j) mu += x[j];
  mu /= static_cast<double>(cols);
  double var = 0.0;
  for (int64_t j = 0; j < cols; ++j) {
    const double d = x[j] - mu;
    var += d * d;
  }
  var /= static_cast<double>(cols);
  const double rs = 1.0 / std::sqrt(var + eps);
  for (int64_t j = 0; j < cols; ++j) out[j] = (x[j] - mu) * rs;
  if (mean) *mean = mu;
  if (rstd) *rstd = rs;
}
}  // namespace

void layer_norm_rows(int64_t rows, int64_t cols, const double* x, double eps, double* out,
                     double* save_mean, double* save_rstd) {
  par_for(rows, [&](int64_t r) {
    layer_norm_row(cols, x + r * cols, eps, out + r * cols, save_mean ? save_mean + r : nullptr,
                   save_rstd ? save_rstd + r : nullptr);
  });
}

void layer_norm_grad_rows(int64_t rows, int64_t cols, const double* x, const double* mean,
                          const double* rstd, const double* gout, double* gx) {
  par_for(rows, [&](int64_t r) {
    const double* xr = x + r * cols;
    const double* gr = gout + r * cols;
    double* gxr = gx + r * cols;
    const double mu = mean[r];
    const double rs = rstd[r];
    double gsum = 0.0, gysum = 0.0;
    for (int64_t j = 0; j < cols; ++j) {
      const double y = (xr[j] - mu) * rs;
      gsum += gr[j];
      gysum += gr[j] * y;
    }
    const double inv_n = 1.0 / static_cast<double>(cols);
    for (int64_t j = 0; j < cols; ++j) {
      const double y = (xr[j] - mu) * rs;
      gxr[j] += rs * (gr[j] - gsum * inv_n - y * gysum * inv_n);
    }
  });
}

namespace ref {
void layer_norm_rows(int64_t rows, int64_t cols, const double* x, double eps, double* out,
                     double* save_mean, double* save_rstd) {
  for (int64_t r = 0; r < rows; ++r) {
    layer_norm_row(cols, x + r * cols, eps, out + r * cols, save_mean ? save_mean + r : nullptr,
                   save_rstd ? save_rstd + r : nullptr);
  }
}
}  // namespace ref

// ---------------------------------------------------------------------------
// RoPE

void rope_rows(int64_t rows, int64_t heads, int64_t head_dim, double base, int64_t pos0,
               const double* x, double* out) {
  const int64_t half = head_dim / 2;
  par_for(rows, [&](int64_t r) {
    const double pos = static_cast<double>(pos0 + r);
    for (int64_t h = 0; h < heads; ++h) {
      const double* xi = x + (r * heads + h) * head_dim;
      double* oi = out + (r * heads + h) * head_dim;
      for (int64_t p = 0; p < half; ++p) {
        const double freq = std::pow(base, -2.0 * static_cast<double>(p) /
                                               static_cast<double>(head_dim));
        const double ang = pos * freq;
        const double c = std::cos(ang), s = std::sin(ang);
        const double a = xi[2 * p], b = xi[2 * p + 1];
        oi[2 * p] = a * c - b * s;
        oi[2 * p + 1] = a * s + b * c;
      }
    }
  });
}

void rope_grad_rows(int64_t rows, int64_t heads, int64_t head_dim, double base, int64_t pos0,
                    const double* gout, double* gx) {
  const int64_t half = head_dim / 2;
  par_for(rows, [&](int64_t r) {
    const double pos = static_cast<double>(pos0 + r);
    for (int64_t h = 0; h < heads; ++h) {
      const double* gi = gout + (r * heads + h) * head_dim;
      double* go = gx + (r * heads + h) * head_dim;
      for (int64_t p = 0; p < half; ++p) {
        const double freq = std::pow(base, -2.0 * static_cast<double>(p) /
                                               static_cast<double>(head_dim));
        const double ang = pos * freq;
        const double c = std::cos(ang), s = std::sin(ang);
        const double ga = gi[2 * p], gb = gi[2 * p + 1];
        go[2 * p] += ga * c + gb * s;
        go[2 * p + 1] += -ga * s + gb * c;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// 6D rotation decode

namespace {
inline bool rot6d_decode_one(const double* r, double* R, double tol) {
  const double* a1 = r;
  const double* a2 = r + 3;
  const double n1 = std::sqrt(a1[0] * a1[0] + a1[1] * a1[1] + a1[2] * a1[2]);
  if (n1 < tol) return false;
  double b1[3] = {a1[0] / n1, a1[1] / n1, a1[2] / n1};
  const double d = b1[0] * a2[0] + b1[1] * a2[1] + b1[2] * a2[2];
  double u2[3] = {a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]};
  const double n2 = std::sqrt(u2[0] * u2[0] + u2[1] * u2[1] + u2[2] * u2[2]);
  if (n2 < tol) return false;
  double b2[3] = {u2[0] / n2, u2[1] / n2, u2[2] / n2};
  double b3[3] = {b1[1] * b2[2] - b1[2] * b2[1], b1[2] * b2[0] - b1[0] * b2[2],
                  b1[0] * b2[1] - b1[1] * b2[0]};
  // Columns are the basis vectors.
  for (int i = 0; i < 3; ++i) {
    R[i * 3 + 0] = b1[i];
    R[i * 3 + 1] = b2[i];
    R[i * 3 + 2] = b3[i];
  }
  return true;
}
}  // namespace

int64_t rot6d_decode_rows(int64_t n, const double* r6, double* R, double tol) {
  std::atomic<int64_t> bad{-1};
  par_for(n, [&](int64_t i) {
    if (!rot6d_decode_one(r6 + i * 6, R + i * 9, tol)) {
      int64_t expected = -1;
      bad.compare_exchange_strong(expected, i, std::memory_order_relaxed);
    }
  });
  return bad.load(std::memory_order_relaxed);
}

namespace ref {
void rot6d_decode_rows(int64_t n, const double* r6, double* R, double tol) {
  for (int64_t i = 0; i < n; ++i) rot6d_decode_one(r6 + i * 6, R + i * 9, tol);
}
}  // namespace ref

void rot6d_decode_grad_rows(int64_t n, const double* r6, const double* gR, double* gr6,
                            double tol) {
  par_for(n, [&](int64_t i) {
    const double* r = r6 + i * 6;
    const double* g = gR + i * 9;
    double* gr = gr6 + i * 6;
    const double* a1 = r;
    const double* a2 = r + 3;
    const double n1 = std::sqrt(a1[0] * a1[0] + a1[1] * a1[1] + a1[2] * a1[2]);
    if (n1 < tol) return;
    double b1[3] = {a1[0] / n1, a1[1] / n1, a1[2] / n1};
    const double d = b1[0] * a2[0] + b1[1] * a2[1] + b1[2] * a2[2];
    double u2[3] = {a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]};
    const double n2 = std::sqrt(u2[0] * u2[0] + u2[1] * u2[1] + u2[2] * u2[2]);
    if (n2 < tol) return;
    double b2[3] = {u2[0] / n2, u2[1] / n2, u2[2] / n2};
    // Gradients w.r.t. the basis vectors, gathered from the column layout.
    double gB1[3], gB2[3], gB3[3];
    for (int k = 0; k < 3; ++k) {
      gB1[k] = g[k * 3 + 0];
      gB2[k] = g[k * 3 + 1];
      gB3[k] = g[k * 3 + 2];
    }
    // b3 = b1 x b2.
    double gb1[3], gb2[3];
    for (int k = 0; k < 3; ++k) {
      gb1[k] = gB1[k];
      gb2[k] = gB2[k];
    }
    gb1[0] += b2[1] * gB3[2] - b2[2] * gB3[1];
    gb1[1] += b2[2] * gB3[0] - b2[0] * gB3[2];
    gb1[2] += b2[0] * gB3[1] - b2[1] * gB3[0];
    gb2[0] += gB3[1] * b1[2] - gB3[2] * b1[1];
    gb2[1] += gB3[2] * b1[0] - gB3[0] * b1[2];
    gb2[2] += gB3[0] * b1[1] - gB3[1] * b1[0];
    // b2 = u2 / n2.
    double gu2[3];
    const double dot_gb2_b2 = gb2[0] * b2[0] + gb2[1] * b2[1] + gb2[2] * b2[2];
    for (int k = 0; k < 3; ++k) gu2[k] = (gb2[k] - dot_gb2_b2 * b2[k]) / n2;
    // u2 = a2 - (b1 . a2) b1.
    const double dot_gu2_b1 = gu2[0] * b1[0] + gu2[1] * b1[1] + gu2[2] * b1[2];
    double ga2[3];
    for (int k = 0; k < 3; ++k) ga2[k] = gu2[k] - dot_gu2_b1 * b1[k];
    for (int k = 0; k < 3; ++k) gb1[k] += -dot_gu2_b1 * a2[k] - d * gu2[k];
    // b1 = a1 / n1.
    const double dot_gb1_b1 = gb1[0] * b1[0] + gb1[1] * b1[1] + gb1[2] * b1[2];
    for (int k = 0; k < 3; ++k) gr[k] += (gb1[k] - dot_gb1_b1 * b1[k]) / n1;
    for (int k = 0; k < 3; ++k) gr[3 + k] += ga2[k];
  });
}

// ---------------------------------------------------------------------------
// Batched 3x3 products

namespace {
inline void mat3_mul_one(bool ta, bool tb, const double* A, const double* B, double* C) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int l = 0; l < 3; ++l) {
        const double a = ta ? A[l * 3 + i] : A[i * 3 + l];
        const double b = tb ? B[j * 3 + l] : B[l * 3 + j];
        acc += a * b;
      }
      C[i * 3 + j] = acc;
    }
  }
}
}  // namespace

void mat3_mul_rows(int64_t n, bool ta, bool tb, const double* A, const double* B, double* C) {
  par_for(n, [&](int64_t i) { mat3_mul_one(ta, tb, A + i * 9, B + i * 9, C + i * 9); });
}

namespace ref {
void mat3_mul_rows(int64_t n, bool ta, bool tb, const double* A, const double* B, double* C) {
  for (int64_t i = 0; i < n; ++i) mat3_mul_one(ta, tb, A + i * 9, B + i * 9, C + i * 9);
}
}  // namespace ref

void mat3_apply_rows(int64_t n, bool ta, const double* A, const double* v, double* out) {
  par_for(n, [&](int64_t i) {
    const double* M = A + i * 9;
    const double* x = v + i * 3;
    double* o = out + i * 3;
    for (int r = 0; r < 3; ++r) {
      double acc = 0.0;
      for (int c = 0; c < 3; ++c) acc += (ta ? M[c * 3 + r] : M[r * 3 + c]) * x[c];
      o[r] = acc;
    }
  });
}

// ---------------------------------------------------------------------------
// Rollout scan

void rollout_scan(int64_t n, const double* R, const double* v, double* T) {
  T[0] = T[1] = T[2] = 0.0;
  for (int64_t i = 1; i < n; ++i) {
    const double* M = R + (i - 1) * 9;
    const double* x = v + (i - 1) * 3;
    for (int r = 0; r < 3; ++r) {
      T[i * 3 + r] = T[(i - 1) * 3 + r] + M[r * 3 + 0] * x[0] + M[r * 3 + 1] * x[1] +
                     M[r * 3 + 2] * x[2];
    }
  }
}

void rollout_scan_grad(int64_t n, const double* R, const double* v, const double* gT, double* gR,
                       double* gv) {
  // T[i] = sum_{j < i} R[j] v[j]; the step term R[j] v[j] receives the
  // suffix sum of gT over i > j, accumulated by a reverse sweep.
  double suffix[3] = {0.0, 0.0, 0.0};
  for (int64_t j = n - 2; j >= 0; --j) {
    for (int r = 0; r < 3; ++r) suffix[r] += gT[(j + 1) * 3 + r];
    const double* M = R + j * 9;
    const double* x = v + j * 3;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        gR[j * 9 + r * 3 + c] += suffix[r] * x[c];
        // gv[c] += M[r][c] * suffix[r], folded below.
      }
    }
    for (int c = 0; c < 3; ++c) {
      gv[j * 3 + c] +=
          M[0 * 3 + c] * suffix[0] + M[1 * 3 + c] * suffix[1] + M[2 * 3 + c] * suffix[2];
    }
  }
}

// ---------------------------------------------------------------------------
// Pinhole projection

void project_rows(int64_t n_pts, const double* pts, double f, double cx, double cy, double z_near,
                  double* uv, double* valid) {
  par_for(n_pts, [&](int64_t i) {
    const double x = pts[i * 3 + 0], y = pts[i * 3 + 1], z = pts[i * 3 + 2];
    if (z <= z_near) {
      uv[i * 2 + 0] = 0.0;
      uv[i * 2 + 1] = 0.0;
      valid[i] = 0.0;
    } else {
      uv[i * 2 + 0] = f * x / z + cx;
      uv[i * 2 + 1] = f * y / z + cy;
      valid[i] = 1.0;
    }
  });
}

void project_grad_rows(int64_t n_pts, const double* pts, double f, double z_near,
                       const double* guv, double* gpts) {
  par_for(n_pts, [&](int64_t i) {
    const double x = pts[i * 3 + 0], y = pts[i * 3 + 1], z = pts[i * 3 + 2];
    if (z <= z_near) return;
    const double gu = guv[i * 2 + 0], gv = guv[i * 2 + 1];
    const double inv_z = 1.0 / z;
    gpts[i * 3 + 0] += gu * f * inv_z;
    gpts[i * 3 + 1] += gv * f * inv_z;
    gpts[i * 3 + 2] += -(gu * x + gv * y) * f * inv_z * inv_z;
  });
}

// ---------------------------------------------------------------------------
// BCE

void bce(int64_t n, const double* p, const double* t, double eps, double* out) {
  par_for(n, [&](int64_t i) {
    double pc = p[i];
    pc = pc < eps ? eps : (pc > 1.0 - eps ? 1.0 - eps : pc);
    out[i] = -(t[i] * std::log(pc) + (1.0 - t[i]) * std::log(1.0 - pc));
  });
}

void bce_grad(int64_t n, const double* p, const double* t, double eps, const double* gout,
              double* gp) {
  par_for(n, [&](int64_t i) {
    // Zero gradient in the clamped region.
    if (p[i] < eps || p[i] > 1.0 - eps) return;
    gp[i] += gout[i] * (p[i] - t[i]) / (p[i] * (1.0 - p[i]));
  });
}

// ---------------------------------------------------------------------------
// Reductions

double sum(int64_t n, const double* a) {
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

}  // namespace mogen::kernels
