// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace mogen::kernels {

// Global worker-thread setting for the OpenMP kernels. 0 or 1 means serial.
// Results are bitwise identical for any thread count: every output element
// is produced by one worker with a fold order fixed per element, never by a
// cross-thread reduction.
void set_num_threads(int n);
int num_threads();

// C(m x n) = op(A) * op(B); op is transpose when the flag is set.
// A is m x k (or k x m when ta), B is k x n (or n x k when tb).
// Accumulation over k runs in ascending order for every output element.
void gemm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, const double* A,
          const double* B, double* C);

// Elementwise; out may alias a.
void ew_add(int64_t n, const double* a, const double* b, double* out);
void ew_sub(int64_t n, const double* a, const double* b, double* out);
void ew_mul(int64_t n, const double* a, const double* b, double* out);
void ew_scale(int64_t n, const double* a, double c, double* out);
// out[o*inner + i] = a[o*inner + i] (op) b[i]; trailing-axis broadcast.
void ew_add_bcast(int64_t outer, int64_t inner, const double* a, const double* b, double* out);
void ew_mul_bcast(int64_t outer, int64_t inner, const double* a, const double* b, double* out);

void gelu(int64_t n, const double* x, double* out);
void gelu_grad(int64_t n, const double* x, const double* gout, double* gx);

void sigmoid(int64_t n, const double* x, double* out);
// Uses the saved forward output s: gx += gout * s * (1 - s).
void sigmoid_grad(int64_t n, const double* s, const double* gout, double* gx);

// Row-wise softmax over the last axis. Supports -inf entries (they get
// probability exactly 0). A row of all -inf is reported via the return
// value (index of first such row, or -1). Row max is subtracted before exp.
int64_t softmax_rows(int64_t rows, int64_t cols, const double* x, double* out);

// Row-wise layer norm (no affine). Saves per-row mean and reciprocal stddev
// for the backward pass when the pointers are non-null.
void layer_norm_rows(int64_t rows, int64_t cols, const double* x, double eps, double* out,
                     double* save_mean, double* save_rstd);
void layer_norm_grad_rows(int64_t rows, int64_t cols, const double* x, const double* mean,
                          const double* rstd, const double* gout, double* gx);

// Rotary position embedding applied in place per head: pairs (2p, 2p+1)
// within each head are rotated by angle pos * base^(-2p/head_dim).
void rope_rows(int64_t rows, int64_t heads, int64_t head_dim, double base, int64_t pos0,
               const double* x, double* out);
void rope_grad_rows(int64_t rows, int64_t heads, int64_t head_dim, double base, int64_t pos0,
                    const double* gout, double* gx);

// 6D rotation decode per row: r6 (6) -> R (9, row-major), Gram-Schmidt.
// Returns index of first degenerate row (norm below tol), or -1.
int64_t rot6d_decode_rows(int64_t n, const double* r6, double* R, double tol);
void rot6d_decode_grad_rows(int64_t n, const double* r6, const double* gR, double* gr6,
                            double tol);

// Batched 3x3 matrix products, row-major 9-vectors per row.
void mat3_mul_rows(int64_t n, bool ta, bool tb, const double* A, const double* B, double* C);
// out = op(A) * v per row (3-vectors).
void mat3_apply_rows(int64_t n, bool ta, const double* A, const double* v, double* out);

// Cumulative rigid rollout: T[0] = 0, T[i] = T[i-1] + R[i-1] * v[i-1].
// Serial by construction (loop-carried dependency).
void rollout_scan(int64_t n, const double* R, const double* v, double* T);
// Backward: given gT, produce gR and gv (both pre-zeroed by the caller).
void rollout_scan_grad(int64_t n, const double* R, const double* v, const double* gT,
                       double* gR, double* gv);

// Pinhole projection of camera-space points. Points with z <= z_near are
// written as (0, 0) with valid = 0 and receive zero gradient.
void project_rows(int64_t n_pts, const double* pts, double f, double cx, double cy,
                  double z_near, double* uv, double* valid);
void project_grad_rows(int64_t n_pts, const double* pts, double f, double z_near,
                       const double* guv, double* gpts);

// Elementwise binary cross entropy with probability clamped to
// [eps, 1 - eps]; targets are expected in [0, 1].
void bce(int64_t n, const double* p, const double* t, double eps, double* out);
void bce_grad(int64_t n, const double* p, const double* t, double eps, const double* gout,
              double* gp);

// Serial reductions (fold order: ascending index).
double sum(int64_t n, const double* a);

// Plain serial reference implementations with the same per-element fold
// order as the kernels above. Kept for equivalence tests and benchmarks.
namespace ref {
void gemm(bool ta, bool tb, int64_t m, int64_t n, int64_t k, const double* A,
          const double* B, double* C);
void ew_add(int64_t n, const double* a, const double* b, double* out);
void ew_mul(int64_t n, const double* a, const double* b, double* out);
void gelu(int64_t n, const double* x, double* out);
int64_t softmax_rows(int64_t rows, int64_t cols, const double* x, double* out);
void layer_norm_rows(int64_t rows, int64_t cols, const double* x, double eps, double* out,
                     double* save_mean, double* save_rstd);
void rot6d_decode_rows(int64_t n, const double* r6, double* R, double tol);
void mat3_mul_rows(int64_t n, bool ta, bool tb, const double* A, const double* B, double* C);
}  // namespace ref

}  // namespace mogen::kernels
