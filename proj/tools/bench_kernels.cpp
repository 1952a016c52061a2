// SPDX-License-Identifier: Apache-2.0
//
// Micro-benchmark comparing the plain serial reference kernels against the
// OpenMP kernels at 1 and N threads. The two implementations are also
// checked for bitwise-equal output on every case, the same guarantee the
// unit tests pin down.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "mogen/kernels.hpp"
#include "mogen/rng.hpp"

using namespace mogen;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <class F>
double time_best_of(int reps, const F& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_ms();
    f();
    const double t1 = now_ms();
    if (t1 - t0 < best) best = t1 - t0;
  }
  return best;
}

std::vector<double> random_vec(size_t n, uint64_t seed, const char* name) {
  RngStream rng(seed, name);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void report(const char* name, const std::string& size, double ref_ms, double k1_ms, double kn_ms,
            bool equal) {
  std::printf("%-16s %-18s ref %8.3f ms   omp(1) %8.3f ms   omp(%d) %8.3f ms   x%.2f   %s\n",
              name, size.c_str(), ref_ms, k1_ms, kernels::num_threads(), kn_ms,
              kn_ms > 0 ? k1_ms / kn_ms : 0.0, equal ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int threads = kernels::num_threads();
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--threads" && i + 1 < argc) threads = std::atoi(argv[++i]);
  }
  std::printf("kernel benchmark: serial reference vs OpenMP kernels (%d threads)\n\n", threads);

  {
    const int64_t m = 256, n = 256, k = 256;
    auto A = random_vec(static_cast<size_t>(m * k), 1, "bench/gemm/a");
    auto B = random_vec(static_cast<size_t>(k * n), 1, "bench/gemm/b");
    std::vector<double> Cref(static_cast<size_t>(m * n)), Ck(Cref.size());
    const double tr = time_best_of(3, [&] { kernels::ref::gemm(false, false, m, n, k, A.data(), B.data(), Cref.data()); });
    kernels::set_num_threads(1);
    const double t1 = time_best_of(3, [&] { kernels::gemm(false, false, m, n, k, A.data(), B.data(), Ck.data()); });
    kernels::set_num_threads(threads);
    const double tn = time_best_of(3, [&] { kernels::gemm(false, false, m, n, k, A.data(), B.data(), Ck.data()); });
    report("gemm", "256x256x256", tr, t1, tn, bitwise_equal(Cref, Ck));
  }

  {
    const int64_t rows = 4096, cols = 256;
    auto X = random_vec(static_cast<size_t>(rows * cols), 2, "bench/softmax");
    std::vector<double> Oref(X.size()), Ok(X.size());
    const double tr = time_best_of(5, [&] { kernels::ref::softmax_rows(rows, cols, X.data(), Oref.data()); });
    kernels::set_num_threads(1);
    const double t1 = time_best_of(5, [&] { kernels::softmax_rows(rows, cols, X.data(), Ok.data()); });
    kernels::set_num_threads(threads);
    const double tn = time_best_of(5, [&] { kernels::softmax_rows(rows, cols, X.data(), Ok.data()); });
    report("softmax_rows", "4096x256", tr, t1, tn, bitwise_equal(Oref, Ok));
  }

  {
    const int64_t rows = 4096, cols = 256;
    auto X = random_vec(static_cast<size_t>(rows * cols), 3, "bench/ln");
    std::vector<double> Oref(X.size()), Ok(X.size());
    const double tr = time_best_of(5, [&] { kernels::ref::layer_norm_rows(rows, cols, X.data(), 1e-8, Oref.data(), nullptr, nullptr); });
    kernels::set_num_threads(1);
    const double t1 = time_best_of(5, [&] { kernels::layer_norm_rows(rows, cols, X.data(), 1e-8, Ok.data(), nullptr, nullptr); });
    kernels::set_num_threads(threads);
    const double tn = time_best_of(5, [&] { kernels::layer_norm_rows(rows, cols, X.data(), 1e-8, Ok.data(), nullptr, nullptr); });
    report("layer_norm_rows", "4096x256", tr, t1, tn, bitwise_equal(Oref, Ok));
  }

  {
    const int64_t n = 1 << 21;
    auto X = random_vec(static_cast<size_t>(n), 4, "bench/gelu");
    std::vector<double> Oref(X.size()), Ok(X.size());
    const double tr = time_best_of(5, [&] { kernels::ref::gelu(n, X.data(), Oref.data()); });
    kernels::set_num_threads(1);
    const double t1 = time_best_of(5, [&] { kernels::gelu(n, X.data(), Ok.data()); });
    kernels::set_num_threads(threads);
    const double tn = time_best_of(5, [&] { kernels::gelu(n, X.data(), Ok.data()); });
    report("gelu", "2M", tr, t1, tn, bitwise_equal(Oref, Ok));
  }

  {
    const int64_t n = 1 << 18;
    auto X = random_vec(static_cast<size_t>(n) * 6, 5, "bench/rot6d");
    std::vector<double> Oref(static_cast<size_t>(n) * 9), Ok(Oref.size());
    const double tr = time_best_of(5, [&] { kernels::ref::rot6d_decode_rows(n, X.data(), Oref.data(), 1e-8); });
    kernels::set_num_threads(1);
    const double t1 = time_best_of(5, [&] { kernels::rot6d_decode_rows(n, X.data(), Ok.data(), 1e-8); });
    kernels::set_num_threads(threads);
    const double tn = time_best_of(5, [&] { kernels::rot6d_decode_rows(n, X.data(), Ok.data(), 1e-8); });
    report("rot6d_decode", "256K rows", tr, t1, tn, bitwise_equal(Oref, Ok));
  }

  {
    const int64_t n = 1 << 18;
    auto A = random_vec(static_cast<size_t>(n) * 9, 6, "bench/m3a");
    auto B = random_vec(static_cast<size_t>(n) * 9, 6, "bench/m3b");
    std::vector<double> Oref(static_cast<size_t>(n) * 9), Ok(Oref.size());
    const double tr = time_best_of(5, [&] { kernels::ref::mat3_mul_rows(n, false, false, A.data(), B.data(), Oref.data()); });
    kernels::set_num_threads(1);
    const double t1 = time_best_of(5, [&] { kernels::mat3_mul_rows(n, false, false, A.data(), B.data(), Ok.data()); });
    kernels::set_num_threads(threads);
    const double tn = time_best_of(5, [&] { kernels::mat3_mul_rows(n, false, false, A.data(), B.data(), Ok.data()); });
    report("mat3_mul", "256K rows", tr, t1, tn, bitwise_equal(Oref, Ok));
  }

  kernels::set_num_threads(threads);
  return 0;
}
