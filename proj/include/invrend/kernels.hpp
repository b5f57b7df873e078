#pragma once

// Dense f64 kernels behind the autodiff engine.
//
// Two implementations are kept side by side:
//   serial::   plain loops, the reference the tests check against;
//   parallel:: cache-friendly, OpenMP-parallel over output rows.
// The parallel kernels only split work across independent output elements
// and keep the per-element summation order fixed, so their results do not
// depend on the thread count.

#include <cstddef>

namespace invrend::kernels {

void set_num_threads(int n);
int num_threads();

namespace serial {
/// C[M,N] = A[M,K] * B[K,N]
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
/// C[M,N] = A[M,K] * B[N,K]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
/// C[M,N] = A[K,M]^T * B[K,N]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
/// out[g, c] = sum_{j < group} in[g * group + j, c]
void segment_sum(const double* in, double* out, std::size_t groups, std::size_t group, std::size_t cols);
}  // namespace serial

namespace parallel {
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void segment_sum(const double* in, double* out, std::size_t groups, std::size_t group, std::size_t cols);
}  // namespace parallel

// The engine always dispatches to the parallel kernels.
using parallel::gemm;
using parallel::gemm_nt;
using parallel::gemm_tn;
using parallel::segment_sum;

/// Runs body(i) for i in [0, n), OpenMP-parallel once n is large enough.
template <class F>
void for_each_index(std::size_t n, F&& body) {
    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(static) if (count > 16384)
    for (long long i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

}  // namespace invrend::kernels
