#include "invrend/kernels.hpp"

#include <algorithm>
#include <vector>

#include <omp.h>

namespace invrend::kernels {

void set_num_threads(int n) { omp_set_num_threads(std::max(1, n)); }

int num_threads() { return omp_get_max_threads(); }

namespace parallel {

namespace {

constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kMinParallelWork = 1 << 15;

// Rows [i0, i0 + rows) of C = A * B with A row-major [*, k] and B [k, n].
inline void gemm_rows(const double* a, const double* b, double* c, std::size_t i0, std::size_t rows,
                      std::size_t k, std::size_t n) {
    if (rows == kRowBlock) {
        double* c0 = c + (i0 + 0) * n;
        double* c1 = c + (i0 + 1) * n;
        double* c2 = c + (i0 + 2) * n;
        double* c3 = c + (i0 + 3) * n;
        const double* a0 = a + (i0 + 0) * k;
        const double* a1 = a + (i0 + 1) * k;
        const double* a2 = a + (i0 + 2) * k;
        const double* a3 = a + (i0 + 3) * k;
        std::fill(c0, c0 + n, 0.0);
        std::fill(c1, c1 + n, 0.0);
        std::fill(c2, c2 + n, 0.0);
        std::fill(c3, c3 + n, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            const double x0 = a0[p], x1 = a1[p], x2 = a2[p], x3 = a3[p];
#pragma omp simd
            for (std::size_t j = 0; j < n; ++j) {
                const double bj = bp[j];
                c0[j] += x0 * bj;
                c1[j] += x1 * bj;
                c2[j] += x2 * bj;
                c3[j] += x3 * bj;
            }
        }
        return;
    }
    for (std::size_t i = i0; i < i0 + rows; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        std::fill(ci, ci + n, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            const double x = ai[p];
#pragma omp simd
            for (std::size_t j = 0; j < n; ++j) ci[j] += x * bp[j];
        }
    }
}

}  // namespace

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    const long long blocks = static_cast<long long>((m + kRowBlock - 1) / kRowBlock);
    const bool par = m * k * n > kMinParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (long long blk = 0; blk < blocks; ++blk) {
        const std::size_t i0 = static_cast<std::size_t>(blk) * kRowBlock;
        gemm_rows(a, b, c, i0, std::min(kRowBlock, m - i0), k, n);
    }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    // B is [n, k]; transpose once so the inner loop runs over contiguous memory.
    std::vector<double> bt(k * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b[j * k + p];
    gemm(a, bt.data(), c, m, k, n);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    // Each thread owns a band of output rows and sweeps all of k in order.
    const long long rows = static_cast<long long>(m);
    const bool par = m * k * n > kMinParallelWork;
#pragma omp parallel if (par)
    {
        const int nt = omp_get_num_threads();
        const int tid = omp_get_thread_num();
        const long long per = (rows + nt - 1) / nt;
        const std::size_t lo = static_cast<std::size_t>(std::min(rows, per * tid));
        const std::size_t hi = static_cast<std::size_t>(std::min(rows, per * (tid + 1)));
        for (std::size_t i = lo; i < hi; ++i) std::fill(c + i * n, c + (i + 1) * n, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double* ap = a + p * m;
            const double* bp = b + p * n;
            for (std::size_t i = lo; i < hi; ++i) {
                const double x = ap[i];
                if (x == 0.0) continue;
                double* ci = c + i * n;
#pragma omp simd
                for (std::size_t j = 0; j < n; ++j) ci[j] += x * bp[j];
            }
        }
    }
}

void segment_sum(const double* in, double* out, std::size_t groups, std::size_t group, std::size_t cols) {
    const long long count = static_cast<long long>(groups);
#pragma omp parallel for schedule(static) if (groups * group * cols > kMinParallelWork)
    for (long long g = 0; g < count; ++g) {
        const double* base = in + static_cast<std::size_t>(g) * group * cols;
        for (std::size_t col = 0; col < cols; ++col) {
            double s = 0.0;
            for (std::size_t j = 0; j < group; ++j) s += base[j * cols + col];
            out[static_cast<std::size_t>(g) * cols + col] = s;
        }
    }
}

}  // namespace parallel
}  // namespace invrend::kernels
