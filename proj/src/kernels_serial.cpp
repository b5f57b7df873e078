#include "invrend/kernels.hpp"

namespace invrend::kernels::serial {

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
            c[i * n + j] = s;
        }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
            c[i * n + j] = s;
        }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += a[p * m + i] * b[p * n + j];
            c[i * n + j] = s;
        }
}

void segment_sum(const double* in, double* out, std::size_t groups, std::size_t group, std::size_t cols) {
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t col = 0; col < cols; ++col) {
            double s = 0.0;
            for (std::size_t j = 0; j < group; ++j) s += in[(g * group + j) * cols + col];
            out[g * cols + col] = s;
        }
}

}  // namespace invrend::kernels::serial
