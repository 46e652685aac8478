#include "screenrep/simd/kernels.hpp"

namespace screenrep::simd::detail {
namespace {

float dot_f32(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double dot_mixed(const float* x, const double* w, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]) * w[i];
    return acc;
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_mixed(double alpha, const float* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * static_cast<double>(x[i]);
}

void gemm_nt(const float* a, const float* b, const float* bias, float* c, std::size_t m,
             std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const float* row = a + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            c[i * n + j] = (bias ? bias[j] : 0.0f) + dot_f32(row, b + j * k, k);
        }
    }
}

void standardize_rgb(const std::uint8_t* hwc, std::size_t pixels, const float* mean,
                     const float* inv_std, float* chw) {
    constexpr float kScale = 1.0f / 255.0f;
    for (std::size_t ch = 0; ch < 3; ++ch) {
        float* plane = chw + ch * pixels;
        for (std::size_t p = 0; p < pixels; ++p) {
            plane[p] = (static_cast<float>(hwc[p * 3 + ch]) * kScale - mean[ch]) * inv_std[ch];
        }
    }
}

constexpr KernelTable kScalar{
    Isa::Scalar, dot_f32, dot_f64, dot_mixed, axpy_f64, axpy_mixed, gemm_nt, standardize_rgb,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace screenrep::simd::detail
