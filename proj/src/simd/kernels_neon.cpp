#include "screenrep/simd/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace screenrep::simd::detail {
namespace {

float dot_f32(const float* a, const float* b, std::size_t n) {
    float32x4_t acc0 = vdupq_n_f32(0.0f);
    float32x4_t acc1 = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
        acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
    }
    float acc = vaddvq_f32(vaddq_f32(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double dot_mixed(const float* x, const double* w, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t xs = vld1q_f32(x + i);
        acc0 = vfmaq_f64(acc0, vcvt_f64_f32(vget_low_f32(xs)), vld1q_f64(w + i));
        acc1 = vfmaq_f64(acc1, vcvt_high_f64_f32(xs), vld1q_f64(w + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += static_cast<double>(x[i]) * w[i];
    return acc;
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_n_f64(vld1q_f64(y + i), vld1q_f64(x + i), alpha));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_mixed(double alpha, const float* x, double* y, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t xs = vcvt_f64_f32(vld1_f32(x + i));
        vst1q_f64(y + i, vfmaq_n_f64(vld1q_f64(y + i), xs, alpha));
    }
    for (; i < n; ++i) y[i] += alpha * static_cast<double>(x[i]);
}

void gemm_nt(const float* a, const float* b, const float* bias, float* c, std::size_t m,
             std::size_t n, std::size_t k) {
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            c[i * n + j] = (bias ? bias[j] : 0.0f) + dot_f32(a + i * k, b + j * k, k);
        }
    }
}

void standardize_rgb(const std::uint8_t* hwc, std::size_t pixels, const float* mean,
                     const float* inv_std, float* chw) {
    constexpr float kScale = 1.0f / 255.0f;
    const float32x4_t scale = vdupq_n_f32(kScale);
    std::size_t p = 0;
    for (; p + 8 <= pixels; p += 8) {
        uint8x8x3_t px = vld3_u8(hwc + p * 3);
        for (int ch = 0; ch < 3; ++ch) {
            uint16x8_t wide = vmovl_u8(px.val[ch]);
            float32x4_t lo = vcvtq_f32_u32(vmovl_u16(vget_low_u16(wide)));
            float32x4_t hi = vcvtq_f32_u32(vmovl_u16(vget_high_u16(wide)));
            float32x4_t vm = vdupq_n_f32(mean[ch]);
            float32x4_t vs = vdupq_n_f32(inv_std[ch]);
            float* plane = chw + ch * pixels + p;
            vst1q_f32(plane, vmulq_f32(vsubq_f32(vmulq_f32(lo, scale), vm), vs));
            vst1q_f32(plane + 4, vmulq_f32(vsubq_f32(vmulq_f32(hi, scale), vm), vs));
        }
    }
    for (; p < pixels; ++p) {
        for (int ch = 0; ch < 3; ++ch) {
            chw[ch * pixels + p] = (static_cast<float>(hwc[p * 3 + ch]) * kScale - mean[ch]) * inv_std[ch];
        }
    }
}

constexpr KernelTable kNeon{
    Isa::Neon, dot_f32, dot_f64, dot_mixed, axpy_f64, axpy_mixed, gemm_nt, standardize_rgb,
};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

}  // namespace screenrep::simd::detail

#else

namespace screenrep::simd::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace screenrep::simd::detail

#endif
