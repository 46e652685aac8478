// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include "screenrep/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace screenrep::simd::detail {
namespace {

inline float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
}

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
}

// Reduces four accumulators into one vector {sum(a), sum(b), sum(c), sum(d)}.
inline __m128 hsum4(__m256 a, __m256 b, __m256 c, __m256 d) {
    __m256 ab = _mm256_hadd_ps(a, b);
    __m256 cd = _mm256_hadd_ps(c, d);
    __m256 abcd = _mm256_hadd_ps(ab, cd);
    return _mm_add_ps(_mm256_castps256_ps128(abcd), _mm256_extractf128_ps(abcd, 1));
}

float dot_f32(const float* a, const float* b, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    }
    float acc = hsum(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double dot_mixed(const float* x, const double* w, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 xs = _mm256_loadu_ps(x + i);
        __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(xs));
        __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(xs, 1));
        acc0 = _mm256_fmadd_pd(lo, _mm256_loadu_pd(w + i), acc0);
        acc1 = _mm256_fmadd_pd(hi, _mm256_loadu_pd(w + i + 4), acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += static_cast<double>(x[i]) * w[i];
    return acc;
}

void axpy_f64(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_mixed(double alpha, const float* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xs = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, xs, _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += alpha * static_cast<double>(x[i]);
}

// 3 rows of A against 4 rows of B: 12 accumulators + 3 A loads + 1 B load
// keeps all 16 ymm registers busy without spilling.
void block_3x4(const float* a, const float* b, std::size_t k, float out[3][4]) {
    __m256 acc[3][4];
    for (auto& row : acc)
        for (auto& v : row) v = _mm256_setzero_ps();
    const float* a0 = a;
    const float* a1 = a + k;
    const float* a2 = a + 2 * k;
    std::size_t kk = 0;
    for (; kk + 8 <= k; kk += 8) {
        __m256 va0 = _mm256_loadu_ps(a0 + kk);
        __m256 va1 = _mm256_loadu_ps(a1 + kk);
        __m256 va2 = _mm256_loadu_ps(a2 + kk);
        for (int j = 0; j < 4; ++j) {
            __m256 vb = _mm256_loadu_ps(b + j * k + kk);
            acc[0][j] = _mm256_fmadd_ps(va0, vb, acc[0][j]);
            acc[1][j] = _mm256_fmadd_ps(va1, vb, acc[1][j]);
            acc[2][j] = _mm256_fmadd_ps(va2, vb, acc[2][j]);
        }
    }
    for (int r = 0; r < 3; ++r) {
        _mm_storeu_ps(out[r], hsum4(acc[r][0], acc[r][1], acc[r][2], acc[r][3]));
    }
    for (; kk < k; ++kk) {
        for (int r = 0; r < 3; ++r) {
            for (int j = 0; j < 4; ++j) out[r][j] += a[r * k + kk] * b[j * k + kk];
        }
    }
}

void gemm_nt(const float* a, const float* b, const float* bias, float* c, std::size_t m,
             std::size_t n, std::size_t k) {
    const std::size_t m3 = m - m % 3;
    const std::size_t n4 = n - n % 4;
    // B panel outermost: four weight rows stay hot while every row of A passes.
    for (std::size_t j = 0; j < n4; j += 4) {
        const float* bj = b + j * k;
        for (std::size_t i = 0; i < m3; i += 3) {
            float out[3][4];
            block_3x4(a + i * k, bj, k, out);
            for (int r = 0; r < 3; ++r) {
                for (int q = 0; q < 4; ++q) {
                    c[(i + r) * n + j + q] = (bias ? bias[j + q] : 0.0f) + out[r][q];
                }
            }
        }
        for (std::size_t i = m3; i < m; ++i) {
            for (std::size_t q = 0; q < 4; ++q) {
                c[i * n + j + q] = (bias ? bias[j + q] : 0.0f) + dot_f32(a + i * k, bj + q * k, k);
            }
        }
    }
    for (std::size_t j = n4; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            c[i * n + j] = (bias ? bias[j] : 0.0f) + dot_f32(a + i * k, b + j * k, k);
        }
    }
}

void standardize_rgb(const std::uint8_t* hwc, std::size_t pixels, const float* mean,
                     const float* inv_std, float* chw) {
    // Deinterleaving dominates; the arithmetic is vectorized per plane.
    constexpr float kScale = 1.0f / 255.0f;
    const __m256 scale = _mm256_set1_ps(kScale);
    alignas(32) float tmp[8];
    for (std::size_t ch = 0; ch < 3; ++ch) {
        const __m256 vm = _mm256_set1_ps(mean[ch]);
        const __m256 vs = _mm256_set1_ps(inv_std[ch]);
        float* plane = chw + ch * pixels;
        std::size_t p = 0;
        for (; p + 8 <= pixels; p += 8) {
            for (int q = 0; q < 8; ++q) tmp[q] = static_cast<float>(hwc[(p + q) * 3 + ch]);
            __m256 v = _mm256_mul_ps(_mm256_load_ps(tmp), scale);
            _mm256_storeu_ps(plane + p, _mm256_mul_ps(_mm256_sub_ps(v, vm), vs));
        }
        for (; p < pixels; ++p) {
            plane[p] = (static_cast<float>(hwc[p * 3 + ch]) * kScale - mean[ch]) * inv_std[ch];
        }
    }
}

constexpr KernelTable kAvx2{
    Isa::Avx2, dot_f32, dot_f64, dot_mixed, axpy_f64, axpy_mixed, gemm_nt, standardize_rgb,
};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace screenrep::simd::detail

#else

namespace screenrep::simd::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace screenrep::simd::detail

#endif
