#pragma once

// Data-parallel inner loops shared by the encoder, the softmax heads and the
// trainer. Each instruction set provides the same KernelTable; the scalar
// table is the reference every other table is tested against.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace screenrep::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

struct KernelTable {
    Isa isa;

    float (*dot_f32)(const float* a, const float* b, std::size_t n);
    double (*dot_f64)(const double* a, const double* b, std::size_t n);
    // float activations against double weights, accumulated in double
    double (*dot_mixed)(const float* x, const double* w, std::size_t n);
    void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);
    void (*axpy_mixed)(double alpha, const float* x, double* y, std::size_t n);

    /// C[i, j] = bias[j] + sum_k A[i, k] * B[j, k]
    ///
    /// A is m x k and B is n x k, both row-major, so B has the layout of a
    /// linear layer's weight matrix. C is m x n row-major. bias may be null.
    void (*gemm_nt)(const float* a, const float* b, const float* bias, float* c,
                    std::size_t m, std::size_t n, std::size_t k);

    /// Interleaved 8-bit RGB (HWC) to planar standardized floats (CHW):
    /// out[c][p] = (in[p][c] / 255 - mean[c]) * inv_std[c]
    void (*standardize_rgb)(const std::uint8_t* hwc, std::size_t pixels, const float* mean,
                            const float* inv_std, float* chw);
};

/// Table for the best instruction set supported by this CPU. The choice is
/// made once; SCREENREP_SIMD=scalar|avx2|neon overrides it when supported.
const KernelTable& active();

/// Null when the instruction set is not compiled in or not supported at runtime.
const KernelTable* table_for(Isa isa);

/// Every instruction set usable on this machine, scalar first.
std::vector<Isa> available();

// Convenience wrappers over the active table.

inline float dot(std::span<const float> a, std::span<const float> b) {
    return active().dot_f32(a.data(), b.data(), a.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot_f64(a.data(), b.data(), a.size());
}

inline double dot(std::span<const float> x, std::span<const double> w) {
    return active().dot_mixed(x.data(), w.data(), x.size());
}

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();
const KernelTable* neon_table();
}  // namespace detail

}  // namespace screenrep::simd
