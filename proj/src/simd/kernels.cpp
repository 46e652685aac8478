#include "screenrep/simd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace screenrep::simd {
namespace {

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

const KernelTable& choose() {
    if (const char* forced = std::getenv("SCREENREP_SIMD")) {
        const std::string want{forced};
        for (Isa isa : available()) {
            if (isa_name(isa) == want) return *table_for(isa);
        }
    }
    for (Isa isa : {Isa::Avx2, Isa::Neon}) {
        if (const KernelTable* t = table_for(isa)) return *t;
    }
    return detail::scalar_table();
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

const KernelTable* table_for(Isa isa) {
    if (!cpu_supports(isa)) return nullptr;
    switch (isa) {
        case Isa::Scalar: return &detail::scalar_table();
        case Isa::Avx2: return detail::avx2_table();
        case Isa::Neon: return detail::neon_table();
    }
    return nullptr;
}

std::vector<Isa> available() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
        if (table_for(isa)) out.push_back(isa);
    }
    return out;
}

const KernelTable& active() {
    static const KernelTable& table = choose();
    return table;
}

}  // namespace screenrep::simd
