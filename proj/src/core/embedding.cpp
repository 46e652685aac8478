#include "screenrep/embedding.hpp"

#include "screenrep/errors.hpp"

namespace screenrep {

double Embedding::norm() const {
    double acc = 0.0;
    for (float v : values_) acc += static_cast<double>(v) * v;
    return std::sqrt(acc);
}

bool Embedding::is_finite() const {
    for (float v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Embedding Embedding::normalized() const {
    const double n = norm();
    if (n == 0.0) return *this;
    std::vector<float> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(values_[i] / n);
    return Embedding{std::move(out)};
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) throw InputError("cosine_similarity: dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) dot += static_cast<double>(a.values()[i]) * b.values()[i];
    const double denom = a.norm() * b.norm();
    return denom == 0.0 ? 0.0 : dot / denom;
}

}  // namespace screenrep
