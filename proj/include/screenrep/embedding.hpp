#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace screenrep {

/// Fixed-width encoder output. The width is set by the checkpoint (512 for ViT-B/32).
class Embedding {
public:
    Embedding() = default;
    explicit Embedding(std::vector<float> values) : values_(std::move(values)) {}

    std::size_t dim() const { return values_.size(); }
    std::span<const float> values() const { return values_; }
    std::span<float> values() { return values_; }
    const float* data() const { return values_.data(); }

    double norm() const;
    bool is_finite() const;
    /// Unit-length copy. The zero vector is returned unchanged.
    Embedding normalized() const;

    friend bool operator==(const Embedding&, const Embedding&) = default;

private:
    std::vector<float> values_;
};

double cosine_similarity(const Embedding& a, const Embedding& b);

}  // namespace screenrep
