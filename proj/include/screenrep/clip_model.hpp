#pragma once

// CLIP dual encoder (ViT image tower, causal text transformer) evaluated in
// float32 from a Hugging Face checkpoint directory:
//
//   config.json, model.safetensors, preprocessor_config.json, merges.txt
//
// Forward passes are const and may run concurrently.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace screenrep {

struct ClipTowerConfig {
    int hidden = 0;
    int intermediate = 0;
    int heads = 0;
    int layers = 0;
    double layer_norm_eps = 1e-5;
    std::string hidden_act = "quick_gelu";
};

struct ClipConfig {
    ClipTowerConfig vision{768, 3072, 12, 12};
    ClipTowerConfig text{512, 2048, 8, 12};
    int image_size = 224;
    int patch_size = 32;
    int max_positions = 77;
    int vocab_size = 49408;
    int eos_token_id = 2;
    int projection_dim = 512;

    /// Missing fields keep the Hugging Face defaults above.
    static ClipConfig load(const std::filesystem::path& path);
};

class ClipModel {
public:
    /// Throws ModelError on missing files, unknown activations or shape mismatches.
    explicit ClipModel(const std::filesystem::path& checkpoint_dir);
    ~ClipModel();
    ClipModel(ClipModel&&) noexcept;
    ClipModel& operator=(ClipModel&&) noexcept;

    const ClipConfig& config() const;
    const std::filesystem::path& directory() const;

    /// "<directory name>@<first 16 hex of the weights' SHA-256>"
    const std::string& checkpoint_id() const;

    std::size_t embedding_dim() const;

    /// exp of the stored logit scale.
    double logit_scale() const;

    /// pixels: 3 x image_size x image_size, already preprocessed. Returns the
    /// projected image features (not normalized).
    std::vector<float> encode_image(std::span<const float> pixels) const;

    /// Token ids including start and end markers, at most max_positions long.
    /// Returns the projected text features (not normalized).
    std::vector<float> encode_text(std::span<const std::int32_t> ids) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace screenrep
