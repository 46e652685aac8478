#pragma once

// Image and text embeddings from a CLIP checkpoint, with an optional
// content-addressed on-disk cache of image embeddings.

#include "screenrep/clip_model.hpp"
#include "screenrep/embedding.hpp"
#include "screenrep/image.hpp"
#include "screenrep/preprocess.hpp"
#include "screenrep/tokenizer.hpp"

#include <atomic>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace screenrep {

/// One file per embedding, named by the SHA-256 of (checkpoint id,
/// preprocessing settings, decoded pixels). Record layout, little-endian:
///
///   "SREB" | u32 version=1 | u32 id length | checkpoint id | u32 D | D x f32
///
/// Writes go through a temporary file and a rename, so concurrent writers
/// never expose partial records. Records that fail validation are misses.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path dir);

    const std::filesystem::path& directory() const { return dir_; }
    std::optional<Embedding> get(const std::string& key, const std::string& checkpoint_id, std::size_t dim) const;
    void put(const std::string& key, const std::string& checkpoint_id, const Embedding& value) const;

private:
    std::filesystem::path record_path(const std::string& key) const;
    std::filesystem::path dir_;
};

struct EmbedderOptions {
    std::optional<std::filesystem::path> cache_dir;
    unsigned workers = 1;
};

struct CacheStats {
    std::size_t hits = 0;
    std::size_t misses = 0;
};

class Embedder {
public:
    /// Loads model, tokenizer and preprocessing from the checkpoint directory.
    explicit Embedder(const std::filesystem::path& checkpoint_dir, EmbedderOptions options = {});

    const ClipModel& model() const { return model_; }
    const ClipTokenizer& tokenizer() const { return tokenizer_; }
    const PreprocessConfig& preprocess_config() const { return preprocess_; }
    const std::string& checkpoint_id() const { return model_.checkpoint_id(); }
    std::size_t dim() const { return model_.embedding_dim(); }
    double logit_scale() const { return model_.logit_scale(); }

    Embedding embed_image(const RgbImage& image) const;
    /// Same result as embedding each image alone; fans out over options.workers threads.
    std::vector<Embedding> embed_images(std::span<const RgbImage> images) const;
    /// Throws InputError on an empty prompt or one over the token budget.
    Embedding embed_text(std::string_view text) const;

    CacheStats cache_stats() const { return {hits_.load(), misses_.load()}; }

    /// Cache key of an image under this checkpoint and preprocessing.
    std::string cache_key(const RgbImage& image) const;

private:
    ClipModel model_;
    ClipTokenizer tokenizer_;
    PreprocessConfig preprocess_;
    std::string preprocess_fingerprint_;
    std::optional<EmbeddingCache> cache_;
    unsigned workers_;
    mutable std::atomic<std::size_t> hits_{0};
    mutable std::atomic<std::size_t> misses_{0};
};

}  // namespace screenrep
