#pragma once

// CLIP image preprocessing: bicubic resize of the shortest edge, center crop,
// rescale to [0, 1] and per-channel standardization. The resize reproduces
// Pillow's fixed-point bicubic filter bit for bit, since that is what the
// reference processor runs.

#include "screenrep/image.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace screenrep {

struct PreprocessConfig {
    int shortest_edge = 224;
    int crop_height = 224;
    int crop_width = 224;
    float rescale_factor = 1.0f / 255.0f;
    std::array<float, 3> mean{0.48145466f, 0.4578275f, 0.40821073f};
    std::array<float, 3> std{0.26862954f, 0.26130258f, 0.27577711f};
    bool do_resize = true;
    bool do_center_crop = true;

    /// Hugging Face preprocessor_config.json. Only bicubic resampling (3) is supported.
    static PreprocessConfig load(const std::filesystem::path& path);
};

/// Pillow-compatible bicubic resize (a = -0.5, antialiased when shrinking).
RgbImage resize_bicubic(const RgbImage& image, int width, int height);

/// Output size of a shortest-edge resize; the long side is truncated.
std::array<int, 2> shortest_edge_size(int width, int height, int shortest_edge);

/// Floor-offset center crop. Smaller images are zero-padded around the center.
RgbImage center_crop(const RgbImage& image, int width, int height);

/// Planar float tensor 3 x crop_height x crop_width.
std::vector<float> preprocess(const RgbImage& image, const PreprocessConfig& config);

}  // namespace screenrep
