#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace cv {
class Mat;
}

namespace screenrep {

/// 8-bit RGB, row-major, interleaved (HWC).
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

    bool empty() const { return width == 0 || height == 0; }
    std::uint8_t* row(int y) { return pixels.data() + static_cast<std::size_t>(y) * width * 3; }
    const std::uint8_t* row(int y) const { return pixels.data() + static_cast<std::size_t>(y) * width * 3; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

struct PixelRect {
    int x = 0, y = 0, width = 0, height = 0;
};

/// Decodes any format OpenCV reads; alpha is dropped, gray is replicated.
/// Throws InputError when the file is missing or undecodable.
RgbImage load_image(const std::filesystem::path& path);

/// From an 8-bit BGR or gray OpenCV matrix.
RgbImage from_bgr(const cv::Mat& bgr);

/// Throws InputError when the rectangle is empty or leaves the image.
RgbImage crop(const RgbImage& image, const PixelRect& rect);

}  // namespace screenrep
