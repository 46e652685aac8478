#include "screenrep/image.hpp"

#include "screenrep/errors.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cstring>

namespace screenrep {

RgbImage from_bgr(const cv::Mat& mat) {
    if (mat.empty()) throw InputError("empty image");
    if (mat.depth() != CV_8U) throw InputError("expected an 8-bit image");
    cv::Mat rgb;
    switch (mat.channels()) {
        case 1: cv::cvtColor(mat, rgb, cv::COLOR_GRAY2RGB); break;
        case 3: cv::cvtColor(mat, rgb, cv::COLOR_BGR2RGB); break;
        case 4: cv::cvtColor(mat, rgb, cv::COLOR_BGRA2RGB); break;
        default: throw InputError("unsupported channel count " + std::to_string(mat.channels()));
    }
    RgbImage out(rgb.cols, rgb.rows);
    for (int y = 0; y < rgb.rows; ++y) std::memcpy(out.row(y), rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3);
    return out;
}

RgbImage load_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw InputError("image not found: " + path.string());
    const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (mat.empty()) throw InputError("cannot decode image: " + path.string());
    return from_bgr(mat);
}

RgbImage crop(const RgbImage& image, const PixelRect& r) {
    if (r.width <= 0 || r.height <= 0 || r.x < 0 || r.y < 0 || r.x + r.width > image.width ||
        r.y + r.height > image.height) {
        throw InputError("crop rectangle outside the image");
    }
    RgbImage out(r.width, r.height);
    for (int y = 0; y < r.height; ++y) {
        std::memcpy(out.row(y), image.row(r.y + y) + static_cast<std::size_t>(r.x) * 3, static_cast<std::size_t>(r.width) * 3);
    }
    return out;
}

}  // namespace screenrep
