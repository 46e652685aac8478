#include "fixtures.hpp"

#include "screenrep/random.hpp"
#include "screenrep/taxonomy.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include <fstream>
#include <stdexcept>

namespace screenrep::fixture {

namespace fs = std::filesystem;

fs::path repo_dir() { return SCREENREP_SOURCE_DIR; }
fs::path data_dir() { return repo_dir() / "tests" / "data"; }
fs::path clip_tiny_dir() { return data_dir() / "clip_tiny"; }
fs::path detector_dir() { return data_dir() / "detector"; }

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::path(SCREENREP_SCRATCH_DIR) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RgbImage solid(int width, int height, std::array<std::uint8_t, 3> rgb) {
    RgbImage img(width, height);
    fill_rect(img, {0, 0, width, height}, rgb);
    return img;
}

void fill_rect(RgbImage& image, const PixelRect& r, std::array<std::uint8_t, 3> rgb) {
    for (int y = r.y; y < r.y + r.height; ++y) {
        std::uint8_t* p = image.row(y) + 3 * r.x;
        for (int x = 0; x < r.width; ++x, p += 3) {
            p[0] = rgb[0];
            p[1] = rgb[1];
            p[2] = rgb[2];
        }
    }
}

void stripe_rect(RgbImage& image, const PixelRect& r, int period) {
    for (int y = r.y; y < r.y + r.height; y += period) fill_rect(image, {r.x, y, r.width, 1}, {40, 40, 40});
}

namespace {

cv::Mat to_bgr(const RgbImage& image) {
    cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    return bgr;
}

}  // namespace

void save_png(const RgbImage& image, const fs::path& path) {
    if (!cv::imwrite(path.string(), to_bgr(image))) throw std::runtime_error("cannot write " + path.string());
}

fs::path write_synthetic_dataset(const fs::path& dir, std::size_t n, std::uint64_t seed) {
    fs::create_directories(dir / "img");
    SplitMix64 rng(seed);
    std::ofstream manifest(dir / "manifest.csv");
    manifest << "file,age,gender,race,service_test\n";
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t gender = rng.below(2);
        const std::size_t age = rng.below(kAgeClasses.size());
        // laid out like a detector crop: one 80x60 grid cell plus the default 10% margin
        RgbImage img(96, 72);
        for (auto& px : img.pixels) px = static_cast<std::uint8_t>(66 + rng.below(9));
        auto color = gender == kFemale ? kWarm : kCool;
        color[1] = static_cast<std::uint8_t>(color[1] - rng.below(30));
        fill_rect(img, {8, 6, 80, 60}, color);
        if (is_over50(age)) stripe_rect(img, {8, 6, 80, 60}, 8);
        const std::string file = "img/" + std::to_string(i) + ".png";
        save_png(img, dir / file);
        manifest << file << ',' << kAgeClasses[age] << ',' << kGenderClasses[gender] << ",White,True\n";
    }
    return dir / "manifest.csv";
}

PixelRect detector_cell(int col, int row) { return {col * 80, row * 60, 80, 60}; }

void write_video(const fs::path& path, const std::vector<RgbImage>& frames, double fps) {
    if (frames.empty()) throw std::runtime_error("write_video: no frames");
    cv::VideoWriter writer(path.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), fps,
                           cv::Size(frames[0].width, frames[0].height));
    if (!writer.isOpened()) throw std::runtime_error("cannot open video writer for " + path.string());
    for (const RgbImage& f : frames) writer.write(to_bgr(f));
}

}  // namespace screenrep::fixture
