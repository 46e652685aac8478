#include "screenrep/errors.hpp"
#include "screenrep/ingest.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace screenrep;
namespace fs = std::filesystem;

namespace {

// Each frame carries its index in the red channel of the top-left block, so
// sampled frames can be identified after lossy encoding.
fs::path counting_clip(const std::string& name, int n_frames, double fps) {
    std::vector<RgbImage> frames;
    for (int i = 0; i < n_frames; ++i) {
        RgbImage f = fixture::solid(64, 48, {20, 20, 20});
        fixture::fill_rect(f, {0, 0, 32, 24}, {static_cast<std::uint8_t>(i * 4), 0, 0});
        frames.push_back(std::move(f));
    }
    const fs::path path = fixture::scratch_dir(name) / "clip.avi";
    fixture::write_video(path, frames, fps);
    return path;
}

int marker(const Frame& f) { return (f.pixels.row(12)[16 * 3] + 2) / 4; }

}  // namespace

TEST(FrameSampler, TenSecondsAtOneFps) {
    const fs::path clip = counting_clip("ten_seconds", 50, 5.0);
    const auto frames = sample_frames(clip, 1.0);
    ASSERT_EQ(frames.size(), 10u);
    for (std::size_t k = 0; k < frames.size(); ++k) {
        EXPECT_EQ(frames[k].frame_index, k * 5);
        EXPECT_NEAR(frames[k].timestamp, double(k), 1e-6);
        EXPECT_EQ(marker(frames[k]), int(k * 5));
        EXPECT_EQ(frames[k].pixels.width, 64);
    }
}

TEST(FrameSampler, RateAboveNativeNeverRepeatsFrames) {
    const fs::path clip = counting_clip("fast_rate", 10, 5.0);
    const auto frames = sample_frames(clip, 12.0);
    ASSERT_EQ(frames.size(), 10u);
    for (std::size_t k = 1; k < frames.size(); ++k) EXPECT_GT(frames[k].frame_index, frames[k - 1].frame_index);
}

TEST(FrameSampler, ShortClip) {
    const fs::path clip = counting_clip("two_frames", 2, 25.0);
    const auto frames = sample_frames(clip, 1.0);
    ASSERT_EQ(frames.size(), 1u);
    EXPECT_EQ(frames[0].frame_index, 0u);
    EXPECT_EQ(sample_frames(clip, 25.0).size(), 2u);
}

TEST(FrameSampler, Deterministic) {
    const fs::path clip = counting_clip("determinism", 30, 10.0);
    const auto a = sample_frames(clip, 2.0), b = sample_frames(clip, 2.0);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].frame_index, b[k].frame_index);
        EXPECT_EQ(a[k].pixels, b[k].pixels);
    }
}

TEST(FrameSampler, Errors) {
    const fs::path clip = counting_clip("errors", 5, 5.0);
    EXPECT_THROW(FrameSampler(clip, 0.0), InputError);
    EXPECT_THROW(FrameSampler(clip, -1.0), InputError);
    EXPECT_THROW(FrameSampler(clip.parent_path() / "missing.avi", 1.0), InputError);
    const fs::path junk = clip.parent_path() / "junk.mp4";
    std::ofstream(junk, std::ios::binary) << "definitely not a video";
    EXPECT_THROW(sample_frames(junk, 1.0), InputError);
}

TEST(Images, LoadCropAndErrors) {
    const fs::path dir = fixture::scratch_dir("images");
    RgbImage img = fixture::solid(40, 30, {1, 2, 3});
    fixture::fill_rect(img, {10, 5, 4, 4}, {200, 100, 50});
    fixture::save_png(img, dir / "a.png");
    const RgbImage back = load_image(dir / "a.png");
    EXPECT_EQ(back, img);
    const RgbImage c = crop(back, {10, 5, 4, 4});
    EXPECT_EQ(c.width, 4);
    EXPECT_EQ(c.row(3)[3 * 3 + 1], 100);
    EXPECT_THROW(crop(back, {38, 0, 4, 4}), InputError);
    EXPECT_THROW(crop(back, {0, 0, 0, 4}), InputError);
    EXPECT_THROW(load_image(dir / "missing.png"), InputError);
    std::ofstream(dir / "bad.png", std::ios::binary) << "nope";
    EXPECT_THROW(load_image(dir / "bad.png"), InputError);
}
