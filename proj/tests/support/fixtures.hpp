#pragma once

// Shared helpers for tests: paths to checked-in fixtures and generators for
// synthetic images, datasets and video clips.

#include "screenrep/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace screenrep::fixture {

std::filesystem::path data_dir();  // tests/data
std::filesystem::path repo_dir();
std::filesystem::path clip_tiny_dir();
std::filesystem::path detector_dir();

/// Fresh empty directory under the build tree's scratch area.
std::filesystem::path scratch_dir(const std::string& name);

// Colors chosen so the synthetic detector scores them far above 0.9.
inline constexpr std::array<std::uint8_t, 3> kWarm{250, 200, 170};  // "Female" in the synthetic dataset
inline constexpr std::array<std::uint8_t, 3> kCool{170, 200, 250};  // "Male"

RgbImage solid(int width, int height, std::array<std::uint8_t, 3> rgb);
void fill_rect(RgbImage& image, const PixelRect& rect, std::array<std::uint8_t, 3> rgb);
/// Horizontal dark stripes every `period` rows inside rect.
void stripe_rect(RgbImage& image, const PixelRect& rect, int period);

void save_png(const RgbImage& image, const std::filesystem::path& path);

/// Labeled synthetic faces shaped like detector crops of a gray frame: warm
/// patch = Female, cool = Male; age groups 50+ carry dark stripes. Writes
/// images and manifest.csv into dir.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir, std::size_t n, std::uint64_t seed);

/// Face patch filling grid cell (col, row) of a 320x240 frame, i.e. one
/// anchor of the synthetic detector.
PixelRect detector_cell(int col, int row);

/// MJPG AVI written with OpenCV; frames are RGB.
void write_video(const std::filesystem::path& path, const std::vector<RgbImage>& frames, double fps);

}  // namespace screenrep::fixture
