#pragma once

// Video frame sampling and FairFace-style labeled image manifests.

#include "screenrep/image.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace screenrep {

struct Frame {
    std::size_t frame_index = 0;  // index in the decoded stream
    double timestamp = 0.0;       // seconds
    RgbImage pixels;
};

/// Streams frames at `rate` frames per second: for each sample time k / rate
/// the first decoded frame at or after it is delivered, each frame at most
/// once. Timestamps are frame_index / native fps when the container reports a
/// frame rate, otherwise the decoder's position.
class FrameSampler {
public:
    /// Throws InputError when the file cannot be opened or rate <= 0.
    FrameSampler(const std::filesystem::path& video, double rate);
    ~FrameSampler();
    FrameSampler(FrameSampler&&) noexcept;
    FrameSampler& operator=(FrameSampler&&) noexcept;

    double rate() const;
    double native_fps() const;

    /// Next sampled frame, or nothing at the end of the stream.
    std::optional<Frame> next();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Whole video at once; meant for short clips.
std::vector<Frame> sample_frames(const std::filesystem::path& video, double rate);

struct LabeledImage {
    std::string file;             // as written in the manifest
    std::filesystem::path path;   // resolved against the image root
    std::size_t gender = 0;       // index into kGenderClasses
    std::size_t age = 0;          // index into kAgeClasses
};

/// CSV with header; columns file, age, gender are required, others ignored.
/// Relative file entries resolve against `image_root`, by default the
/// manifest's directory. Labels are matched case-sensitively.
/// Throws FormatError naming the missing column or the offending line.
std::vector<LabeledImage> load_manifest(const std::filesystem::path& manifest,
                                        const std::optional<std::filesystem::path>& image_root = std::nullopt);

}  // namespace screenrep
