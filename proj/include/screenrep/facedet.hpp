#pragma once

// Single-shot dense face detector run through OpenCV's DNN module. The model
// is one ONNX file with a model card describing the input tensor and the two
// outputs: per-anchor class scores [1, N, 2] (background, face) and boxes
// [1, N, 4] as normalized x1, y1, x2, y2.

#include "screenrep/image.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace screenrep {

struct DetectorConfig {
    double threshold = 0.9;
    int min_face_size = 20;  // pixels, both sides of the detector box
    double margin = 0.1;     // fraction of box width/height added on each side of the crop
    double nms_iou = 0.3;
};

struct ModelCard {
    std::string name;
    int input_width = 320;
    int input_height = 240;
    bool rgb = true;
    std::array<float, 3> mean{127.0f, 127.0f, 127.0f};
    float std = 128.0f;
    std::string scores_output = "scores";
    std::string boxes_output = "boxes";
    int face_class = 1;

    static ModelCard load(const std::filesystem::path& path);
};

struct Detection {
    PixelRect box;  // detector box clipped to the frame
    double confidence = 0.0;
};

struct FaceCrop {
    std::size_t source_frame = 0;
    PixelRect bbox;  // crop region including the margin, inside the frame
    PixelRect detector_box;
    double detection_confidence = 0.0;
    RgbImage pixels;
};

/// Threshold, minimum size, greedy NMS. Sorted by descending confidence, ties
/// by anchor index. scores is N x 2, boxes N x 4 (normalized corners).
std::vector<Detection> decode_detections(std::span<const float> scores, std::span<const float> boxes, int frame_width,
                                         int frame_height, const DetectorConfig& config, int face_class = 1);

double iou(const PixelRect& a, const PixelRect& b);

/// Detector box grown by `margin` on every side and clipped to the frame.
PixelRect expand_box(const PixelRect& box, double margin, int frame_width, int frame_height);

class FaceDetector {
public:
    /// `model` is an ONNX file or a directory holding model.onnx and
    /// model_card.json. A file without a sibling model_card.json uses the
    /// default card. Throws ModelError when the model cannot be loaded.
    FaceDetector(const std::filesystem::path& model, DetectorConfig config = {});
    ~FaceDetector();
    FaceDetector(FaceDetector&&) noexcept;
    FaceDetector& operator=(FaceDetector&&) noexcept;

    const DetectorConfig& config() const;
    const ModelCard& card() const;
    /// "<model file name>@<first 16 hex of its SHA-256>"
    const std::string& model_id() const;

    /// Throws InputError on an empty frame. Thread-safe.
    std::vector<Detection> detect(const RgbImage& frame) const;
    std::vector<FaceCrop> detect_faces(const RgbImage& frame, std::size_t frame_index = 0) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace screenrep
