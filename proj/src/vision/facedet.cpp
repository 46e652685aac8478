#include "screenrep/facedet.hpp"

#include "screenrep/errors.hpp"
#include "screenrep/hash.hpp"

#include <json.hpp>
#include <opencv2/dnn.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>

namespace screenrep {

namespace fs = std::filesystem;

ModelCard ModelCard::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model card " + path.string());
    ModelCard c;
    try {
        const auto j = nlohmann::json::parse(in);
        c.name = j.value("name", std::string());
        const auto& input = j.at("input");
        c.input_width = input.at("width").get<int>();
        c.input_height = input.at("height").get<int>();
        const std::string color = input.value("color", std::string("RGB"));
        if (color != "RGB" && color != "BGR") throw ModelError(path.string() + ": input.color must be RGB or BGR");
        c.rgb = color == "RGB";
        const auto mean = input.at("mean").get<std::vector<float>>();
        if (mean.size() != 3) throw ModelError(path.string() + ": input.mean needs 3 values");
        std::copy(mean.begin(), mean.end(), c.mean.begin());
        c.std = input.at("std").get<float>();
        const auto& out = j.at("outputs");
        c.scores_output = out.value("scores", c.scores_output);
        c.boxes_output = out.value("boxes", c.boxes_output);
        c.face_class = out.value("face_class", c.face_class);
        if (out.value("box_format", std::string("normalized_xyxy")) != "normalized_xyxy") {
            throw ModelError(path.string() + ": only normalized_xyxy boxes are supported");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(path.string() + ": " + e.what());
    }
    if (c.input_width <= 0 || c.input_height <= 0 || !(c.std > 0.0f) || c.face_class < 0 || c.face_class > 1) {
        throw ModelError(path.string() + ": invalid input description");
    }
    return c;
}

double iou(const PixelRect& a, const PixelRect& b) {
    const int x1 = std::max(a.x, b.x), y1 = std::max(a.y, b.y);
    const int x2 = std::min(a.x + a.width, b.x + b.width), y2 = std::min(a.y + a.height, b.y + b.height);
    const double inter = static_cast<double>(std::max(0, x2 - x1)) * std::max(0, y2 - y1);
    const double uni = static_cast<double>(a.width) * a.height + static_cast<double>(b.width) * b.height - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<Detection> decode_detections(std::span<const float> scores, std::span<const float> boxes, int fw, int fh,
                                         const DetectorConfig& cfg, int face_class) {
    if (fw <= 0 || fh <= 0) throw InputError("decode_detections: zero-area frame");
    if (scores.size() % 2 != 0 || boxes.size() != scores.size() * 2) {
        throw ModelError("detector outputs have inconsistent sizes");
    }
    const std::size_t n = scores.size() / 2;
    std::vector<Detection> cand;
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
        const double conf = scores[i * 2 + static_cast<std::size_t>(face_class)];
        if (!(conf >= cfg.threshold)) continue;
        auto px = [](float v, int size) { return static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * size)); };
        const int x1 = px(boxes[i * 4], fw), y1 = px(boxes[i * 4 + 1], fh);
        const int x2 = px(boxes[i * 4 + 2], fw), y2 = px(boxes[i * 4 + 3], fh);
        const PixelRect r{x1, y1, x2 - x1, y2 - y1};
        if (r.width < cfg.min_face_size || r.height < cfg.min_face_size) continue;
        cand.push_back({r, std::min(conf, 1.0)});
    }
    order.resize(cand.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cand[a].confidence > cand[b].confidence; });

    std::vector<Detection> kept;
    for (std::size_t idx : order) {
        const Detection& d = cand[idx];
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) { return iou(k.box, d.box) > cfg.nms_iou; });
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

PixelRect expand_box(const PixelRect& box, double margin, int fw, int fh) {
    const int dx = static_cast<int>(std::lround(box.width * margin));
    const int dy = static_cast<int>(std::lround(box.height * margin));
    const int x1 = std::max(0, box.x - dx), y1 = std::max(0, box.y - dy);
    const int x2 = std::min(fw, box.x + box.width + dx), y2 = std::min(fh, box.y + box.height + dy);
    return {x1, y1, x2 - x1, y2 - y1};
}

struct FaceDetector::Impl {
    DetectorConfig config;
    ModelCard card;
    std::string model_id;
    mutable cv::dnn::Net net;
    mutable std::mutex mutex;
};

FaceDetector::FaceDetector(const fs::path& model, DetectorConfig config) : impl_(std::make_unique<Impl>()) {
    fs::path onnx = model, card_path;
    if (fs::is_directory(model)) {
        onnx = model / "model.onnx";
        card_path = model / "model_card.json";
    } else if (fs::exists(model.parent_path() / "model_card.json")) {
        card_path = model.parent_path() / "model_card.json";
    }
    if (!fs::is_regular_file(onnx)) throw ModelError("detector model not found: " + onnx.string());
    if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) throw InputError("detection threshold must lie in [0, 1]");
    if (config.min_face_size < 1 || config.margin < 0.0) throw InputError("invalid detector settings");
    impl_->config = config;
    impl_->card = card_path.empty() ? ModelCard{} : ModelCard::load(card_path);
    try {
        impl_->net = cv::dnn::readNetFromONNX(onnx.string());
    } catch (const cv::Exception& e) {
        throw ModelError("cannot load detector " + onnx.string() + ": " + e.what());
    }
    if (impl_->net.empty()) throw ModelError("cannot load detector " + onnx.string());
    impl_->net.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    impl_->net.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
    impl_->model_id = onnx.filename().string() + "@" + sha256_file(onnx).substr(0, 16);
}

FaceDetector::~FaceDetector() = default;
FaceDetector::FaceDetector(FaceDetector&&) noexcept = default;
FaceDetector& FaceDetector::operator=(FaceDetector&&) noexcept = default;

const DetectorConfig& FaceDetector::config() const { return impl_->config; }
const ModelCard& FaceDetector::card() const { return impl_->card; }
const std::string& FaceDetector::model_id() const { return impl_->model_id; }

std::vector<Detection> FaceDetector::detect(const RgbImage& frame) const {
    if (frame.empty()) throw InputError("detect_faces: zero-area frame");
    const ModelCard& card = impl_->card;
    const cv::Mat rgb(frame.height, frame.width, CV_8UC3, const_cast<std::uint8_t*>(frame.pixels.data()));
    cv::Mat resized;
    cv::resize(rgb, resized, cv::Size(card.input_width, card.input_height), 0, 0, cv::INTER_LINEAR);
    const cv::Scalar mean = card.rgb ? cv::Scalar(card.mean[0], card.mean[1], card.mean[2])
                                     : cv::Scalar(card.mean[2], card.mean[1], card.mean[0]);
    const cv::Mat blob = cv::dnn::blobFromImage(resized, 1.0 / card.std, cv::Size(), mean, !card.rgb, false, CV_32F);

    std::vector<cv::Mat> outs;
    {
        std::lock_guard lock(impl_->mutex);
        try {
            impl_->net.setInput(blob);
            impl_->net.forward(outs, std::vector<cv::String>{card.scores_output, card.boxes_output});
        } catch (const cv::Exception& e) {
            throw ModelError(std::string("detector inference failed: ") + e.what());
        }
    }
    if (outs.size() != 2 || !outs[0].isContinuous() || !outs[1].isContinuous()) throw ModelError("detector returned unexpected outputs");
    const std::span<const float> scores(outs[0].ptr<float>(), outs[0].total());
    const std::span<const float> boxes(outs[1].ptr<float>(), outs[1].total());
    return decode_detections(scores, boxes, frame.width, frame.height, impl_->config, card.face_class);
}

std::vector<FaceCrop> FaceDetector::detect_faces(const RgbImage& frame, std::size_t frame_index) const {
    std::vector<FaceCrop> out;
    for (const Detection& d : detect(frame)) {
        FaceCrop c;
        c.source_frame = frame_index;
        c.detector_box = d.box;
        c.bbox = expand_box(d.box, impl_->config.margin, frame.width, frame.height);
        c.detection_confidence = d.confidence;
        c.pixels = crop(frame, c.bbox);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace screenrep
