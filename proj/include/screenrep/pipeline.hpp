#pragma once
// End-to-end commands: embed a labeled dataset, train heads, benchmark them,
// and analyze a film. Every artifact carries a config fingerprint derived
// from the resolved configuration.

#include "screenrep/aggregate.hpp"
#include "screenrep/bench.hpp"
#include "screenrep/classifier.hpp"
#include "screenrep/embedder.hpp"
#include "screenrep/facedet.hpp"
#include "screenrep/ingest.hpp"
#include "screenrep/train.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace screenrep {

/// "sha256:<first 16 hex>" of the compact dump of `config`.
std::string config_fingerprint(const nlohmann::ordered_json& config);

/// Chooses `limit` manifest rows with a seeded sample (all rows when unset).
/// Throws InputError when limit is 0. Row order is preserved.
std::vector<LabeledImage> select_subset(std::vector<LabeledImage> rows, std::optional<std::size_t> limit,
                                        std::uint64_t seed);

/// Decodes and embeds the images; output order matches input order.
std::vector<Embedding> embed_labeled(const Embedder& embedder, std::span<const LabeledImage> images,
                                     std::size_t batch = 64);

struct TrainOptions {
    Task task = Task::Gender;
    TrainingConfig training;
};

SoftmaxHead train_from_images(const Embedder& embedder, std::span<const LabeledImage> images,
                              const TrainOptions& options);

struct BenchmarkOptions {
    bool zero_shot = true;
    std::optional<double> logit_scale;  // checkpoint scale when unset
    std::optional<std::filesystem::path> gender_head;
    std::optional<std::filesystem::path> age_head;
    std::string validation_set = "fairface-val";
    std::optional<std::size_t> limit;
    std::uint64_t seed = 0;
};

struct BenchmarkRun {
    std::vector<BenchmarkReport> reports;
    std::optional<BiasProfile> bias;  // both heads present
    nlohmann::ordered_json config;
    std::string fingerprint;
};

BenchmarkRun run_benchmark(const Embedder& embedder, std::span<const LabeledImage> images,
                           const BenchmarkOptions& options);

/// Report document: schema_version, kind, config, config_fingerprint, the
/// reports, and the reference accuracies (context only).
nlohmann::ordered_json benchmark_json(const BenchmarkRun& run);

struct AnalyzeOptions {
    double fps = 1.0;
    DetectorConfig detector;
    AgeConfidenceMode age_confidence = AgeConfidenceMode::Binarized;
    unsigned workers = 1;
    std::size_t batch = 64;  // face crops embedded together
};

struct AnalyzeProgress {
    std::size_t frames = 0;
    std::size_t faces = 0;
    double timestamp = 0.0;
};

/// Detector + encoder + both heads, with an optional bias profile that is
/// copied into every report.
class FilmAnalyzer {
public:
    /// Throws ModelError when a head does not match the encoder.
    FilmAnalyzer(const Embedder& embedder, const FaceDetector& detector, SoftmaxHead gender_head,
                 SoftmaxHead age_head, std::optional<BiasProfile> bias, AnalyzeOptions options);

    const nlohmann::ordered_json& config() const { return config_; }
    const std::string& fingerprint() const { return fingerprint_; }

    /// Per-face predictions for one image, in detection order.
    std::vector<FacePrediction> predict_faces(const RgbImage& frame, std::size_t frame_index = 0) const;

    /// Still images are analyzed as a single frame. Throws NoFacesError when
    /// nothing is detected in the whole input.
    FilmAnalytics analyze(const std::filesystem::path& media, const std::string& film_id,
                          const std::function<void(const AnalyzeProgress&)>& progress = {}) const;

private:
    std::vector<FacePrediction> classify(std::span<const RgbImage> crops) const;

    const Embedder& embedder_;
    const FaceDetector& detector_;
    SoftmaxHead gender_head_;
    SoftmaxHead age_head_;
    std::optional<BiasProfile> bias_;
    AnalyzeOptions options_;
    nlohmann::ordered_json config_;
    std::string fingerprint_;
};

bool is_still_image(const std::filesystem::path& path);

/// Writes `text` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace screenrep
