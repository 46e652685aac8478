#include "screenrep/pipeline.hpp"

#include "screenrep/analytics_json.hpp"
#include "screenrep/detail/little_endian.hpp"
#include "screenrep/errors.hpp"
#include "screenrep/hash.hpp"
#include "screenrep/head_io.hpp"
#include "screenrep/random.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace screenrep {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string config_fingerprint(const ordered_json& config) { return "sha256:" + sha256_hex(config.dump()).substr(0, 16); }

std::vector<LabeledImage> select_subset(std::vector<LabeledImage> rows, std::optional<std::size_t> limit,
                                        std::uint64_t seed) {
    if (!limit) return rows;
    if (*limit == 0) throw InputError("--limit must be at least 1");
    if (*limit >= rows.size()) return rows;
    std::vector<LabeledImage> out;
    out.reserve(*limit);
    for (std::size_t i : sample_indices(rows.size(), *limit, seed)) out.push_back(std::move(rows[i]));
    return out;
}

std::vector<Embedding> embed_labeled(const Embedder& embedder, std::span<const LabeledImage> images, std::size_t batch) {
    std::vector<Embedding> out;
    out.reserve(images.size());
    batch = std::max<std::size_t>(batch, 1);
    for (std::size_t begin = 0; begin < images.size(); begin += batch) {
        const std::size_t end = std::min(images.size(), begin + batch);
        std::vector<RgbImage> decoded;
        decoded.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) decoded.push_back(load_image(images[i].path));
        for (Embedding& e : embedder.embed_images(decoded)) out.push_back(std::move(e));
    }
    return out;
}

namespace {

std::vector<std::size_t> labels_for(Task task, std::span<const LabeledImage> images) {
    std::vector<std::size_t> y;
    y.reserve(images.size());
    for (const LabeledImage& img : images) y.push_back(task == Task::Gender ? img.gender : img.age);
    return y;
}

std::string head_digest(const SoftmaxHead& head) {
    std::string blob;
    for (double w : head.weights()) detail::append_f32(blob, static_cast<float>(w));
    for (double b : head.biases()) detail::append_f32(blob, static_cast<float>(b));
    return sha256_hex(blob).substr(0, 16);
}

void check_head(const SoftmaxHead& head, Task task, const Embedder& embedder) {
    if (head.task() != task) {
        throw ModelError("expected a " + std::string(task_name(task)) + " head, got " + std::string(task_name(head.task())));
    }
    if (head.dim() != embedder.dim()) {
        throw ModelError(std::string(task_name(task)) + " head has dimension " + std::to_string(head.dim()) +
                         " but the encoder produces " + std::to_string(embedder.dim()));
    }
    if (!head.checkpoint_id.empty() && head.checkpoint_id != embedder.checkpoint_id()) {
        throw ModelError(std::string(task_name(task)) + " head was trained on " + head.checkpoint_id +
                         ", the encoder is " + embedder.checkpoint_id());
    }
}

std::vector<Embedding> prompt_embeddings(const Embedder& embedder, Task task) {
    std::vector<Embedding> out;
    for (const std::string& p : zero_shot_prompts(task)) out.push_back(embedder.embed_text(p));
    return out;
}

std::vector<std::string> names_of(Task task) {
    const auto names = class_names(task);
    return {names.begin(), names.end()};
}

}  // namespace

SoftmaxHead train_from_images(const Embedder& embedder, std::span<const LabeledImage> images,
                              const TrainOptions& options) {
    if (images.empty()) throw InputError("training set is empty");
    const std::vector<Embedding> x = embed_labeled(embedder, images);
    const std::vector<std::size_t> y = labels_for(options.task, images);
    SoftmaxHead head = train_head(options.task, x, y, options.training);
    head.checkpoint_id = embedder.checkpoint_id();
    return head;
}

BenchmarkRun run_benchmark(const Embedder& embedder, std::span<const LabeledImage> rows,
                           const BenchmarkOptions& options) {
    if (rows.empty()) throw InputError("benchmark set is empty");
    const std::vector<LabeledImage> subset = select_subset({rows.begin(), rows.end()}, options.limit, options.seed);
    const std::span<const LabeledImage> images = subset;
    if (!options.zero_shot && !options.gender_head && !options.age_head) {
        throw InputError("nothing to benchmark: zero-shot disabled and no heads given");
    }
    std::optional<SoftmaxHead> gender_head, age_head;
    if (options.gender_head) {
        gender_head = load_head(*options.gender_head);
        check_head(*gender_head, Task::Gender, embedder);
    }
    if (options.age_head) {
        age_head = load_head(*options.age_head);
        check_head(*age_head, Task::Age, embedder);
    }
    const double scale = options.logit_scale.value_or(embedder.logit_scale());
    if (!(scale > 0.0)) throw InputError("logit scale must be positive");

    BenchmarkRun run;
    ordered_json& cfg = run.config;
    cfg["checkpoint_id"] = embedder.checkpoint_id();
    cfg["validation_set"] = options.validation_set;
    cfg["n"] = images.size();
    cfg["limit"] = options.limit ? ordered_json(*options.limit) : ordered_json(nullptr);
    cfg["seed"] = options.seed;
    cfg["zero_shot"] = options.zero_shot;
    cfg["logit_scale"] = scale;
    cfg["prompts"] = {{"gender", zero_shot_prompts(Task::Gender)}, {"age", zero_shot_prompts(Task::Age)}};
    cfg["gender_head"] = gender_head ? ordered_json(head_digest(*gender_head)) : ordered_json(nullptr);
    cfg["age_head"] = age_head ? ordered_json(head_digest(*age_head)) : ordered_json(nullptr);
    run.fingerprint = config_fingerprint(cfg);

    const std::vector<Embedding> x = embed_labeled(embedder, images);
    const std::vector<std::size_t> y_gender = labels_for(Task::Gender, images);
    const std::vector<std::size_t> y_age = labels_for(Task::Age, images);

    auto score = [&](const std::string& model, Task task, const std::vector<ProbDist>& probs) {
        std::vector<std::size_t> pred;
        pred.reserve(probs.size());
        for (const ProbDist& p : probs) pred.push_back(argmax(p).index);
        BenchmarkReport r = evaluate(pred, task == Task::Gender ? y_gender : y_age, class_names(task));
        r.model_name = model;
        r.task = std::string(task_name(task));
        run.reports.push_back(std::move(r));
    };

    if (options.zero_shot) {
        for (Task task : {Task::Gender, Task::Age}) {
            const std::vector<Embedding> prompts = prompt_embeddings(embedder, task);
            std::vector<ProbDist> probs;
            probs.reserve(x.size());
            for (const Embedding& e : x) probs.push_back(zero_shot_classify(e, prompts, scale, names_of(task)));
            score("CLIP ZS", task, probs);
        }
    }
    std::vector<ProbDist> gender_probs, age_probs;
    if (gender_head) {
        for (const Embedding& e : x) gender_probs.push_back(softmax_probs(*gender_head, e));
        score("CLIP+LR", Task::Gender, gender_probs);
    }
    if (age_head) {
        for (const Embedding& e : x) age_probs.push_back(softmax_probs(*age_head, e));
        score("CLIP+LR", Task::Age, age_probs);
    }
    if (gender_head && age_head) {
        run.bias = bias_profile(options.validation_set, gender_probs, y_gender, age_probs, y_age);
    }
    return run;
}

ordered_json benchmark_json(const BenchmarkRun& run) {
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "benchmark";
    doc["config"] = run.config;
    doc["config_fingerprint"] = run.fingerprint;
    doc["reports"] = ordered_json::array();
    for (const BenchmarkReport& r : run.reports) doc["reports"].push_back(report_json(r));
    doc["reference_accuracy"] = {{"gender", kReferenceGenderAccuracy}, {"age", kReferenceAgeAccuracy}};
    return doc;
}

bool is_still_image(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    for (const char* e : {".jpg", ".jpeg", ".png", ".bmp", ".webp", ".tif", ".tiff", ".ppm", ".pgm"}) {
        if (ext == e) return true;
    }
    return false;
}

void write_file_atomic(const fs::path& path, const std::string& text) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + path.string());
        out << text;
        if (!out.flush()) throw InputError("cannot write " + path.string());
    }
    fs::rename(tmp, path);
}

FilmAnalyzer::FilmAnalyzer(const Embedder& embedder, const FaceDetector& detector, SoftmaxHead gender_head,
                           SoftmaxHead age_head, std::optional<BiasProfile> bias, AnalyzeOptions options)
    : embedder_(embedder),
      detector_(detector),
      gender_head_(std::move(gender_head)),
      age_head_(std::move(age_head)),
      bias_(std::move(bias)),
      options_(options) {
    if (!(options_.fps > 0.0)) throw InputError("--fps must be positive");
    check_head(gender_head_, Task::Gender, embedder_);
    check_head(age_head_, Task::Age, embedder_);

    const DetectorConfig& det = detector_.config();
    config_["checkpoint_id"] = embedder_.checkpoint_id();
    config_["detector"] = detector_.model_id();
    config_["threshold"] = det.threshold;
    config_["min_face_size"] = det.min_face_size;
    config_["margin"] = det.margin;
    config_["nms_iou"] = det.nms_iou;
    config_["fps"] = options_.fps;
    config_["gender_head"] = head_digest(gender_head_);
    config_["age_head"] = head_digest(age_head_);
    config_["age_confidence"] = std::string(age_confidence_mode_name(options_.age_confidence));
    config_["bias"] = bias_ ? ordered_json(sha256_hex(bias_file_json(*bias_).dump()).substr(0, 16)) : ordered_json(nullptr);
    fingerprint_ = config_fingerprint(config_);
}

std::vector<FacePrediction> FilmAnalyzer::classify(std::span<const RgbImage> crops) const {
    std::vector<FacePrediction> out;
    out.reserve(crops.size());
    for (const Embedding& e : embedder_.embed_images(crops)) {
        out.push_back({softmax_probs(gender_head_, e), softmax_probs(age_head_, e)});
    }
    return out;
}

std::vector<FacePrediction> FilmAnalyzer::predict_faces(const RgbImage& frame, std::size_t frame_index) const {
    std::vector<RgbImage> crops;
    for (FaceCrop& c : detector_.detect_faces(frame, frame_index)) crops.push_back(std::move(c.pixels));
    return classify(crops);
}

FilmAnalytics FilmAnalyzer::analyze(const fs::path& media, const std::string& film_id,
                                    const std::function<void(const AnalyzeProgress&)>& progress) const {
    if (film_id.empty()) throw InputError("film id must not be empty");
    std::vector<FacePrediction> predictions;
    std::vector<RgbImage> pending;
    AnalyzeProgress state;

    auto flush = [&] {
        for (FacePrediction& p : classify(pending)) predictions.push_back(std::move(p));
        pending.clear();
    };
    auto consume = [&](const RgbImage& frame, std::size_t index, double timestamp) {
        for (FaceCrop& c : detector_.detect_faces(frame, index)) pending.push_back(std::move(c.pixels));
        ++state.frames;
        state.faces = predictions.size() + pending.size();
        state.timestamp = timestamp;
        if (pending.size() >= options_.batch) flush();
        if (progress) progress(state);
    };

    if (is_still_image(media)) {
        consume(load_image(media), 0, 0.0);
    } else {
        FrameSampler sampler(media, options_.fps);
        while (auto frame = sampler.next()) consume(frame->pixels, frame->frame_index, frame->timestamp);
    }
    flush();

    FilmAnalytics a = film_analytics(film_id, predictions, options_.age_confidence, options_.workers);
    a.bias = bias_;
    a.config_fingerprint = fingerprint_;
    return a;
}

}  // namespace screenrep
