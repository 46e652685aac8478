#include "screenrep/head_io.hpp"

#include "screenrep/detail/little_endian.hpp"
#include "screenrep/errors.hpp"
#include "screenrep/hash.hpp"

#include <json.hpp>

#include <fstream>
#include <iterator>

namespace screenrep {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "screenrep-softmax-head";
constexpr int kVersion = 1;

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

fs::path head_metadata_path(const fs::path& blob_path) {
    fs::path meta = blob_path;
    meta.replace_extension(".json");
    if (meta == blob_path) meta += ".meta.json";
    return meta;
}

void save_head(const SoftmaxHead& head, const fs::path& blob_path) {
    std::string blob;
    blob.reserve((head.weights().size() + head.biases().size()) * 4);
    for (double w : head.weights()) detail::append_f32(blob, static_cast<float>(w));
    for (double b : head.biases()) detail::append_f32(blob, static_cast<float>(b));

    ordered_json meta;
    meta["format"] = kFormat;
    meta["version"] = kVersion;
    meta["task"] = std::string(task_name(head.task()));
    meta["class_names"] = head.class_names();
    meta["num_classes"] = head.num_classes();
    meta["dim"] = head.dim();
    meta["checkpoint_id"] = head.checkpoint_id;
    meta["layout"] = "weights row-major K x D, then K biases; float32 little-endian";
    meta["blob"] = blob_path.filename().string();
    meta["blob_sha256"] = sha256_hex(blob);
    if (head.training) {
        const TrainingSummary& t = *head.training;
        meta["lambda"] = t.lambda;
        ordered_json training;
        training["lambda"] = t.lambda;
        training["iterations"] = t.iterations;
        training["final_loss"] = t.final_loss;
        training["gradient_norm"] = t.gradient_norm;
        training["n_train"] = t.n_train;
        training["seed"] = t.seed;
        training["lambda_trials"] = ordered_json::array();
        for (const LambdaTrial& trial : t.trials) {
            training["lambda_trials"].push_back(
                {{"lambda", trial.lambda}, {"holdout_loss", trial.holdout_loss}, {"holdout_accuracy", trial.holdout_accuracy}});
        }
        meta["training"] = std::move(training);
    } else {
        meta["lambda"] = nullptr;
    }

    if (!blob_path.parent_path().empty()) fs::create_directories(blob_path.parent_path());
    {
        std::ofstream out(blob_path, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + blob_path.string());
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    }
    std::ofstream out(head_metadata_path(blob_path), std::ios::trunc);
    if (!out) throw InputError("cannot write " + head_metadata_path(blob_path).string());
    out << meta.dump(2) << '\n';
}

SoftmaxHead load_head(const fs::path& blob_path) {
    const fs::path meta_path = head_metadata_path(blob_path);
    ordered_json meta;
    try {
        meta = ordered_json::parse(read_all(meta_path));
    } catch (const ordered_json::parse_error& e) {
        throw FormatError(meta_path.string() + ": " + e.what());
    }
    try {
        if (meta.at("format") != kFormat) throw FormatError(meta_path.string() + ": not a softmax head file");
        if (meta.at("version").get<int>() != kVersion) throw FormatError(meta_path.string() + ": unsupported version");
        const Task task = parse_task(meta.at("task").get<std::string>());
        const auto names = class_names(task);
        const auto stored_names = meta.at("class_names").get<std::vector<std::string>>();
        if (!std::equal(names.begin(), names.end(), stored_names.begin(), stored_names.end())) {
            throw FormatError(meta_path.string() + ": class_names do not match the " + std::string(task_name(task)) + " taxonomy");
        }
        const auto dim = meta.at("dim").get<std::size_t>();
        const std::size_t k = names.size();

        const std::string blob = read_all(blob_path);
        if (blob.size() != (k * dim + k) * 4) {
            throw FormatError(blob_path.string() + ": expected " + std::to_string((k * dim + k) * 4) + " bytes, found " +
                              std::to_string(blob.size()));
        }
        if (meta.contains("blob_sha256") && meta["blob_sha256"].get<std::string>() != sha256_hex(blob)) {
            throw FormatError(blob_path.string() + ": digest does not match its metadata");
        }
        std::vector<double> weights(k * dim), biases(k);
        for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = detail::read_f32(blob.data() + 4 * i);
        for (std::size_t i = 0; i < k; ++i) biases[i] = detail::read_f32(blob.data() + 4 * (k * dim + i));

        SoftmaxHead head = [&] {
            try {
                return SoftmaxHead(task, dim, std::move(weights), std::move(biases));
            } catch (const InputError& e) {
                throw FormatError(blob_path.string() + ": " + e.what());
            }
        }();
        head.checkpoint_id = meta.value("checkpoint_id", "");
        if (meta.contains("training") && meta["training"].is_object()) {
            const auto& t = meta["training"];
            TrainingSummary summary;
            summary.lambda = t.value("lambda", 0.0);
            summary.iterations = t.value("iterations", 0);
            summary.final_loss = t.value("final_loss", 0.0);
            summary.gradient_norm = t.value("gradient_norm", 0.0);
            summary.n_train = t.value("n_train", std::size_t{0});
            summary.seed = t.value("seed", std::uint64_t{0});
            head.training = summary;
        }
        return head;
    } catch (const ordered_json::exception& e) {
        throw FormatError(meta_path.string() + ": " + e.what());
    }
}

}  // namespace screenrep
