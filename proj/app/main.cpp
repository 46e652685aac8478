#include "screenrep/analytics_json.hpp"
#include "screenrep/errors.hpp"
#include "screenrep/hash.hpp"
#include "screenrep/head_io.hpp"
#include "screenrep/pipeline.hpp"
#include "screenrep/server.hpp"
#include "screenrep/surveystats.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>

namespace fs = std::filesystem;
using namespace screenrep;
using nlohmann::ordered_json;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kBadInput = 2, kBadModel = 3, kNoFaces = 4 };

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

struct ModelFlags {
    std::string clip_dir = env_or("SCREENREP_CLIP_DIR", "models/clip-vit-base-patch32");
    std::string cache_dir = env_or("SCREENREP_CACHE_DIR", "");
    unsigned workers = 1;

    void add(CLI::App* cmd) {
        cmd->add_option("--clip", clip_dir, "CLIP checkpoint directory (env SCREENREP_CLIP_DIR)")->capture_default_str();
        cmd->add_option("--cache-dir", cache_dir, "embedding cache directory (env SCREENREP_CACHE_DIR); empty disables");
        cmd->add_option("--workers", workers, "encoder threads")->capture_default_str()->check(CLI::Range(1u, 256u));
    }

    std::unique_ptr<Embedder> embedder() const {
        EmbedderOptions opts;
        if (!cache_dir.empty()) opts.cache_dir = fs::path(cache_dir);
        opts.workers = workers;
        auto e = std::make_unique<Embedder>(clip_dir, opts);
        spdlog::info("encoder {} (D={}, logit scale {:.2f})", e->checkpoint_id(), e->dim(), e->logit_scale());
        return e;
    }
};

struct DatasetFlags {
    std::string manifest;
    std::string image_root;
    std::optional<std::size_t> limit;
    std::uint64_t seed = 0;

    void add(CLI::App* cmd, const char* manifest_help) {
        cmd->add_option("manifest", manifest, manifest_help)->required()->check(CLI::ExistingFile);
        cmd->add_option("--image-root", image_root, "directory the manifest's file column is relative to");
        cmd->add_option("--limit", limit, "seeded random subset of this many rows");
        cmd->add_option("--seed", seed, "seed for subset sampling and training splits")->capture_default_str();
    }

    std::vector<LabeledImage> load() const {
        std::optional<fs::path> root;
        if (!image_root.empty()) root = fs::path(image_root);
        auto rows = select_subset(load_manifest(manifest, root), limit, seed);
        spdlog::info("{} images from {}", rows.size(), manifest);
        return rows;
    }
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void log_cache(const Embedder& e) {
    const CacheStats s = e.cache_stats();
    if (s.hits + s.misses) spdlog::info("embedding cache: {} hits, {} misses", s.hits, s.misses);
}

// embed-dataset ---------------------------------------------------------------

struct EmbedCmd {
    ModelFlags model;
    DatasetFlags data;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("embed-dataset", "Embed a labeled image set into the cache");
        model.add(cmd);
        data.add(cmd, "CSV manifest with file, age, gender columns");
        cmd->callback([this] { run(); });
    }

    void run() {
        if (model.cache_dir.empty()) throw InputError("embed-dataset needs --cache-dir or SCREENREP_CACHE_DIR");
        const auto t0 = std::chrono::steady_clock::now();
        const auto encoder = model.embedder();
        const Embedder& embedder = *encoder;
        const auto rows = data.load();
        embed_labeled(embedder, rows);
        log_cache(embedder);
        fmt::print("embedded {} images in {:.1f} s into {}\n", rows.size(), seconds_since(t0), model.cache_dir);
    }
};

// train -----------------------------------------------------------------------

struct TrainCmd {
    ModelFlags model;
    DatasetFlags data;
    std::string task = "gender";
    std::string out;
    std::vector<double> lambdas{1e-4, 1e-3, 1e-2};
    double holdout = 0.2;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("train", "Train a softmax head on encoder embeddings");
        model.add(cmd);
        data.add(cmd, "training manifest (file, age, gender)");
        cmd->add_option("--task", task, "gender or age")->capture_default_str()->check(CLI::IsMember({"gender", "age"}));
        cmd->add_option("--out", out, "head blob path; metadata goes next to it as .json")->required();
        cmd->add_option("--lambda", lambdas, "L2 strengths tried on the hold-out split")->capture_default_str();
        cmd->add_option("--holdout", holdout, "hold-out fraction for choosing lambda")->capture_default_str();
        cmd->callback([this] { run(); });
    }

    void run() {
        const auto t0 = std::chrono::steady_clock::now();
        const auto encoder = model.embedder();
        const Embedder& embedder = *encoder;
        const auto rows = data.load();
        TrainOptions opts;
        opts.task = parse_task(task);
        opts.training.lambda_grid = lambdas;
        opts.training.holdout_fraction = holdout;
        opts.training.seed = data.seed;
        const SoftmaxHead head = train_from_images(embedder, rows, opts);
        save_head(head, out);
        log_cache(embedder);
        const TrainingSummary& t = *head.training;
        fmt::print("{} head: lambda {:g}, {} iterations, loss {:.6f}, |grad| {:.2e}, n={} ({:.1f} s)\n", task, t.lambda,
                   t.iterations, t.final_loss, t.gradient_norm, t.n_train, seconds_since(t0));
        fmt::print("wrote {} and {}\n", out, head_metadata_path(out).string());
    }
};

// benchmark -------------------------------------------------------------------

struct BenchmarkCmd {
    ModelFlags model;
    DatasetFlags data;
    std::string out_dir = "bench";
    std::string gender_head, age_head;
    bool no_zero_shot = false;
    std::optional<double> logit_scale;
    std::string validation_set = "fairface-val";

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("benchmark", "Accuracy and macro F1 on a labeled validation set");
        model.add(cmd);
        data.add(cmd, "validation manifest (file, age, gender)");
        cmd->add_option("--out-dir", out_dir, "writes benchmark.json and, with both heads, bias.json")->capture_default_str();
        cmd->add_option("--gender-head", gender_head, "trained gender head")->check(CLI::ExistingFile);
        cmd->add_option("--age-head", age_head, "trained age head")->check(CLI::ExistingFile);
        cmd->add_flag("--no-zero-shot", no_zero_shot, "skip the prompt baseline");
        cmd->add_option("--logit-scale", logit_scale, "zero-shot temperature (default: the checkpoint's)");
        cmd->add_option("--validation-set", validation_set, "name recorded in reports")->capture_default_str();
        cmd->callback([this] { run(); });
    }

    void run() {
        const auto t0 = std::chrono::steady_clock::now();
        const auto encoder = model.embedder();
        const Embedder& embedder = *encoder;
        const auto rows = data.load();
        BenchmarkOptions opts;
        opts.zero_shot = !no_zero_shot;
        opts.logit_scale = logit_scale;
        if (!gender_head.empty()) opts.gender_head = fs::path(gender_head);
        if (!age_head.empty()) opts.age_head = fs::path(age_head);
        opts.validation_set = validation_set;
        opts.limit = data.limit;
        opts.seed = data.seed;
        const BenchmarkRun run = run_benchmark(embedder, rows, opts);

        const fs::path dir(out_dir);
        write_file_atomic(dir / "benchmark.json", benchmark_json(run).dump(2) + "\n");
        if (run.bias) {
            ordered_json bias = bias_file_json(*run.bias);
            bias["config_fingerprint"] = run.fingerprint;
            write_file_atomic(dir / "bias.json", bias.dump(2) + "\n");
        }
        log_cache(embedder);
        fmt::print("{}", report_table(run.reports));
        fmt::print("n={} in {:.1f} s; reports in {}\n", rows.size(), seconds_since(t0), dir.string());
    }
};

// analyze ---------------------------------------------------------------------

struct AnalyzeCmd {
    ModelFlags model;
    std::vector<std::string> media;
    std::string film_id;
    std::string out_dir = "analytics";
    std::string detector = env_or("SCREENREP_DETECTOR", "models/detector");
    std::string gender_head = env_or("SCREENREP_GENDER_HEAD", "models/heads/gender.bin");
    std::string age_head = env_or("SCREENREP_AGE_HEAD", "models/heads/age.bin");
    std::string bias;
    std::string age_confidence = "binarized";
    AnalyzeOptions opts;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("analyze", "Film-level gender and age analytics for videos or images");
        model.add(cmd);
        cmd->add_option("media", media, "video or image files")->required()->check(CLI::ExistingFile);
        cmd->add_option("--film-id", film_id, "label for a single input (default: file stem)");
        cmd->add_option("--out-dir", out_dir, "one <film id>.json per input")->capture_default_str();
        cmd->add_option("--detector", detector, "detector ONNX file or directory with model card (env SCREENREP_DETECTOR)")
            ->capture_default_str();
        cmd->add_option("--gender-head", gender_head, "gender head (env SCREENREP_GENDER_HEAD)")->capture_default_str();
        cmd->add_option("--age-head", age_head, "age head (env SCREENREP_AGE_HEAD)")->capture_default_str();
        cmd->add_option("--bias", bias, "bias profile written by benchmark")->check(CLI::ExistingFile);
        cmd->add_option("--fps", opts.fps, "sampled frames per second")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--threshold", opts.detector.threshold, "detection confidence threshold")
            ->capture_default_str()
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--min-face-size", opts.detector.min_face_size, "minimum detector box side in pixels")
            ->capture_default_str();
        cmd->add_option("--margin", opts.detector.margin, "crop margin as a fraction of the box")->capture_default_str();
        cmd->add_option("--age-confidence", age_confidence, "binarized or argmax")
            ->capture_default_str()
            ->check(CLI::IsMember({"binarized", "argmax"}));
        cmd->callback([this] { run(); });
    }

    void run() {
        if (!film_id.empty() && media.size() != 1) throw InputError("--film-id needs exactly one input");
        opts.workers = model.workers;
        opts.age_confidence = parse_age_confidence_mode(age_confidence);
        for (const std::string& h : {gender_head, age_head}) {
            if (!fs::exists(h)) throw ModelError("head not found: " + h + " (train one with `screenrep train`)");
        }
        const auto encoder = model.embedder();
        const Embedder& embedder = *encoder;
        const FaceDetector det(detector, opts.detector);
        std::optional<BiasProfile> profile;
        if (!bias.empty()) profile = parse_bias_file(nlohmann::json::parse(read_text(bias)));
        const FilmAnalyzer analyzer(embedder, det, load_head(gender_head), load_head(age_head), profile, opts);
        spdlog::info("detector {}; config {}", det.model_id(), analyzer.fingerprint());

        fmt::print("{:<24}  {:>8}  {:>9}  {:>10}  {:>8}  {:>8}\n", "Film", "n_faces", "Female %", "Over 50 %", "Gender c",
                   "Age c");
        for (const std::string& m : media) {
            const std::string id = film_id.empty() ? fs::path(m).stem().string() : film_id;
            const auto t0 = std::chrono::steady_clock::now();
            const FilmAnalytics a = analyzer.analyze(m, id, [](const AnalyzeProgress& p) {
                if (p.frames % 100 == 0) spdlog::info("{} frames, {} faces, t={:.0f}s", p.frames, p.faces, p.timestamp);
            });
            const fs::path out = fs::path(out_dir) / (id + ".json");
            write_file_atomic(out, serialize_analytics(a));
            const RoundedShares& r = a.rounded;
            fmt::print("{:<24}  {:>8}  {:>9.2f}  {:>10.2f}  {:>8.2f}  {:>8.2f}\n", id, a.n_faces, r.female / 100.0,
                       r.over50 / 100.0, r.gender_confidence / 100.0, r.age_confidence / 100.0);
            spdlog::info("{} -> {} ({:.1f} s)", m, out.string(), seconds_since(t0));
        }
        log_cache(embedder);
    }
};

// survey ----------------------------------------------------------------------

struct SurveyCmd {
    std::string responses;
    std::string key = "data/survey/questions.json";
    std::string out;
    std::string interval = "hdi";
    SurveyConfig config;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("survey", "Bayesian credible intervals for the user-study questions");
        cmd->add_option("responses", responses, "CSV: participant_id, question_code, response")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--key", key, "question definitions and answer key")->capture_default_str()->check(CLI::ExistingFile);
        cmd->add_option("--out", out, "JSON output (default: stdout)");
        cmd->add_option("--interval", interval, "hdi or equal-tailed")
            ->capture_default_str()
            ->check(CLI::IsMember({"hdi", "equal-tailed"}));
        cmd->add_option("--mass", config.mass, "credible mass")->capture_default_str()->check(CLI::Range(0.5, 0.999));
        cmd->add_option("--beta-a", config.beta_a, "Beta prior a")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--beta-b", config.beta_b, "Beta prior b")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--likert-mean-loc", config.likert.mean_loc, "Normal prior location of the Likert mean")
            ->capture_default_str();
        cmd->add_option("--likert-mean-scale", config.likert.mean_scale, "Normal prior scale of the Likert mean")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        cmd->add_option("--likert-sd-scale", config.likert.sd_scale, "half-normal prior scale of the Likert sd")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        cmd->callback([this] { run(); });
    }

    void run() {
        config.kind = parse_interval_kind(interval);
        const QuestionKey qkey = load_question_key(key);
        const SurveyAnalysis analysis = analyze_survey(qkey, CsvTable::read(responses), config);
        ordered_json doc = survey_json(analysis, config);
        ordered_json cfg = {{"key", sha256_file(key).substr(0, 16)}, {"interval", doc["interval"]}, {"priors", doc["priors"]}};
        doc["config_fingerprint"] = config_fingerprint(cfg);
        const std::string text = doc.dump(2) + "\n";
        if (out.empty()) {
            std::cout << text;
        } else {
            write_file_atomic(out, text);
            for (const QuestionResult& r : analysis.questions) {
                if (r.interval) {
                    fmt::print("{:<8} n_eff={:<4} mean {:.3f}  [{:.3f}, {:.3f}]\n", r.code, r.n_eff, r.interval->mean,
                               r.interval->low, r.interval->high);
                } else {
                    const char* why = !r.has_key ? "no answer key" : r.n_responses == 0 ? "no responses" : "all responses excluded";
                    fmt::print("{:<8} n_eff={:<4} {}\n", r.code, r.n_eff, why);
                }
            }
        }
        if (analysis.ignored_rows) spdlog::warn("{} rows reference questions not in the key", analysis.ignored_rows);
    }
};

// serve -----------------------------------------------------------------------

AnalyticsServer* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

struct ServeCmd {
    std::string dir = "analytics";
    ServeOptions opts;
    std::string static_dir = env_or("SCREENREP_VIEWER_DIR", "viewer/dist");

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("serve", "Serve analytics documents and the viewer");
        cmd->add_option("dir", dir, "directory of analytics JSON files")->capture_default_str();
        cmd->add_option("--host", opts.host, "bind address")->capture_default_str();
        cmd->add_option("--port", opts.port, "TCP port")->capture_default_str()->check(CLI::Range(0, 65535));
        cmd->add_option("--static", static_dir, "viewer assets (env SCREENREP_VIEWER_DIR)")->capture_default_str();
        cmd->callback([this] { run(); });
    }

    void run() {
        FilmStore store = FilmStore::scan(dir);
        for (const InvalidFile& f : store.invalid()) spdlog::warn("skipping {}: {}", f.file, f.error);
        if (store.films().empty()) throw InputError("no valid analytics documents in " + dir);
        if (fs::is_directory(static_dir)) {
            opts.static_dir = fs::path(static_dir);
        } else {
            spdlog::warn("viewer assets not found at {}; serving the API only", static_dir);
        }
        const std::size_t n = store.films().size();
        AnalyticsServer server(std::move(store), opts);
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        spdlog::info("serving {} films on http://{}:{}", n, opts.host, server.port());
        server.run();
        g_server = nullptr;
    }
};

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_st("screenrep"));
    spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

    CLI::App app{"screenrep: on-screen gender and age representation analytics"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");
    app.parse_complete_callback([&] { spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info); });

    EmbedCmd embed;
    TrainCmd train;
    BenchmarkCmd bench;
    AnalyzeCmd analyze;
    SurveyCmd survey;
    ServeCmd serve;
    embed.add(app);
    train.add(app);
    bench.add(app);
    analyze.add(app);
    survey.add(app);
    serve.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kBadInput;
    } catch (const NoFacesError& e) {
        spdlog::error("{}", e.what());
        return kNoFaces;
    } catch (const ModelError& e) {
        spdlog::error("{}", e.what());
        return kBadModel;
    } catch (const InputError& e) {
        spdlog::error("{}", e.what());
        return kBadInput;
    } catch (const FormatError& e) {
        spdlog::error("{}", e.what());
        return kBadInput;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kFailure;
    }
    return kOk;
}
