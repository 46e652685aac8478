#include "screenrep/embedder.hpp"

#include "screenrep/detail/little_endian.hpp"
#include "screenrep/errors.hpp"
#include "screenrep/hash.hpp"

#include <fmt/format.h>

#include <atomic>
#include <fstream>
#include <iterator>
#include <thread>

namespace screenrep {

namespace fs = std::filesystem;

EmbeddingCache::EmbeddingCache(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw InputError("cannot create cache directory " + dir_.string());
}

fs::path EmbeddingCache::record_path(const std::string& key) const { return dir_ / key.substr(0, 2) / (key + ".f32"); }

namespace {

constexpr char kRecordMagic[4] = {'S', 'R', 'E', 'B'};
constexpr std::uint32_t kRecordVersion = 1;

}  // namespace

std::optional<Embedding> EmbeddingCache::get(const std::string& key, const std::string& checkpoint_id,
                                             std::size_t dim) const {
    std::ifstream in(record_path(key), std::ios::binary);
    if (!in) return std::nullopt;
    const std::string blob{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const std::size_t header = 12 + checkpoint_id.size() + 4;
    if (blob.size() != header + dim * 4 || blob.compare(0, 4, kRecordMagic, 4) != 0) return std::nullopt;
    if (detail::read_u32(blob.data() + 4) != kRecordVersion) return std::nullopt;
    if (detail::read_u32(blob.data() + 8) != checkpoint_id.size()) return std::nullopt;
    if (blob.compare(12, checkpoint_id.size(), checkpoint_id) != 0) return std::nullopt;
    if (detail::read_u32(blob.data() + 12 + checkpoint_id.size()) != dim) return std::nullopt;
    Embedding e(detail::decode_f32(blob.data() + header, dim));
    if (!e.is_finite()) return std::nullopt;
    return e;
}

void EmbeddingCache::put(const std::string& key, const std::string& checkpoint_id, const Embedding& value) const {
    const fs::path path = record_path(key);
    fs::create_directories(path.parent_path());
    std::string blob(kRecordMagic, 4);
    detail::append_u32(blob, kRecordVersion);
    detail::append_u32(blob, static_cast<std::uint32_t>(checkpoint_id.size()));
    blob += checkpoint_id;
    detail::append_u32(blob, static_cast<std::uint32_t>(value.dim()));
    blob += detail::encode_f32(value.values());
    const fs::path tmp = path.string() + fmt::format(".tmp{}", std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write cache record " + tmp.string());
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    }
    fs::rename(tmp, path);
}

Embedder::Embedder(const fs::path& dir, EmbedderOptions options)
    : model_(dir),
      tokenizer_(dir / "merges.txt"),
      preprocess_(PreprocessConfig::load(dir / "preprocessor_config.json")),
      workers_(std::max(1u, options.workers)) {
    const auto& p = preprocess_;
    preprocess_fingerprint_ =
        fmt::format("edge={} crop={}x{} rescale={:.9g} mean={:.9g},{:.9g},{:.9g} std={:.9g},{:.9g},{:.9g} resize={} crop={}",
                    p.shortest_edge, p.crop_width, p.crop_height, p.rescale_factor, p.mean[0], p.mean[1], p.mean[2],
                    p.std[0], p.std[1], p.std[2], p.do_resize, p.do_center_crop);
    if (p.crop_width != model_.config().image_size || p.crop_height != model_.config().image_size) {
        throw ModelError(fmt::format("{}: crop size {}x{} does not match the model input {}", dir.string(), p.crop_width,
                                     p.crop_height, model_.config().image_size));
    }
    if (options.cache_dir) cache_.emplace(*options.cache_dir);
}

std::string Embedder::cache_key(const RgbImage& image) const {
    std::string content = fmt::format("{}\n{}\n{}x{}\n", checkpoint_id(), preprocess_fingerprint_, image.width, image.height);
    content.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
    return sha256_hex(content);
}

Embedding Embedder::embed_image(const RgbImage& image) const {
    std::string key;
    if (cache_) {
        key = cache_key(image);
        if (auto hit = cache_->get(key, checkpoint_id(), dim())) {
            ++hits_;
            return *std::move(hit);
        }
        ++misses_;
    }
    Embedding e(model_.encode_image(preprocess(image, preprocess_)));
    if (!e.is_finite()) throw ModelError("image encoder produced a non-finite embedding");
    if (cache_) cache_->put(key, checkpoint_id(), e);
    return e;
}

std::vector<Embedding> Embedder::embed_images(std::span<const RgbImage> images) const {
    std::vector<Embedding> out(images.size());
    const unsigned workers = std::min<unsigned>(workers_, static_cast<unsigned>(std::max<std::size_t>(1, images.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < images.size(); ++i) out[i] = embed_image(images[i]);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i; (i = next++) < images.size();) out[i] = embed_image(images[i]);
                } catch (...) {
                    errors[w] = std::current_exception();
                    next = images.size();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

Embedding Embedder::embed_text(std::string_view text) const {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) throw InputError("empty prompt");
    const auto ids = tokenizer_.encode(text);
    return Embedding(model_.encode_text(ids));
}

}  // namespace screenrep
