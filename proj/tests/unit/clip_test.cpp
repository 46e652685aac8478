#include "screenrep/embedder.hpp"
#include "screenrep/errors.hpp"
#include "screenrep/preprocess.hpp"
#include "screenrep/tokenizer.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>

using namespace screenrep;
namespace fs = std::filesystem;

namespace {

const nlohmann::json& golden() {
    static const nlohmann::json doc = [] {
        std::ifstream in(fixture::clip_tiny_dir() / "golden.json");
        return nlohmann::json::parse(in);
    }();
    return doc;
}

std::vector<float> read_f32(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::vector<float> v(fs::file_size(path) / 4);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
    return v;
}

Embedding from_json(const nlohmann::json& values) { return Embedding(values.get<std::vector<float>>()); }

const Embedder& tiny() {
    static const Embedder e(fixture::clip_tiny_dir());
    return e;
}

}  // namespace

TEST(Tokenizer, MatchesReferenceIds) {
    for (const auto& p : golden()["prompts"]) {
        const auto ids = tiny().tokenizer().encode(p["text"].get<std::string>());
        EXPECT_EQ(ids, p["ids"].get<std::vector<std::int32_t>>()) << p["text"];
    }
}

TEST(Tokenizer, MarkersAndBudget) {
    const ClipTokenizer& tok = tiny().tokenizer();
    const auto ids = tok.encode("a photo");
    EXPECT_EQ(ids.front(), tok.sot_id());
    EXPECT_EQ(ids.back(), tok.eot_id());
    EXPECT_EQ(tok.encode(""), (std::vector<std::int32_t>{tok.sot_id(), tok.eot_id()}));
    std::string longer;
    for (int i = 0; i < 80; ++i) longer += "face ";
    try {
        tok.encode(longer);
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("77"), std::string::npos) << e.what();
    }
}

TEST(Tokenizer, PreTokenizerCollapsesAndLowercases) {
    const auto words = ClipTokenizer::pre_tokenize("  Hello,\t  WORLD's  ");
    EXPECT_EQ(words, (std::vector<std::string>{"hello", ",", "world", "'s"}));
}

TEST(Tokenizer, MissingMergesIsModelError) {
    EXPECT_THROW(ClipTokenizer(fixture::scratch_dir("no_merges") / "merges.txt"), ModelError);
}

TEST(Preprocess, MatchesReferenceTensors) {
    for (const auto& [name, entry] : golden()["images"].items()) {
        const RgbImage img = load_image(fixture::clip_tiny_dir() / name);
        const auto got = preprocess(img, tiny().preprocess_config());
        const auto want = read_f32(fixture::clip_tiny_dir() / (name + ".pixels.f32"));
        ASSERT_EQ(got.size(), want.size()) << name;
        double worst = 0;
        for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, double(std::abs(got[i] - want[i])));
        EXPECT_LE(worst, 1e-5) << name;
    }
}

TEST(Preprocess, MeanColorStandardizesToNearZero) {
    const RgbImage img = fixture::solid(300, 200, {123, 117, 104});
    const PreprocessConfig cfg;
    const auto t = preprocess(img, cfg);
    ASSERT_EQ(t.size(), 3u * 224 * 224);
    for (int c = 0; c < 3; ++c) {
        const float expect = (std::array<int, 3>{123, 117, 104}[c] / 255.0f - cfg.mean[c]) / cfg.std[c];
        EXPECT_NEAR(t[c * 224 * 224 + 1000], expect, 1e-6);
        EXPECT_LT(std::abs(expect), 0.01f);
    }
}

TEST(Preprocess, GeometryHelpers) {
    EXPECT_EQ(shortest_edge_size(640, 480, 224), (std::array<int, 2>{298, 224}));
    EXPECT_EQ(shortest_edge_size(100, 300, 224), (std::array<int, 2>{224, 672}));
    RgbImage small = fixture::solid(10, 10, {9, 9, 9});
    const RgbImage padded = center_crop(small, 14, 12);
    EXPECT_EQ(padded.width, 14);
    EXPECT_EQ(padded.row(0)[0], 0);
    EXPECT_EQ(padded.row(1)[2 * 3], 9);
    const RgbImage same = resize_bicubic(small, 10, 10);
    EXPECT_EQ(same, small);
}

TEST(Embedder, MatchesReferenceEmbeddings) {
    for (const auto& [name, entry] : golden()["images"].items()) {
        const Embedding e = tiny().embed_image(load_image(fixture::clip_tiny_dir() / name));
        const Embedding want = from_json(entry["embedding"]);
        ASSERT_EQ(e.dim(), want.dim());
        EXPECT_GE(cosine_similarity(e, want), 0.999) << name;
    }
    for (const auto& p : golden()["prompts"]) {
        const Embedding e = tiny().embed_text(p["text"].get<std::string>());
        EXPECT_GE(cosine_similarity(e, from_json(p["embedding"])), 0.999) << p["text"];
    }
}

TEST(Embedder, DeterministicAndDiscriminating) {
    const RgbImage a = load_image(fixture::clip_tiny_dir() / "face_a.png");
    const RgbImage c = load_image(fixture::clip_tiny_dir() / "face_c.png");
    EXPECT_EQ(tiny().embed_image(a), tiny().embed_image(a));
    // the tiny random checkpoint maps all images close together, but not onto each other
    EXPECT_NE(tiny().embed_image(a), tiny().embed_image(c));
    EXPECT_LT(cosine_similarity(tiny().embed_image(a), tiny().embed_image(c)), 0.99999);
    EXPECT_EQ(tiny().dim(), 48u);
    EXPECT_TRUE(tiny().checkpoint_id().starts_with("clip_tiny@"));
}

TEST(Embedder, BatchEqualsSingle) {
    const std::vector<RgbImage> imgs{load_image(fixture::clip_tiny_dir() / "face_a.png"),
                                     load_image(fixture::clip_tiny_dir() / "scene_b.png"),
                                     load_image(fixture::clip_tiny_dir() / "face_c.png")};
    EmbedderOptions opt;
    opt.workers = 3;
    const Embedder parallel(fixture::clip_tiny_dir(), opt);
    const auto batch = parallel.embed_images(imgs);
    for (std::size_t i = 0; i < imgs.size(); ++i) EXPECT_EQ(batch[i], tiny().embed_image(imgs[i]));
}

TEST(Embedder, PromptErrors) {
    EXPECT_THROW(tiny().embed_text(""), InputError);
    EXPECT_THROW(tiny().embed_text("   "), InputError);
    std::string longer;
    for (int i = 0; i < 80; ++i) longer += "person ";
    EXPECT_THROW(tiny().embed_text(longer), InputError);
}

TEST(Embedder, CacheRoundTripAndHits) {
    const fs::path dir = fixture::scratch_dir("embed_cache");
    EmbedderOptions opt;
    opt.cache_dir = dir;
    const RgbImage img = load_image(fixture::clip_tiny_dir() / "face_a.png");
    Embedding first;
    {
        const Embedder e(fixture::clip_tiny_dir(), opt);
        first = e.embed_image(img);
        EXPECT_EQ(e.cache_stats().misses, 1u);
        EXPECT_EQ(e.cache_stats().hits, 0u);
    }
    const Embedder e(fixture::clip_tiny_dir(), opt);
    EXPECT_EQ(e.embed_image(img), first);
    EXPECT_EQ(e.cache_stats().hits, 1u);
    EXPECT_EQ(e.cache_key(img), tiny().cache_key(img));

    // a record written under another checkpoint is a miss
    const EmbeddingCache cache(dir);
    EXPECT_FALSE(cache.get(e.cache_key(img), "other@0000", first.dim()));
    EXPECT_FALSE(cache.get(e.cache_key(img), e.checkpoint_id(), first.dim() + 1));
    ASSERT_TRUE(cache.get(e.cache_key(img), e.checkpoint_id(), first.dim()));
}

TEST(Embedder, MissingCheckpointIsModelError) {
    EXPECT_THROW(Embedder(fixture::scratch_dir("empty_ckpt")), ModelError);
}
