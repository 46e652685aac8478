// Checks against the released checkpoints. Skipped unless the environment
// points at them, since they are not part of the repository.

#include "screenrep/classifier.hpp"
#include "screenrep/embedder.hpp"
#include "screenrep/facedet.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace screenrep;

namespace {

std::optional<std::filesystem::path> env_path(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::filesystem::path(v);
}

}  // namespace

TEST(RealClip, ViTB32Shapes) {
    const auto dir = env_path("SCREENREP_CLIP_DIR");
    if (!dir) GTEST_SKIP() << "SCREENREP_CLIP_DIR not set";
    const Embedder e(*dir);
    EXPECT_EQ(e.dim(), 512u);
    EXPECT_NEAR(e.logit_scale(), 100.0, 1.0);
    const Embedding man = e.embed_text("the face of a man");
    const Embedding woman = e.embed_text("the face of a woman");
    EXPECT_GT(cosine_similarity(man, woman), 0.8);
    EXPECT_LT(cosine_similarity(man, woman), 0.9999);
}

TEST(RealDetector, LoadsAndRunsOnGray) {
    const auto dir = env_path("SCREENREP_DETECTOR");
    if (!dir) GTEST_SKIP() << "SCREENREP_DETECTOR not set";
    const FaceDetector d(*dir);
    EXPECT_TRUE(d.detect(fixture::solid(640, 480, {128, 128, 128})).empty());
}
