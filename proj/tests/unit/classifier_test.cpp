#include "screenrep/classifier.hpp"
#include "screenrep/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace screenrep;

namespace {

Embedding random_embedding(std::size_t d, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<float> v(d);
    for (auto& x : v) x = static_cast<float>(n(rng));
    return Embedding(std::move(v));
}

SoftmaxHead random_head(Task task, std::size_t d, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> n(0.0, scale);
    const std::size_t k = class_names(task).size();
    std::vector<double> w(k * d), b(k);
    for (auto& x : w) x = n(rng);
    for (auto& x : b) x = n(rng);
    return SoftmaxHead(task, d, std::move(w), std::move(b));
}

// The formula as written, no max subtraction, in long double.
std::vector<long double> oracle(const SoftmaxHead& h, const Embedding& x) {
    std::vector<long double> e(h.num_classes());
    long double z = 0;
    for (std::size_t k = 0; k < e.size(); ++k) {
        long double logit = h.biases()[k];
        for (std::size_t i = 0; i < h.dim(); ++i) logit += static_cast<long double>(h.row(k)[i]) * x.values()[i];
        e[k] = std::exp(logit);
        z += e[k];
    }
    for (auto& v : e) v /= z;
    return e;
}

}  // namespace

TEST(Softmax, ZeroHeadIsUniform) {
    const SoftmaxHead head(Task::Age, 5);
    const ProbDist p = softmax_probs(head, Embedding({1.f, -2.f, 3.f, 0.f, 9.f}));
    ASSERT_EQ(p.size(), 9u);
    for (double v : p.probs) EXPECT_NEAR(v, 1.0 / 9.0, 1e-15);
    EXPECT_EQ(p.class_names.front(), "0-2");
    EXPECT_EQ(p.class_names.back(), "70+");
}

TEST(Softmax, TwoThirdsOneThird) {
    const std::vector<double> logits{std::log(2.0), 0.0};
    const ProbDist p = softmax(logits, {"Female", "Male"});
    EXPECT_NEAR(p.probs[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(p.probs[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MatchesExtendedPrecisionOracle) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + rng() % 64;
        const SoftmaxHead head = random_head(Task::Age, d, rng, 0.3);
        const Embedding x = random_embedding(d, rng);
        const ProbDist p = softmax_probs(head, x);
        const auto ref = oracle(head, x);
        double sum = 0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            EXPECT_NEAR(p.probs[k], static_cast<double>(ref[k]), 1e-9);
            EXPECT_GE(p.probs[k], 0.0);
            sum += p.probs[k];
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
    }
}

TEST(Softmax, ShiftInvariant) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-20, 20);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> logits(9);
        for (auto& l : logits) l = u(rng);
        auto shifted = logits;
        const double c = u(rng) * 30;
        for (auto& l : shifted) l += c;
        const ProbDist a = softmax(logits, {}), b = softmax(shifted, {});
        for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(a.probs[k], b.probs[k], 1e-9);
    }
}

TEST(Softmax, HugeLogitsStayFinite) {
    const ProbDist p = softmax(std::vector<double>{1000.0, 999.0, -1000.0}, {});
    EXPECT_NEAR(p.probs[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
    EXPECT_EQ(p.probs[2], 0.0);
}

TEST(Softmax, DimensionMismatchIsInputError) {
    const SoftmaxHead head(Task::Gender, 4);
    EXPECT_THROW(softmax_probs(head, Embedding({1.f, 2.f})), InputError);
}

TEST(SoftmaxHead, RejectsWrongShapesAndNonFinite) {
    EXPECT_THROW(SoftmaxHead(Task::Gender, 2, std::vector<double>(3), std::vector<double>(2)), InputError);
    EXPECT_THROW(SoftmaxHead(Task::Gender, 2, std::vector<double>(4), std::vector<double>(9)), InputError);
    std::vector<double> w(4, 0.0);
    w[1] = NAN;
    EXPECT_THROW(SoftmaxHead(Task::Gender, 2, w, std::vector<double>(2)), InputError);
}

TEST(Predict, ArgmaxAndTieBreak) {
    ProbDist p{{0.7, 0.3}, {"Female", "Male"}};
    Prediction r = argmax(p);
    EXPECT_EQ(r.label, "Female");
    EXPECT_DOUBLE_EQ(r.confidence, 0.7);

    p.probs = {0.5, 0.5};
    r = argmax(p);
    EXPECT_EQ(r.index, 0u);
    EXPECT_EQ(r.label, "Female");
    EXPECT_DOUBLE_EQ(r.confidence, 0.5);
}

TEST(Predict, ConfidenceAtLeastOneOverK) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const SoftmaxHead head = random_head(Task::Age, 8, rng, 1.0);
        const Prediction p = predict(head, random_embedding(8, rng));
        EXPECT_GE(p.confidence, 1.0 / 9.0 - 1e-15);
    }
}

TEST(ZeroShot, IdenticalPromptsGiveUniform) {
    std::mt19937_64 rng(3);
    const Embedding img = random_embedding(16, rng);
    const Embedding prompt = random_embedding(16, rng);
    const std::vector<Embedding> prompts{prompt, prompt};
    const ProbDist p = zero_shot_classify(img, prompts, 100.0, {"Female", "Male"});
    EXPECT_NEAR(p.probs[0], 0.5, 1e-15);
    EXPECT_NEAR(p.probs[1], 0.5, 1e-15);
}

TEST(ZeroShot, TemperatureLimitIsUniform) {
    std::mt19937_64 rng(4);
    const Embedding img = random_embedding(16, rng);
    std::vector<Embedding> prompts;
    for (int k = 0; k < 9; ++k) prompts.push_back(random_embedding(16, rng));
    std::vector<std::string> names(9, "x");
    const ProbDist p = zero_shot_classify(img, prompts, 1e-12, names);
    for (double v : p.probs) EXPECT_NEAR(v, 1.0 / 9.0, 1e-9);
}

TEST(ZeroShot, ScaleInvariantToEmbeddingNorms) {
    std::mt19937_64 rng(6);
    const Embedding img = random_embedding(16, rng);
    std::vector<Embedding> prompts{random_embedding(16, rng), random_embedding(16, rng)};
    std::vector<float> scaled(img.values().begin(), img.values().end());
    for (auto& v : scaled) v *= 37.0f;
    const ProbDist a = zero_shot_classify(img, prompts, 100.0, {"Female", "Male"});
    const ProbDist b = zero_shot_classify(Embedding(scaled), prompts, 100.0, {"Female", "Male"});
    EXPECT_NEAR(a.probs[0], b.probs[0], 1e-6);
}

TEST(ZeroShot, NeedsTwoPrompts) {
    std::mt19937_64 rng(8);
    const Embedding img = random_embedding(4, rng);
    const std::vector<Embedding> one{random_embedding(4, rng)};
    EXPECT_THROW(zero_shot_classify(img, one, 100.0, {"Female"}), InputError);
}

TEST(ZeroShot, PromptTemplates) {
    const auto g = zero_shot_prompts(Task::Gender);
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g[0], "the face of a woman");
    EXPECT_EQ(g[1], "the face of a man");
    const auto a = zero_shot_prompts(Task::Age);
    ASSERT_EQ(a.size(), 9u);
    EXPECT_EQ(a[6], "A person in the 50-59 age group");
    EXPECT_EQ(a[8], "A person in the 70+ age group");
}

TEST(Taxonomy, LabelsAndFairFaceSpelling) {
    EXPECT_EQ(parse_gender("Female"), 0u);
    EXPECT_EQ(parse_gender("Male"), 1u);
    EXPECT_FALSE(parse_gender("female"));
    EXPECT_EQ(parse_age_group("50-59"), 6u);
    EXPECT_EQ(parse_age_group("70+"), 8u);
    EXPECT_EQ(parse_age_group("more than 70"), 8u);
    EXPECT_FALSE(parse_age_group("fifty"));
    EXPECT_TRUE(is_over50(6));
    EXPECT_FALSE(is_over50(5));
}
