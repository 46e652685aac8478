#pragma once

// Multinomial logistic-regression heads over encoder embeddings:
//
//   P(y = k | x) = exp(w_k . x + b_k) / sum_j exp(w_j . x + b_j)
//
// plus the prompt-based zero-shot scorer and the argmax wrapper.

#include "screenrep/embedding.hpp"
#include "screenrep/taxonomy.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace screenrep {

/// Distribution over the classes of one head; probs sum to 1.
struct ProbDist {
    std::vector<double> probs;
    std::vector<std::string> class_names;

    std::size_t size() const { return probs.size(); }
};

struct Prediction {
    std::size_t index = 0;
    std::string label;
    double confidence = 0.0;
};

struct LambdaTrial {
    double lambda = 0.0;
    double holdout_loss = 0.0;
    double holdout_accuracy = 0.0;
};

struct TrainingSummary {
    double lambda = 0.0;
    int iterations = 0;
    double final_loss = 0.0;
    double gradient_norm = 0.0;
    std::size_t n_train = 0;
    std::uint64_t seed = 0;
    std::vector<LambdaTrial> trials;
};

/// Weights are K x D row-major (row k is w_k); one bias per class.
class SoftmaxHead {
public:
    SoftmaxHead(Task task, std::size_t dim);
    SoftmaxHead(Task task, std::size_t dim, std::vector<double> weights, std::vector<double> biases);

    Task task() const { return task_; }
    std::size_t num_classes() const { return biases_.size(); }
    std::size_t dim() const { return dim_; }
    std::vector<std::string> class_names() const;

    std::span<const double> weights() const { return weights_; }
    std::span<const double> row(std::size_t k) const { return {weights_.data() + k * dim_, dim_}; }
    std::span<const double> biases() const { return biases_; }

    std::string checkpoint_id;
    std::optional<TrainingSummary> training;

private:
    Task task_;
    std::size_t dim_;
    std::vector<double> weights_;
    std::vector<double> biases_;
};

/// Stabilized softmax: the max logit is subtracted before exponentiation.
ProbDist softmax(std::span<const double> logits, std::vector<std::string> class_names);

/// logits[k] = w_k . x + b_k
std::vector<double> head_logits(const SoftmaxHead& head, std::span<const float> x);

ProbDist softmax_probs(const SoftmaxHead& head, std::span<const float> x);
inline ProbDist softmax_probs(const SoftmaxHead& head, const Embedding& x) {
    return softmax_probs(head, x.values());
}

/// Argmax; exact ties go to the lower class index.
Prediction argmax(const ProbDist& dist);

Prediction predict(const SoftmaxHead& head, const Embedding& x);

/// Softmax over logit_scale * cosine(image, prompt_k). Both sides are
/// unit-normalized here; callers may pass raw encoder outputs.
ProbDist zero_shot_classify(const Embedding& image, std::span<const Embedding> prompt_embeddings,
                            double logit_scale, std::vector<std::string> class_names);

/// Prompt templates for the zero-shot baseline, in class order.
std::vector<std::string> zero_shot_prompts(Task task);

}  // namespace screenrep
