#include "screenrep/classifier.hpp"

#include "screenrep/errors.hpp"
#include "screenrep/simd/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace screenrep {

SoftmaxHead::SoftmaxHead(Task task, std::size_t dim)
    : task_(task), dim_(dim), weights_(screenrep::class_names(task).size() * dim, 0.0), biases_(screenrep::class_names(task).size(), 0.0) {}

SoftmaxHead::SoftmaxHead(Task task, std::size_t dim, std::vector<double> weights, std::vector<double> biases)
    : task_(task), dim_(dim), weights_(std::move(weights)), biases_(std::move(biases)) {
    const std::size_t k = screenrep::class_names(task).size();
    if (biases_.size() != k || weights_.size() != k * dim) {
        throw InputError("softmax head: expected " + std::to_string(k) + " x " + std::to_string(dim) +
                         " weights for task " + std::string(task_name(task)));
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(weights_.begin(), weights_.end(), finite) || !std::all_of(biases_.begin(), biases_.end(), finite)) {
        throw InputError("softmax head: non-finite parameter");
    }
}

std::vector<std::string> SoftmaxHead::class_names() const {
    auto names = screenrep::class_names(task_);
    return {names.begin(), names.end()};
}

ProbDist softmax(std::span<const double> logits, std::vector<std::string> class_names) {
    if (logits.empty()) throw InputError("softmax: no logits");
    const double peak = *std::max_element(logits.begin(), logits.end());
    ProbDist out{std::vector<double>(logits.size()), std::move(class_names)};
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out.probs[k] = std::exp(logits[k] - peak);
        total += out.probs[k];
    }
    for (double& p : out.probs) p /= total;
    return out;
}

std::vector<double> head_logits(const SoftmaxHead& head, std::span<const float> x) {
    if (x.size() != head.dim()) {
        throw InputError("embedding has dimension " + std::to_string(x.size()) + ", head expects " +
                         std::to_string(head.dim()));
    }
    const auto& kernels = simd::active();
    std::vector<double> logits(head.num_classes());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        logits[k] = kernels.dot_mixed(x.data(), head.row(k).data(), x.size()) + head.biases()[k];
    }
    return logits;
}

ProbDist softmax_probs(const SoftmaxHead& head, std::span<const float> x) {
    return softmax(head_logits(head, x), head.class_names());
}

Prediction argmax(const ProbDist& dist) {
    if (dist.probs.empty()) throw InputError("argmax of an empty distribution");
    std::size_t best = 0;
    for (std::size_t k = 1; k < dist.probs.size(); ++k) {
        if (dist.probs[k] > dist.probs[best]) best = k;
    }
    Prediction p;
    p.index = best;
    p.confidence = dist.probs[best];
    if (best < dist.class_names.size()) p.label = dist.class_names[best];
    return p;
}

Prediction predict(const SoftmaxHead& head, const Embedding& x) { return argmax(softmax_probs(head, x)); }

ProbDist zero_shot_classify(const Embedding& image, std::span<const Embedding> prompt_embeddings,
                            double logit_scale, std::vector<std::string> class_names) {
    if (prompt_embeddings.size() < 2) throw InputError("zero-shot classification needs at least 2 prompts");
    if (!(logit_scale > 0.0) || !std::isfinite(logit_scale)) throw InputError("logit_scale must be positive");
    if (class_names.size() != prompt_embeddings.size()) {
        throw InputError("zero-shot classification: one class name per prompt required");
    }
    std::vector<double> logits;
    logits.reserve(prompt_embeddings.size());
    for (const Embedding& prompt : prompt_embeddings) {
        logits.push_back(logit_scale * cosine_similarity(image, prompt));
    }
    return softmax(logits, std::move(class_names));
}

std::vector<std::string> zero_shot_prompts(Task task) {
    std::vector<std::string> prompts;
    if (task == Task::Gender) {
        // class order is [Female, Male]
        prompts = {"the face of a woman", "the face of a man"};
    } else {
        for (std::string_view group : kAgeClasses) {
            prompts.push_back("A person in the " + std::string(group) + " age group");
        }
    }
    return prompts;
}

}  // namespace screenrep
