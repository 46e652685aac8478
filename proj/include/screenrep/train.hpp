#pragma once

// Full-batch training of softmax heads. The objective is convex:
//
//   f(W, b) = -(1/N) sum_i log P(y_i | x_i) + (lambda / 2) ||W||^2
//
// (biases are not regularized) and is minimized with L-BFGS to a gradient
// infinity-norm tolerance.

#include "screenrep/classifier.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace screenrep {

struct TrainingConfig {
    std::vector<double> lambda_grid{1e-4, 1e-3, 1e-2};
    double holdout_fraction = 0.2;
    double gradient_tolerance = 1e-6;
    int max_iterations = 5000;
    int history = 10;
    std::uint64_t seed = 0;
};

class SoftmaxObjective {
public:
    SoftmaxObjective(std::span<const Embedding> x, std::span<const std::size_t> y, std::size_t num_classes,
                     double lambda);

    std::size_t num_classes() const { return num_classes_; }
    std::size_t dim() const { return dim_; }
    /// K*D weights (row-major) followed by K biases.
    std::size_t num_params() const { return num_classes_ * (dim_ + 1); }
    double lambda() const { return lambda_; }

    double value(std::span<const double> params) const;
    double value_and_gradient(std::span<const double> params, std::span<double> gradient) const;

private:
    double accumulate(std::span<const double> params, double* gradient) const;

    std::span<const Embedding> x_;
    std::span<const std::size_t> y_;
    std::size_t num_classes_;
    std::size_t dim_;
    double lambda_;
};

struct MinimizeResult {
    std::vector<double> params;
    int iterations = 0;
    double value = 0.0;
    double gradient_norm = 0.0;  // infinity norm
    bool converged = false;
};

MinimizeResult minimize_lbfgs(const SoftmaxObjective& objective, std::vector<double> start, double tolerance,
                              int max_iterations, int history);

/// Mean cross-entropy (no regularization) and accuracy of a head on labeled data.
struct HeadFit {
    double loss = 0.0;
    double accuracy = 0.0;
};
HeadFit evaluate_fit(const SoftmaxHead& head, std::span<const Embedding> x, std::span<const std::size_t> y);

/// Trains a head. The result depends only on the multiset of (x, y) pairs:
/// samples are put in a canonical order before the seeded hold-out split used
/// to pick lambda, and the final fit uses all samples.
SoftmaxHead train_head(Task task, std::span<const Embedding> x, std::span<const std::size_t> y,
                       const TrainingConfig& config);

}  // namespace screenrep
