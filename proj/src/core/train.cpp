#include "screenrep/train.hpp"

#include "screenrep/errors.hpp"
#include "screenrep/random.hpp"
#include "screenrep/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace screenrep {

SoftmaxObjective::SoftmaxObjective(std::span<const Embedding> x, std::span<const std::size_t> y,
                                   std::size_t num_classes, double lambda)
    : x_(x), y_(y), num_classes_(num_classes), dim_(x.empty() ? 0 : x.front().dim()), lambda_(lambda) {
    if (x.size() != y.size()) throw InputError("objective: sample and label counts differ");
    if (x.empty()) throw InputError("objective: no samples");
    for (const Embedding& e : x) {
        if (e.dim() != dim_) throw InputError("objective: embeddings of mixed dimension");
    }
    for (std::size_t label : y) {
        if (label >= num_classes) throw InputError("objective: label outside the class range");
    }
}

double SoftmaxObjective::value(std::span<const double> params) const { return accumulate(params, nullptr); }

double SoftmaxObjective::value_and_gradient(std::span<const double> params, std::span<double> gradient) const {
    if (gradient.size() != num_params()) throw InputError("objective: gradient buffer has the wrong size");
    return accumulate(params, gradient.data());
}

double SoftmaxObjective::accumulate(std::span<const double> params, double* gradient) const {
    if (params.size() != num_params()) throw InputError("objective: parameter vector has the wrong size");
    const auto& kernels = simd::active();
    const std::size_t k_count = num_classes_;
    const double* weights = params.data();
    const double* biases = params.data() + k_count * dim_;
    const double inv_n = 1.0 / static_cast<double>(x_.size());

    if (gradient) std::fill(gradient, gradient + num_params(), 0.0);
    double* grad_w = gradient;
    double* grad_b = gradient ? gradient + k_count * dim_ : nullptr;

    std::vector<double> z(k_count);
    double loss = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
        const float* xi = x_[i].data();
        for (std::size_t k = 0; k < k_count; ++k) {
            z[k] = kernels.dot_mixed(xi, weights + k * dim_, dim_) + biases[k];
        }
        const double peak = *std::max_element(z.begin(), z.end());
        double total = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            z[k] = std::exp(z[k] - peak);
            total += z[k];
        }
        // log-sum-exp minus the true-class logit, with the peak shifted out
        loss += std::log(total) - std::log(z[y_[i]]);
        if (gradient) {
            for (std::size_t k = 0; k < k_count; ++k) {
                const double residual = (z[k] / total - (k == y_[i] ? 1.0 : 0.0)) * inv_n;
                kernels.axpy_mixed(residual, xi, grad_w + k * dim_, dim_);
                grad_b[k] += residual;
            }
        }
    }
    loss *= inv_n;

    const std::size_t n_weights = k_count * dim_;
    const double squared = kernels.dot_f64(weights, weights, n_weights);
    if (gradient) kernels.axpy_f64(lambda_, weights, grad_w, n_weights);
    return loss + 0.5 * lambda_ * squared;
}

namespace {

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
    return simd::active().dot_f64(a.data(), b.data(), a.size());
}

}  // namespace

MinimizeResult minimize_lbfgs(const SoftmaxObjective& objective, std::vector<double> start, double tolerance,
                              int max_iterations, int history) {
    const std::size_t n = objective.num_params();
    if (start.size() != n) throw InputError("minimize_lbfgs: start vector has the wrong size");

    MinimizeResult result;
    std::vector<double> x = std::move(start);
    std::vector<double> g(n), x_new(n), g_new(n), direction(n);
    double f = objective.value_and_gradient(x, g);

    struct Pair {
        std::vector<double> s, y;
        double rho;
    };
    std::deque<Pair> memory;
    std::vector<double> alpha(static_cast<std::size_t>(std::max(history, 1)));

    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        if (!std::isfinite(f)) break;
        if (inf_norm(g) <= tolerance) break;

        // two-loop recursion: direction = -H g
        for (std::size_t i = 0; i < n; ++i) direction[i] = -g[i];
        for (std::size_t m = memory.size(); m-- > 0;) {
            alpha[m] = memory[m].rho * dot(memory[m].s, direction);
            simd::active().axpy_f64(-alpha[m], memory[m].y.data(), direction.data(), n);
        }
        if (!memory.empty()) {
            const Pair& last = memory.back();
            const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
            for (double& d : direction) d *= gamma;
        }
        for (std::size_t m = 0; m < memory.size(); ++m) {
            const double beta = memory[m].rho * dot(memory[m].y, direction);
            simd::active().axpy_f64(alpha[m] - beta, memory[m].s.data(), direction.data(), n);
        }

        double slope = dot(g, direction);
        if (!(slope < 0.0)) {
            memory.clear();
            for (std::size_t i = 0; i < n; ++i) direction[i] = -g[i];
            slope = dot(g, direction);
        }

        // backtracking line search with the Armijo condition
        double step = memory.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;
        double f_new = 0.0;
        bool accepted = false;
        for (int trial = 0; trial < 60; ++trial) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * direction[i];
            f_new = objective.value_and_gradient(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        Pair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            pair.s[i] = x_new[i] - x[i];
            pair.y[i] = g_new[i] - g[i];
        }
        const double sy = dot(pair.s, pair.y);
        if (sy > 1e-12 * std::sqrt(dot(pair.y, pair.y) * dot(pair.s, pair.s))) {
            pair.rho = 1.0 / sy;
            memory.push_back(std::move(pair));
            if (memory.size() > static_cast<std::size_t>(history)) memory.pop_front();
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
    }

    result.params = std::move(x);
    result.iterations = iter;
    result.value = f;
    result.gradient_norm = inf_norm(g);
    result.converged = std::isfinite(f) && result.gradient_norm <= tolerance;
    return result;
}

HeadFit evaluate_fit(const SoftmaxHead& head, std::span<const Embedding> x, std::span<const std::size_t> y) {
    HeadFit fit;
    if (x.empty()) return fit;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const ProbDist dist = softmax_probs(head, x[i]);
        fit.loss -= std::log(std::max(dist.probs[y[i]], 1e-300));
        if (argmax(dist).index == y[i]) ++correct;
    }
    fit.loss /= static_cast<double>(x.size());
    fit.accuracy = static_cast<double>(correct) / static_cast<double>(x.size());
    return fit;
}

namespace {

struct Fitted {
    SoftmaxHead head;
    MinimizeResult result;
};

Fitted fit_head(Task task, std::span<const Embedding> x, std::span<const std::size_t> y, double lambda,
                const TrainingConfig& config) {
    const std::size_t k = class_names(task).size();
    SoftmaxObjective objective(x, y, k, lambda);
    MinimizeResult result = minimize_lbfgs(objective, std::vector<double>(objective.num_params(), 0.0),
                                           config.gradient_tolerance, config.max_iterations, config.history);
    if (!std::isfinite(result.value)) {
        std::ostringstream msg;
        msg << "training diverged: loss is " << result.value << " after " << result.iterations
            << " iterations (lambda " << lambda << ", " << x.size() << " samples, gradient norm "
            << result.gradient_norm << ")";
        throw TrainingError(msg.str());
    }
    const std::size_t d = objective.dim();
    std::vector<double> weights(result.params.begin(), result.params.begin() + static_cast<std::ptrdiff_t>(k * d));
    std::vector<double> biases(result.params.begin() + static_cast<std::ptrdiff_t>(k * d), result.params.end());
    return {SoftmaxHead(task, d, std::move(weights), std::move(biases)), std::move(result)};
}

std::size_t distinct_labels(std::span<const std::size_t> y) {
    std::vector<std::size_t> labels(y.begin(), y.end());
    std::sort(labels.begin(), labels.end());
    return static_cast<std::size_t>(std::unique(labels.begin(), labels.end()) - labels.begin());
}

}  // namespace

SoftmaxHead train_head(Task task, std::span<const Embedding> x, std::span<const std::size_t> y,
                       const TrainingConfig& config) {
    const std::size_t k = class_names(task).size();
    if (x.size() != y.size()) throw InputError("train_head: sample and label counts differ");
    if (x.empty()) throw TrainingError("train_head: no training samples");
    for (std::size_t label : y) {
        if (label >= k) throw InputError("train_head: label outside the " + std::string(task_name(task)) + " taxonomy");
    }
    for (const Embedding& e : x) {
        if (e.dim() != x.front().dim()) throw InputError("train_head: embeddings of mixed dimension");
        if (!e.is_finite()) throw InputError("train_head: non-finite embedding");
    }
    if (distinct_labels(y) < 2) throw TrainingError("train_head: training data contains a single class");
    if (config.lambda_grid.empty()) throw InputError("train_head: empty lambda grid");

    // Canonical order: by label, then lexicographically by vector.
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (y[a] != y[b]) return y[a] < y[b];
        auto va = x[a].values();
        auto vb = x[b].values();
        return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
    });
    std::vector<Embedding> xs;
    std::vector<std::size_t> ys;
    xs.reserve(x.size());
    ys.reserve(y.size());
    for (std::size_t i : order) {
        xs.push_back(x[i]);
        ys.push_back(y[i]);
    }

    TrainingSummary summary;
    summary.seed = config.seed;
    summary.lambda = config.lambda_grid.front();

    const auto n_holdout = static_cast<std::size_t>(std::floor(config.holdout_fraction * static_cast<double>(xs.size())));
    if (config.lambda_grid.size() > 1 && n_holdout >= 1 && n_holdout < xs.size()) {
        std::vector<std::size_t> perm(xs.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        SplitMix64 rng(config.seed);
        shuffle(std::span<std::size_t>(perm), rng);
        std::vector<std::size_t> held(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_holdout));
        std::vector<std::size_t> kept(perm.begin() + static_cast<std::ptrdiff_t>(n_holdout), perm.end());
        std::sort(held.begin(), held.end());
        std::sort(kept.begin(), kept.end());
        std::vector<Embedding> x_fit, x_val;
        std::vector<std::size_t> y_fit, y_val;
        for (std::size_t i : kept) {
            x_fit.push_back(xs[i]);
            y_fit.push_back(ys[i]);
        }
        for (std::size_t i : held) {
            x_val.push_back(xs[i]);
            y_val.push_back(ys[i]);
        }
        if (distinct_labels(y_fit) >= 2) {
            double best_loss = std::numeric_limits<double>::infinity();
            for (double lambda : config.lambda_grid) {
                Fitted fitted = fit_head(task, x_fit, y_fit, lambda, config);
                const HeadFit fit = evaluate_fit(fitted.head, x_val, y_val);
                summary.trials.push_back({lambda, fit.loss, fit.accuracy});
                if (fit.loss < best_loss) {
                    best_loss = fit.loss;
                    summary.lambda = lambda;
                }
            }
        }
    }

    Fitted final_fit = fit_head(task, xs, ys, summary.lambda, config);
    summary.iterations = final_fit.result.iterations;
    summary.final_loss = final_fit.result.value;
    summary.gradient_norm = final_fit.result.gradient_norm;
    summary.n_train = xs.size();
    final_fit.head.training = std::move(summary);
    return std::move(final_fit.head);
}

}  // namespace screenrep
