#include "screenrep/bench.hpp"

#include "screenrep/errors.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace screenrep {

BenchmarkReport evaluate(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                         std::span<const std::string_view> class_names) {
    if (predicted.size() != truth.size()) {
        throw InputError(fmt::format("evaluate: {} predictions for {} labels", predicted.size(), truth.size()));
    }
    if (truth.empty()) throw InputError("evaluate: no samples");
    const std::size_t k = class_names.size();
    if (k < 2) throw InputError("evaluate: need at least two classes");

    BenchmarkReport r;
    r.n = truth.size();
    r.class_names.assign(class_names.begin(), class_names.end());
    r.confusion.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= k || predicted[i] >= k) throw InputError(fmt::format("evaluate: label out of range at sample {}", i));
        ++r.confusion[truth[i]][predicted[i]];
    }

    std::size_t correct = 0;
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t row = 0, col = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row += r.confusion[c][j];
            col += r.confusion[j][c];
        }
        const std::size_t tp = r.confusion[c][c];
        correct += tp;
        ClassMetrics m;
        m.name = r.class_names[c];
        m.support = row;
        m.precision = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        m.recall = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        f1_sum += m.f1;
        r.per_class.push_back(std::move(m));
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
    r.macro_f1 = f1_sum / static_cast<double>(k);
    return r;
}

BenchmarkReport evaluate(std::span<const std::string> predicted, std::span<const std::string> truth,
                         std::span<const std::string_view> class_names) {
    if (predicted.size() != truth.size()) {
        throw InputError(fmt::format("evaluate: {} predictions for {} labels", predicted.size(), truth.size()));
    }
    auto index_of = [&](const std::string& label) {
        const auto it = std::find(class_names.begin(), class_names.end(), label);
        if (it == class_names.end()) throw InputError("evaluate: unknown label '" + label + "'");
        return static_cast<std::size_t>(it - class_names.begin());
    };
    std::vector<std::size_t> p, t;
    p.reserve(predicted.size());
    t.reserve(truth.size());
    for (const auto& s : predicted) p.push_back(index_of(s));
    for (const auto& s : truth) t.push_back(index_of(s));
    return evaluate(p, t, class_names);
}

std::size_t map_fine_age_to_group(int age) {
    if (age < 0 || age > 100) throw InputError(fmt::format("age {} outside 0..100", age));
    static constexpr int kLowerBounds[] = {0, 3, 10, 20, 30, 40, 50, 60, 70};
    std::size_t group = 0;
    for (std::size_t g = 0; g < std::size(kLowerBounds); ++g) {
        if (age >= kLowerBounds[g]) group = g;
    }
    return group;
}

nlohmann::ordered_json report_json(const BenchmarkReport& r) {
    nlohmann::ordered_json out;
    out["task"] = r.task;
    out["model_name"] = r.model_name;
    out["n"] = r.n;
    out["accuracy"] = r.accuracy;
    out["accuracy_kind"] = "micro";
    out["macro_f1"] = r.macro_f1;
    out["f1_zero_division"] = 0;
    out["class_names"] = r.class_names;
    out["confusion"] = r.confusion;
    out["per_class"] = nlohmann::ordered_json::array();
    for (const ClassMetrics& m : r.per_class) {
        out["per_class"].push_back(
            {{"class", m.name}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}});
    }
    return out;
}

std::string report_table(std::span<const BenchmarkReport> reports) {
    std::size_t model_width = 5;
    for (const auto& r : reports) model_width = std::max(model_width, r.model_name.size());
    std::string out = fmt::format("{:<{}}  {:<6}  {:>12}  {:>16}  {:>6}\n", "Model", model_width, "Task", "Accuracy (%)",
                                  "F1-Score (Macro)", "n");
    for (const auto& r : reports) {
        out += fmt::format("{:<{}}  {:<6}  {:>12.2f}  {:>16.2f}  {:>6}\n", r.model_name, model_width, r.task,
                           100.0 * r.accuracy, r.macro_f1, r.n);
    }
    out += fmt::format("reference (state of the art, not asserted): gender {:.2f}%, age {:.2f}%\n",
                       100.0 * kReferenceGenderAccuracy, 100.0 * kReferenceAgeAccuracy);
    return out;
}

}  // namespace screenrep
