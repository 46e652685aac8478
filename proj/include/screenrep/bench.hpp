#pragma once

// Accuracy / macro-F1 evaluation in the FairFace validation protocol.

#include "screenrep/taxonomy.hpp"

#include <json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace screenrep {

struct ClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct BenchmarkReport {
    std::string task;
    std::string model_name;
    std::size_t n = 0;
    double accuracy = 0.0;  // micro: correct / n
    double macro_f1 = 0.0;
    std::vector<std::string> class_names;
    /// confusion[true][predicted]
    std::vector<std::vector<std::size_t>> confusion;
    std::vector<ClassMetrics> per_class;
};

/// Per-class F1 is 0 when precision + recall is 0. Throws InputError on
/// length mismatch, empty input or a label outside class_names.
BenchmarkReport evaluate(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                         std::span<const std::string_view> class_names);
BenchmarkReport evaluate(std::span<const std::string> predicted, std::span<const std::string> truth,
                         std::span<const std::string_view> class_names);

/// Index into kAgeClasses for an age in years, 0..100.
std::size_t map_fine_age_to_group(int age_years);

/// Published state-of-the-art accuracies, shown for context only.
inline constexpr double kReferenceGenderAccuracy = 0.975;
inline constexpr double kReferenceAgeAccuracy = 0.6228;

nlohmann::ordered_json report_json(const BenchmarkReport& report);

/// Aligned table: Model | Task | Accuracy (%) | F1-Score (Macro).
std::string report_table(std::span<const BenchmarkReport> reports);

}  // namespace screenrep
