#pragma once

// Film-level analytics from per-face predictions.
//
// Each detected face counts once ("on-screen appearance"). Gender is the argmax
// of the gender head. Age is binarized: a face is Over 50 when the summed
// probability of 50-59, 60-69 and 70+ exceeds the sum of the other six groups.

#include "screenrep/classifier.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace screenrep {

enum class BinaryAge { UpTo50, Over50 };

struct BinarizedAge {
    BinaryAge value = BinaryAge::UpTo50;
    double over50_sum = 0.0;
    double upto50_sum = 0.0;

    /// Summed probability of the winning side.
    double confidence() const { return value == BinaryAge::Over50 ? over50_sum : upto50_sum; }
};

/// Ties go to UpTo50. Throws InputError unless the distribution has 9 classes.
BinarizedAge binarize_age_detail(const ProbDist& age);
inline BinaryAge binarize_age(const ProbDist& age) { return binarize_age_detail(age).value; }

struct FacePrediction {
    ProbDist gender;
    ProbDist age;
};

/// How the displayed age confidence is computed.
enum class AgeConfidenceMode {
    Binarized,  // mean of the winning binarized sum (default)
    Argmax,     // mean of the 9-way argmax probability
};

std::string_view age_confidence_mode_name(AgeConfidenceMode mode);
AgeConfidenceMode parse_age_confidence_mode(std::string_view name);

/// Percentages as hundredths of a percent (6829 == 68.29%), rounded half up.
/// Complementary shares are derived by subtraction so that they always sum
/// to exactly 10000.
struct RoundedShares {
    std::int64_t female = 0, male = 0;
    std::int64_t over50 = 0, upto50 = 0;
    std::int64_t female_over50 = 0, female_upto50 = 0, male_over50 = 0, male_upto50 = 0;
    std::int64_t gender_confidence = 0, age_confidence = 0;
};

/// Actual vs predicted category shares on a labeled validation set.
struct BiasProfile {
    std::string validation_set;
    std::size_t n_gender = 0;
    std::size_t actual_female = 0, predicted_female = 0;
    std::size_t n_age = 0;
    std::size_t actual_over50 = 0, predicted_over50 = 0;

    double actual_female_pct() const;
    double predicted_female_pct() const;
    double actual_male_pct() const { return 100.0 - actual_female_pct(); }
    double predicted_male_pct() const { return 100.0 - predicted_female_pct(); }
    double actual_over50_pct() const;
    double predicted_over50_pct() const;
    double actual_upto50_pct() const { return 100.0 - actual_over50_pct(); }
    double predicted_upto50_pct() const { return 100.0 - predicted_over50_pct(); }
};

struct FilmAnalytics {
    std::string film_id;
    std::size_t n_faces = 0;

    std::size_t n_female = 0;
    std::size_t n_over50 = 0;
    std::size_t n_female_over50 = 0;
    std::size_t n_male_over50 = 0;

    double female_pct = 0.0, male_pct = 0.0;
    double over50_pct = 0.0, upto50_pct = 0.0;
    double female_over50_pct = 0.0, female_upto50_pct = 0.0;
    double male_over50_pct = 0.0, male_upto50_pct = 0.0;
    double gender_confidence_pct = 0.0;
    double age_confidence_pct = 0.0;

    RoundedShares rounded;
    AgeConfidenceMode age_confidence_mode = AgeConfidenceMode::Binarized;
    std::optional<BiasProfile> bias;
    std::string config_fingerprint;
};

/// Reduction over all faces. Confidences are summed in exact fixed point, so
/// the result is independent of the list order and of the worker count.
/// Throws NoFacesError on an empty list.
FilmAnalytics film_analytics(std::string film_id, std::span<const FacePrediction> predictions,
                             AgeConfidenceMode mode = AgeConfidenceMode::Binarized, unsigned workers = 1);

/// Throws InputError on length mismatch or empty input. Labels are class
/// indices (gender: 0 Female, 1 Male; age: the 9 groups).
BiasProfile bias_profile(std::string validation_set, std::span<const ProbDist> gender_predictions,
                         std::span<const std::size_t> gender_labels, std::span<const ProbDist> age_predictions,
                         std::span<const std::size_t> age_labels);

}  // namespace screenrep
