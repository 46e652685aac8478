#include "screenrep/aggregate.hpp"

#include "screenrep/errors.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

namespace screenrep {

BinarizedAge binarize_age_detail(const ProbDist& age) {
    if (age.probs.size() != kAgeClasses.size()) {
        throw InputError("binarize_age: expected a 9-class age distribution, got " + std::to_string(age.probs.size()));
    }
    BinarizedAge out;
    for (std::size_t k = 0; k < age.probs.size(); ++k) {
        (is_over50(k) ? out.over50_sum : out.upto50_sum) += age.probs[k];
    }
    out.value = out.over50_sum > out.upto50_sum ? BinaryAge::Over50 : BinaryAge::UpTo50;
    return out;
}

std::string_view age_confidence_mode_name(AgeConfidenceMode mode) {
    return mode == AgeConfidenceMode::Binarized ? "binarized" : "argmax";
}

AgeConfidenceMode parse_age_confidence_mode(std::string_view name) {
    if (name == "binarized") return AgeConfidenceMode::Binarized;
    if (name == "argmax") return AgeConfidenceMode::Argmax;
    throw InputError("unknown age confidence mode '" + std::string(name) + "' (expected binarized or argmax)");
}

namespace {

using u128 = unsigned __int128;

// Probabilities as integers in units of 2^-52; sums of these are exact.
constexpr int kFixedBits = 52;

std::uint64_t to_fixed(double p) {
    p = std::clamp(p, 0.0, 1.0);
    return static_cast<std::uint64_t>(std::llround(std::ldexp(p, kFixedBits)));
}

double fixed_to_double(u128 v) {
    const auto hi = static_cast<std::uint64_t>(v >> 64);
    const auto lo = static_cast<std::uint64_t>(v);
    return std::ldexp(std::ldexp(static_cast<double>(hi), 64) + static_cast<double>(lo), -kFixedBits);
}

struct Partial {
    std::size_t n = 0;
    std::size_t female = 0, over50 = 0, female_over50 = 0, male_over50 = 0;
    u128 gender_conf = 0, age_conf = 0;

    Partial& operator+=(const Partial& o) {
        n += o.n;
        female += o.female;
        over50 += o.over50;
        female_over50 += o.female_over50;
        male_over50 += o.male_over50;
        gender_conf += o.gender_conf;
        age_conf += o.age_conf;
        return *this;
    }
};

Partial reduce(std::span<const FacePrediction> preds, AgeConfidenceMode mode) {
    Partial p;
    for (const FacePrediction& face : preds) {
        if (face.gender.probs.size() != kGenderClasses.size()) {
            throw InputError("film_analytics: gender distribution must have 2 classes");
        }
        const Prediction gender = argmax(face.gender);
        const BinarizedAge age = binarize_age_detail(face.age);
        const bool female = gender.index == kFemale;
        const bool over50 = age.value == BinaryAge::Over50;
        ++p.n;
        p.female += female;
        p.over50 += over50;
        p.female_over50 += female && over50;
        p.male_over50 += !female && over50;
        p.gender_conf += to_fixed(gender.confidence);
        p.age_conf += to_fixed(mode == AgeConfidenceMode::Binarized ? age.confidence() : argmax(face.age).confidence);
    }
    return p;
}

std::int64_t hundredths(std::size_t count, std::size_t n) {
    const u128 num = static_cast<u128>(count) * 20000u + n;
    return static_cast<std::int64_t>(num / (static_cast<u128>(n) * 2u));
}

std::int64_t fixed_hundredths(u128 sum, std::size_t n) {
    const u128 denom = static_cast<u128>(n) << kFixedBits;
    return static_cast<std::int64_t>((sum * 20000u + denom) / (denom * 2u));
}

double pct(std::size_t count, std::size_t n) { return 100.0 * static_cast<double>(count) / static_cast<double>(n); }

}  // namespace

FilmAnalytics film_analytics(std::string film_id, std::span<const FacePrediction> predictions, AgeConfidenceMode mode,
                             unsigned workers) {
    if (predictions.empty()) throw NoFacesError();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(predictions.size())));

    Partial total;
    if (workers == 1) {
        total = reduce(predictions, mode);
    } else {
        std::vector<Partial> partials(workers);
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (predictions.size() + workers - 1) / workers;
        {
            std::vector<std::jthread> threads;
            for (unsigned w = 0; w < workers; ++w) {
                const std::size_t begin = std::min(predictions.size(), w * chunk);
                const std::size_t end = std::min(predictions.size(), begin + chunk);
                threads.emplace_back([&, w, begin, end] {
                    try {
                        partials[w] = reduce(predictions.subspan(begin, end - begin), mode);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
        }
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
        for (const Partial& p : partials) total += p;
    }

    FilmAnalytics a;
    a.film_id = std::move(film_id);
    a.age_confidence_mode = mode;
    const std::size_t n = total.n;
    a.n_faces = n;
    a.n_female = total.female;
    a.n_over50 = total.over50;
    a.n_female_over50 = total.female_over50;
    a.n_male_over50 = total.male_over50;

    a.female_pct = pct(total.female, n);
    a.male_pct = pct(n - total.female, n);
    a.over50_pct = pct(total.over50, n);
    a.upto50_pct = pct(n - total.over50, n);
    a.female_over50_pct = pct(total.female_over50, n);
    a.female_upto50_pct = pct(total.female - total.female_over50, n);
    a.male_over50_pct = pct(total.male_over50, n);
    a.male_upto50_pct = pct(n - total.female - total.male_over50, n);
    a.gender_confidence_pct = 100.0 * fixed_to_double(total.gender_conf) / static_cast<double>(n);
    a.age_confidence_pct = 100.0 * fixed_to_double(total.age_conf) / static_cast<double>(n);

    RoundedShares& r = a.rounded;
    r.female = hundredths(total.female, n);
    r.male = 10000 - r.female;
    r.over50 = hundredths(total.over50, n);
    r.upto50 = 10000 - r.over50;
    r.female_over50 = std::min(hundredths(total.female_over50, n), r.female);
    r.female_upto50 = r.female - r.female_over50;
    r.male_over50 = std::min(hundredths(total.male_over50, n), r.male);
    r.male_upto50 = r.male - r.male_over50;
    r.gender_confidence = fixed_hundredths(total.gender_conf, n);
    r.age_confidence = fixed_hundredths(total.age_conf, n);
    return a;
}

double BiasProfile::actual_female_pct() const { return n_gender ? pct(actual_female, n_gender) : 0.0; }
double BiasProfile::predicted_female_pct() const { return n_gender ? pct(predicted_female, n_gender) : 0.0; }
double BiasProfile::actual_over50_pct() const { return n_age ? pct(actual_over50, n_age) : 0.0; }
double BiasProfile::predicted_over50_pct() const { return n_age ? pct(predicted_over50, n_age) : 0.0; }

BiasProfile bias_profile(std::string validation_set, std::span<const ProbDist> gender_predictions,
                         std::span<const std::size_t> gender_labels, std::span<const ProbDist> age_predictions,
                         std::span<const std::size_t> age_labels) {
    if (gender_predictions.size() != gender_labels.size() || age_predictions.size() != age_labels.size()) {
        throw InputError("bias_profile: predictions and labels have different lengths");
    }
    if (gender_predictions.empty() || age_predictions.empty()) throw InputError("bias_profile: empty validation set");

    BiasProfile b;
    b.validation_set = std::move(validation_set);
    b.n_gender = gender_labels.size();
    for (std::size_t i = 0; i < gender_labels.size(); ++i) {
        if (gender_labels[i] >= kGenderClasses.size()) throw InputError("bias_profile: gender label out of range");
        b.actual_female += gender_labels[i] == kFemale;
        b.predicted_female += argmax(gender_predictions[i]).index == kFemale;
    }
    b.n_age = age_labels.size();
    for (std::size_t i = 0; i < age_labels.size(); ++i) {
        if (age_labels[i] >= kAgeClasses.size()) throw InputError("bias_profile: age label out of range");
        b.actual_over50 += is_over50(age_labels[i]);
        b.predicted_over50 += binarize_age(age_predictions[i]) == BinaryAge::Over50;
    }
    return b;
}

}  // namespace screenrep
