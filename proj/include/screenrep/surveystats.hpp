#pragma once

// Bayesian summaries for the user-study questions.
//
// Correctness questions: binomial likelihood, Beta prior, conjugate posterior.
// Likert questions: normal likelihood, Normal prior on the mean, half-normal
// prior on the standard deviation; the marginal posterior of the mean is
// integrated on a dense (mean, log sd) grid.

#include "screenrep/csv.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace screenrep {

enum class IntervalKind { HDI, EqualTailed };

std::string_view interval_kind_name(IntervalKind kind);
IntervalKind parse_interval_kind(std::string_view name);

struct CredibleInterval {
    double mass = 0.94;
    double low = 0.0;
    double high = 0.0;
    double mean = 0.0;
    IntervalKind kind = IntervalKind::HDI;

    double width() const { return high - low; }
};

inline constexpr double kDefaultMass = 0.94;

/// Interval of a continuous distribution given its quantile function. The HDI
/// is the shortest interval [Q(p), Q(p + mass)], which matches the highest
/// density region for unimodal distributions.
CredibleInterval interval_from_quantile(const std::function<double(double)>& quantile, double mean, double mass,
                                        IntervalKind kind);

/// Posterior Beta(prior_a + k, prior_b + n - k). Throws InputError on invalid
/// counts, priors or mass.
CredibleInterval correctness_ci(long long n_correct, long long n_trials, double prior_a = 1.0, double prior_b = 1.0,
                                double mass = kDefaultMass, IntervalKind kind = IntervalKind::HDI);

struct TrialCounts {
    std::size_t n_correct = 0;
    std::size_t n_trials = 0;
};

/// Each participant contributes 4 binary trials (1 = correct selection).
TrialCounts multiselect_trials(std::span<const std::vector<int>> responses);

struct LikertPriors {
    double mean_loc = 3.0;
    double mean_scale = 2.0;
    double sd_scale = 2.0;
};

/// Grid resolution of the Likert posterior.
struct LikertGrid {
    std::size_t mean_points = 4001;
    std::size_t log_sd_points = 800;
    double sd_min = 1e-3;
    double sd_max = 12.0;
};

/// Marginal posterior of the Likert mean. Needs at least 2 finite scores.
/// Depends only on the multiset of scores.
CredibleInterval likert_mean_ci(std::span<const double> scores, const LikertPriors& priors = {},
                                double mass = kDefaultMass, IntervalKind kind = IntervalKind::HDI,
                                const LikertGrid& grid = {});

// Survey data ---------------------------------------------------------------

enum class QuestionKind { Single, Multi, Likert };

struct Question {
    std::string code;
    QuestionKind kind = QuestionKind::Single;
    std::string text;
    std::vector<std::string> options;  // single/multi: option labels; likert: level labels, lowest first
    std::vector<std::string> correct;  // single: one option; multi: the correct subset; empty = no answer key
};

struct QuestionKey {
    std::string idk = "idk";
    std::vector<Question> questions;

    const Question* find(std::string_view code) const;
};

/// JSON: {"idk": "idk", "questions": [{"code", "kind": single|multi|likert, "text", "options", "correct"}]}
QuestionKey load_question_key(const std::filesystem::path& path);
QuestionKey parse_question_key(const nlohmann::json& document);

struct SurveyConfig {
    double beta_a = 1.0;
    double beta_b = 1.0;
    LikertPriors likert;
    double mass = kDefaultMass;
    IntervalKind kind = IntervalKind::HDI;
};

struct QuestionResult {
    std::string code;
    QuestionKind kind = QuestionKind::Single;
    std::size_t n_responses = 0;
    std::size_t n_excluded = 0;  // "I don't know" or blank
    std::size_t n_eff = 0;
    bool has_key = true;
    std::optional<TrialCounts> counts;
    std::optional<double> sample_mean;
    std::optional<CredibleInterval> interval;
};

struct SurveyAnalysis {
    std::vector<QuestionResult> questions;
    std::size_t ignored_rows = 0;  // rows whose question code is not in the key
};

/// Responses CSV columns: participant_id, question_code, response. Multi-select
/// responses list the chosen options separated by ';'. Likert responses are a
/// level label or its 1-based number. Throws InputError on an empty table and
/// FormatError on unparseable or duplicate responses.
SurveyAnalysis analyze_survey(const QuestionKey& key, const CsvTable& responses, const SurveyConfig& config);

nlohmann::ordered_json survey_json(const SurveyAnalysis& analysis, const SurveyConfig& config);

}  // namespace screenrep
