#include "screenrep/surveystats.hpp"

#include "screenrep/errors.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace screenrep {

std::string_view interval_kind_name(IntervalKind kind) { return kind == IntervalKind::HDI ? "hdi" : "equal_tailed"; }

IntervalKind parse_interval_kind(std::string_view name) {
    if (name == "hdi") return IntervalKind::HDI;
    if (name == "equal_tailed" || name == "equal-tailed" || name == "eti") return IntervalKind::EqualTailed;
    throw InputError("unknown interval kind '" + std::string(name) + "' (expected hdi or equal_tailed)");
}

namespace {

void check_mass(double mass) {
    if (!(mass > 0.0 && mass < 1.0)) throw InputError(fmt::format("interval mass must lie in (0, 1), got {}", mass));
}

}  // namespace

CredibleInterval interval_from_quantile(const std::function<double(double)>& quantile, double mean, double mass,
                                        IntervalKind kind) {
    check_mass(mass);
    CredibleInterval ci;
    ci.mass = mass;
    ci.mean = mean;
    ci.kind = kind;
    if (kind == IntervalKind::EqualTailed) {
        ci.low = quantile((1.0 - mass) / 2.0);
        ci.high = quantile((1.0 + mass) / 2.0);
        return ci;
    }

    const double span = 1.0 - mass;
    auto width = [&](double p) { return quantile(std::min(p + mass, 1.0)) - quantile(p); };
    // coarse scan first, so a flat or kinked width curve cannot trap the refinement
    constexpr int kScan = 256;
    int best = 0;
    double best_width = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kScan; ++i) {
        const double w = width(span * i / kScan);
        if (w < best_width) {
            best_width = w;
            best = i;
        }
    }
    const double lo = span * std::max(0, best - 1) / kScan;
    const double hi = span * std::min(kScan, best + 1) / kScan;
    const auto [p, w] = boost::math::tools::brent_find_minima(width, lo, hi, 52);
    const double p_best = w <= best_width ? p : span * best / kScan;
    ci.low = quantile(p_best);
    ci.high = quantile(std::min(p_best + mass, 1.0));
    return ci;
}

CredibleInterval correctness_ci(long long k, long long n, double prior_a, double prior_b, double mass,
                                IntervalKind kind) {
    if (n < 1) throw InputError(fmt::format("correctness_ci: need at least one trial, got {}", n));
    if (k < 0 || k > n) throw InputError(fmt::format("correctness_ci: {} correct out of {} trials", k, n));
    if (!(prior_a > 0.0 && prior_b > 0.0) || !std::isfinite(prior_a) || !std::isfinite(prior_b)) {
        throw InputError(fmt::format("correctness_ci: Beta prior parameters must be positive, got ({}, {})", prior_a, prior_b));
    }
    check_mass(mass);
    const double a = prior_a + static_cast<double>(k);
    const double b = prior_b + static_cast<double>(n - k);
    const boost::math::beta_distribution<double> posterior(a, b);
    return interval_from_quantile([&](double p) { return boost::math::quantile(posterior, p); }, a / (a + b), mass, kind);
}

TrialCounts multiselect_trials(std::span<const std::vector<int>> responses) {
    TrialCounts t;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        const auto& r = responses[i];
        if (r.size() != 4) {
            throw InputError(fmt::format("multiselect_trials: participant {} has {} entries, expected 4", i, r.size()));
        }
        for (int bit : r) {
            if (bit != 0 && bit != 1) throw InputError(fmt::format("multiselect_trials: participant {} has non-binary entry", i));
            t.n_correct += static_cast<std::size_t>(bit);
        }
        t.n_trials += 4;
    }
    return t;
}

namespace {

struct GridMarginal {
    std::vector<double> mu;
    std::vector<double> log_density;  // unnormalized log marginal density of the mean
};

GridMarginal likert_marginal(std::size_t n, double xbar, double ss, const LikertPriors& pr, const LikertGrid& g,
                             double mu_lo, double mu_hi) {
    const double log_lo = std::log(g.sd_min), log_hi = std::log(g.sd_max);
    const std::size_t ns = g.log_sd_points;
    std::vector<double> log_sd(ns), inv_var(ns), sd_term(ns);
    for (std::size_t j = 0; j < ns; ++j) {
        log_sd[j] = log_lo + (log_hi - log_lo) * static_cast<double>(j) / static_cast<double>(ns - 1);
        const double sd = std::exp(log_sd[j]);
        inv_var[j] = 1.0 / (sd * sd);
        // likelihood normalizer, half-normal prior and the d(sd) = sd d(log sd) Jacobian
        sd_term[j] = -static_cast<double>(n) * log_sd[j] - sd * sd / (2.0 * pr.sd_scale * pr.sd_scale) + log_sd[j];
    }

    GridMarginal out;
    const std::size_t nm = g.mean_points;
    out.mu.resize(nm);
    out.log_density.resize(nm);
    std::vector<double> terms(ns);
    for (std::size_t i = 0; i < nm; ++i) {
        const double mu = mu_lo + (mu_hi - mu_lo) * static_cast<double>(i) / static_cast<double>(nm - 1);
        const double dev = mu - xbar;
        const double sq = ss + static_cast<double>(n) * dev * dev;
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < ns; ++j) {
            terms[j] = sd_term[j] - 0.5 * sq * inv_var[j];
            top = std::max(top, terms[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < ns; ++j) sum += std::exp(terms[j] - top);
        const double z = (mu - pr.mean_loc) / pr.mean_scale;
        out.mu[i] = mu;
        out.log_density[i] = top + std::log(sum) - 0.5 * z * z;
    }
    return out;
}

}  // namespace

CredibleInterval likert_mean_ci(std::span<const double> scores, const LikertPriors& priors, double mass,
                                IntervalKind kind, const LikertGrid& grid) {
    if (scores.size() < 2) throw InputError(fmt::format("likert_mean_ci: need at least 2 scores, got {}", scores.size()));
    for (double s : scores) {
        if (!std::isfinite(s)) throw InputError("likert_mean_ci: non-finite score");
    }
    if (!(priors.mean_scale > 0.0 && priors.sd_scale > 0.0) || !std::isfinite(priors.mean_loc)) {
        throw InputError("likert_mean_ci: prior scales must be positive");
    }
    if (grid.mean_points < 16 || grid.log_sd_points < 16 || !(grid.sd_min > 0.0 && grid.sd_max > grid.sd_min)) {
        throw InputError("likert_mean_ci: invalid grid");
    }
    check_mass(mass);

    // sorted so the sufficient statistics do not depend on input order
    std::vector<double> x(scores.begin(), scores.end());
    std::sort(x.begin(), x.end());
    const std::size_t n = x.size();
    const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - xbar) * (v - xbar);

    // pass 1 locates the posterior support, pass 2 resolves it
    const double wide = 8.0 * priors.mean_scale;
    double lo = std::min(x.front(), priors.mean_loc) - wide;
    double hi = std::max(x.back(), priors.mean_loc) + wide;
    LikertGrid coarse = grid;
    coarse.mean_points = std::max<std::size_t>(1001, grid.mean_points / 4);
    const GridMarginal first = likert_marginal(n, xbar, ss, priors, coarse, lo, hi);
    const double peak = *std::max_element(first.log_density.begin(), first.log_density.end());
    std::size_t a = first.mu.size(), b = 0;
    for (std::size_t i = 0; i < first.mu.size(); ++i) {
        if (first.log_density[i] > peak - 40.0) {
            a = std::min(a, i);
            b = std::max(b, i);
        }
    }
    a = a > 0 ? a - 1 : 0;
    b = std::min(first.mu.size() - 1, b + 1);
    lo = first.mu[a];
    hi = first.mu[b];

    const GridMarginal m = likert_marginal(n, xbar, ss, priors, grid, lo, hi);
    const double top = *std::max_element(m.log_density.begin(), m.log_density.end());
    const std::size_t np = m.mu.size();
    std::vector<double> dens(np), cdf(np, 0.0);
    for (std::size_t i = 0; i < np; ++i) dens[i] = std::exp(m.log_density[i] - top);
    double moment = 0.0;
    for (std::size_t i = 1; i < np; ++i) {
        const double h = m.mu[i] - m.mu[i - 1];
        cdf[i] = cdf[i - 1] + 0.5 * h * (dens[i] + dens[i - 1]);
        moment += 0.5 * h * (dens[i] * m.mu[i] + dens[i - 1] * m.mu[i - 1]);
    }
    const double total = cdf.back();
    for (double& c : cdf) c /= total;

    auto quantile = [&](double p) {
        if (p <= 0.0) return m.mu.front();
        if (p >= 1.0) return m.mu.back();
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), p);
        const std::size_t i = static_cast<std::size_t>(it - cdf.begin());
        if (i == 0) return m.mu.front();
        const double span = cdf[i] - cdf[i - 1];
        const double t = span > 0.0 ? (p - cdf[i - 1]) / span : 0.0;
        return m.mu[i - 1] + t * (m.mu[i] - m.mu[i - 1]);
    };
    return interval_from_quantile(quantile, moment / total, mass, kind);
}

// Survey data ---------------------------------------------------------------

namespace {

std::string normalize(std::string_view s) {
    std::string out;
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return out;
    const auto last = s.find_last_not_of(" \t");
    for (char c : s.substr(first, last - first + 1)) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.emplace_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

QuestionKind parse_kind(const std::string& s, const std::string& code) {
    if (s == "single") return QuestionKind::Single;
    if (s == "multi") return QuestionKind::Multi;
    if (s == "likert") return QuestionKind::Likert;
    throw FormatError("question " + code + ": unknown kind '" + s + "'");
}

std::string_view kind_name(QuestionKind k) {
    switch (k) {
        case QuestionKind::Single: return "single";
        case QuestionKind::Multi: return "multi";
        case QuestionKind::Likert: return "likert";
    }
    return "single";
}

// Index of `answer` among `options`: by label (case-insensitive) or by 1-based number.
std::optional<std::size_t> option_index(const std::vector<std::string>& options, const std::string& answer) {
    const std::string a = normalize(answer);
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (normalize(options[i]) == a) return i;
    }
    if (!a.empty() && std::all_of(a.begin(), a.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) &&
        a.size() < 4) {
        const std::size_t v = std::stoul(a);
        if (v >= 1 && v <= options.size()) return v - 1;
    }
    return std::nullopt;
}

}  // namespace

const Question* QuestionKey::find(std::string_view code) const {
    for (const auto& q : questions) {
        if (q.code == code) return &q;
    }
    return nullptr;
}

QuestionKey parse_question_key(const nlohmann::json& doc) {
    QuestionKey key;
    try {
        key.idk = doc.value("idk", std::string("idk"));
        std::set<std::string> seen;
        for (const auto& item : doc.at("questions")) {
            Question q;
            q.code = item.at("code").get<std::string>();
            if (!seen.insert(q.code).second) throw FormatError("question key: duplicate code " + q.code);
            q.kind = parse_kind(item.at("kind").get<std::string>(), q.code);
            q.text = item.value("text", std::string());
            q.options = item.at("options").get<std::vector<std::string>>();
            if (q.options.size() < 2) throw FormatError("question " + q.code + ": needs at least two options");
            if (item.contains("correct") && !item["correct"].is_null()) {
                if (item["correct"].is_string()) {
                    q.correct = {item["correct"].get<std::string>()};
                } else {
                    q.correct = item["correct"].get<std::vector<std::string>>();
                }
            }
            for (const auto& c : q.correct) {
                if (!option_index(q.options, c)) throw FormatError("question " + q.code + ": answer '" + c + "' is not an option");
            }
            if (q.kind == QuestionKind::Single && q.correct.size() > 1) {
                throw FormatError("question " + q.code + ": single-choice question with several answers");
            }
            key.questions.push_back(std::move(q));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("question key: ") + e.what());
    }
    return key;
}

QuestionKey load_question_key(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return parse_question_key(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

SurveyAnalysis analyze_survey(const QuestionKey& key, const CsvTable& table, const SurveyConfig& config) {
    if (table.size() == 0) throw InputError(table.source() + ": no responses");
    const std::size_t c_pid = table.require_column("participant_id");
    const std::size_t c_code = table.require_column("question_code");
    const std::size_t c_resp = table.require_column("response");

    struct Acc {
        std::size_t responses = 0, excluded = 0;
        std::size_t correct = 0, trials = 0;
        std::vector<double> scores;
        std::set<std::string> participants;
    };
    std::map<std::string, Acc> acc;
    SurveyAnalysis out;
    const std::string idk = normalize(key.idk);

    for (std::size_t r = 0; r < table.size(); ++r) {
        const auto& row = table.rows()[r];
        const Question* q = key.find(row[c_code]);
        if (!q) {
            ++out.ignored_rows;
            continue;
        }
        const auto where = [&] { return fmt::format("{}:{}", table.source(), table.line_of(r)); };
        Acc& a = acc[q->code];
        if (!a.participants.insert(row[c_pid]).second) {
            throw FormatError(fmt::format("{}: participant {} answered {} twice", where(), row[c_pid], q->code));
        }
        ++a.responses;
        const std::string& resp = row[c_resp];
        const std::string norm = normalize(resp);

        if (q->kind == QuestionKind::Likert) {
            if (norm.empty() || norm == idk) {
                ++a.excluded;
                continue;
            }
            const auto idx = option_index(q->options, resp);
            if (!idx) throw FormatError(fmt::format("{}: '{}' is not a level of {}", where(), resp, q->code));
            a.scores.push_back(static_cast<double>(*idx + 1));
            continue;
        }

        std::vector<std::string> picks = q->kind == QuestionKind::Multi ? split(resp, ';') : std::vector<std::string>{resp};
        std::erase_if(picks, [](const std::string& p) { return normalize(p).empty(); });
        const bool has_idk = std::any_of(picks.begin(), picks.end(), [&](const std::string& p) { return normalize(p) == idk; });
        if (has_idk || (q->kind == QuestionKind::Single && picks.empty())) {
            ++a.excluded;
            continue;
        }
        std::vector<int> selected(q->options.size(), 0);
        for (const auto& p : picks) {
            const auto idx = option_index(q->options, p);
            if (!idx) throw FormatError(fmt::format("{}: '{}' is not an option of {}", where(), p, q->code));
            selected[*idx] = 1;
        }
        if (q->correct.empty()) continue;
        std::vector<int> in_key(q->options.size(), 0);
        for (const auto& c : q->correct) in_key[*option_index(q->options, c)] = 1;

        if (q->kind == QuestionKind::Single) {
            a.correct += selected == in_key ? 1 : 0;
            a.trials += 1;
        } else {
            // one trial per option: correct when the selection agrees with the key
            std::vector<int> bits(q->options.size());
            for (std::size_t j = 0; j < bits.size(); ++j) bits[j] = selected[j] == in_key[j] ? 1 : 0;
            a.correct += static_cast<std::size_t>(std::accumulate(bits.begin(), bits.end(), 0));
            a.trials += bits.size();
        }
    }

    for (const Question& q : key.questions) {
        QuestionResult res;
        res.code = q.code;
        res.kind = q.kind;
        const auto it = acc.find(q.code);
        const Acc empty;
        const Acc& a = it == acc.end() ? empty : it->second;
        res.n_responses = a.responses;
        res.n_excluded = a.excluded;
        res.n_eff = a.responses - a.excluded;
        if (q.kind == QuestionKind::Likert) {
            if (!a.scores.empty()) {
                res.sample_mean = std::accumulate(a.scores.begin(), a.scores.end(), 0.0) / static_cast<double>(a.scores.size());
            }
            if (a.scores.size() >= 2) res.interval = likert_mean_ci(a.scores, config.likert, config.mass, config.kind);
        } else {
            res.has_key = !q.correct.empty();
            if (res.has_key) {
                res.counts = TrialCounts{a.correct, a.trials};
                if (a.trials > 0) {
                    res.interval = correctness_ci(static_cast<long long>(a.correct), static_cast<long long>(a.trials),
                                                  config.beta_a, config.beta_b, config.mass, config.kind);
                }
            }
        }
        out.questions.push_back(std::move(res));
    }
    return out;
}

nlohmann::ordered_json survey_json(const SurveyAnalysis& analysis, const SurveyConfig& config) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["schema_version"] = 1;
    doc["kind"] = "survey";
    doc["interval"] = {{"kind", interval_kind_name(config.kind)}, {"mass", config.mass}};
    doc["priors"] = {{"correctness", {{"beta_a", config.beta_a}, {"beta_b", config.beta_b}}},
                     {"likert",
                      {{"mean_loc", config.likert.mean_loc},
                       {"mean_scale", config.likert.mean_scale},
                       {"sd_half_normal_scale", config.likert.sd_scale}}}};
    ordered_json correctness = ordered_json::array(), likert = ordered_json::array();
    for (const QuestionResult& r : analysis.questions) {
        ordered_json q;
        q["code"] = r.code;
        q["kind"] = kind_name(r.kind);
        q["n_responses"] = r.n_responses;
        q["n_excluded"] = r.n_excluded;
        q["n_eff"] = r.n_eff;
        if (r.kind == QuestionKind::Likert) {
            q["sample_mean"] = r.sample_mean ? ordered_json(*r.sample_mean) : ordered_json(nullptr);
        } else {
            q["answer_key"] = r.has_key;
            q["n_correct"] = r.counts ? ordered_json(r.counts->n_correct) : ordered_json(nullptr);
            q["n_trials"] = r.counts ? ordered_json(r.counts->n_trials) : ordered_json(nullptr);
        }
        if (r.interval) {
            q["mean"] = r.interval->mean;
            q["low"] = r.interval->low;
            q["high"] = r.interval->high;
        } else {
            q["mean"] = q["low"] = q["high"] = nullptr;
        }
        (r.kind == QuestionKind::Likert ? likert : correctness).push_back(std::move(q));
    }
    doc["correctness"] = std::move(correctness);
    doc["likert"] = std::move(likert);
    doc["ignored_rows"] = analysis.ignored_rows;
    return doc;
}

}  // namespace screenrep
