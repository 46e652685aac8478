#include "screenrep/analytics_json.hpp"

#include "screenrep/errors.hpp"

#include <cmath>

namespace screenrep {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double two_decimals(std::int64_t hundredths) { return static_cast<double>(hundredths) / 100.0; }

std::int64_t share(std::size_t count, std::size_t n) {
    if (n == 0) return 0;
    return static_cast<std::int64_t>((static_cast<unsigned __int128>(count) * 20000u + n) / (2u * n));
}

ordered_json pair_json(const char* first, std::int64_t first_hundredths, const char* second) {
    ordered_json out;
    out[first] = two_decimals(first_hundredths);
    out[second] = two_decimals(10000 - first_hundredths);
    return out;
}

ordered_json bias_json(const BiasProfile& b) {
    ordered_json out;
    out["validation_set"] = b.validation_set;
    ordered_json gender;
    gender["n"] = b.n_gender;
    gender["actual"] = pair_json("female_pct", share(b.actual_female, b.n_gender), "male_pct");
    gender["predicted"] = pair_json("female_pct", share(b.predicted_female, b.n_gender), "male_pct");
    ordered_json age;
    age["n"] = b.n_age;
    age["actual"] = pair_json("over50_pct", share(b.actual_over50, b.n_age), "upto50_pct");
    age["predicted"] = pair_json("over50_pct", share(b.predicted_over50, b.n_age), "upto50_pct");
    out["gender"] = std::move(gender);
    out["age"] = std::move(age);
    return out;
}

}  // namespace

ordered_json analytics_to_json(const FilmAnalytics& a) {
    const RoundedShares& r = a.rounded;
    ordered_json doc;
    doc["schema_version"] = kAnalyticsSchemaVersion;
    doc["film_id"] = a.film_id;
    doc["n_faces"] = a.n_faces;
    doc["gender"] = {{"female_pct", two_decimals(r.female)},
                     {"male_pct", two_decimals(r.male)},
                     {"confidence_pct", two_decimals(r.gender_confidence)}};
    doc["age"] = {{"over50_pct", two_decimals(r.over50)},
                  {"upto50_pct", two_decimals(r.upto50)},
                  {"confidence_pct", two_decimals(r.age_confidence)}};
    doc["intersection"] = {{"female_over50_pct", two_decimals(r.female_over50)},
                           {"female_upto50_pct", two_decimals(r.female_upto50)},
                           {"male_over50_pct", two_decimals(r.male_over50)},
                           {"male_upto50_pct", two_decimals(r.male_upto50)}};
    doc["bias"] = a.bias ? bias_json(*a.bias) : ordered_json(nullptr);
    doc["config_fingerprint"] = a.config_fingerprint;
    return doc;
}

std::string serialize_analytics(const FilmAnalytics& analytics) { return analytics_to_json(analytics).dump(2) + "\n"; }

namespace {

struct Checker {
    const json& root;
    std::optional<std::string> error;

    const json* field(const json& parent, const std::string& path, const char* key) {
        if (error) return nullptr;
        if (!parent.is_object() || !parent.contains(key)) {
            error = path + key + ": missing";
            return nullptr;
        }
        return &parent.at(key);
    }

    const json* object(const json& parent, const std::string& path, const char* key) {
        const json* v = field(parent, path, key);
        if (v && !v->is_object()) {
            error = path + key + ": expected an object";
            return nullptr;
        }
        return v;
    }

    double percent(const json& parent, const std::string& path, const char* key) {
        const json* v = field(parent, path, key);
        if (!v) return 0.0;
        if (!v->is_number()) {
            error = path + key + ": expected a number";
            return 0.0;
        }
        const double x = v->get<double>();
        if (!std::isfinite(x) || x < 0.0 || x > 100.0) {
            error = path + key + ": outside [0, 100]";
            return 0.0;
        }
        return x;
    }

    void sums_to(double value, double expected, const std::string& what) {
        if (!error && std::abs(value - expected) > 1e-6) error = what;
    }

    void pair(const json& parent, const std::string& path, const char* a, const char* b) {
        const double x = percent(parent, path, a);
        const double y = percent(parent, path, b);
        sums_to(x + y, 100.0, path + a + ": " + a + " + " + b + " must equal 100");
    }
};

}  // namespace

std::optional<std::string> validate_analytics(const json& doc) {
    if (!doc.is_object()) return std::string("document: expected an object");
    Checker c{doc, std::nullopt};

    if (const json* v = c.field(doc, "", "schema_version"); v && (!v->is_number_integer() || v->get<int>() != kAnalyticsSchemaVersion)) {
        return std::string("schema_version: expected ") + std::to_string(kAnalyticsSchemaVersion);
    }
    if (const json* v = c.field(doc, "", "film_id"); v && (!v->is_string() || v->get<std::string>().empty())) {
        return std::string("film_id: expected a non-empty string");
    }
    if (const json* v = c.field(doc, "", "n_faces"); v && (!v->is_number_integer() || v->get<std::int64_t>() < 1)) {
        return std::string("n_faces: expected a positive integer");
    }

    double female = 0.0;
    if (const json* g = c.object(doc, "", "gender")) {
        c.pair(*g, "gender.", "female_pct", "male_pct");
        female = c.percent(*g, "gender.", "female_pct");
        c.percent(*g, "gender.", "confidence_pct");
    }
    if (const json* a = c.object(doc, "", "age")) {
        c.pair(*a, "age.", "over50_pct", "upto50_pct");
        c.percent(*a, "age.", "confidence_pct");
    }
    if (const json* in = c.object(doc, "", "intersection")) {
        const double fo = c.percent(*in, "intersection.", "female_over50_pct");
        const double fu = c.percent(*in, "intersection.", "female_upto50_pct");
        const double mo = c.percent(*in, "intersection.", "male_over50_pct");
        const double mu = c.percent(*in, "intersection.", "male_upto50_pct");
        c.sums_to(fo + fu + mo + mu, 100.0, "intersection: the four shares must sum to 100");
        c.sums_to(fo + fu, female, "intersection.female_over50_pct: female shares must sum to gender.female_pct");
    }
    if (const json* b = c.field(doc, "", "bias"); b && !b->is_null()) {
        if (!b->is_object()) return std::string("bias: expected an object or null");
        if (const json* g = c.object(*b, "bias.", "gender")) {
            if (const json* act = c.object(*g, "bias.gender.", "actual")) c.pair(*act, "bias.gender.actual.", "female_pct", "male_pct");
            if (const json* pred = c.object(*g, "bias.gender.", "predicted"))
                c.pair(*pred, "bias.gender.predicted.", "female_pct", "male_pct");
        }
        if (const json* a = c.object(*b, "bias.", "age")) {
            if (const json* act = c.object(*a, "bias.age.", "actual")) c.pair(*act, "bias.age.actual.", "over50_pct", "upto50_pct");
            if (const json* pred = c.object(*a, "bias.age.", "predicted"))
                c.pair(*pred, "bias.age.predicted.", "over50_pct", "upto50_pct");
        }
    }
    if (const json* v = c.field(doc, "", "config_fingerprint"); v && !v->is_string()) {
        return std::string("config_fingerprint: expected a string");
    }
    return c.error;
}

ordered_json bias_file_json(const BiasProfile& b) {
    ordered_json out;
    out["schema_version"] = kAnalyticsSchemaVersion;
    out["kind"] = "bias_profile";
    out["validation_set"] = b.validation_set;
    out["gender"] = {{"n", b.n_gender}, {"actual_female", b.actual_female}, {"predicted_female", b.predicted_female}};
    out["age"] = {{"n", b.n_age}, {"actual_over50", b.actual_over50}, {"predicted_over50", b.predicted_over50}};
    out["display"] = bias_json(b);
    return out;
}

BiasProfile parse_bias_file(const json& doc) {
    try {
        if (doc.at("kind") != "bias_profile") throw FormatError("bias file: kind must be bias_profile");
        BiasProfile b;
        b.validation_set = doc.at("validation_set").get<std::string>();
        b.n_gender = doc.at("gender").at("n").get<std::size_t>();
        b.actual_female = doc.at("gender").at("actual_female").get<std::size_t>();
        b.predicted_female = doc.at("gender").at("predicted_female").get<std::size_t>();
        b.n_age = doc.at("age").at("n").get<std::size_t>();
        b.actual_over50 = doc.at("age").at("actual_over50").get<std::size_t>();
        b.predicted_over50 = doc.at("age").at("predicted_over50").get<std::size_t>();
        if (b.actual_female > b.n_gender || b.predicted_female > b.n_gender || b.actual_over50 > b.n_age ||
            b.predicted_over50 > b.n_age) {
            throw FormatError("bias file: counts exceed n");
        }
        return b;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bias file: ") + e.what());
    }
}

}  // namespace screenrep
