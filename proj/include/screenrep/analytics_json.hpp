#pragma once

// Analytics document v1, the contract consumed by the viewer:
//
// {
//   "schema_version": 1,
//   "film_id": "...",
//   "n_faces": 6841,
//   "gender": {"female_pct", "male_pct", "confidence_pct"},
//   "age": {"over50_pct", "upto50_pct", "confidence_pct"},
//   "intersection": {"female_over50_pct", "female_upto50_pct", "male_over50_pct", "male_upto50_pct"},
//   "bias": null | {"validation_set", "gender": {"n", "actual": {...}, "predicted": {...}},
//                   "age": {"n", "actual": {...}, "predicted": {...}}},
//   "config_fingerprint": "..."
// }
//
// Percentages carry two decimals.

#include "screenrep/aggregate.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace screenrep {

inline constexpr int kAnalyticsSchemaVersion = 1;

nlohmann::ordered_json analytics_to_json(const FilmAnalytics& analytics);

/// Pretty-printed document with a trailing newline; byte-stable for equal inputs.
std::string serialize_analytics(const FilmAnalytics& analytics);

/// Null when the document is valid, otherwise "<field path>: <problem>".
std::optional<std::string> validate_analytics(const nlohmann::json& document);

/// Bias profile file written by the benchmark and read by analyze. Holds the
/// raw counts so the profile round-trips exactly.
nlohmann::ordered_json bias_file_json(const BiasProfile& bias);
BiasProfile parse_bias_file(const nlohmann::json& document);

}  // namespace screenrep
