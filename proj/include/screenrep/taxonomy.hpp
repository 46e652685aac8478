#pragma once

// Perceived gender / age label sets used by the FairFace annotations.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace screenrep {

enum class Task { Gender, Age };

inline constexpr std::array<std::string_view, 2> kGenderClasses{"Female", "Male"};

inline constexpr std::array<std::string_view, 9> kAgeClasses{
    "0-2", "3-9", "10-19", "20-29", "30-39", "40-49", "50-59", "60-69", "70+",
};

inline constexpr std::size_t kFemale = 0;
inline constexpr std::size_t kMale = 1;

/// Index of the first age group counted as "Over 50" (50-59, 60-69, 70+).
inline constexpr std::size_t kFirstOver50Group = 6;

std::span<const std::string_view> class_names(Task task);
std::string_view task_name(Task task);
Task parse_task(std::string_view name);

/// Case-sensitive. Accepts the canonical names above; for age also the
/// FairFace CSV spelling "more than 70".
std::optional<std::size_t> parse_gender(std::string_view label);
std::optional<std::size_t> parse_age_group(std::string_view label);

inline bool is_over50(std::size_t age_group) { return age_group >= kFirstOver50Group; }

}  // namespace screenrep
