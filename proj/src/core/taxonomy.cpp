#include "screenrep/taxonomy.hpp"

#include "screenrep/errors.hpp"

namespace screenrep {

std::span<const std::string_view> class_names(Task task) {
    if (task == Task::Gender) return kGenderClasses;
    return kAgeClasses;
}

std::string_view task_name(Task task) { return task == Task::Gender ? "gender" : "age"; }

Task parse_task(std::string_view name) {
    if (name == "gender") return Task::Gender;
    if (name == "age") return Task::Age;
    throw InputError("unknown task '" + std::string(name) + "' (expected gender or age)");
}

std::optional<std::size_t> parse_gender(std::string_view label) {
    for (std::size_t i = 0; i < kGenderClasses.size(); ++i) {
        if (kGenderClasses[i] == label) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> parse_age_group(std::string_view label) {
    if (label == "more than 70") return kAgeClasses.size() - 1;
    for (std::size_t i = 0; i < kAgeClasses.size(); ++i) {
        if (kAgeClasses[i] == label) return i;
    }
    return std::nullopt;
}

}  // namespace screenrep
