#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace notesim {

// A metric that may be undefined (zero denominator, empty set). Never
// collapsed to 0.
using MaybeReal = std::optional<double>;

enum class Group : std::uint8_t { Plus, Minus };

constexpr Group other(Group g) noexcept { return g == Group::Plus ? Group::Minus : Group::Plus; }
constexpr std::string_view to_string(Group g) noexcept { return g == Group::Plus ? "plus" : "minus"; }

enum class BadMode : std::uint8_t { None, Indiscriminate, Coordinated };

std::string_view to_string(BadMode m) noexcept;
BadMode parse_bad_mode(std::string_view s);

// Stored rating codes. Unassigned edges exist between graph construction and
// rating generation.
enum class Rating : std::int8_t { Unassigned = -1, NotHelpful = 0, Somewhat = 1, Helpful = 2 };

constexpr double rating_value(Rating r) noexcept {
    switch (r) {
        case Rating::Helpful: return 1.0;
        case Rating::Somewhat: return 0.5;
        case Rating::NotHelpful: return 0.0;
        case Rating::Unassigned: break;
    }
    return -1.0;
}

// Error hierarchy. The CLI maps Config/Format/Data/Lookup errors to exit code
// 2 and everything else to 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LookupError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OptimizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace notesim
