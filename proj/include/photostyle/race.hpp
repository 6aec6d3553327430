#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace photostyle {

enum class RaceLabel { White = 0, AfricanAmerican = 1, Asian = 2, Hispanic = 3 };

inline constexpr std::size_t kRaceCount = 4;
inline constexpr std::array<RaceLabel, kRaceCount> kAllRaces = {
    RaceLabel::White, RaceLabel::AfricanAmerican, RaceLabel::Asian, RaceLabel::Hispanic};

std::string_view to_string(RaceLabel label);
std::optional<RaceLabel> parse_race(std::string_view text);
RaceLabel race_from_index(std::size_t index);

// Class label list in canonical index order, as stored in models.
std::vector<std::string> race_class_labels();

}  // namespace photostyle
