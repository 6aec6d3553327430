#include "photostyle/race.hpp"

#include "photostyle/error.hpp"

namespace photostyle {

namespace {
constexpr std::array<std::string_view, kRaceCount> kNames = {"White", "AfricanAmerican", "Asian",
                                                             "Hispanic"};
}

std::string_view to_string(RaceLabel label) { return kNames[static_cast<std::size_t>(label)]; }

std::optional<RaceLabel> parse_race(std::string_view text) {
  for (std::size_t i = 0; i < kRaceCount; ++i) {
    if (kNames[i] == text) return static_cast<RaceLabel>(i);
  }
  return std::nullopt;
}

RaceLabel race_from_index(std::size_t index) {
  if (index >= kRaceCount) throw LabelError("race index " + std::to_string(index) + " out of range");
  return static_cast<RaceLabel>(index);
}

std::vector<std::string> race_class_labels() { return {kNames.begin(), kNames.end()}; }

}  // namespace photostyle
