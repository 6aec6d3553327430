#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "photostyle/corpus.hpp"
#include "photostyle/csv.hpp"
#include "photostyle/pipeline.hpp"
#include "photostyle/race.hpp"
#include "photostyle/stats.hpp"

namespace photostyle {

struct MemberPhotoDemographics {
  std::string member_id;
  std::array<std::size_t, kRaceCount> counts{};
  std::array<double, kRaceCount> proportions{};
  std::size_t n_faces = 0;
  bool insufficient = true;  // no faces

  friend bool operator==(const MemberPhotoDemographics&, const MemberPhotoDemographics&) = default;
};

struct AggregateResult {
  std::vector<MemberPhotoDemographics> rows;  // roster order
  std::size_t self_faces_removed = 0;
};

// One row per roster member. With exclude_self, one face per photo whose
// label equals the member's recorded race (White when is_white) is dropped.
AggregateResult aggregate_demographics(const std::vector<ClassifiedFace>& faces,
                                       const std::vector<LegislatorRecord>& roster, bool exclude_self);

MemberPhotoDemographics demographics_from_counts(std::string member_id,
                                                 const std::array<std::size_t, kRaceCount>& counts);

// Column suffixes per label: white, black, asian, hispanic.
std::string_view race_column_suffix(RaceLabel label);

extern const std::vector<std::string> kDemographicsColumns;
Table demographics_to_table(const std::vector<MemberPhotoDemographics>& rows);
std::vector<MemberPhotoDemographics> demographics_from_table(const Table& table);

struct DistrictDemographics {
  std::string geo_id;  // "NY" or "NY-25"
  double pct_white = 0.0;
  double pct_black = 0.0;
  double pct_hispanic = 0.0;
  double pct_asian = 0.0;

  double pct(RaceLabel label) const;
};

inline const std::vector<std::string> kAcsColumns = {"geo_id", "pct_white", "pct_black", "pct_hispanic",
                                                     "pct_asian"};
std::vector<DistrictDemographics> acs_from_table(const Table& table);
Table acs_to_table(const std::vector<DistrictDemographics>& rows);

// Senators map to their state, representatives to state-district.
std::string geo_id(const LegislatorRecord& member);

struct JoinedRow {
  LegislatorRecord member;
  MemberPhotoDemographics photos;
  DistrictDemographics acs;
};

std::vector<JoinedRow> join_acs(const std::vector<MemberPhotoDemographics>& demo,
                                const std::vector<DistrictDemographics>& acs,
                                const std::vector<LegislatorRecord>& roster);

extern const std::vector<std::string> kJoinedColumns;
Table joined_to_table(const std::vector<JoinedRow>& rows);

struct ModelResult {
  std::string model;  // e.g. "house_D_black_ols"
  std::optional<RegressionResult> fit;
  std::string skipped;  // reason when fit is empty
};

// Per chamber, party and label (black, white): OLS of photo proportion on
// ACS share; for the House also state fixed effects of ACS share on photo
// proportion. Rows not flagged is_white are left out.
std::vector<ModelResult> compare_demographics(const std::vector<JoinedRow>& rows);

inline const std::vector<std::string> kRegressionColumns = {"model", "term", "estimate", "std_error",
                                                            "r_squared", "n_obs", "note"};
Table regressions_to_table(const std::vector<ModelResult>& models);

// Survey experiment.
inline const std::vector<std::string> kExperimentArms = {
    "control", "white_man", "white_woman", "african_american_man", "african_american_woman", "hispanic_man",
    "asian_man"};
inline const std::vector<std::string> kResponseColumns = {
    "respondent_id", "arm", "party_guess", "shares_values", "trustworthy", "strong_leader", "knowledgeable",
    "respondent_race"};

struct GroupComparison {
  std::string outcome;
  std::string arm;
  std::size_t n = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> wilcoxon_p;  // ordinal outcomes, treatment arms only
};

// party_guess: share guessing Democrat (proportion_ci). Agreement outcomes
// (1-5): mean_ci and Wilcoxon against control; shares_values is computed
// among respondents whose respondent_race is not "white". Blank cells are
// missing values.
std::vector<GroupComparison> experiment_table(const Table& responses);

inline const std::vector<std::string> kComparisonColumns = {"outcome", "arm",     "n",         "mean",
                                                            "ci_low",  "ci_high", "wilcoxon_p"};
Table comparisons_to_table(const std::vector<GroupComparison>& rows);

}  // namespace photostyle
