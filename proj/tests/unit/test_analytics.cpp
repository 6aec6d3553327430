#include <gtest/gtest.h>

#include <random>

#include "photostyle/analytics.hpp"
#include "photostyle/error.hpp"

using namespace photostyle;

namespace {

LegislatorRecord rep(std::string id, std::string party, std::string state, int district, bool white = true) {
  return {std::move(id), "", Chamber::House, std::move(party), std::move(state), district, std::nullopt, white};
}

LegislatorRecord sen(std::string id, std::string party, std::string state) {
  return {std::move(id), "", Chamber::Senate, std::move(party), std::move(state), std::nullopt, std::nullopt, true};
}

ClassifiedFace face(std::string member, std::string photo, RaceLabel label) {
  return {std::move(photo), std::move(member), FaceBox{}, label, 0.9};
}

Table responses(const std::vector<std::tuple<std::string, std::string, std::string, std::string>>& rows) {
  Table t;
  t.columns = kResponseColumns;
  int id = 0;
  for (const auto& [arm, party, score, race] : rows) {
    t.add_row({std::to_string(++id), arm, party, score, score, score, score, race});
  }
  return t;
}

}  // namespace

TEST(Aggregate, Proportions) {
  const std::vector<LegislatorRecord> roster = {rep("A", "D", "NY", 1), rep("B", "R", "TX", 2)};
  const std::vector<ClassifiedFace> faces = {face("A", "1", RaceLabel::White), face("A", "2", RaceLabel::White),
                                             face("A", "3", RaceLabel::White),
                                             face("A", "4", RaceLabel::AfricanAmerican)};
  const auto r = aggregate_demographics(faces, roster, false);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].proportions, (std::array<double, 4>{0.75, 0.25, 0.0, 0.0}));
  EXPECT_FALSE(r.rows[0].insufficient);
  EXPECT_EQ(r.rows[1].n_faces, 0u);
  EXPECT_TRUE(r.rows[1].insufficient);
  EXPECT_EQ(r.rows[1].proportions, (std::array<double, 4>{}));
  EXPECT_THROW(aggregate_demographics({face("Z", "1", RaceLabel::Asian)}, roster, false), ReferenceError);
}

TEST(Aggregate, ProportionsSumToOne) {
  std::mt19937_64 rng(77);
  const std::vector<LegislatorRecord> roster = {rep("A", "D", "NY", 1), rep("B", "R", "TX", 2), sen("C", "D", "CA")};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ClassifiedFace> faces;
    const auto n = rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      faces.push_back(face(roster[rng() % 3].member_id, std::to_string(i), kAllRaces[rng() % 4]));
    }
    for (const auto& row : aggregate_demographics(faces, roster, false).rows) {
      if (row.n_faces == 0) continue;
      double s = 0;
      for (double p : row.proportions) s += p;
      ASSERT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Aggregate, ExcludeSelfRemovesOneMatchingFacePerPhoto) {
  const std::vector<LegislatorRecord> roster = {rep("A", "D", "NY", 1), rep("B", "R", "TX", 2, false)};
  const std::vector<ClassifiedFace> faces = {
      face("A", "p1", RaceLabel::White), face("A", "p1", RaceLabel::White), face("A", "p1", RaceLabel::Asian),
      face("A", "p2", RaceLabel::Asian), face("B", "p3", RaceLabel::White)};
  const auto r = aggregate_demographics(faces, roster, true);
  EXPECT_EQ(r.self_faces_removed, 1u);
  EXPECT_EQ(r.rows[0].counts, (std::array<std::size_t, 4>{1, 0, 2, 0}));
  EXPECT_EQ(r.rows[1].counts[0], 1u);
}

TEST(Aggregate, TableRoundTrip) {
  const std::vector<LegislatorRecord> roster = {rep("A", "D", "NY", 1)};
  const auto rows = aggregate_demographics({face("A", "1", RaceLabel::Hispanic)}, roster, false).rows;
  EXPECT_EQ(demographics_from_table(parse_csv(format_csv(demographics_to_table(rows)))), rows);
}

TEST(Join, ChamberRules) {
  const std::vector<LegislatorRecord> roster = {rep("A", "D", "NY", 25), sen("S", "R", "NY")};
  const std::vector<DistrictDemographics> acs = {{"NY", 0.6, 0.15, 0.2, 0.05}, {"NY-25", 0.7, 0.1, 0.1, 0.1}};
  const auto demo = aggregate_demographics({}, roster, false).rows;
  const auto joined = join_acs(demo, acs, roster);
  ASSERT_EQ(joined.size(), 2u);
  EXPECT_EQ(joined[0].acs.geo_id, "NY-25");
  EXPECT_EQ(joined[1].acs.geo_id, "NY");
  try {
    join_acs(demo, {acs[0]}, roster);
    FAIL();
  } catch (const JoinError& e) {
    EXPECT_NE(std::string(e.what()).find("A (NY-25)"), std::string::npos);
  }
  EXPECT_EQ(joined_to_table(joined).rows.size(), 2u);
}

TEST(Compare, DemocratSlopeExceedsRepublican) {
  std::vector<LegislatorRecord> roster;
  std::vector<DistrictDemographics> acs;
  std::vector<MemberPhotoDemographics> demo;
  const double black[] = {0.1, 0.3, 0.5, 0.2};
  for (int i = 0; i < 4; ++i) {
    for (const std::string party : {"D", "R"}) {
      const int district = i * 2 + (party == "R");
      const std::string state = i < 2 ? "NY" : "TX";
      const std::string id = party + std::to_string(i);
      roster.push_back(rep(id, party, state, district));
      acs.push_back({state + "-" + std::to_string(district), 1 - black[i], black[i], 0, 0});
      const std::size_t b = party == "D" ? static_cast<std::size_t>(black[i] * 10) : 2;
      demo.push_back(demographics_from_counts(id, {10 - b, b, 0, 0}));
    }
  }
  const auto models = compare_demographics(join_acs(demo, acs, roster));
  const ModelResult* d = nullptr;
  const ModelResult* r = nullptr;
  for (const auto& m : models) {
    if (m.model == "house_D_black_ols") d = &m;
    if (m.model == "house_R_black_ols") r = &m;
  }
  ASSERT_TRUE(d && d->fit);
  ASSERT_TRUE(r && r->fit);
  EXPECT_NEAR(d->fit->coefficients[1], 1.0, 1e-12);
  EXPECT_NEAR(r->fit->coefficients[1], 0.0, 1e-12);
  // Senate models have no rows and are reported as skipped.
  for (const auto& m : models) {
    if (m.model.starts_with("senate")) EXPECT_FALSE(m.fit.has_value());
  }
  const auto table = regressions_to_table(models);
  EXPECT_EQ(table.columns, kRegressionColumns);
}

TEST(Experiment, ReproducesConstructedShares) {
  std::vector<std::tuple<std::string, std::string, std::string, std::string>> rows;
  const std::vector<std::pair<std::string, int>> democrats = {
      {"control", 40}, {"white_man", 36}, {"white_woman", 44}, {"african_american_man", 62},
      {"african_american_woman", 62}, {"hispanic_man", 38}, {"asian_man", 42}};
  for (const auto& [arm, k] : democrats) {
    for (int i = 0; i < 100; ++i) rows.emplace_back(arm, i < k ? "Democrat" : "Republican", std::to_string(1 + i % 5), "black");
  }
  const auto table = experiment_table(responses(rows));
  for (const auto& g : table) {
    if (g.outcome != "party_guess_democrat") continue;
    for (const auto& [arm, k] : democrats) {
      if (arm == g.arm) EXPECT_DOUBLE_EQ(g.mean, k / 100.0);
    }
    EXPECT_LE(g.ci_low, g.mean);
    EXPECT_GE(g.ci_high, g.mean);
  }
  // Identical ordinal data in every arm.
  for (const auto& g : table) {
    if (g.outcome == "party_guess_democrat") continue;
    if (g.arm == "control") {
      EXPECT_FALSE(g.wilcoxon_p.has_value());
    } else {
      ASSERT_TRUE(g.wilcoxon_p.has_value());
      EXPECT_NEAR(*g.wilcoxon_p, 1.0, 1e-12);
    }
  }
}

TEST(Experiment, ControlOnlyAndUnknownArm) {
  const auto only = experiment_table(responses({{"control", "D", "3", "white"}, {"control", "R", "4", "white"}}));
  std::size_t party_rows = 0;
  for (const auto& g : only) {
    EXPECT_EQ(g.arm, "control");
    EXPECT_FALSE(g.wilcoxon_p.has_value());
    party_rows += g.outcome == "party_guess_democrat";
    EXPECT_NE(g.outcome, "shares_values");  // white respondents only
  }
  EXPECT_EQ(party_rows, 1u);
  EXPECT_THROW(experiment_table(responses({{"martian", "D", "3", "white"}})), SchemaError);
}
