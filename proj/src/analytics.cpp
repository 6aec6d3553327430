#include "photostyle/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "photostyle/error.hpp"

namespace photostyle {

std::string_view race_column_suffix(RaceLabel label) {
  switch (label) {
    case RaceLabel::White: return "white";
    case RaceLabel::AfricanAmerican: return "black";
    case RaceLabel::Asian: return "asian";
    case RaceLabel::Hispanic: return "hispanic";
  }
  return "";
}

MemberPhotoDemographics demographics_from_counts(std::string member_id,
                                                 const std::array<std::size_t, kRaceCount>& counts) {
  MemberPhotoDemographics d;
  d.member_id = std::move(member_id);
  d.counts = counts;
  for (auto c : counts) d.n_faces += c;
  d.insufficient = d.n_faces == 0;
  if (d.n_faces > 0) {
    for (std::size_t k = 0; k < kRaceCount; ++k) {
      d.proportions[k] = static_cast<double>(counts[k]) / static_cast<double>(d.n_faces);
    }
  }
  return d;
}

AggregateResult aggregate_demographics(const std::vector<ClassifiedFace>& faces,
                                       const std::vector<LegislatorRecord>& roster, bool exclude_self) {
  std::map<std::string, std::array<std::size_t, kRaceCount>> counts;
  for (const auto& m : roster) counts[m.member_id] = {};
  AggregateResult result;
  std::set<std::string> self_removed_in;  // photo ids already adjusted
  for (const auto& f : faces) {
    const auto it = counts.find(f.member_id);
    if (it == counts.end()) {
      throw ReferenceError("face in photo " + f.photo_id + " references unknown member " + f.member_id);
    }
    if (exclude_self && !self_removed_in.count(f.photo_id)) {
      const auto* member = find_member(roster, f.member_id);
      if (member->is_white && f.label == RaceLabel::White) {
        self_removed_in.insert(f.photo_id);
        ++result.self_faces_removed;
        continue;
      }
    }
    ++it->second[static_cast<std::size_t>(f.label)];
  }
  for (const auto& m : roster) result.rows.push_back(demographics_from_counts(m.member_id, counts[m.member_id]));
  return result;
}

namespace {

std::vector<std::string> make_demographics_columns() {
  std::vector<std::string> cols = {"member_id", "n_faces"};
  for (auto r : kAllRaces) cols.push_back("fb_count_" + std::string(race_column_suffix(r)));
  for (auto r : kAllRaces) cols.push_back("fb_prop_" + std::string(race_column_suffix(r)));
  cols.push_back("insufficient");
  return cols;
}

std::vector<std::string> make_joined_columns() {
  std::vector<std::string> cols = {"member_id", "name", "chamber", "party", "state", "district", "geo_id", "is_white",
                                   "n_faces"};
  for (auto r : kAllRaces) cols.push_back("fb_prop_" + std::string(race_column_suffix(r)));
  for (auto r : kAllRaces) cols.push_back("acs_pct_" + std::string(race_column_suffix(r)));
  return cols;
}

}  // namespace

const std::vector<std::string> kDemographicsColumns = make_demographics_columns();
const std::vector<std::string> kJoinedColumns = make_joined_columns();

Table demographics_to_table(const std::vector<MemberPhotoDemographics>& rows) {
  Table t;
  t.columns = kDemographicsColumns;
  for (const auto& d : rows) {
    std::vector<std::string> row = {d.member_id, std::to_string(d.n_faces)};
    for (auto c : d.counts) row.push_back(std::to_string(c));
    for (auto p : d.proportions) row.push_back(format_real(p));
    row.push_back(d.insufficient ? "true" : "false");
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<MemberPhotoDemographics> demographics_from_table(const Table& raw) {
  const Table t = conform_table(raw, kDemographicsColumns);
  std::vector<MemberPhotoDemographics> out;
  for (const auto& row : t.rows) {
    std::array<std::size_t, kRaceCount> counts{};
    for (std::size_t k = 0; k < kRaceCount; ++k) {
      counts[k] = static_cast<std::size_t>(parse_int(row[2 + k], kDemographicsColumns[2 + k]));
    }
    auto d = demographics_from_counts(row[0], counts);
    if (d.n_faces != static_cast<std::size_t>(parse_int(row[1], "n_faces"))) {
      throw ValidationError("demographics row for " + row[0] + ": n_faces disagrees with the counts");
    }
    out.push_back(std::move(d));
  }
  return out;
}

double DistrictDemographics::pct(RaceLabel label) const {
  switch (label) {
    case RaceLabel::White: return pct_white;
    case RaceLabel::AfricanAmerican: return pct_black;
    case RaceLabel::Asian: return pct_asian;
    case RaceLabel::Hispanic: return pct_hispanic;
  }
  return 0.0;
}

std::vector<DistrictDemographics> acs_from_table(const Table& raw) {
  const Table t = conform_table(raw, kAcsColumns);
  std::vector<DistrictDemographics> out;
  std::set<std::string> seen;
  for (const auto& row : t.rows) {
    DistrictDemographics d{row[0], parse_real(row[1], "pct_white"), parse_real(row[2], "pct_black"),
                           parse_real(row[3], "pct_hispanic"), parse_real(row[4], "pct_asian")};
    for (double v : {d.pct_white, d.pct_black, d.pct_hispanic, d.pct_asian}) {
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("ACS row " + d.geo_id + ": percentages must be fractions in [0, 1]");
    }
    if (!seen.insert(d.geo_id).second) throw DuplicationError("ACS table repeats geo_id " + d.geo_id);
    out.push_back(std::move(d));
  }
  return out;
}

Table acs_to_table(const std::vector<DistrictDemographics>& rows) {
  Table t;
  t.columns = kAcsColumns;
  for (const auto& d : rows) {
    t.add_row({d.geo_id, format_real(d.pct_white), format_real(d.pct_black), format_real(d.pct_hispanic),
               format_real(d.pct_asian)});
  }
  return t;
}

std::string geo_id(const LegislatorRecord& m) {
  if (m.chamber == Chamber::House && m.district) return m.state + "-" + std::to_string(*m.district);
  return m.state;
}

std::vector<JoinedRow> join_acs(const std::vector<MemberPhotoDemographics>& demo,
                                const std::vector<DistrictDemographics>& acs,
                                const std::vector<LegislatorRecord>& roster) {
  std::map<std::string, const DistrictDemographics*> by_geo;
  for (const auto& a : acs) by_geo[a.geo_id] = &a;
  std::vector<JoinedRow> out;
  std::vector<std::string> unmatched;
  for (const auto& d : demo) {
    const auto* m = find_member(roster, d.member_id);
    if (!m) throw ReferenceError("demographics reference unknown member " + d.member_id);
    const std::string geo = geo_id(*m);
    const auto it = by_geo.find(geo);
    if (it == by_geo.end()) {
      unmatched.push_back(d.member_id + " (" + geo + ")");
      continue;
    }
    out.push_back({*m, d, *it->second});
  }
  if (!unmatched.empty()) {
    std::string msg = "no ACS geography for:";
    for (const auto& u : unmatched) msg += " " + u;
    throw JoinError(msg);
  }
  return out;
}

Table joined_to_table(const std::vector<JoinedRow>& rows) {
  Table t;
  t.columns = kJoinedColumns;
  for (const auto& r : rows) {
    std::vector<std::string> row = {r.member.member_id,
                                    r.member.name,
                                    std::string(to_string(r.member.chamber)),
                                    r.member.party,
                                    r.member.state,
                                    r.member.district ? std::to_string(*r.member.district) : "",
                                    geo_id(r.member),
                                    r.member.is_white ? "true" : "false",
                                    std::to_string(r.photos.n_faces)};
    for (auto p : r.photos.proportions) row.push_back(format_real(p));
    for (auto race : kAllRaces) row.push_back(format_real(r.acs.pct(race)));
    t.add_row(std::move(row));
  }
  return t;
}

std::vector<ModelResult> compare_demographics(const std::vector<JoinedRow>& rows) {
  std::vector<ModelResult> out;
  auto attempt = [&](std::string name, auto&& fit) {
    ModelResult m{std::move(name), std::nullopt, ""};
    try {
      m.fit = fit();
    } catch (const CollinearityError& e) {
      m.skipped = e.what();
    } catch (const IdentificationError& e) {
      m.skipped = e.what();
    } catch (const InsufficientDataError& e) {
      m.skipped = e.what();
    }
    out.push_back(std::move(m));
  };

  for (auto chamber : {Chamber::House, Chamber::Senate}) {
    for (const std::string party : {"D", "R"}) {
      std::vector<const JoinedRow*> sel;
      for (const auto& r : rows) {
        if (r.member.is_white && r.member.chamber == chamber && r.member.party == party && !r.photos.insufficient) {
          sel.push_back(&r);
        }
      }
      const std::string prefix = std::string(to_string(chamber)) + "_" + party + "_";
      for (auto race : {RaceLabel::AfricanAmerican, RaceLabel::White}) {
        const std::string suffix(race_column_suffix(race));
        attempt(prefix + suffix + "_ols", [&] {
          std::vector<double> y, x;
          for (const auto* r : sel) {
            y.push_back(r->photos.proportions[static_cast<std::size_t>(race)]);
            x.push_back(r->acs.pct(race));
          }
          return ols(y, {{"acs_pct_" + suffix, x}}, true);
        });
      }
      if (chamber != Chamber::House) continue;
      for (auto race : kAllRaces) {
        const std::string suffix(race_column_suffix(race));
        attempt(prefix + suffix + "_state_fe", [&] {
          std::vector<double> y, x;
          std::vector<std::string> g;
          for (const auto* r : sel) {
            y.push_back(r->acs.pct(race));
            x.push_back(r->photos.proportions[static_cast<std::size_t>(race)]);
            g.push_back(r->member.state);
          }
          return ols_fixed_effects(y, {{"fb_prop_" + suffix, x}}, g);
        });
      }
    }
  }
  return out;
}

Table regressions_to_table(const std::vector<ModelResult>& models) {
  Table t;
  t.columns = kRegressionColumns;
  for (const auto& m : models) {
    if (!m.fit) {
      t.add_row({m.model, "", "", "", "", "", "skipped: " + m.skipped});
      continue;
    }
    const auto& f = *m.fit;
    for (std::size_t i = 0; i < f.names.size(); ++i) {
      t.add_row({m.model, f.names[i], format_real(f.coefficients[i]), format_real(f.std_errors[i]),
                 format_real(f.r_squared), std::to_string(f.n_obs), ""});
    }
    for (const auto& fe : f.fixed_effects) {
      t.add_row({m.model, "fe:" + fe.group, format_real(fe.intercept), "", format_real(f.r_squared),
                 std::to_string(f.n_obs), ""});
    }
  }
  return t;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::vector<GroupComparison> experiment_table(const Table& raw) {
  for (const auto& c : kResponseColumns) raw.column_index(c);  // extra columns are allowed
  const auto arm_col = raw.column_index("arm");
  const auto race_col = raw.column_index("respondent_race");

  std::map<std::string, std::vector<std::size_t>> by_arm;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const auto& arm = raw.rows[r][arm_col];
    if (std::find(kExperimentArms.begin(), kExperimentArms.end(), arm) == kExperimentArms.end()) {
      throw SchemaError("response row " + std::to_string(r + 2) + ": unknown arm '" + arm + "'");
    }
    by_arm[arm].push_back(r);
  }

  std::vector<GroupComparison> out;
  // Party guess.
  const auto party_col = raw.column_index("party_guess");
  for (const auto& arm : kExperimentArms) {
    if (!by_arm.count(arm)) continue;
    std::size_t k = 0, n = 0;
    for (auto r : by_arm[arm]) {
      const std::string v = lower(raw.rows[r][party_col]);
      if (v.empty()) continue;
      ++n;
      k += (v == "democrat" || v == "d");
    }
    if (n == 0) continue;
    const auto ci = proportion_ci(k, n);
    out.push_back({"party_guess_democrat", arm, n, ci.estimate, ci.lo, ci.hi, std::nullopt});
  }

  for (const std::string outcome : {"shares_values", "trustworthy", "strong_leader", "knowledgeable"}) {
    const auto col = raw.column_index(outcome);
    const bool non_white_only = outcome == "shares_values";
    std::map<std::string, std::vector<double>> values;
    for (const auto& [arm, idx] : by_arm) {
      for (auto r : idx) {
        const auto& cell = raw.rows[r][col];
        if (cell.empty()) continue;
        if (non_white_only && lower(raw.rows[r][race_col]) == "white") continue;
        values[arm].push_back(parse_real(cell, outcome));
      }
    }
    for (const auto& arm : kExperimentArms) {
      const auto it = values.find(arm);
      if (it == values.end() || it->second.size() < 2) continue;
      const auto ci = mean_ci(it->second);
      GroupComparison g{outcome, arm, it->second.size(), ci.estimate, ci.lo, ci.hi, std::nullopt};
      if (arm != "control" && values.count("control")) {
        g.wilcoxon_p = wilcoxon_rank_sum(values["control"], it->second).p_value;
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

Table comparisons_to_table(const std::vector<GroupComparison>& rows) {
  Table t;
  t.columns = kComparisonColumns;
  for (const auto& g : rows) {
    t.add_row({g.outcome, g.arm, std::to_string(g.n), format_real(g.mean), format_real(g.ci_low),
               format_real(g.ci_high), g.wilcoxon_p ? format_real(*g.wilcoxon_p) : ""});
  }
  return t;
}

}  // namespace photostyle
