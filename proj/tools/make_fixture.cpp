// Writes the bundled synthetic fixture: six white House members with ten
// one-face photos each, labeled training portraits, an ACS table, a legislator
// manifest, survey responses and a run config.
#include <fstream>
#include <iostream>
#include <random>

#include "photostyle/analytics.hpp"
#include "photostyle/corpus.hpp"
#include "photostyle/error.hpp"
#include "photostyle/facedetect.hpp"
#include "photostyle/synthetic.hpp"

namespace fs = std::filesystem;
using namespace photostyle;

namespace {

struct Member {
  LegislatorRecord record;
  double pct_black;
  int black_faces;
  RaceLabel other;  // one face of this label, the rest white
};

std::vector<Member> members() {
  auto rep = [](std::string id, std::string name, std::string party, std::string state, int district) {
    return LegislatorRecord{std::move(id), std::move(name), Chamber::House, std::move(party), std::move(state),
                            district,      std::nullopt,    true};
  };
  // Democrats' African-American photo share tracks the district; Republicans' does not.
  return {
      {rep("F000001", "Alex Fairfield", "D", "NY", 1), 0.1, 1, RaceLabel::Asian},
      {rep("F000002", "Blair Garrison", "D", "NY", 2), 0.3, 3, RaceLabel::Hispanic},
      {rep("F000003", "Casey Holloway", "D", "CA", 1), 0.5, 5, RaceLabel::Asian},
      {rep("F000004", "Drew Inglewood", "R", "NY", 3), 0.1, 2, RaceLabel::Hispanic},
      {rep("F000005", "Emery Jansen", "R", "CA", 2), 0.3, 2, RaceLabel::Asian},
      {rep("F000006", "Finley Kerr", "R", "CA", 3), 0.5, 2, RaceLabel::Hispanic},
  };
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw IoError("cannot write " + p.string());
}

std::string manifest_yaml(const std::vector<Member>& ms) {
  std::string y = "# Legislator manifest for the synthetic fixture.\n";
  for (const auto& m : ms) {
    const auto& r = m.record;
    std::string user = r.name;
    for (auto& c : user) c = c == ' ' ? '.' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    y += "- id:\n    bioguide: " + r.member_id + "\n";
    y += "  name:\n    official_full: " + r.name + "\n";
    y += "  social:\n    facebook: " + user + "\n";
    y += "  terms:\n    - type: rep\n      state: " + r.state + "\n      district: " + std::to_string(*r.district) +
         "\n      party: " + (r.party == "D" ? "Democrat" : "Republican") + "\n";
  }
  return y;
}

// Democrat guess rises for African-American and Hispanic candidates.
Table responses(std::mt19937_64& rng) {
  Table t;
  t.columns = kResponseColumns;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> p_dem = {0.45, 0.4, 0.45, 0.75, 0.8, 0.65, 0.5};
  const std::vector<int> shift = {0, 0, 0, 1, 1, 1, 0};
  int id = 1;
  for (std::size_t a = 0; a < kExperimentArms.size(); ++a) {
    for (int i = 0; i < 24; ++i) {
      auto likert = [&](int base) {
        const int v = base + static_cast<int>(u(rng) * 3.0) - 1;
        return std::to_string(std::clamp(v, 1, 5));
      };
      const bool white_resp = u(rng) < 0.6;
      t.add_row({std::to_string(id++), kExperimentArms[a], u(rng) < p_dem[a] ? "democrat" : "republican",
                 likert(2 + (white_resp ? 0 : shift[a])), likert(3), likert(3), likert(4),
                 white_resp ? "white" : "nonwhite"});
    }
  }
  return t;
}

const char* kConfig = R"(# Synthetic fixture run configuration.
roster = "roster.csv"
manifest = "manifest.yaml"
corpus_root = "corpus"
cascade = "cascade.txt"
labels = "labels/labels.csv"
acs = "acs.csv"
responses = "responses.csv"
seed = 7
jobs = 1

[detect]
min_size = 24

[train]
input_size = 24
learning_rate = 0.02
batch_size = 16
iterations = 300
initial_iterations = 300
bootstrap_iterations = 100
freeze_prefix = 0
folds = 1

[analyze]
sample_fraction = 1.0
exclude_self = false
)";

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture <dir>\n";
    return 2;
  }
  try {
    const fs::path dir = argv[1];
    fs::remove_all(dir);
    fs::create_directories(dir / "corpus");
    fs::create_directories(dir / "labels");
    std::mt19937_64 rng(20190601);
    const auto ms = members();

    std::vector<LegislatorRecord> roster;
    std::vector<DistrictDemographics> acs;
    for (const auto& m : ms) {
      roster.push_back(m.record);
      const double other = 0.05;
      acs.push_back({geo_id(m.record), 1.0 - m.pct_black - 2 * other, m.pct_black, other, other});
      const fs::path mdir = dir / "corpus" / m.record.member_id;
      fs::create_directories(mdir);
      for (int i = 0; i < 10; ++i) {
        RaceLabel label = RaceLabel::White;
        if (i < m.black_faces) label = RaceLabel::AfricanAmerican;
        else if (i == 9) label = m.other;
        const auto p = synthetic::portrait(112, 96, label, rng);
        save_png(p.image, mdir / ("photo_" + std::to_string(i + 10) + ".png"));
      }
    }
    persist_table(roster_to_table(roster), dir / "roster.csv");
    persist_table(acs_to_table(acs), dir / "acs.csv");
    write_text(dir / "manifest.yaml", manifest_yaml(ms));
    save_cascade(demo_cascade(), dir / "cascade.txt");

    Table labels;
    labels.columns = {"path", "label"};
    for (int i = 0; i < 40; ++i) {
      for (const auto r : kAllRaces) {
        const std::string name = std::string(to_string(r)) + "_" + std::to_string(i) + ".png";
        save_png(synthetic::portrait(96, 96, r, rng).image, dir / "labels" / name);
        labels.add_row({name, std::string(to_string(r))});
      }
    }
    persist_table(labels, dir / "labels" / "labels.csv");
    persist_table(responses(rng), dir / "responses.csv");
    write_text(dir / "config.toml", kConfig);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
