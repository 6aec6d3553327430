#include "photostyle/corpus.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "photostyle/error.hpp"

namespace photostyle {

std::string_view to_string(Chamber c) {
  switch (c) {
    case Chamber::House: return "house";
    case Chamber::Senate: return "senate";
    case Chamber::Unknown: break;
  }
  return "";
}

Chamber parse_chamber(std::string_view text) {
  if (text == "house" || text == "rep") return Chamber::House;
  if (text == "senate" || text == "sen") return Chamber::Senate;
  if (text.empty()) return Chamber::Unknown;
  throw ParseError("unknown chamber '" + std::string(text) + "'");
}

namespace {

std::string party_code(const std::string& party) {
  if (party == "Democrat" || party == "D") return "D";
  if (party == "Republican" || party == "R") return "R";
  if (party == "Independent" || party == "I") return "I";
  return "";
}

[[noreturn]] void yaml_fail(const YAML::Node& node, const std::string& msg) {
  throw ParseError("manifest line " + std::to_string(node.Mark().line + 1) + ": " + msg);
}

std::string scalar(const YAML::Node& node, const char* what) {
  if (!node.IsScalar()) yaml_fail(node, std::string(what) + " must be a scalar");
  return node.as<std::string>();
}

}  // namespace

std::vector<LegislatorRecord> parse_legislator_manifest(const std::string& text) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError("manifest line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  std::vector<LegislatorRecord> out;
  if (doc.IsNull()) return out;
  if (!doc.IsSequence()) yaml_fail(doc, "document must be a list of legislator entries");

  std::set<std::string> seen;
  for (const auto& entry : doc) {
    if (!entry.IsMap()) yaml_fail(entry, "legislator entry must be a mapping");
    const auto id = entry["id"];
    if (!id || !id.IsMap() || !id["bioguide"]) yaml_fail(entry, "entry lacks id.bioguide");
    LegislatorRecord rec;
    rec.member_id = scalar(id["bioguide"], "id.bioguide");
    if (!seen.insert(rec.member_id).second) {
      throw DuplicationError("manifest line " + std::to_string(id.Mark().line + 1) +
                             ": duplicate member id " + rec.member_id);
    }
    if (const auto name = entry["name"]; name) {
      if (name.IsMap() && name["official_full"]) {
        rec.name = scalar(name["official_full"], "name.official_full");
      } else if (name.IsScalar()) {
        rec.name = name.as<std::string>();
      }
    }
    if (const auto social = entry["social"]; social) {
      if (!social.IsMap()) yaml_fail(social, "social must be a mapping");
      if (social["facebook"]) rec.facebook_username = scalar(social["facebook"], "social.facebook");
    }
    if (const auto terms = entry["terms"]; terms) {
      if (!terms.IsSequence() || terms.size() == 0) yaml_fail(terms, "terms must be a non-empty list");
      const auto last = terms[terms.size() - 1];
      if (last["type"]) rec.chamber = parse_chamber(scalar(last["type"], "terms.type"));
      if (last["state"]) rec.state = scalar(last["state"], "terms.state");
      if (last["party"]) rec.party = party_code(scalar(last["party"], "terms.party"));
      if (last["district"]) {
        try {
          rec.district = last["district"].as<int>();
        } catch (const YAML::Exception&) {
          yaml_fail(last["district"], "district must be an integer");
        }
      }
    }
    if (const auto flag = entry["is_white"]; flag) rec.is_white = flag.as<bool>();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<LegislatorRecord> roster_from_table(const Table& raw) {
  const Table table = conform_table(raw, kRosterColumns);
  std::vector<LegislatorRecord> out;
  std::set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = "roster row " + std::to_string(r + 2);
    LegislatorRecord rec;
    rec.member_id = row[0];
    if (rec.member_id.empty()) throw ParseError(where + ": empty member_id");
    if (!seen.insert(rec.member_id).second) {
      throw DuplicationError(where + ": duplicate member id " + rec.member_id);
    }
    rec.name = row[1];
    rec.chamber = parse_chamber(row[2]);
    rec.party = party_code(row[3]);
    if (rec.party.empty()) throw ParseError(where + ": party must be D, R or I");
    rec.state = row[4];
    if (rec.state.size() != 2) throw ParseError(where + ": state must be a two-letter code");
    if (!row[5].empty()) rec.district = static_cast<int>(parse_int(row[5], "district"));
    if (rec.chamber == Chamber::House && !rec.district) {
      throw ValidationError(where + ": house member " + rec.member_id + " has no district");
    }
    if (rec.chamber == Chamber::Senate && rec.district) {
      throw ValidationError(where + ": senator " + rec.member_id + " carries a district");
    }
    if (rec.chamber == Chamber::Unknown) throw ParseError(where + ": chamber must be house or senate");
    const auto& w = row[6];
    if (w == "true" || w == "1") {
      rec.is_white = true;
    } else if (w == "false" || w == "0") {
      rec.is_white = false;
    } else {
      throw ParseError(where + ": is_white must be true/false");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

Table roster_to_table(const std::vector<LegislatorRecord>& roster) {
  Table t;
  t.columns = kRosterColumns;
  for (const auto& r : roster) {
    t.add_row({r.member_id, r.name, std::string(to_string(r.chamber)), r.party, r.state,
               r.district ? std::to_string(*r.district) : "", r.is_white ? "true" : "false"});
  }
  return t;
}

std::vector<LegislatorRecord> load_roster(const std::filesystem::path& path) {
  return roster_from_table(load_table(path, kRosterColumns));
}

void attach_social(std::vector<LegislatorRecord>& roster, const std::vector<LegislatorRecord>& manifest) {
  for (auto& r : roster) {
    if (const auto* m = find_member(manifest, r.member_id); m && m->facebook_username) {
      r.facebook_username = m->facebook_username;
    }
  }
}

const LegislatorRecord* find_member(const std::vector<LegislatorRecord>& roster, std::string_view id) {
  for (const auto& r : roster) {
    if (r.member_id == id) return &r;
  }
  return nullptr;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr)) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string make_photo_id(std::string_view member_id, std::string_view source) {
  std::string key(member_id);
  key += '\n';
  key += source;
  return sha256_hex(key).substr(0, 16);
}

void CorpusManifest::recount() {
  counts.clear();
  for (const auto& l : legislators) counts[l.member_id] = 0;
  for (const auto& p : photos) ++counts[p.member_id];
}

void CorpusManifest::validate() const {
  std::set<std::string> ids;
  for (const auto& p : photos) {
    if (!find_member(legislators, p.member_id)) {
      throw ReferenceError("photo " + p.photo_id + " references unknown member " + p.member_id);
    }
    if (!ids.insert(p.photo_id).second) throw DuplicationError("duplicate photo id " + p.photo_id);
  }
}

namespace {

bool is_photo_id(const std::string& s) {
  return s.size() == 16 &&
         std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

bool is_image_extension(std::string ext) {
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

}  // namespace

CorpusManifest scan_local_corpus(const std::filesystem::path& root,
                                 const std::vector<LegislatorRecord>& legislators) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("corpus root " + root.string() + " is not a directory");
  CorpusManifest m;
  m.legislators = legislators;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    const std::string member = dir.filename().string();
    if (!find_member(legislators, member)) {
      m.orphans.push_back(member);
      continue;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && is_image_extension(e.path().extension().string())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      PhotoRecord p;
      const std::string stem = f.stem().string();
      p.photo_id = is_photo_id(stem) ? stem : make_photo_id(member, f.filename().string());
      p.member_id = member;
      p.file_path = f;
      m.photos.push_back(std::move(p));
    }
  }
  std::sort(m.photos.begin(), m.photos.end(), [](const PhotoRecord& a, const PhotoRecord& b) {
    return std::tie(a.member_id, a.photo_id) < std::tie(b.member_id, b.photo_id);
  });
  m.recount();
  m.validate();
  return m;
}

Table photos_to_table(const std::vector<PhotoRecord>& photos) {
  Table t;
  t.columns = kPhotoColumns;
  for (const auto& p : photos) {
    t.add_row({p.photo_id, p.member_id, p.file_path.string(), p.source_url.value_or(""),
               p.fetched_at.value_or("")});
  }
  return t;
}

std::vector<PhotoRecord> photos_from_table(const Table& raw) {
  const Table t = conform_table(raw, kPhotoColumns);
  std::vector<PhotoRecord> out;
  for (const auto& row : t.rows) {
    PhotoRecord p;
    p.photo_id = row[0];
    p.member_id = row[1];
    p.file_path = row[2];
    if (!row[3].empty()) p.source_url = row[3];
    if (!row[4].empty()) p.fetched_at = row[4];
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace photostyle
