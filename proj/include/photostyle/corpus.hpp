#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "photostyle/csv.hpp"

namespace photostyle {

enum class Chamber { Unknown, House, Senate };

std::string_view to_string(Chamber c);
Chamber parse_chamber(std::string_view text);  // "house"/"rep", "senate"/"sen"

struct LegislatorRecord {
  std::string member_id;  // bioguide id
  std::string name;
  Chamber chamber = Chamber::Unknown;
  std::string party;  // "D", "R", "I" or empty when unknown
  std::string state;  // two-letter code
  std::optional<int> district;
  std::optional<std::string> facebook_username;
  bool is_white = false;

  friend bool operator==(const LegislatorRecord&, const LegislatorRecord&) = default;
};

// Parses the legislators-social-media style document: a sequence of entries
// with an `id` block (bioguide) and a `social` block (facebook). Optional
// `name: {official_full}` and `terms` (last term's type/state/district/party)
// are read when present. Order is preserved.
std::vector<LegislatorRecord> parse_legislator_manifest(const std::string& text);

// Roster CSV: member_id,name,chamber,party,state,district,is_white
inline const std::vector<std::string> kRosterColumns = {"member_id", "name",     "chamber", "party",
                                                        "state",     "district", "is_white"};
std::vector<LegislatorRecord> roster_from_table(const Table& table);
Table roster_to_table(const std::vector<LegislatorRecord>& roster);
std::vector<LegislatorRecord> load_roster(const std::filesystem::path& path);

// Copies facebook usernames from manifest entries onto roster records.
void attach_social(std::vector<LegislatorRecord>& roster, const std::vector<LegislatorRecord>& manifest);

const LegislatorRecord* find_member(const std::vector<LegislatorRecord>& roster, std::string_view member_id);

struct PhotoRecord {
  std::string photo_id;
  std::string member_id;
  std::filesystem::path file_path;
  std::optional<std::string> source_url;
  std::optional<std::string> fetched_at;

  friend bool operator==(const PhotoRecord&, const PhotoRecord&) = default;
};

// First 16 hex digits of SHA-256(member_id + "\n" + source).
std::string make_photo_id(std::string_view member_id, std::string_view source);
std::string sha256_hex(std::string_view data);

struct CorpusManifest {
  std::vector<LegislatorRecord> legislators;
  std::vector<PhotoRecord> photos;  // sorted by member_id, then photo_id
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> orphans;  // directories with no matching legislator

  // Every photo's member_id is in legislators; photo ids unique.
  void validate() const;
  void recount();
};

// Enumerates <root>/<member_id>/*.{jpg,jpeg,png}.
CorpusManifest scan_local_corpus(const std::filesystem::path& root,
                                 const std::vector<LegislatorRecord>& legislators);

inline const std::vector<std::string> kPhotoColumns = {"photo_id", "member_id", "file_path", "source_url",
                                                       "fetched_at"};
Table photos_to_table(const std::vector<PhotoRecord>& photos);
std::vector<PhotoRecord> photos_from_table(const Table& table);

struct FetchLimits {
  std::size_t max_photos = 200;
  double rate_per_second = 5.0;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::seconds timeout{10};
};

struct FetchResult {
  std::vector<PhotoRecord> records;  // every file present for the member afterwards
  std::size_t downloaded = 0;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
};

// Paginated JSON listing at url_template with "{username}" (and optionally
// "{member_id}") substituted; each page is
//   {"data": [{"id": "...", "url": "http://..."}], "next": <page number or null>}
// and is requested as <url>?page=N starting at N=1. Images are written to
// <root>/<member_id>/<photo_id>.<ext>; already present photo ids are skipped.
FetchResult fetch_photos(const LegislatorRecord& record, const std::string& url_template,
                         const std::filesystem::path& root, const FetchLimits& limits);

}  // namespace photostyle
