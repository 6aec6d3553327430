#include <httplib.h>

#include <algorithm>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <set>
#include <thread>

#include "photostyle/corpus.hpp"
#include "photostyle/error.hpp"
#include "photostyle/image.hpp"

namespace photostyle {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // includes query
};

Url split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw ParseError("url without scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::string substitute(std::string text, const std::string& key, const std::string& value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Fetcher {
 public:
  explicit Fetcher(const FetchLimits& limits) : limits_(limits) {}

  // Returns the response on 2xx; nullopt after exhausting retries or on a
  // non-retryable status. `error` receives the reason.
  std::optional<httplib::Response> get(const std::string& url, std::string& error) {
    const Url u = split_url(url);
    auto backoff = limits_.initial_backoff;
    for (int attempt = 0; attempt <= limits_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      pace();
      httplib::Client client(u.origin);
      client.set_connection_timeout(limits_.timeout);
      client.set_read_timeout(limits_.timeout);
      client.set_follow_location(true);
      auto res = client.Get(u.path);
      if (!res) {
        error = url + ": " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 200 && res->status < 300) return *res;
      error = url + ": HTTP " + std::to_string(res->status);
      if (res->status != 429 && res->status < 500) return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  void pace() {
    if (limits_.rate_per_second <= 0) return;
    const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / limits_.rate_per_second));
    const auto now = std::chrono::steady_clock::now();
    if (last_ && now < *last_ + interval) std::this_thread::sleep_until(*last_ + interval);
    last_ = std::chrono::steady_clock::now();
  }

  FetchLimits limits_;
  std::optional<std::chrono::steady_clock::time_point> last_;
};

std::string extension_for(const std::string& content_type) {
  const std::string type = content_type.substr(0, content_type.find(';'));
  if (type == "image/jpeg" || type == "image/jpg") return ".jpg";
  if (type == "image/png") return ".png";
  return "";
}

std::vector<PhotoRecord> member_records(const std::filesystem::path& root, const LegislatorRecord& record) {
  if (!std::filesystem::is_directory(root / record.member_id)) return {};
  return scan_local_corpus(root, {record}).photos;
}

}  // namespace

FetchResult fetch_photos(const LegislatorRecord& record, const std::string& url_template,
                         const std::filesystem::path& root, const FetchLimits& limits) {
  namespace fs = std::filesystem;
  FetchResult result;
  if (!record.facebook_username || record.facebook_username->empty()) {
    result.warnings.push_back(record.member_id + ": no facebook username, skipped");
    if (fs::is_directory(root)) result.records = member_records(root, record);
    return result;
  }

  const fs::path dir = root / record.member_id;
  std::set<std::string> present;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) present.insert(e.path().stem().string());
  }

  std::map<std::string, std::pair<std::string, std::string>> fetched;  // photo_id -> (url, time)
  Fetcher fetcher(limits);
  const std::string listing =
      substitute(substitute(url_template, "{username}", *record.facebook_username), "{member_id}", record.member_id);
  std::size_t seen = 0;
  std::optional<long> page = 1;
  std::set<long> visited;
  while (page && seen < limits.max_photos && visited.insert(*page).second) {
    std::string error;
    const std::string page_url = listing + (listing.find('?') == std::string::npos ? "?" : "&") +
                                 "page=" + std::to_string(*page);
    auto res = fetcher.get(page_url, error);
    if (!res) {
      result.failures.push_back(error);
      break;
    }
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      result.failures.push_back(page_url + ": malformed listing: " + e.what());
      break;
    }
    if (!doc.is_object() || !doc.contains("data") || !doc["data"].is_array()) {
      result.failures.push_back(page_url + ": listing lacks a data array");
      break;
    }
    for (const auto& item : doc["data"]) {
      if (seen >= limits.max_photos) break;
      if (!item.contains("id") || !item.contains("url") || !item["url"].is_string()) {
        result.warnings.push_back(page_url + ": entry without id/url skipped");
        continue;
      }
      ++seen;
      const std::string source = item["id"].is_string() ? item["id"].get<std::string>() : item["id"].dump();
      const std::string photo_id = make_photo_id(record.member_id, source);
      if (present.count(photo_id)) continue;
      const std::string image_url = item["url"].get<std::string>();
      auto img = fetcher.get(image_url, error);
      if (!img) {
        result.failures.push_back(error);
        continue;
      }
      const std::string ext = extension_for(img->get_header_value("Content-Type"));
      if (ext.empty()) {
        result.warnings.push_back(image_url + ": content type '" + img->get_header_value("Content-Type") +
                                  "' is not an image, skipped");
        continue;
      }
      try {
        decode_image(std::span(reinterpret_cast<const std::uint8_t*>(img->body.data()), img->body.size()));
      } catch (const Error& e) {
        result.failures.push_back(image_url + ": " + e.what());
        continue;
      }
      fs::create_directories(dir);
      const fs::path tmp = dir / (photo_id + ext + ".part");
      {
        std::ofstream out(tmp, std::ios::binary);
        out.write(img->body.data(), static_cast<std::streamsize>(img->body.size()));
        if (!out) throw IoError("cannot write " + tmp.string());
      }
      fs::rename(tmp, dir / (photo_id + ext));
      present.insert(photo_id);
      fetched[photo_id] = {image_url, utc_now()};
      ++result.downloaded;
    }
    if (doc.contains("next") && doc["next"].is_number_integer()) {
      page = doc["next"].get<long>();
    } else {
      page.reset();
    }
  }

  result.records = member_records(root, record);
  for (auto& p : result.records) {
    if (auto it = fetched.find(p.photo_id); it != fetched.end()) {
      p.source_url = it->second.first;
      p.fetched_at = it->second.second;
    }
  }
  return result;
}

}  // namespace photostyle
