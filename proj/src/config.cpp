#include "photostyle/config.hpp"

#include <fstream>
#include <sstream>

#include "photostyle/csv.hpp"
#include "photostyle/error.hpp"

namespace photostyle {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"roster", "", true, "legislator metadata CSV"},
      {"manifest", "", true, "legislator social-media manifest (YAML)"},
      {"corpus_root", "", true, "photo corpus root (<root>/<member_id>/<photo_id>.<ext>)"},
      {"cascade", "", true, "Haar cascade file; empty uses the built-in demo cascade"},
      {"labels", "", true, "labeled training portraits CSV (path,label)"},
      {"base_model", "", true, "base network for finetune; empty builds a fresh one"},
      {"model", "", true, "classifier used by classify/bootstrap; empty uses <output>/model.bin"},
      {"review", "", true, "completed review file for bootstrap"},
      {"acs", "", true, "ACS demographics CSV"},
      {"responses", "", true, "experiment responses CSV"},
      {"output_dir", "out", true, "artifact directory"},
      {"seed", "1", false, "global seed"},
      {"jobs", "1", false, "worker threads"},
      {"fetch.url_template", "", false, "paginated listing URL with {username}"},
      {"fetch.max_photos", "200", false, "photos per member"},
      {"fetch.rate_per_second", "5", false, "request rate limit"},
      {"fetch.max_retries", "3", false, "retries per request"},
      {"fetch.timeout_seconds", "10", false, "HTTP timeout"},
      {"detect.scale_factor", "1.1", false, "pyramid scale step"},
      {"detect.step_fraction", "0.05", false, "window stride as a fraction of window size"},
      {"detect.min_size", "24", false, "smallest window"},
      {"detect.overlap", "0.3", false, "IoU for merging"},
      {"detect.min_neighbors", "3", false, "raw hits needed per merged box"},
      {"train.input_size", "32", false, "classifier input side in pixels"},
      {"train.learning_rate", "0.01", false, "SGD learning rate"},
      {"train.momentum", "0.9", false, "SGD momentum"},
      {"train.batch_size", "16", false, "minibatch size"},
      {"train.weight_decay", "0", false, "L2 weight decay"},
      {"train.iterations", "500", false, "iterations for the train subcommand"},
      {"train.initial_iterations", "100000", false, "finetune iterations"},
      {"train.bootstrap_iterations", "20000", false, "bootstrap iterations"},
      {"train.freeze_prefix", "0", false, "leading layers kept fixed in finetune/bootstrap"},
      {"train.confidence_threshold", "0.9", false, "bootstrap review threshold"},
      {"train.train_fraction", "0.782051282051282", false, "train share of the labeled set (61/78)"},
      {"train.folds", "5", false, "cross-validation folds for per-class accuracy"},
      {"analyze.sample_fraction", "0.1", false, "per-member photo sample"},
      {"analyze.exclude_self", "false", false, "drop one own-race face per photo"},
  };
  return keys;
}

namespace {

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, std::string value) {
  if (!find_key(key)) throw ValidationError("unknown config key '" + key + "'");
  values_[key] = std::move(value);
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path.parent_path(), path.string());
}

void RunConfig::merge_text(std::string_view text, const std::filesystem::path& base_dir, std::string_view source) {
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  for (int line_no = 1; std::getline(in, raw); ++line_no) {
    const std::string where = std::string(source) + " line " + std::to_string(line_no);
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      if (line.back() != ']') throw ParseError(where + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string rest = trim(std::string_view(line).substr(eq + 1));
    std::string value;
    if (!rest.empty() && rest[0] == '"') {
      std::size_t i = 1;
      bool closed = false;
      for (; i < rest.size(); ++i) {
        if (rest[i] == '\\' && i + 1 < rest.size()) {
          value += rest[++i];
        } else if (rest[i] == '"') {
          closed = true;
          ++i;
          break;
        } else {
          value += rest[i];
        }
      }
      if (!closed) throw ParseError(where + ": unterminated string");
      const std::string tail = trim(std::string_view(rest).substr(i));
      if (!tail.empty() && tail[0] != '#') throw ParseError(where + ": unexpected text after value");
    } else {
      value = trim(std::string_view(rest).substr(0, rest.find('#')));
    }
    const std::string full = section.empty() ? key : section + "." + key;
    const auto* spec = find_key(full);
    if (!spec) throw ValidationError(where + ": unknown config key '" + full + "'");
    if (spec->is_path && !value.empty() && std::filesystem::path(value).is_relative()) {
      value = (base_dir / value).lexically_normal().string();
    }
    values_[full] = value;
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ValidationError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::real(const std::string& key) const { return parse_real(get(key), key); }

long RunConfig::integer(const std::string& key) const { return parse_int(get(key), key); }

std::size_t RunConfig::count(const std::string& key) const {
  const long v = integer(key);
  if (v < 0) throw ValidationError(key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

bool RunConfig::boolean(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParseError(key + " must be true or false, got '" + v + "'");
}

std::filesystem::path RunConfig::path(const std::string& key) const { return get(key); }

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

}  // namespace photostyle
