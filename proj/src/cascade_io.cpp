#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "photostyle/error.hpp"
#include "photostyle/facedetect.hpp"

namespace photostyle {

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // Next non-blank, non-comment line split into tokens; false at end.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      tokens.clear();
      for (std::string t; ls >> t;) tokens.push_back(t);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("cascade line " + std::to_string(line_no_) + ": " + msg);
  }

  int line() const { return line_no_; }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

double to_real(const LineReader& r, const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') r.fail("expected a number, got '" + s + "'");
  return v;
}

int to_int(const LineReader& r, const std::string& s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) r.fail("expected an integer, got '" + s + "'");
  return v;
}

void expect(const LineReader& r, const std::vector<std::string>& t, const char* keyword,
            std::size_t arity) {
  if (t[0] != keyword) r.fail(std::string("expected '") + keyword + "', got '" + t[0] + "'");
  if (t.size() != arity + 1) {
    r.fail(std::string("'") + keyword + "' takes " + std::to_string(arity) + " values");
  }
}

std::string real_str(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CascadeModel parse_cascade(const std::string& text) {
  LineReader reader(text);
  std::vector<std::string> t;
  if (!reader.next(t)) reader.fail("missing 'cascade' header");
  expect(reader, t, "cascade", 3);
  CascadeModel model;
  model.base_width = to_int(reader, t[1]);
  model.base_height = to_int(reader, t[2]);
  const int n_stages = to_int(reader, t[3]);
  if (n_stages < 0) reader.fail("negative stage count");

  for (int s = 0; s < n_stages; ++s) {
    if (!reader.next(t)) reader.fail("expected " + std::to_string(n_stages) + " stages");
    expect(reader, t, "stage", 2);
    CascadeStage stage;
    const int n_weak = to_int(reader, t[1]);
    if (n_weak < 0) reader.fail("negative weak classifier count");
    stage.stage_threshold = to_real(reader, t[2]);
    for (int k = 0; k < n_weak; ++k) {
      if (!reader.next(t)) reader.fail("truncated stage");
      expect(reader, t, "weak", 4);
      WeakClassifier weak;
      weak.threshold = to_real(reader, t[1]);
      weak.left_value = to_real(reader, t[2]);
      weak.right_value = to_real(reader, t[3]);
      const int n_rects = to_int(reader, t[4]);
      if (n_rects < 2 || n_rects > 4) reader.fail("weak classifier needs 2 to 4 rects");
      const int weak_line = reader.line();
      for (int i = 0; i < n_rects; ++i) {
        if (!reader.next(t)) reader.fail("truncated weak classifier");
        expect(reader, t, "rect", 5);
        weak.feature.rects.push_back({{to_int(reader, t[1]), to_int(reader, t[2]),
                                       to_int(reader, t[3]), to_int(reader, t[4])},
                                      to_real(reader, t[5])});
      }
      try {
        weak.feature.kind = infer_feature_kind(weak.feature.rects);
      } catch (const ValidationError& e) {
        throw ParseError("cascade line " + std::to_string(weak_line) + ": " + e.what());
      }
      stage.classifiers.push_back(std::move(weak));
    }
    model.stages.push_back(std::move(stage));
  }
  if (reader.next(t)) reader.fail("unexpected trailing '" + t[0] + "'");
  validate_cascade(model);
  return model;
}

std::string format_cascade(const CascadeModel& cascade) {
  std::ostringstream os;
  os << "cascade " << cascade.base_width << ' ' << cascade.base_height << ' '
     << cascade.stages.size() << '\n';
  for (const auto& stage : cascade.stages) {
    os << "stage " << stage.classifiers.size() << ' ' << real_str(stage.stage_threshold) << '\n';
    for (const auto& weak : stage.classifiers) {
      os << "  weak " << real_str(weak.threshold) << ' ' << real_str(weak.left_value) << ' '
         << real_str(weak.right_value) << ' ' << weak.feature.rects.size() << '\n';
      for (const auto& wr : weak.feature.rects) {
        os << "    rect " << wr.rect.x << ' ' << wr.rect.y << ' ' << wr.rect.w << ' ' << wr.rect.h
           << ' ' << real_str(wr.weight) << '\n';
      }
    }
  }
  return os.str();
}

CascadeModel load_cascade(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open cascade " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_cascade(ss.str());
}

void save_cascade(const CascadeModel& cascade, const std::filesystem::path& path) {
  validate_cascade(cascade);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write cascade " + path.string());
  out << "# Haar cascade: cascade <base_w> <base_h> <n_stages>\n" << format_cascade(cascade);
}

}  // namespace photostyle
