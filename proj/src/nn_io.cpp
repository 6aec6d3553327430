#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "photostyle/error.hpp"
#include "photostyle/nn.hpp"

namespace photostyle::nn {

namespace {

constexpr char kMagic[4] = {'P', 'H', 'S', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) {
      throw LoadError("model file truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const NetworkModel& model) {
  model.validate();
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.input_shape().size()));
  for (auto d : model.input_shape()) w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& s : model.layers()) {
    w.u8(static_cast<std::uint8_t>(s.kind));
    for (int v : {s.in_channels, s.out_channels, s.kernel, s.stride, s.padding, s.window,
                  s.in_units, s.out_units}) {
      w.u32(static_cast<std::uint32_t>(v));
    }
  }
  w.u32(static_cast<std::uint32_t>(model.class_labels().size()));
  for (const auto& label : model.class_labels()) {
    w.u32(static_cast<std::uint32_t>(label.size()));
    w.bytes(label.data(), label.size());
  }
  for (const auto& layer : model.params()) {
    for (double v : layer) w.f32(static_cast<float>(v));
  }
  return w.take();
}

NetworkModel deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.remaining() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw LoadError("not a model file: bad magic header");
  }
  r.str(4);
  const auto version = r.u32();
  if (version != kFormatVersion) {
    throw LoadError("unsupported model format version " + std::to_string(version));
  }
  Shape input(r.u32());
  if (input.empty() || input.size() > 8) throw LoadError("implausible input rank");
  for (auto& d : input) d = r.u32();

  const auto n_layers = r.u32();
  if (n_layers == 0 || n_layers > 4096) throw LoadError("implausible layer count");
  std::vector<LayerSpec> layers(n_layers);
  for (auto& s : layers) {
    const auto kind = r.u8();
    if (kind < 1 || kind > 6) throw LoadError("unknown layer kind tag " + std::to_string(kind));
    s.kind = static_cast<LayerKind>(kind);
    for (int* field : {&s.in_channels, &s.out_channels, &s.kernel, &s.stride, &s.padding, &s.window,
                       &s.in_units, &s.out_units}) {
      *field = static_cast<int>(r.u32());
    }
  }
  const auto n_labels = r.u32();
  if (n_labels > 4096) throw LoadError("implausible class count");
  std::vector<std::string> labels;
  for (std::uint32_t i = 0; i < n_labels; ++i) labels.push_back(r.str(r.u32()));

  // Layer specs are checked before weights are read so a bad table reports
  // its real cause rather than a size mismatch.
  Shape shape = input;
  std::size_t expected = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    try {
      shape = layer_output_shape(layers[i], shape, i);
    } catch (const ShapeError& e) {
      throw ValidationError(std::string("model layer table invalid: ") + e.what());
    }
    expected += layers[i].param_count();
  }
  if (r.remaining() != expected * 4) {
    throw ValidationError("model weight count mismatch: layer specs need " + std::to_string(expected) +
                          " weights, file holds " + std::to_string(r.remaining() / 4) +
                          (r.remaining() % 4 ? " and a partial value" : ""));
  }
  ParamSet params;
  for (const auto& s : layers) {
    std::vector<double> p(s.param_count());
    for (auto& v : p) v = r.f32();
    params.push_back(std::move(p));
  }
  return NetworkModel(std::move(input), std::move(layers), std::move(params), std::move(labels));
}

void save_model(const NetworkModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

NetworkModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

void write_loss_history(std::span<const double> history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iteration,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", history[i]);
    out << i << ',' << buf << '\n';
  }
}

}  // namespace photostyle::nn
