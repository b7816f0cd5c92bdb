#include "ipr/zoo/model_io.hpp"

#include <bit>
#include <cstring>

#include "ipr/error.hpp"
#include "ipr/io.hpp"

namespace ipr {
namespace {

constexpr std::string_view kMagic = "IPRMODEL";

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

  std::string_view take(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw FormatError(std::string("model file truncated while reading ") + what, pos_);
    }
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(std::size_t bytes, const char* what) {
    const auto s = take(bytes, what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  std::uint8_t u8(const char* what) { return static_cast<std::uint8_t>(uint(1, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(uint(4, what)); }
  std::uint64_t u64(const char* what) { return uint(8, what); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(const char* what) {
    const std::uint32_t n = u32(what);
    return std::string(take(n, what));
  }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_shape(Writer& w, const Shape& shape) {
  w.u32(static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) w.u64(d);
}

Shape read_shape(Reader& r, const char* what) {
  const std::size_t at = r.offset();
  const std::uint32_t rank = r.u32(what);
  if (rank > 8) throw FormatError(std::string("implausible tensor rank in ") + what, at);
  Shape shape(rank);
  for (auto& d : shape) {
    d = r.u64(what);
    if (d > (std::uint64_t{1} << 32)) throw FormatError(std::string("implausible dimension in ") + what, at);
  }
  return shape;
}

void write_tensor(Writer& w, const Tensor& t) {
  write_shape(w, t.shape());
  for (double v : t.values()) w.f64(v);
}

Tensor read_tensor(Reader& r) {
  Shape shape = read_shape(r, "tensor shape");
  // Bound the element count by the bytes left before multiplying, so corrupt
  // dimensions can neither overflow nor trigger a huge allocation.
  const std::size_t budget = r.remaining() / 8;
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d != 0 && n > budget / d) throw FormatError("model file truncated inside tensor data", r.offset());
    n *= d;
  }
  std::vector<double> data(n);
  for (auto& v : data) v = r.f64("tensor data");
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace

std::string encode_model(const Model& model) {
  validate_model(model);
  Writer w;
  w.raw(kMagic);
  w.u32(kModelFormatVersion);
  w.str(model.architecture_id);
  write_shape(w, model.input_shape);
  w.u64(model.num_classes);
  w.u64(model.training_seed);
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (const LayerDescriptor& layer : model.layers) {
    w.str(layer.id);
    w.u8(static_cast<std::uint8_t>(layer.kind));
    w.u8(static_cast<std::uint8_t>(layer.init));
    w.u64(layer.stride);
    w.u64(layer.padding);
    w.u64(layer.window);
    w.str(layer.skip_from);
    if (layer.has_parameters()) {
      const LayerParams& p = model.parameters.at(layer.id);
      w.u32(2);
      write_tensor(w, p.weight);
      write_tensor(w, p.bias);
    } else {
      w.u32(0);
    }
  }
  return w.take();
}

Model decode_model(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(std::min(bytes.size(), kMagic.size()), "magic") != kMagic) {
    throw FormatError("not a model file (bad magic)", 0);
  }
  const std::size_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kModelFormatVersion) {
    throw VersionError("unsupported model format version " + std::to_string(version) + " (expected " +
                           std::to_string(kModelFormatVersion) + ")",
                       version_at);
  }
  Model model;
  model.architecture_id = r.str("architecture id");
  model.input_shape = read_shape(r, "input shape");
  model.num_classes = r.u64("num_classes");
  model.training_seed = r.u64("training seed");
  const std::uint32_t layer_count = r.u32("layer count");
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    LayerDescriptor layer;
    layer.id = r.str("layer id");
    const std::size_t kind_at = r.offset();
    const std::uint8_t kind = r.u8("layer kind");
    if (kind > static_cast<std::uint8_t>(LayerKind::ResidualAdd)) throw FormatError("unknown layer kind", kind_at);
    layer.kind = static_cast<LayerKind>(kind);
    const std::size_t init_at = r.offset();
    const std::uint8_t init = r.u8("init scheme");
    if (init > static_cast<std::uint8_t>(InitScheme::UniformFanIn)) throw FormatError("unknown init scheme", init_at);
    layer.init = static_cast<InitScheme>(init);
    layer.stride = r.u64("stride");
    layer.padding = r.u64("padding");
    layer.window = r.u64("window");
    layer.skip_from = r.str("skip source");
    const std::size_t params_at = r.offset();
    const std::uint32_t param_count = r.u32("parameter count");
    if (param_count != 0 && param_count != 2) throw FormatError("parameter count must be 0 or 2", params_at);
    if (param_count == 2) {
      LayerParams p;
      p.weight = read_tensor(r);
      p.bias = read_tensor(r);
      layer.param_shapes = {p.weight.shape(), p.bias.shape()};
      model.parameters.emplace(layer.id, std::move(p));
    }
    model.layers.push_back(std::move(layer));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after model", r.offset());
  try {
    validate_model(model);
  } catch (const Error& e) {
    throw FormatError(std::string("decoded model is inconsistent: ") + e.what(), bytes.size());
  }
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) { write_file_atomic(path, encode_model(model)); }

Model load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

}  // namespace ipr
