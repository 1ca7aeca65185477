#include "lighttbnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>

namespace ltbn {

const char* checkpoint_error_name(CheckpointErrorKind kind) {
  switch (kind) {
    case CheckpointErrorKind::Io: return "io error";
    case CheckpointErrorKind::NotACheckpoint: return "not a checkpoint";
    case CheckpointErrorKind::VersionMismatch: return "version mismatch";
    case CheckpointErrorKind::Truncated: return "truncated checkpoint";
    case CheckpointErrorKind::Malformed: return "malformed checkpoint";
    case CheckpointErrorKind::Structure: return "structural mismatch";
  }
  return "checkpoint error";
}

nlohmann::json meta_to_json(const CheckpointMeta& m) {
  return nlohmann::json{{"model", m.model},       {"fold_id", m.fold_id}, {"epoch", m.epoch},
                        {"val_auc", m.val_auc},   {"seed", m.seed},       {"preprocessing", m.preprocessing},
                        {"extra", m.extra}};
}

CheckpointMeta meta_from_json(const nlohmann::json& j) {
  CheckpointMeta m;
  m.model = j.at("model").get<ModelConfig>();
  m.fold_id = j.value("fold_id", -1);
  m.epoch = j.value("epoch", 0);
  // NaN (undefined AUC) serializes as null.
  if (auto it = j.find("val_auc"); it != j.end()) {
    m.val_auc = it->is_null() ? std::numeric_limits<double>::quiet_NaN() : it->get<double>();
  }
  m.seed = j.value("seed", std::uint64_t{0});
  m.preprocessing = j.value("preprocessing", nlohmann::json::object());
  m.extra = j.value("extra", nlohmann::json::object());
  return m;
}

Checkpoint capture_checkpoint(LightTBNet<float>& model, CheckpointMeta meta) {
  Checkpoint c;
  meta.model = model.config();
  c.meta = std::move(meta);
  for (const auto& p : model.parameters()) {
    CheckpointTensor t;
    t.name = p.name;
    for (auto d : p.tensor.shape()) t.dims.push_back(static_cast<std::uint32_t>(d));
    t.data.assign(p.tensor.data().begin(), p.tensor.data().end());
    c.tensors.push_back(std::move(t));
  }
  for (const auto& [name, buf] : model.buffers()) {
    c.tensors.push_back({name, {static_cast<std::uint32_t>(buf->size())}, *buf});
  }
  return c;
}

void restore_checkpoint(const Checkpoint& ckpt, LightTBNet<float>& model) {
  std::map<std::string, const CheckpointTensor*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
  auto take = [&](const std::string& name, const Shape& shape) -> const CheckpointTensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw CheckpointError(CheckpointErrorKind::Structure, "missing tensor '" + name + "'");
    const auto& t = *it->second;
    Shape got(t.dims.begin(), t.dims.end());
    if (got != shape || t.data.size() != numel(shape)) {
      throw CheckpointError(CheckpointErrorKind::Structure,
                            "tensor '" + name + "' has shape " + shape_str(got) + ", expected " + shape_str(shape));
    }
    by_name.erase(it);
    return t;
  };
  for (auto& p : model.parameters()) {
    const auto& t = take(p.name, p.tensor.shape());
    std::copy(t.data.begin(), t.data.end(), p.tensor.mutable_data().begin());
  }
  for (auto& [name, buf] : model.buffers()) {
    const auto& t = take(name, Shape{buf->size()});
    *buf = t.data;
  }
  if (!by_name.empty()) {
    throw CheckpointError(CheckpointErrorKind::Structure, "unexpected tensor '" + by_name.begin()->first + "'");
  }
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(const std::string& s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint8_t u8(const char* what) { need(1, what); return b_[pos_++]; }
  std::uint16_t u16(const char* what) { return static_cast<std::uint16_t>(le(2, what)); }
  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(le(4, what)); }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s(b_.begin() + static_cast<long>(pos_), b_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (b_.size() - pos_ < n) {
      throw CheckpointError(CheckpointErrorKind::Truncated, std::string("file ends inside ") + what);
    }
  }
  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes("LTBN");
  w.u32(kCheckpointVersion);
  const std::string meta = meta_to_json(ckpt.meta).dump();
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.bytes(meta);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    if (t.name.size() > 0xFFFF) throw CheckpointError(CheckpointErrorKind::Malformed, "tensor name too long");
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name);
    w.u8(kDtypeFloat32);
    w.u8(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) w.u32(d);
    for (float v : t.data) w.f32(v);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "LTBN", 4) != 0) {
    throw CheckpointError(CheckpointErrorKind::NotACheckpoint, "missing LTBN magic");
  }
  Reader r(bytes);
  r.bytes(4, "magic");
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointErrorKind::VersionMismatch,
                          "file version " + std::to_string(version) + ", supported " +
                              std::to_string(kCheckpointVersion));
  }
  Checkpoint c;
  const auto meta_len = r.u32("metadata length");
  const auto meta = r.bytes(meta_len, "metadata");
  try {
    c.meta = meta_from_json(nlohmann::json::parse(meta));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(CheckpointErrorKind::Malformed, std::string("metadata: ") + e.what());
  }
  const auto count = r.u32("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    t.name = r.bytes(r.u16("tensor name length"), "tensor name");
    const auto dtype = r.u8("dtype");
    if (dtype != kDtypeFloat32) {
      throw CheckpointError(CheckpointErrorKind::Malformed, "tensor '" + t.name + "' has unknown dtype " +
                                                               std::to_string(dtype));
    }
    const auto rank = r.u8("rank");
    std::size_t n = 1;
    for (std::uint8_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.u32("dims"));
      n *= t.dims.back();
    }
    if (n > r.remaining() / 4) {
      throw CheckpointError(CheckpointErrorKind::Truncated, "payload of tensor '" + t.name + "' is cut short");
    }
    t.data.resize(n);
    for (auto& v : t.data) v = r.f32("tensor payload");
    c.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) {
    throw CheckpointError(CheckpointErrorKind::Malformed, std::to_string(r.remaining()) + " trailing bytes");
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointErrorKind::Io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_checkpoint(bytes);
}

LightTBNet<float> model_from_checkpoint(const Checkpoint& ckpt) {
  LightTBNet<float> model = [&] {
    try {
      return LightTBNet<float>(ckpt.meta.model);
    } catch (const std::invalid_argument& e) {
      throw CheckpointError(CheckpointErrorKind::Malformed, e.what());
    }
  }();
  restore_checkpoint(ckpt, model);
  model.set_training(false);
  return model;
}

LightTBNet<float> load_model(const std::filesystem::path& path, CheckpointMeta* meta) {
  const auto ckpt = load_checkpoint(path);
  if (meta) *meta = ckpt.meta;
  return model_from_checkpoint(ckpt);
}

}  // namespace ltbn
