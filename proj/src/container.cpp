#include "tinymyo/container.hpp"

#include <cstring>
#include <fstream>

namespace tinymyo {

namespace {

constexpr char kMagic[4] = {'T', 'M', 'Y', 'O'};
constexpr std::size_t kAlign = 64;

std::size_t align_up(std::size_t v) { return (v + kAlign - 1) / kAlign * kAlign; }

int dtype_size(const std::string& dtype) {
  if (dtype == "f32" || dtype == "i32") return 4;
  if (dtype == "i8") return 1;
  throw ValidationError("container: unknown dtype '" + dtype + "'");
}

template <typename T>
std::vector<std::uint8_t> to_bytes(const std::vector<T>& v) {
  std::vector<std::uint8_t> out(v.size() * sizeof(T));
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

template <typename T>
std::vector<T> from_bytes(const TensorEntry& e) {
  std::vector<T> out(e.raw.size() / sizeof(T));
  std::memcpy(out.data(), e.raw.data(), e.raw.size());
  return out;
}

void check_count(const TensorEntry& e, const std::string& name) {
  if (static_cast<std::int64_t>(e.raw.size()) != e.element_count() * dtype_size(e.dtype))
    throw ShapeError("container: tensor '" + name + "' byte count does not match shape");
}

}  // namespace

void WeightContainer::put_f32(const std::string& name, std::vector<int> shape,
                              const std::vector<float>& v) {
  TensorEntry e{"f32", std::move(shape), to_bytes(v)};
  check_count(e, name);
  tensors[name] = std::move(e);
}

void WeightContainer::put_i8(const std::string& name, std::vector<int> shape,
                             const std::vector<std::int8_t>& v) {
  TensorEntry e{"i8", std::move(shape), to_bytes(v)};
  check_count(e, name);
  tensors[name] = std::move(e);
}

void WeightContainer::put_i32(const std::string& name, std::vector<int> shape,
                              const std::vector<std::int32_t>& v) {
  TensorEntry e{"i32", std::move(shape), to_bytes(v)};
  check_count(e, name);
  tensors[name] = std::move(e);
}

const TensorEntry& WeightContainer::entry(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ShapeError("container: missing tensor '" + name + "'");
  return it->second;
}

std::vector<float> WeightContainer::get_f32(const std::string& name) const {
  const TensorEntry& e = entry(name);
  if (e.dtype != "f32") throw ShapeError("container: tensor '" + name + "' is not f32");
  return from_bytes<float>(e);
}

std::vector<std::int8_t> WeightContainer::get_i8(const std::string& name) const {
  const TensorEntry& e = entry(name);
  if (e.dtype != "i8") throw ShapeError("container: tensor '" + name + "' is not i8");
  return from_bytes<std::int8_t>(e);
}

std::vector<std::int32_t> WeightContainer::get_i32(const std::string& name) const {
  const TensorEntry& e = entry(name);
  if (e.dtype != "i32") throw ShapeError("container: tensor '" + name + "' is not i32");
  return from_bytes<std::int32_t>(e);
}

std::vector<std::uint8_t> WeightContainer::serialize() const {
  // payload-relative offsets keep the manifest length independent of itself
  nlohmann::json manifest;
  manifest["meta"] = meta;
  nlohmann::json jt = nlohmann::json::object();
  std::size_t rel = 0;
  for (const auto& [name, e] : tensors) {
    check_count(e, name);
    rel = align_up(rel);
    jt[name] = {{"dtype", e.dtype}, {"shape", e.shape}, {"offset", rel}, {"bytes", e.raw.size()}};
    rel += e.raw.size();
  }
  manifest["tensors"] = jt;
  const std::string mtext = manifest.dump();

  const std::size_t header = 4 + 2 + 2 + 8;
  const std::size_t payload_base = align_up(header + mtext.size());
  std::vector<std::uint8_t> out(payload_base + align_up(rel), 0);
  std::memcpy(out.data(), kMagic, 4);
  const std::uint16_t version = kVersion, reserved = 0;
  std::memcpy(out.data() + 4, &version, 2);
  std::memcpy(out.data() + 6, &reserved, 2);
  const std::uint64_t mlen = mtext.size();
  std::memcpy(out.data() + 8, &mlen, 8);
  std::memcpy(out.data() + header, mtext.data(), mtext.size());

  std::size_t cursor = 0;
  for (const auto& [name, e] : tensors) {
    (void)name;
    cursor = align_up(cursor);
    std::memcpy(out.data() + payload_base + cursor, e.raw.data(), e.raw.size());
    cursor += e.raw.size();
  }
  out.resize(payload_base + align_up(cursor));
  return out;
}

WeightContainer WeightContainer::deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw IoError("container: bad magic");
  std::uint16_t version;
  std::memcpy(&version, bytes.data() + 4, 2);
  if (version != kVersion)
    throw IoError("container: unsupported version " + std::to_string(version));
  std::uint64_t mlen;
  std::memcpy(&mlen, bytes.data() + 8, 8);
  if (16 + mlen > bytes.size()) throw IoError("container: truncated manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + mlen);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("container: manifest parse failed: ") + e.what());
  }
  const std::size_t payload_base = align_up(16 + mlen);

  WeightContainer c;
  c.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& [name, j] : manifest.at("tensors").items()) {
    TensorEntry e;
    e.dtype = j.at("dtype").get<std::string>();
    e.shape = j.at("shape").get<std::vector<int>>();
    const std::size_t off = j.at("offset").get<std::size_t>();
    const std::size_t len = j.at("bytes").get<std::size_t>();
    if (payload_base + off + len > bytes.size())
      throw IoError("container: tensor '" + name + "' overruns the file");
    e.raw.assign(bytes.begin() + payload_base + off, bytes.begin() + payload_base + off + len);
    check_count(e, name);
    c.tensors[name] = std::move(e);
  }
  return c;
}

void WeightContainer::save(const std::string& path) const {
  write_file_bytes(path, serialize());
}

WeightContainer WeightContainer::load(const std::string& path) {
  return deserialize(read_file_bytes(path));
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_file_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace tinymyo
