#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tinymyo/common.hpp"

namespace tinymyo {

// Binary tensor container: "TMYO" magic, u16 version, JSON manifest, then
// 64-byte-aligned little-endian payload. The writer is canonical (tensors
// sorted by name, manifest offsets relative to the payload base), so
// save(load(f)) reproduces f byte for byte.
struct TensorEntry {
  std::string dtype;  // "f32" | "i8" | "i32"
  std::vector<int> shape;
  std::vector<std::uint8_t> raw;

  std::int64_t element_count() const {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
};

struct WeightContainer {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, TensorEntry> tensors;

  static constexpr std::uint16_t kVersion = 1;

  void put_f32(const std::string& name, std::vector<int> shape, const std::vector<float>& v);
  void put_i8(const std::string& name, std::vector<int> shape, const std::vector<std::int8_t>& v);
  void put_i32(const std::string& name, std::vector<int> shape, const std::vector<std::int32_t>& v);

  std::vector<float> get_f32(const std::string& name) const;
  std::vector<std::int8_t> get_i8(const std::string& name) const;
  std::vector<std::int32_t> get_i32(const std::string& name) const;
  const TensorEntry& entry(const std::string& name) const;
  bool has(const std::string& name) const { return tensors.count(name) != 0; }

  std::vector<std::uint8_t> serialize() const;
  static WeightContainer deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::string& path) const;
  static WeightContainer load(const std::string& path);
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::string read_file_text(const std::string& path);
void write_file_text(const std::string& path, const std::string& text);

}  // namespace tinymyo
