#pragma once

// Versioned tensor container.
//
//   bytes 0..7    magic "HPARCH01"
//   u64           header length N (little endian)
//   N bytes       JSON header: {"kind", "version", "meta", "tensors":[
//                   {"name", "dtype", "shape", "offset", "bytes"}...]}
//   payload       tensor bytes, concatenated in directory order
//   u64           FNV-1a hash of every preceding byte

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hindpaint {

enum class DType { kF32, kF64, kI64 };

struct Tensor {
  std::string name;
  DType dtype = DType::kF64;
  std::vector<std::int64_t> shape;
  std::vector<unsigned char> bytes;

  std::int64_t numel() const;

  static Tensor from_f64(std::string name, std::vector<std::int64_t> shape,
                         std::span<const double> values);
  static Tensor from_f32(std::string name, std::vector<std::int64_t> shape,
                         std::span<const float> values);
  static Tensor from_i64(std::string name, std::vector<std::int64_t> shape,
                         std::span<const std::int64_t> values);

  // Throw IntegrityError on dtype mismatch.
  std::vector<double> to_f64() const;
  std::vector<float> to_f32() const;
  std::vector<std::int64_t> to_i64() const;
};

struct Archive {
  std::string kind;
  int version = 1;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<Tensor> tensors;

  const Tensor& get(const std::string& name) const;  // IntegrityError if absent
  bool contains(const std::string& name) const;
};

std::vector<unsigned char> encode_archive(const Archive& archive);
Archive decode_archive(std::span<const unsigned char> bytes);

void write_archive(const std::filesystem::path& path, const Archive& archive);
// IoError when unreadable, IntegrityError on bad magic, hash or kind.
Archive read_archive(const std::filesystem::path& path,
                     const std::string& expected_kind);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const unsigned char> bytes);

}  // namespace hindpaint
