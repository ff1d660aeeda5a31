#include "hindpaint/archive.hpp"

#include <cstring>
#include <fstream>
#include <numeric>

#include "hindpaint/error.hpp"
#include "hindpaint/hash.hpp"

namespace hindpaint {

namespace {

constexpr char kMagic[8] = {'H', 'P', 'A', 'R', 'C', 'H', '0', '1'};

const char* dtype_name(DType d) {
  switch (d) {
    case DType::kF32: return "f32";
    case DType::kF64: return "f64";
    case DType::kI64: return "i64";
  }
  return "?";
}

DType parse_dtype(const std::string& s) {
  if (s == "f32") return DType::kF32;
  if (s == "f64") return DType::kF64;
  if (s == "i64") return DType::kI64;
  throw IntegrityError("unknown tensor dtype '" + s + "'");
}

std::size_t dtype_size(DType d) { return d == DType::kF32 ? 4 : 8; }

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const unsigned char> in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

template <typename T>
Tensor make_tensor(std::string name, DType dtype, std::vector<std::int64_t> shape,
                   std::span<const T> values) {
  Tensor t;
  t.name = std::move(name);
  t.dtype = dtype;
  t.shape = std::move(shape);
  if (t.numel() != static_cast<std::int64_t>(values.size())) {
    throw InvalidArgument("tensor '" + t.name + "' shape does not match value count");
  }
  t.bytes.resize(values.size() * sizeof(T));
  std::memcpy(t.bytes.data(), values.data(), t.bytes.size());
  return t;
}

template <typename T>
std::vector<T> unpack(const Tensor& t, DType want) {
  if (t.dtype != want) {
    throw IntegrityError("tensor '" + t.name + "' has dtype " + dtype_name(t.dtype) +
                         ", expected " + dtype_name(want));
  }
  std::vector<T> out(t.bytes.size() / sizeof(T));
  std::memcpy(out.data(), t.bytes.data(), out.size() * sizeof(T));
  return out;
}

}  // namespace

std::int64_t Tensor::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1},
                         std::multiplies<>());
}

Tensor Tensor::from_f64(std::string name, std::vector<std::int64_t> shape,
                        std::span<const double> values) {
  return make_tensor(std::move(name), DType::kF64, std::move(shape), values);
}
Tensor Tensor::from_f32(std::string name, std::vector<std::int64_t> shape,
                        std::span<const float> values) {
  return make_tensor(std::move(name), DType::kF32, std::move(shape), values);
}
Tensor Tensor::from_i64(std::string name, std::vector<std::int64_t> shape,
                        std::span<const std::int64_t> values) {
  return make_tensor(std::move(name), DType::kI64, std::move(shape), values);
}

std::vector<double> Tensor::to_f64() const { return unpack<double>(*this, DType::kF64); }
std::vector<float> Tensor::to_f32() const { return unpack<float>(*this, DType::kF32); }
std::vector<std::int64_t> Tensor::to_i64() const {
  return unpack<std::int64_t>(*this, DType::kI64);
}

const Tensor& Archive::get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw IntegrityError("archive has no tensor '" + name + "'");
}

bool Archive::contains(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

std::vector<unsigned char> encode_archive(const Archive& archive) {
  nlohmann::json header;
  header["kind"] = archive.kind;
  header["version"] = archive.version;
  header["meta"] = archive.meta;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : archive.tensors) {
    header["tensors"].push_back({{"name", t.name},
                                 {"dtype", dtype_name(t.dtype)},
                                 {"shape", t.shape},
                                 {"offset", offset},
                                 {"bytes", t.bytes.size()}});
    offset += t.bytes.size();
  }
  const std::string text = header.dump();

  std::vector<unsigned char> out(kMagic, kMagic + 8);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& t : archive.tensors) out.insert(out.end(), t.bytes.begin(), t.bytes.end());
  Fnv1a h;
  h.update(out.data(), out.size());
  put_u64(out, h.digest());
  return out;
}

Archive decode_archive(std::span<const unsigned char> bytes) {
  if (bytes.size() < 24 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw IntegrityError("not a tensor archive (bad magic)");
  }
  const std::size_t body = bytes.size() - 8;
  Fnv1a h;
  h.update(bytes.data(), body);
  if (h.digest() != get_u64(bytes, body)) throw IntegrityError("archive hash mismatch");

  const std::uint64_t header_len = get_u64(bytes, 8);
  if (16 + header_len > body) throw IntegrityError("archive header truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("archive header unreadable: ") + e.what());
  }

  Archive archive;
  try {
    archive.kind = header.at("kind").get<std::string>();
    archive.version = header.at("version").get<int>();
    archive.meta = header.at("meta");
    const std::size_t payload = 16 + header_len;
    for (const auto& entry : header.at("tensors")) {
      Tensor t;
      t.name = entry.at("name").get<std::string>();
      t.dtype = parse_dtype(entry.at("dtype").get<std::string>());
      t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto off = entry.at("offset").get<std::uint64_t>();
      const auto len = entry.at("bytes").get<std::uint64_t>();
      if (payload + off + len > body ||
          len != static_cast<std::uint64_t>(t.numel()) * dtype_size(t.dtype)) {
        throw IntegrityError("tensor '" + t.name + "' extent is inconsistent");
      }
      t.bytes.assign(bytes.begin() + payload + off, bytes.begin() + payload + off + len);
      archive.tensors.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("archive header malformed: ") + e.what());
  }
  return archive;
}

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  write_file_bytes(path, encode_archive(archive));
}

Archive read_archive(const std::filesystem::path& path,
                     const std::string& expected_kind) {
  Archive archive = decode_archive(read_file_bytes(path));
  if (archive.kind != expected_kind) {
    throw IntegrityError("'" + path.string() + "' holds a " + archive.kind +
                         " archive, expected " + expected_kind);
  }
  return archive;
}

}  // namespace hindpaint
