#include "hindpaint/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <string>

#include "hindpaint/archive.hpp"
#include "hindpaint/error.hpp"

namespace hindpaint {

namespace {

std::uint8_t to_byte(float v) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

float from_byte(std::uint8_t b, int maxval) {
  return static_cast<float>(static_cast<double>(b) / maxval);
}

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

class HeaderReader {
 public:
  HeaderReader(std::span<const std::uint8_t> b, const std::string& where) : b_(b), where_(where) {}

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int number() {
    skip_space_and_comments();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) fail("expected a number in the PPM header");
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > 1 << 24) fail("PPM header value out of range");
    }
    return static_cast<int>(v);
  }

  void single_space() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) fail("PPM header must end in whitespace");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

  [[noreturn]] void fail(const std::string& what) const { throw IoError(where_ + ": " + what); }

 private:
  std::span<const std::uint8_t> b_;
  std::string where_;
  std::size_t pos_ = 0;
};

}  // namespace

Canvas decode_ppm(std::span<const std::uint8_t> bytes, const std::string& where) {
  HeaderReader r(bytes, where);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') r.fail("not a binary PPM (P6) file");
  r.advance(2);
  const int w = r.number();
  const int h = r.number();
  const int maxval = r.number();
  if (w < 1 || h < 1) r.fail("PPM dimensions must be positive");
  if (maxval < 1 || maxval > 255) r.fail("only 8-bit PPM (maxval <= 255) is supported");
  r.single_space();
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - r.pos() < need) r.fail("PPM pixel data is truncated");
  Canvas c(h, w);
  auto out = c.data();
  const std::uint8_t* px = bytes.data() + r.pos();
  for (std::size_t i = 0; i < need; ++i) {
    if (px[i] > maxval) r.fail("PPM sample exceeds maxval");
    out[i] = from_byte(px[i], maxval);
  }
  return c;
}

std::vector<std::uint8_t> encode_ppm(const Canvas& canvas) {
  const std::string header =
      "P6\n" + std::to_string(canvas.width()) + " " + std::to_string(canvas.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + canvas.size());
  for (float v : canvas.data()) out.push_back(to_byte(v));
  return out;
}

Canvas load_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw IoError(path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError(path.string() + ": " + msg);
  }
  if (img.width < 1 || img.height < 1) throw IoError(path.string() + ": empty PNG image");
  Canvas c(static_cast<int>(img.height), static_cast<int>(img.width));
  auto out = c.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = from_byte(buf[i], 255);
  return c;
}

void save_png(const Canvas& canvas, const std::filesystem::path& path) {
  std::vector<std::uint8_t> buf;
  buf.reserve(canvas.size());
  for (float v : canvas.data()) buf.push_back(to_byte(v));
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(canvas.width());
  img.height = static_cast<png_uint_32>(canvas.height());
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError(path.string() + ": " + img.message);
  }
}

Canvas load_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngMagic, kPngMagic + 8, bytes.begin())) {
    return load_png(path);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
    return decode_ppm(bytes, path.string());
  }
  throw IoError(path.string() + ": unsupported image format (expected P6 PPM or PNG)");
}

void save_image(const Canvas& canvas, const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".ppm") {
    write_file_bytes(path, encode_ppm(canvas));
  } else if (ext == ".png") {
    save_png(canvas, path);
  } else {
    throw IoError(path.string() + ": unsupported image extension (expected .ppm or .png)");
  }
}

Canvas quantize_8bit(const Canvas& canvas) {
  Canvas out = canvas;
  for (float& v : out.data()) v = from_byte(to_byte(v), 255);
  return out;
}

}  // namespace hindpaint
