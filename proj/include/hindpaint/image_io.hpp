#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hindpaint/canvas.hpp"

namespace hindpaint {

// Channel values are mapped v/255 on load and round(clamp(v)*255) on save.
// Errors (unreadable, malformed, unsupported) are IoError naming the path.

// Format chosen by content on load and by extension (.ppm, .png) on save.
Canvas load_image(const std::filesystem::path& path);
void save_image(const Canvas& canvas, const std::filesystem::path& path);

// Binary PPM (P6). maxval up to 255; comments allowed in the header.
Canvas decode_ppm(std::span<const std::uint8_t> bytes, const std::string& where = "<memory>");
std::vector<std::uint8_t> encode_ppm(const Canvas& canvas);

Canvas load_png(const std::filesystem::path& path);
void save_png(const Canvas& canvas, const std::filesystem::path& path);

// The canvas as it reads back after an 8-bit save.
Canvas quantize_8bit(const Canvas& canvas);

}  // namespace hindpaint
