#pragma once

#include <filesystem>

#include "fdst/image.hpp"

namespace fdst {

/// Reads an 8-bit PNG (gray or RGB) or binary PGM/PPM (P5/P6, maxval 255).
/// The format is detected from the file signature, not the extension. Pixel
/// values are mapped to [0, 1] by division by 255.
Image load_image(const std::filesystem::path& path);

/// Writes a PNG, PGM or PPM depending on the extension (.png, .pgm, .ppm).
/// Values are clamped to [0, 1] and rounded to the nearest 8-bit level.
void save_image(const Image& img, const std::filesystem::path& path);

}  // namespace fdst
