#include "fdst/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdst {

namespace {

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

Image from_bytes(int w, int h, int c, const std::vector<std::uint8_t>& bytes) {
  Image img(w, h, c);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
  return img;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

Image load_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw std::runtime_error("cannot read PNG " + path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int w = static_cast<int>(png.width);
  const int h = static_cast<int>(png.height);
  if (w == 0 || h == 0) {
    png_image_free(&png);
    throw std::runtime_error("zero-dimension image: " + path.string());
  }
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw std::runtime_error("cannot decode PNG " + path.string() + ": " + msg);
  }
  return from_bytes(w, h, color ? 3 : 1, bytes);
}

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

Image load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string magic = next_token(in);
  const int channels = magic == "P6" ? 3 : magic == "P5" ? 1 : 0;
  if (channels == 0) throw std::runtime_error("unsupported PNM variant in " + path.string());
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error("malformed PNM header in " + path.string());
  }
  if (w <= 0 || h <= 0) throw std::runtime_error("zero-dimension image: " + path.string());
  if (maxval != 255) throw std::runtime_error("only 8-bit PNM (maxval 255) is supported: " + path.string());
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw std::runtime_error("truncated PNM payload in " + path.string());
  }
  return from_bytes(w, h, channels, bytes);
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open " + path.string());
  std::array<unsigned char, 8> sig{};
  probe.read(reinterpret_cast<char*>(sig.data()), sig.size());
  const auto got = probe.gcount();
  probe.close();
  if (got >= 8 && png_sig_cmp(sig.data(), 0, 8) == 0) return load_png(path);
  if (got >= 2 && sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) return load_pnm(path);
  throw std::runtime_error("unsupported image format: " + path.string());
}

void save_image(const Image& img, const std::filesystem::path& path) {
  validate(img);
  if (img.channels != 1 && img.channels != 3) throw std::invalid_argument("save_image expects 1 or 3 channels");
  std::vector<std::uint8_t> bytes(img.data.size());
  std::transform(img.data.begin(), img.data.end(), bytes.begin(), quantize);

  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
      throw std::runtime_error("cannot write PNG " + path.string() + ": " + png.message);
    }
    return;
  }
  if (ext == ".ppm" || ext == ".pgm") {
    const bool want_color = ext == ".ppm";
    if (want_color != (img.channels == 3)) {
      throw std::invalid_argument("channel count does not match " + ext + " format");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << (want_color ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
    return;
  }
  throw std::invalid_argument("unsupported output extension: " + path.string());
}

}  // namespace fdst
