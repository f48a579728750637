#include "fdst/raster_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

static_assert(std::endian::native == std::endian::little, "FDSTD1 I/O assumes a little-endian host");

namespace fdst {

namespace {
constexpr char kMagic[6] = {'F', 'D', 'S', 'T', 'D', '1'};
}

RawRaster read_fdstd1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[6];
  std::uint32_t dims[2];
  in.read(magic, 6);
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw std::runtime_error("truncated FDSTD1 header in " + path.string());
  if (std::memcmp(magic, kMagic, 6) != 0) throw std::runtime_error("bad FDSTD1 magic in " + path.string());
  if (dims[0] == 0 || dims[1] == 0 || static_cast<std::uint64_t>(dims[0]) * dims[1] > (1ull << 28)) {
    throw std::runtime_error("bad FDSTD1 dimensions in " + path.string());
  }
  RawRaster r{static_cast<int>(dims[0]), static_cast<int>(dims[1]), {}};
  r.values.resize(static_cast<std::size_t>(dims[0]) * dims[1]);
  const auto bytes = static_cast<std::streamsize>(r.values.size() * sizeof(float));
  in.read(reinterpret_cast<char*>(r.values.data()), bytes);
  if (in.gcount() != bytes) throw std::runtime_error("truncated FDSTD1 payload in " + path.string());
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in " + path.string());
  return r;
}

void write_fdstd1(const RawRaster& r, const std::filesystem::path& path) {
  if (r.width <= 0 || r.height <= 0 || r.values.size() != static_cast<std::size_t>(r.width) * r.height) {
    throw std::invalid_argument("write_fdstd1: malformed raster");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, 6);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(r.width), static_cast<std::uint32_t>(r.height)};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(r.values.data()), static_cast<std::streamsize>(r.values.size() * sizeof(float)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace fdst
