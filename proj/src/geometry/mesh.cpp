#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fdst/geometry.hpp"
#include "fdst/image_io.hpp"

namespace fdst {

Mesh depth_to_mesh(const DepthMap& d, const Image& texture, double discontinuity) {
  validate(d);
  validate(texture);
  if (d.width < 2 || d.height < 2) throw std::invalid_argument("depth map must be at least 2x2 to mesh");
  const int W = d.width, H = d.height;
  const auto [lo, hi] = std::minmax_element(d.values.begin(), d.values.end());
  const double limit = discontinuity * (*hi - *lo);

  Mesh mesh;
  mesh.vertices.reserve(d.values.size());
  mesh.uvs.reserve(d.values.size());
  for (int i = 0; i < H; ++i) {
    for (int j = 0; j < W; ++j) {
      const double u = static_cast<double>(j) / (W - 1);
      const double v = 1.0 - static_cast<double>(i) / (H - 1);
      mesh.vertices.push_back({u, v, d.at(j, i)});
      mesh.uvs.push_back({u, v});
    }
  }
  for (int i = 0; i + 1 < H; ++i) {
    for (int j = 0; j + 1 < W; ++j) {
      const double a = d.at(j, i), b = d.at(j + 1, i), c = d.at(j, i + 1), e = d.at(j + 1, i + 1);
      const double spread = std::max({a, b, c, e}) - std::min({a, b, c, e});
      if (spread > limit) continue;
      const auto v00 = static_cast<std::uint32_t>(i * W + j);
      const auto v01 = v00 + 1;
      const auto v10 = v00 + static_cast<std::uint32_t>(W);
      const auto v11 = v10 + 1;
      // Counter-clockwise when seen from +z with y up.
      mesh.triangles.push_back({v00, v10, v01});
      mesh.triangles.push_back({v01, v10, v11});
    }
  }
  return mesh;
}

void export_obj(const Mesh& mesh, const Image& texture, const std::filesystem::path& basepath) {
  if (mesh.uvs.size() != mesh.vertices.size()) throw std::invalid_argument("export_obj: one uv per vertex required");
  for (const auto& t : mesh.triangles) {
    for (auto idx : t) {
      if (idx >= mesh.vertices.size()) throw std::invalid_argument("export_obj: triangle index out of range");
    }
  }
  const std::string stem = basepath.filename().string();
  const std::filesystem::path obj = basepath.string() + ".obj";
  const std::filesystem::path mtl = basepath.string() + ".mtl";
  const std::filesystem::path png = basepath.string() + ".png";

  std::ofstream out(obj);
  if (!out) throw std::runtime_error("cannot write " + obj.string());
  out << "mtllib " << stem << ".mtl\nusemtl texture\n";
  char line[160];
  for (const auto& v : mesh.vertices) {
    std::snprintf(line, sizeof(line), "v %.6f %.6f %.6f\n", v[0], v[1], v[2]);
    out << line;
  }
  for (const auto& t : mesh.uvs) {
    std::snprintf(line, sizeof(line), "vt %.6f %.6f\n", t[0], t[1]);
    out << line;
  }
  for (const auto& f : mesh.triangles) {
    out << "f " << f[0] + 1 << '/' << f[0] + 1 << ' ' << f[1] + 1 << '/' << f[1] + 1 << ' ' << f[2] + 1 << '/'
        << f[2] + 1 << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + obj.string());

  std::ofstream m(mtl);
  if (!m) throw std::runtime_error("cannot write " + mtl.string());
  m << "newmtl texture\nKa 1 1 1\nKd 1 1 1\nKs 0 0 0\nd 1\nillum 1\nmap_Kd " << stem << ".png\n";
  save_image(texture, png);
}

Mesh parse_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Mesh mesh;
  std::vector<std::array<double, 2>> texcoords;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> corner_uv;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      std::array<double, 3> v{};
      if (!(ss >> v[0] >> v[1] >> v[2])) fail("bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "vt") {
      std::array<double, 2> t{};
      if (!(ss >> t[0] >> t[1])) fail("bad texture coordinate");
      texcoords.push_back(t);
    } else if (tag == "f") {
      std::array<std::uint32_t, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        std::string corner;
        if (!(ss >> corner)) fail("face needs three corners");
        const auto slash = corner.find('/');
        try {
          tri[k] = static_cast<std::uint32_t>(std::stoul(corner.substr(0, slash)) - 1);
          if (slash != std::string::npos) {
            corner_uv.emplace_back(tri[k], static_cast<std::uint32_t>(std::stoul(corner.substr(slash + 1)) - 1));
          }
        } catch (const std::exception&) {
          fail("bad face index");
        }
      }
      std::string extra;
      if (ss >> extra) fail("only triangular faces are supported");
      mesh.triangles.push_back(tri);
    }
  }
  for (const auto& t : mesh.triangles) {
    for (auto idx : t) {
      if (idx >= mesh.vertices.size()) fail("face index out of range");
    }
  }
  if (texcoords.size() == mesh.vertices.size()) {
    mesh.uvs = texcoords;
  } else {
    mesh.uvs.assign(mesh.vertices.size(), {0.0, 0.0});
  }
  for (const auto& [v, t] : corner_uv) {
    if (t >= texcoords.size()) fail("texture index out of range");
    mesh.uvs[v] = texcoords[t];
  }
  return mesh;
}

namespace {

std::array<double, 3> sample_texture(const Image& tex, double u, double v) {
  const double px = std::clamp(u, 0.0, 1.0) * (tex.width - 1);
  const double py = std::clamp(1.0 - v, 0.0, 1.0) * (tex.height - 1);
  const int x0 = std::min(static_cast<int>(px), tex.width - 1), y0 = std::min(static_cast<int>(py), tex.height - 1);
  const int x1 = std::min(x0 + 1, tex.width - 1), y1 = std::min(y0 + 1, tex.height - 1);
  const double fx = px - x0, fy = py - y0;
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const int cc = tex.channels == 3 ? c : 0;
    const double a = tex.at(x0, y0, cc), b = tex.at(x1, y0, cc), d = tex.at(x0, y1, cc), e = tex.at(x1, y1, cc);
    const double top = a + fx * (b - a), bottom = d + fx * (e - d);
    out[c] = top + fy * (bottom - top);
  }
  return out;
}

constexpr double kAmbient = 0.15;
constexpr double kDiffuse = 0.85;
constexpr double kCoverageEps = 1e-6;

}  // namespace

Image render_preview(const Mesh& mesh, const Image& texture, double yaw_degrees) {
  validate(texture);
  if (!(std::abs(yaw_degrees) <= 90.0)) throw std::invalid_argument("yaw must lie in [-90, 90] degrees");
  const int W = texture.width, H = texture.height;
  Image out(W, H, 3, 0.0);
  if (mesh.vertices.empty()) return out;

  double xc = 0, zc = 0;
  for (const auto& v : mesh.vertices) {
    xc += v[0];
    zc += v[2];
  }
  xc /= static_cast<double>(mesh.vertices.size());
  zc /= static_cast<double>(mesh.vertices.size());
  const double theta = yaw_degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);

  std::vector<std::array<double, 3>> pos(mesh.vertices.size());  // world after yaw
  std::vector<std::array<double, 2>> screen(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& v = mesh.vertices[i];
    const double dx = v[0] - xc, dz = v[2] - zc;
    pos[i] = {xc + dx * cs + dz * sn, v[1], zc - dx * sn + dz * cs};
    screen[i] = {pos[i][0] * (W - 1), (1.0 - pos[i][1]) * (H - 1)};
  }

  std::vector<double> zbuf(static_cast<std::size_t>(W) * H, std::numeric_limits<double>::infinity());
  for (const auto& tri : mesh.triangles) {
    const auto &p0 = screen[tri[0]], &p1 = screen[tri[1]], &p2 = screen[tri[2]];
    const double area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0]);
    if (std::abs(area) < 1e-14) continue;

    const auto &a = pos[tri[0]], &b = pos[tri[1]], &c = pos[tri[2]];
    const double e1[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const double e2[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
    const double n[3] = {e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]};
    const double len = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    const double shade = kAmbient + kDiffuse * (len > 0 ? std::abs(n[2]) / len : 0.0);

    const int xmin = std::max(0, static_cast<int>(std::floor(std::min({p0[0], p1[0], p2[0]}) - kCoverageEps)));
    const int xmax = std::min(W - 1, static_cast<int>(std::ceil(std::max({p0[0], p1[0], p2[0]}) + kCoverageEps)));
    const int ymin = std::max(0, static_cast<int>(std::floor(std::min({p0[1], p1[1], p2[1]}) - kCoverageEps)));
    const int ymax = std::min(H - 1, static_cast<int>(std::ceil(std::max({p0[1], p1[1], p2[1]}) + kCoverageEps)));
    for (int y = ymin; y <= ymax; ++y) {
      for (int x = xmin; x <= xmax; ++x) {
        const double w0 = ((p1[0] - x) * (p2[1] - y) - (p1[1] - y) * (p2[0] - x)) / area;
        const double w1 = ((p2[0] - x) * (p0[1] - y) - (p2[1] - y) * (p0[0] - x)) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < -kCoverageEps || w1 < -kCoverageEps || w2 < -kCoverageEps) continue;
        const double z = w0 * a[2] + w1 * b[2] + w2 * c[2];
        const std::size_t idx = static_cast<std::size_t>(y) * W + x;
        if (!(z < zbuf[idx])) continue;
        zbuf[idx] = z;
        const auto &t0 = mesh.uvs[tri[0]], &t1 = mesh.uvs[tri[1]], &t2 = mesh.uvs[tri[2]];
        const double u = w0 * t0[0] + w1 * t1[0] + w2 * t2[0];
        const double v = w0 * t0[1] + w1 * t1[1] + w2 * t2[1];
        const auto col = sample_texture(texture, u, v);
        for (int k = 0; k < 3; ++k) out.data[idx * 3 + k] = shade * col[k];
      }
    }
  }
  return out;
}

}  // namespace fdst
