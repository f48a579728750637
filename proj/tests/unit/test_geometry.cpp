#include "doctest.h"
#include "fdst/geometry.hpp"
#include "fdst/raster_io.hpp"
#include "test_support.hpp"

using namespace fdst;
using namespace fdst::test;

namespace {

DepthMap constant_depth(int w, int h, double v) { return {w, h, std::vector<double>(static_cast<std::size_t>(w) * h, v)}; }

DepthMap random_depth(int w, int h, std::mt19937_64& rng, double lo = 0.5, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  DepthMap d{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  for (double& v : d.values) v = u(rng);
  return d;
}

// Mean x over non-black pixels.
double occupancy_centroid(const Image& img) {
  double s = 0, n = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y, 0) + img.at(x, y, 1) + img.at(x, y, 2) > 0) {
        s += x;
        n += 1;
      }
  return s / n;
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("fuse_depth examples") {
    std::mt19937_64 rng(1);
    const DepthMap d = random_depth(6, 5, rng), p = random_depth(6, 5, rng);
    CHECK(fuse_depth(d, p, 1.0).values == d.values);
    CHECK(fuse_depth(d, p, 0.0).values == p.values);
    const DepthMap half = fuse_depth(constant_depth(3, 3, 2.0), constant_depth(3, 3, 4.0), 0.5);
    for (double v : half.values) CHECK(v == 3.0);
  }

  TEST_CASE("fuse_depth resamples the style depth onto the content grid") {
    std::mt19937_64 rng(2);
    const DepthMap d = random_depth(8, 6, rng), small = random_depth(4, 3, rng);
    const DepthMap out = fuse_depth(d, small, 0.0);
    CHECK(out.width == 8);
    CHECK(out.height == 6);
    CHECK(out.values == resize_depth(small, 8, 6).values);
  }

  TEST_CASE("fuse_depth invariants") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> a01(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
      const DepthMap d = random_depth(7, 4, rng), p = random_depth(7, 4, rng);
      const double alpha = a01(rng);
      CHECK(fuse_depth(d, d, alpha).values == d.values);
      const DepthMap f = fuse_depth(d, p, alpha);
      for (std::size_t i = 0; i < f.values.size(); ++i) {
        CHECK(f.values[i] >= std::min(d.values[i], p.values[i]));
        CHECK(f.values[i] <= std::max(d.values[i], p.values[i]));
      }
    }
  }

  TEST_CASE("fuse_depth errors") {
    DepthMap bad = constant_depth(3, 3, 1.0);
    bad.values[4] = 0.0;
    CHECK_THROWS_AS(fuse_depth(bad, constant_depth(3, 3, 1.0), 0.5), std::invalid_argument);
    CHECK_THROWS_AS(fuse_depth(constant_depth(3, 3, 1.0), bad, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(fuse_depth(constant_depth(3, 3, 1.0), constant_depth(3, 3, 1.0), 1.5), std::invalid_argument);
  }

  TEST_CASE("depth_to_mesh examples") {
    const Image tex(4, 4, 3, 0.5);
    const Mesh quad = depth_to_mesh(constant_depth(2, 2, 1.0), tex);
    CHECK(quad.vertices.size() == 4);
    CHECK(quad.triangles.size() == 2);
    for (const auto& v : quad.vertices) CHECK(v[2] == 1.0);

    DepthMap smooth{9, 7, {}};
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 9; ++j) smooth.values.push_back(1.0 + 0.01 * i + 0.02 * j);
    const Mesh m = depth_to_mesh(smooth, tex);
    CHECK(m.vertices.size() == 63);
    CHECK(m.triangles.size() == 2 * 8 * 6);
    // uv of vertex (i, j) = (j / (W - 1), 1 - i / (H - 1)).
    CHECK(m.uvs[2 * 9 + 3][0] == 3.0 / 8);
    CHECK(m.uvs[2 * 9 + 3][1] == 1.0 - 2.0 / 6);

    DepthMap spike = constant_depth(3, 3, 1.0);
    spike.values[4] = 10.0;
    CHECK(depth_to_mesh(spike, tex).triangles.empty());
    DepthMap off_center = constant_depth(4, 4, 1.0);
    off_center.values[1 * 4 + 1] = 10.0;
    CHECK(depth_to_mesh(off_center, tex).triangles.size() == 2 * (9 - 4));

    CHECK_THROWS_AS(depth_to_mesh(constant_depth(1, 5, 1.0), tex), std::invalid_argument);
    CHECK_THROWS_AS(depth_to_mesh(constant_depth(5, 1, 1.0), tex), std::invalid_argument);
  }

  TEST_CASE("depth_to_mesh stays well formed on fuzzed depth") {
    std::mt19937_64 rng(4);
    const Image tex(3, 3, 3, 0.2);
    for (int trial = 0; trial < 30; ++trial) {
      const int w = 2 + static_cast<int>(rng() % 9), h = 2 + static_cast<int>(rng() % 9);
      const DepthMap d = random_depth(w, h, rng, 1e-3, 1e3);
      const Mesh m = depth_to_mesh(d, tex);
      CHECK(m.vertices.size() == static_cast<std::size_t>(w * h));
      for (const auto& v : m.vertices) CHECK((std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2])));
      for (const auto& t : m.triangles) {
        CHECK(t[0] < m.vertices.size());
        CHECK(t[1] < m.vertices.size());
        CHECK(t[2] < m.vertices.size());
        CHECK((t[0] != t[1] && t[1] != t[2] && t[0] != t[2]));
      }
    }
  }

  TEST_CASE("OBJ export and re-parse") {
    TempDir dir("obj");
    std::mt19937_64 rng(5);
    const Image tex = random_image(5, 4, 3, rng);
    const Mesh quad = depth_to_mesh(constant_depth(2, 2, 1.25), tex);
    export_obj(quad, tex, dir / "quad");
    std::ifstream in(dir / "quad.obj");
    int v = 0, vt = 0, f = 0;
    for (std::string line; std::getline(in, line);) {
      if (line.rfind("v ", 0) == 0) ++v;
      if (line.rfind("vt ", 0) == 0) ++vt;
      if (line.rfind("f ", 0) == 0) ++f;
    }
    CHECK(v == 4);
    CHECK(vt == 4);
    CHECK(f == 2);
    CHECK(read_bytes(dir / "quad.mtl").find("map_Kd quad.png") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "quad.png"));

    const Mesh m = depth_to_mesh(random_depth(11, 8, rng, 1.0, 1.2), tex);
    export_obj(m, tex, dir / "mesh");
    const Mesh back = parse_obj(dir / "mesh.obj");
    REQUIRE(back.vertices.size() == m.vertices.size());
    CHECK(back.triangles == m.triangles);
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
      for (int k = 0; k < 3; ++k) CHECK(std::abs(back.vertices[i][k] - m.vertices[i][k]) <= 1e-6);
    for (std::size_t i = 0; i < m.uvs.size(); ++i)
      for (int k = 0; k < 2; ++k) CHECK(std::abs(back.uvs[i][k] - m.uvs[i][k]) <= 1e-6);

    Mesh open = quad;
    open.triangles.clear();
    export_obj(open, tex, dir / "open");
    CHECK(read_bytes(dir / "open.obj").find("\nf ") == std::string::npos);
    CHECK(parse_obj(dir / "open.obj").triangles.empty());

    CHECK_THROWS(export_obj(quad, tex, dir / "missing" / "sub" / "x"));
  }

  TEST_CASE("render_preview examples") {
    std::mt19937_64 rng(6);
    const Image tex = random_image(16, 12, 3, rng);
    const Mesh plane = depth_to_mesh(constant_depth(16, 12, 2.0), tex);
    const Image front = render_preview(plane, tex, 0.0);
    // Flat frontal normal: full diffuse plus ambient is a unit shade factor.
    CHECK(max_abs_diff(front, tex) <= 1e-9);
    CHECK(max_abs_diff(render_preview(plane, tex, 1e-6), front) < 1.0 / 255);
    CHECK_THROWS_AS(render_preview(plane, tex, 91.0), std::invalid_argument);

    DepthMap bump{32, 24, {}};
    for (int i = 0; i < 24; ++i)
      for (int j = 0; j < 32; ++j) {
        const double dx = (j - 22) / 5.0, dy = (i - 12) / 5.0;
        bump.values.push_back(1.0 - 0.4 * std::exp(-(dx * dx + dy * dy)));
      }
    const Image tex2(32, 24, 3, 0.8);
    const Mesh m = depth_to_mesh(bump, tex2, 1.0);
    const double c0 = occupancy_centroid(render_preview(m, tex2, 0.0));
    const double cp = occupancy_centroid(render_preview(m, tex2, 30.0));
    const double cn = occupancy_centroid(render_preview(m, tex2, -30.0));
    // x' = xc + dx cos + dz sin: positive yaw swings geometry behind the
    // centroid (the background around the bump) toward +x.
    CHECK(cp > c0);
    CHECK(cn < c0);
  }

  TEST_CASE("depth file round trip and errors") {
    TempDir dir("depth");
    std::mt19937_64 rng(7);
    DepthMap d = random_depth(7, 5, rng);
    for (double& v : d.values) v = static_cast<float>(v);
    save_depth(d, dir / "d.fdstd");
    const DepthMap back = load_depth(dir / "d.fdstd");
    CHECK(back.width == 7);
    CHECK(back.height == 5);
    CHECK(back.values == d.values);
    save_depth(back, dir / "e.fdstd");
    CHECK(read_bytes(dir / "d.fdstd") == read_bytes(dir / "e.fdstd"));

    std::ofstream(dir / "bad.fdstd", std::ios::binary) << "FDSTDX";
    CHECK_THROWS(load_depth(dir / "bad.fdstd"));
    const std::string good = read_bytes(dir / "d.fdstd");
    std::ofstream(dir / "short.fdstd", std::ios::binary) << good.substr(0, good.size() - 3);
    CHECK_THROWS(load_depth(dir / "short.fdstd"));
    std::ofstream(dir / "long.fdstd", std::ios::binary) << good << "x";
    CHECK_THROWS(load_depth(dir / "long.fdstd"));
    CHECK_THROWS(load_depth(dir / "absent.fdstd"));
  }
}
